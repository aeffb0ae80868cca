//! Boundary value benchmarks posed as residual minimization.
//!
//! Each problem carries its mesh, the Dirichlet data at every boundary node,
//! optional interior state constraints, and the exact solution when one is
//! known. Costs integrate the squared finite-difference residual over the
//! interior nodes with their trapezoid weights:
//!
//! * `Harmonic1D`: `u'' + u = 0` on `[0, π/2]`, `u(0) = 0`, `u(π/2) = 2`,
//!   exact solution `2 sin x`.
//! * `Poisson2D`: `−Δu = −6` on the unit square with `u = 1 + x² + 2y²` on
//!   the boundary, which is also the exact solution.
//! * `NonlinearPoisson2D`: `−Δu + u³ = −6 + (1 + x² + 2y²)³`, same boundary
//!   data and exact solution.

use std::f64::consts::FRAC_PI_2;

use crate::gp::TrainingData;
use crate::mesh::Mesh;
use crate::points::PointSet;
use crate::{Error, Result};

/// Interior state constraints `(x, u(x))` for the 1D problem.
pub const HARMONIC_STATE_CONSTRAINTS: [(f64, f64); 2] = [(1.189997, 1.85673), (1.20586, 1.86829)];

/// Interior state constraints `((x, y), u(x, y))` for the 2D problems.
pub const POISSON_STATE_CONSTRAINTS: [([f64; 2], f64); 4] = [
    ([0.72413793, 0.72413793], 2.31581451),
    ([0.75862069, 0.72413793], 2.36183115),
    ([0.72413793, 0.75862069], 2.40784780),
    ([0.75862069, 0.75862069], 2.45386445),
];

pub const POISSON_SOURCE: f64 = 6.0;

pub fn harmonic_exact(x: f64) -> f64 {
    2.0 * x.sin()
}

pub fn poisson_exact(x: f64, y: f64) -> f64 {
    1.0 + x * x + 2.0 * y * y
}

/// Right-hand side of the nonlinear problem.
pub fn nonlinear_source(x: f64, y: f64) -> f64 {
    -6.0 + poisson_exact(x, y).powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BvpKind {
    Harmonic1D,
    Poisson2D,
    NonlinearPoisson2D,
}

/// `u'' + u` at interior nodes.
pub fn harmonic_residual(u: &[f64], mesh: &Mesh) -> Result<Vec<f64>> {
    let d2 = mesh.second_derivative(u)?;
    Ok(mesh
        .interior_indices()
        .iter()
        .zip(d2)
        .map(|(&k, d)| d + u[k])
        .collect())
}

/// `Δu − source` at interior nodes.
pub fn poisson_residual(u: &[f64], mesh: &Mesh, source: f64) -> Result<Vec<f64>> {
    Ok(mesh.laplacian(u)?.into_iter().map(|l| l - source).collect())
}

/// `−Δu + u³ − f` at interior nodes.
pub fn nonlinear_residual(u: &[f64], mesh: &Mesh) -> Result<Vec<f64>> {
    let lap = mesh.laplacian(u)?;
    Ok(mesh
        .interior_indices()
        .iter()
        .zip(lap)
        .map(|(&k, l)| {
            let p = mesh.points().point(k);
            -l + u[k].powi(3) - nonlinear_source(p[0], p[1])
        })
        .collect())
}

fn squared_integral(residual: Vec<f64>, mesh: &Mesh) -> Result<f64> {
    let sq: Vec<f64> = residual.into_iter().map(|r| r * r).collect();
    mesh.integrate_interior(&sq)
}

pub fn cost_harmonic_1d(u: &[f64], mesh: &Mesh) -> Result<f64> {
    squared_integral(harmonic_residual(u, mesh)?, mesh)
}

pub fn cost_poisson_2d(u: &[f64], mesh: &Mesh) -> Result<f64> {
    squared_integral(poisson_residual(u, mesh, POISSON_SOURCE)?, mesh)
}

pub fn cost_nonlinear_2d(u: &[f64], mesh: &Mesh) -> Result<f64> {
    squared_integral(nonlinear_residual(u, mesh)?, mesh)
}

/// Squared discrete L² distance to `target`.
pub fn cost_distance(u: &[f64], target: &[f64], mesh: &Mesh) -> Result<f64> {
    if u.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            found: u.len(),
        });
    }
    let diff: Vec<f64> = u.iter().zip(target).map(|(a, b)| a - b).collect();
    Ok(mesh.l2_norm(&diff)?.powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub linf: f64,
}

pub fn error_norms(u: &[f64], exact: &[f64], mesh: &Mesh) -> Result<ErrorNorms> {
    if u.len() != exact.len() {
        return Err(Error::DimensionMismatch {
            expected: exact.len(),
            found: u.len(),
        });
    }
    let diff: Vec<f64> = u.iter().zip(exact).map(|(a, b)| a - b).collect();
    Ok(ErrorNorms {
        l2: mesh.l2_norm(&diff)?,
        linf: diff.iter().fold(0.0, |m, d| f64::max(m, d.abs())),
    })
}

#[derive(Debug, Clone)]
pub struct BvpProblem {
    kind: BvpKind,
    mesh: Mesh,
    boundary: TrainingData,
    state_constraints: Option<TrainingData>,
    exact: Option<Vec<f64>>,
}

impl BvpProblem {
    /// Assembles the Dirichlet data at every boundary node, plus the
    /// prescribed interior values when `with_state_constraints` is set.
    pub fn new(kind: BvpKind, mesh: Mesh, with_state_constraints: bool) -> Result<Self> {
        match kind {
            BvpKind::Harmonic1D => {
                if mesh.dim() != 1 {
                    return Err(Error::invalid("Harmonic1D needs a 1D mesh"));
                }
                let [a, _] = mesh.origin();
                if a != 0.0 || (mesh.measure() - FRAC_PI_2).abs() > 1e-12 {
                    return Err(Error::invalid("Harmonic1D is posed on [0, π/2]"));
                }
            }
            BvpKind::Poisson2D | BvpKind::NonlinearPoisson2D => {
                if mesh.dim() != 2 {
                    return Err(Error::invalid(format!("{kind:?} needs a 2D mesh")));
                }
            }
        }

        let boundary_idx = mesh.boundary_indices();
        let mut bpts = PointSet::empty(mesh.dim());
        let mut bvals = Vec::with_capacity(boundary_idx.len());
        for &k in &boundary_idx {
            let p = mesh.points().point(k);
            bpts.push(p)?;
            bvals.push(match kind {
                BvpKind::Harmonic1D => harmonic_exact(p[0]),
                _ => poisson_exact(p[0], p[1]),
            });
        }
        if kind == BvpKind::Harmonic1D {
            // u(0) = 0 and u(π/2) = 2 exactly, not 2·sin(fl(π/2))
            bvals = vec![0.0, 2.0];
        }
        let boundary = TrainingData::new(bpts, bvals)?;

        let state_constraints = if with_state_constraints {
            let data = match kind {
                BvpKind::Harmonic1D => {
                    let xs: Vec<f64> = HARMONIC_STATE_CONSTRAINTS.iter().map(|c| c.0).collect();
                    let ys = HARMONIC_STATE_CONSTRAINTS.iter().map(|c| c.1).collect();
                    TrainingData::new(PointSet::from_1d(&xs)?, ys)?
                }
                _ => {
                    let ps: Vec<[f64; 2]> = POISSON_STATE_CONSTRAINTS.iter().map(|c| c.0).collect();
                    let ys = POISSON_STATE_CONSTRAINTS.iter().map(|c| c.1).collect();
                    TrainingData::new(PointSet::from_2d(&ps)?, ys)?
                }
            };
            check_interior(&mesh, data.points())?;
            Some(data)
        } else {
            None
        };

        let exact = (!with_state_constraints).then(|| {
            mesh.points()
                .iter()
                .map(|p| match kind {
                    BvpKind::Harmonic1D => harmonic_exact(p[0]),
                    _ => poisson_exact(p[0], p[1]),
                })
                .collect()
        });

        Ok(Self {
            kind,
            mesh,
            boundary,
            state_constraints,
            exact,
        })
    }

    pub fn kind(&self) -> BvpKind {
        self.kind
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn boundary(&self) -> &TrainingData {
        &self.boundary
    }

    pub fn state_constraints(&self) -> Option<&TrainingData> {
        self.state_constraints.as_ref()
    }

    /// Boundary data followed by the state constraints.
    pub fn training_data(&self) -> TrainingData {
        match &self.state_constraints {
            Some(sc) => self
                .boundary
                .concat(sc)
                .expect("state constraints are interior, boundary data is on the boundary"),
            None => self.boundary.clone(),
        }
    }

    /// Nodal values of the exact solution. `None` for state-constrained
    /// variants, which have no closed-form solution.
    pub fn exact(&self) -> Option<&[f64]> {
        self.exact.as_deref()
    }

    /// Nodal values of the closed-form solution of the unconstrained problem.
    pub fn reference_solution(&self) -> Vec<f64> {
        self.mesh
            .points()
            .iter()
            .map(|p| match self.kind {
                BvpKind::Harmonic1D => harmonic_exact(p[0]),
                _ => poisson_exact(p[0], p[1]),
            })
            .collect()
    }

    /// Residual cost of nodal values `u`.
    ///
    /// Panics if `u` does not have one value per mesh node.
    pub fn cost(&self, u: &[f64]) -> f64 {
        let c = match self.kind {
            BvpKind::Harmonic1D => cost_harmonic_1d(u, &self.mesh),
            BvpKind::Poisson2D => cost_poisson_2d(u, &self.mesh),
            BvpKind::NonlinearPoisson2D => cost_nonlinear_2d(u, &self.mesh),
        };
        c.expect("cost evaluated on a vector of the wrong length")
    }
}

fn check_interior(mesh: &Mesh, pts: &PointSet) -> Result<()> {
    let [nx, ny] = mesh.shape();
    let [hx, hy] = mesh.spacing();
    let [x0, y0] = mesh.origin();
    let hi = [
        x0 + hx * (nx - 1) as f64,
        y0 + hy * ny.saturating_sub(1) as f64,
    ];
    for p in pts.iter() {
        let inside_x = p[0] > x0 && p[0] < hi[0];
        let inside_y = mesh.dim() == 1 || (p[1] > y0 && p[1] < hi[1]);
        if !(inside_x && inside_y) {
            return Err(Error::invalid(format!(
                "state constraint at {p:?} is not interior"
            )));
        }
    }
    Ok(())
}
