//! Uniform meshes on an interval or a rectangle, with trapezoidal quadrature
//! weights and central finite-difference operators.
//!
//! 2D grids are stored row-major: node `(ix, iy)` has index `iy * nx + ix`,
//! so `x` varies fastest.

use crate::points::PointSet;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    points: PointSet,
    /// Nodes per axis; `[P, 1]` for intervals.
    shape: [usize; 2],
    spacing: [f64; 2],
    origin: [f64; 2],
    weights: Vec<f64>,
    interior: Vec<bool>,
    interior_indices: Vec<usize>,
    measure: f64,
}

fn trapezoid_1d(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

fn axis(a: f64, b: f64, n: usize, name: &str) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid(format!(
            "{name}: need finite a < b, got [{a}, {b}]"
        )));
    }
    if n < 3 {
        return Err(Error::invalid(format!(
            "{name}: at least 3 nodes are needed for a second-derivative stencil, got {n}"
        )));
    }
    Ok((b - a) / (n - 1) as f64)
}

impl Mesh {
    /// `n` equispaced nodes on `[a, b]`, endpoints included.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Self> {
        let h = axis(a, b, n, "interval mesh")?;
        let xs: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { b } else { a + i as f64 * h })
            .collect();
        let mut interior = vec![true; n];
        interior[0] = false;
        interior[n - 1] = false;
        Ok(Self::assemble(
            PointSet::from_1d(&xs)?,
            [n, 1],
            [h, 0.0],
            [a, 0.0],
            trapezoid_1d(n, h),
            interior,
            b - a,
        ))
    }

    /// Tensor grid of `nx × ny` nodes on `[x0, x1] × [y0, y1]`.
    pub fn grid(x_range: [f64; 2], y_range: [f64; 2], nx: usize, ny: usize) -> Result<Self> {
        let hx = axis(x_range[0], x_range[1], nx, "grid mesh (x)")?;
        let hy = axis(y_range[0], y_range[1], ny, "grid mesh (y)")?;
        let coord = |lo: f64, hi: f64, h: f64, n: usize, i: usize| {
            if i == n - 1 {
                hi
            } else {
                lo + i as f64 * h
            }
        };
        let wx = trapezoid_1d(nx, hx);
        let wy = trapezoid_1d(ny, hy);
        let mut coords = Vec::with_capacity(2 * nx * ny);
        let mut weights = Vec::with_capacity(nx * ny);
        let mut interior = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                coords.push(coord(x_range[0], x_range[1], hx, nx, ix));
                coords.push(coord(y_range[0], y_range[1], hy, ny, iy));
                weights.push(wx[ix] * wy[iy]);
                interior.push(ix > 0 && ix < nx - 1 && iy > 0 && iy < ny - 1);
            }
        }
        Ok(Self::assemble(
            PointSet::from_flat(2, coords)?,
            [nx, ny],
            [hx, hy],
            [x_range[0], y_range[0]],
            weights,
            interior,
            (x_range[1] - x_range[0]) * (y_range[1] - y_range[0]),
        ))
    }

    pub fn unit_square(nx: usize, ny: usize) -> Result<Self> {
        Self::grid([0.0, 1.0], [0.0, 1.0], nx, ny)
    }

    fn assemble(
        points: PointSet,
        shape: [usize; 2],
        spacing: [f64; 2],
        origin: [f64; 2],
        weights: Vec<f64>,
        interior: Vec<bool>,
        measure: f64,
    ) -> Self {
        let interior_indices = interior
            .iter()
            .enumerate()
            .filter_map(|(i, &inside)| inside.then_some(i))
            .collect();
        Self {
            points,
            shape,
            spacing,
            origin,
            weights,
            interior,
            interior_indices,
            measure,
        }
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    /// `h` for intervals (second entry 0), `(hx, hy)` for grids.
    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior
    }

    /// Indices of interior nodes in increasing order. Operator outputs follow
    /// this order.
    pub fn interior_indices(&self) -> &[usize] {
        &self.interior_indices
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.interior[i]).collect()
    }

    /// Length or area of the domain.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: u.len(),
            });
        }
        Ok(())
    }

    /// `(u[p-1] - 2u[p] + u[p+1]) / h²` at every interior node of an interval mesh.
    pub fn second_derivative(&self, u: &[f64]) -> Result<Vec<f64>> {
        if self.dim() != 1 {
            return Err(Error::invalid("second_derivative needs a 1D mesh"));
        }
        self.check_len(u)?;
        let inv_h2 = 1.0 / (self.spacing[0] * self.spacing[0]);
        Ok(u.windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]) * inv_h2)
            .collect())
    }

    /// Five-point Laplacian at every interior node of a grid mesh.
    pub fn laplacian(&self, u: &[f64]) -> Result<Vec<f64>> {
        if self.dim() != 2 {
            return Err(Error::invalid("laplacian needs a 2D mesh"));
        }
        self.check_len(u)?;
        let nx = self.shape[0];
        let inv_hx2 = 1.0 / (self.spacing[0] * self.spacing[0]);
        let inv_hy2 = 1.0 / (self.spacing[1] * self.spacing[1]);
        Ok(self
            .interior_indices
            .iter()
            .map(|&k| {
                let uxx = (u[k - 1] - 2.0 * u[k] + u[k + 1]) * inv_hx2;
                let uyy = (u[k - nx] - 2.0 * u[k] + u[k + nx]) * inv_hy2;
                uxx + uyy
            })
            .collect())
    }

    /// Trapezoidal quadrature of nodal values over the whole domain.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values)?;
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }

    /// Quadrature over interior nodes only; `values` is ordered like
    /// [`Mesh::interior_indices`].
    pub fn integrate_interior(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.interior_indices.len() {
            return Err(Error::DimensionMismatch {
                expected: self.interior_indices.len(),
                found: values.len(),
            });
        }
        Ok(self
            .interior_indices
            .iter()
            .zip(values)
            .map(|(&k, v)| self.weights[k] * v)
            .sum())
    }

    /// Discrete L² norm `sqrt(Σ w_p u_p²)`.
    pub fn l2_norm(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        Ok(self
            .weights
            .iter()
            .zip(u)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt())
    }

    /// Squared H¹ seminorm from forward differences along mesh edges. On
    /// grids an x-edge in row `iy` carries weight `hx · wy[iy]` (trapezoid in
    /// the transverse direction), and likewise for y-edges; exact for affine `u`.
    pub fn gradient_seminorm_sq(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let [nx, ny] = self.shape;
        let [hx, hy] = self.spacing;
        if self.dim() == 1 {
            return Ok(u.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / hx);
        }
        let wx = trapezoid_1d(nx, hx);
        let wy = trapezoid_1d(ny, hy);
        let mut acc = 0.0;
        for iy in 0..ny {
            for ix in 0..nx {
                let k = iy * nx + ix;
                if ix + 1 < nx {
                    acc += (u[k + 1] - u[k]).powi(2) / hx * wy[iy];
                }
                if iy + 1 < ny {
                    acc += (u[k + nx] - u[k]).powi(2) / hy * wx[ix];
                }
            }
        }
        Ok(acc)
    }
}
