//! Finite-dimensional Gaussian measures on a set of evaluation points: the
//! prior, the posterior conditioned on training data (`GP_c`), and the same
//! posterior with its mean removed (`GP_0`), whose samples vanish at every
//! training point.
//!
//! For a kernel `k`, evaluation points `X` and training data `(x_t, y_t)` the
//! posterior is `N(B C⁻¹ y_t, A − B C⁻¹ Bᵀ)` with `A = k(X, X) + σ_GP² I`,
//! `B = k(X, x_t)` and `C = k(x_t, x_t)`. Every application of `C⁻¹` goes
//! through a Cholesky solve.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::kernel::KernelSpec;
use crate::mesh::Mesh;
use crate::points::{distance, PointSet};
use crate::{Error, Result};

/// First nonzero jitter, relative to the largest diagonal entry.
pub const JITTER_START: f64 = 1e-10;
/// Largest admissible jitter, relative to the largest diagonal entry.
pub const JITTER_MAX: f64 = 1e-4;
/// Relative Frobenius tolerance on `L Lᵀ − (M + jitter I)`.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Prescribed function values at given points.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    points: PointSet,
    values: Vec<f64>,
}

impl TrainingData {
    pub fn new(points: PointSet, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite training value {v}")));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points.point(i) == points.point(j) {
                    return Err(Error::invalid(format!(
                        "duplicate training point {:?} (entries {j} and {i})",
                        points.point(i)
                    )));
                }
            }
        }
        Ok(Self { points, values })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            points: PointSet::empty(dim),
            values: Vec::new(),
        }
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Concatenation `(self, other)`, re-validated for duplicates.
    pub fn concat(&self, other: &TrainingData) -> Result<Self> {
        let mut points = self.points.clone();
        points.extend(&other.points)?;
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::new(points, values)
    }
}

/// Mesh nodes followed by probe points for training data that does not sit on
/// a mesh node. Sampling on this set keeps every prescribed value attached to
/// an entry of the sampled vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    points: PointSet,
    mesh_len: usize,
    training_index: Vec<usize>,
}

impl EvaluationSet {
    /// Relative distance under which a training point is treated as the mesh
    /// node it sits on.
    pub const NODE_TOLERANCE: f64 = 1e-6;

    pub fn covering(mesh: &Mesh, data: &TrainingData) -> Result<Self> {
        let nodes = mesh.points();
        if data.points().dim() != nodes.dim() {
            return Err(Error::DimensionMismatch {
                expected: nodes.dim(),
                found: data.points().dim(),
            });
        }
        let scale = mesh.spacing().iter().cloned().fold(0.0, f64::max);
        let tol = Self::NODE_TOLERANCE * scale;
        let mut points = nodes.clone();
        let mut training_index = Vec::with_capacity(data.len());
        for x in data.points().iter() {
            let hit = (0..points.len()).find(|&i| distance(points.point(i), x) <= tol);
            let idx = match hit {
                Some(i) => i,
                None => {
                    points.push(x)?;
                    points.len() - 1
                }
            };
            training_index.push(idx);
        }
        Ok(Self {
            points,
            mesh_len: nodes.len(),
            training_index,
        })
    }

    /// Mesh nodes only, no training data attached.
    pub fn mesh_only(mesh: &Mesh) -> Self {
        Self {
            points: mesh.points().clone(),
            mesh_len: mesh.len(),
            training_index: Vec::new(),
        }
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mesh_len(&self) -> usize {
        self.mesh_len
    }

    pub fn probe_count(&self) -> usize {
        self.len() - self.mesh_len
    }

    /// Entry of the sampled vector carrying each training value.
    pub fn training_index(&self) -> &[usize] {
        &self.training_index
    }

    /// Quadrature weights for the mesh part, zero for probes.
    pub fn norm_weights(&self, mesh: &Mesh) -> Vec<f64> {
        let mut w = mesh.weights().to_vec();
        w.resize(self.len(), 0.0);
        w
    }
}

/// Cholesky factor of `m + jitter·I`, escalating the jitter from zero through
/// `JITTER_START·d, 10·JITTER_START·d, …` up to `JITTER_MAX·d` with `d` the
/// largest diagonal entry. A factor is accepted only if it reproduces the
/// shifted matrix to [`RECONSTRUCTION_TOL`] in relative Frobenius norm.
pub fn factor_with_jitter(m: &DMatrix<f64>, stage: &str) -> Result<(DMatrix<f64>, f64)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::invalid(format!("{stage}: matrix is not square")));
    }
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), 0.0));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Conditioning {
            stage: stage.to_string(),
            detail: "matrix has non-finite entries".into(),
        });
    }
    let dmax = m
        .diagonal()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if dmax <= 0.0 {
        if m.iter().all(|&v| v == 0.0) {
            return Ok((DMatrix::zeros(n, n), 0.0));
        }
        return Err(Error::Conditioning {
            stage: stage.to_string(),
            detail: format!("largest diagonal entry is {dmax}"),
        });
    }
    let norm = m.norm();
    let mut jitter = 0.0;
    loop {
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(shifted.clone()) {
            let l = chol.unpack();
            let err = (&l * l.transpose() - &shifted).norm();
            if err <= RECONSTRUCTION_TOL * norm.max(f64::MIN_POSITIVE) {
                return Ok((l, jitter));
            }
        }
        jitter = if jitter == 0.0 {
            JITTER_START * dmax
        } else {
            jitter * 10.0
        };
        if jitter > JITTER_MAX * dmax * (1.0 + 1e-9) {
            return Err(Error::Conditioning {
                stage: stage.to_string(),
                detail: format!(
                    "Cholesky failed for jitter up to {:e} (max diagonal {dmax:e})",
                    JITTER_MAX * dmax
                ),
            });
        }
    }
}

/// `N(mean, covariance)` with a stored lower Cholesky factor of
/// `covariance + jitter_used·I`.
#[derive(Debug, Clone)]
pub struct GaussianMeasure {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    chol: DMatrix<f64>,
    /// Rows of the lower-triangular factor, packed, for sampling.
    packed_rows: Vec<f64>,
    jitter_used: f64,
}

impl GaussianMeasure {
    /// Builds the measure, symmetrizing `covariance` and factoring it under
    /// the jitter policy. Coordinates whose covariance row is exactly zero are
    /// deterministic: they get a zero row in the factor and no jitter, and the
    /// jitter policy runs on the remaining block.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, stage: &str) -> Result<Self> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: covariance.nrows(),
            });
        }
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        let free: Vec<usize> = (0..n)
            .filter(|&i| covariance.row(i).iter().any(|&v| v != 0.0))
            .collect();
        let (chol, jitter_used) = if free.len() == n {
            factor_with_jitter(&covariance, stage)?
        } else {
            let block = covariance.select_rows(&free).select_columns(&free);
            let (lb, jitter) = factor_with_jitter(&block, stage)?;
            let mut l = DMatrix::zeros(n, n);
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate().take(a + 1) {
                    l[(i, j)] = lb[(a, b)];
                }
            }
            (l, jitter)
        };
        Ok(Self::from_factor(mean, covariance, chol, jitter_used))
    }

    fn from_factor(
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
        chol: DMatrix<f64>,
        jitter_used: f64,
    ) -> Self {
        let n = mean.len();
        let mut packed_rows = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                packed_rows.push(chol[(i, j)]);
            }
        }
        Self {
            mean,
            covariance,
            chol,
            packed_rows,
            jitter_used,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    /// The same covariance with zero mean.
    pub fn homogeneous(&self) -> Self {
        Self {
            mean: DVector::zeros(self.dim()),
            ..self.clone()
        }
    }

    /// Writes `mean + L z`, `z` standard normal, into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let n = self.dim();
        assert_eq!(out.len(), n, "sample buffer length");
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut offset = 0;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.packed_rows[offset..offset + i + 1];
            offset += i + 1;
            *o = self.mean[i] + row.iter().zip(&z).map(|(l, z)| l * z).sum::<f64>();
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// Prior `N(0, k(X, X) + σ_GP² I)` on the points `xs`.
pub fn build_prior(kernel: &KernelSpec, xs: &PointSet, sigma_gp2: f64) -> Result<GaussianMeasure> {
    check_noise(sigma_gp2)?;
    let mut a = kernel.gram(xs, xs)?;
    for i in 0..xs.len() {
        a[(i, i)] += sigma_gp2;
    }
    GaussianMeasure::new(DVector::zeros(xs.len()), a, "prior covariance")
}

/// Posterior `GP_c` on `xs` given `data`. With `noise_on_training` the noise
/// variance is also added to the diagonal of `C`; by default only `A` gets it.
/// Empty data yields the prior.
pub fn build_posterior(
    kernel: &KernelSpec,
    xs: &PointSet,
    sigma_gp2: f64,
    data: &TrainingData,
    noise_on_training: bool,
) -> Result<GaussianMeasure> {
    check_noise(sigma_gp2)?;
    if data.is_empty() {
        return build_prior(kernel, xs, sigma_gp2);
    }
    let xt = data.points();
    let mut c = kernel.gram(xt, xt)?;
    if noise_on_training {
        for i in 0..xt.len() {
            c[(i, i)] += sigma_gp2;
        }
    }
    let (lc, _) = factor_with_jitter(&c, "training covariance C").map_err(|e| match e {
        Error::Conditioning { stage, detail } => Error::Conditioning {
            stage,
            detail: format!("{detail}; {}", closest_pair(xt)),
        },
        other => other,
    })?;
    let b = kernel.gram(xs, xt)?;

    // C⁻¹ y = L⁻ᵀ L⁻¹ y
    let y = DVector::from_column_slice(data.values());
    let w_y = lc.solve_lower_triangular(&y).ok_or_else(|| singular("C"))?;
    let c_inv_y = lc
        .tr_solve_lower_triangular(&w_y)
        .ok_or_else(|| singular("C"))?;
    let mut mean = &b * c_inv_y;

    // B C⁻¹ Bᵀ = Wᵀ W with W = L⁻¹ Bᵀ
    let w = lc
        .solve_lower_triangular(&b.transpose())
        .ok_or_else(|| singular("C"))?;
    let mut cov = kernel.gram(xs, xs)? - w.transpose() * w;

    // At an evaluation point equal to a training point the conditional
    // variance is exactly zero and the mean is the prescribed value.
    if !noise_on_training {
        for p in 0..xs.len() {
            if let Some(j) = (0..xt.len()).find(|&j| xs.point(p) == xt.point(j)) {
                mean[p] = data.values()[j];
                cov.row_mut(p).fill(0.0);
                cov.column_mut(p).fill(0.0);
            }
        }
    }
    for i in 0..xs.len() {
        cov[(i, i)] += sigma_gp2;
    }
    GaussianMeasure::new(mean, cov, "posterior covariance")
}

fn check_noise(sigma_gp2: f64) -> Result<()> {
    if !(sigma_gp2.is_finite() && sigma_gp2 >= 0.0) {
        return Err(Error::invalid(format!(
            "GP noise variance must be nonnegative and finite, got {sigma_gp2}"
        )));
    }
    Ok(())
}

fn singular(which: &str) -> Error {
    Error::Conditioning {
        stage: format!("training covariance {which}"),
        detail: "triangular solve hit a zero pivot".into(),
    }
}

fn closest_pair(xs: &PointSet) -> String {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..xs.len() {
        for j in 0..i {
            let d = distance(xs.point(i), xs.point(j));
            if d < best.0 {
                best = (d, j, i);
            }
        }
    }
    if best.0.is_finite() {
        format!(
            "closest training points are #{} {:?} and #{} {:?} (distance {:e})",
            best.1,
            xs.point(best.1),
            best.2,
            xs.point(best.2),
            best.0
        )
    } else {
        "single training point".into()
    }
}

/// Something CBO can draw agents or noise from.
pub trait FieldSampler: Sync {
    /// Length of one sample.
    fn dim(&self) -> usize;
    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]);
}

impl FieldSampler for GaussianMeasure {
    fn dim(&self) -> usize {
        GaussianMeasure::dim(self)
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        GaussianMeasure::sample_into(self, rng, out)
    }
}

/// Vector-valued field whose components are independent draws from one
/// scalar measure. Samples are stored component-major.
#[derive(Debug, Clone)]
pub struct IndependentComponents {
    measure: GaussianMeasure,
    components: usize,
}

impl IndependentComponents {
    pub fn new(measure: GaussianMeasure, components: usize) -> Result<Self> {
        if components == 0 {
            return Err(Error::invalid("at least one component is required"));
        }
        Ok(Self {
            measure,
            components,
        })
    }

    pub fn measure(&self) -> &GaussianMeasure {
        &self.measure
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn homogeneous(&self) -> Self {
        Self {
            measure: self.measure.homogeneous(),
            components: self.components,
        }
    }
}

impl FieldSampler for IndependentComponents {
    fn dim(&self) -> usize {
        self.measure.dim() * self.components
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for chunk in out.chunks_exact_mut(self.measure.dim()) {
            self.measure.sample_into(rng, chunk);
        }
    }
}
