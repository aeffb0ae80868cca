//! Stationary covariance functions and Gram matrix assembly.
//!
//! Matérn kernels are only offered for the half-integer smoothness values
//! ν ∈ {1/2, 3/2, 5/2}, where they reduce to an exponential times a polynomial
//! and no Bessel function is needed.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::points::{distance, PointSet};
use crate::{Error, Result};

/// Half-integer Matérn smoothness ν.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Smoothness {
    /// ν = 1/2, the exponential kernel.
    Half,
    /// ν = 3/2
    ThreeHalves,
    /// ν = 5/2
    FiveHalves,
}

impl Smoothness {
    pub fn from_nu(nu: f64) -> Result<Self> {
        match nu {
            0.5 => Ok(Smoothness::Half),
            1.5 => Ok(Smoothness::ThreeHalves),
            2.5 => Ok(Smoothness::FiveHalves),
            _ => Err(Error::invalid(format!(
                "smoothness nu = {nu} is not supported (allowed: 0.5, 1.5, 2.5)"
            ))),
        }
    }

    pub fn nu(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::ThreeHalves => 1.5,
            Smoothness::FiveHalves => 2.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    SquaredExponential,
    Matern(Smoothness),
}

/// A kernel family with its length scale ℓ and signal variance σ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    length_scale: f64,
    signal_variance: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, length_scale: f64, signal_variance: f64) -> Result<Self> {
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(Error::invalid(format!(
                "length scale must be positive and finite, got {length_scale}"
            )));
        }
        if !(signal_variance.is_finite() && signal_variance > 0.0) {
            return Err(Error::invalid(format!(
                "signal variance must be positive and finite, got {signal_variance}"
            )));
        }
        Ok(Self {
            family,
            length_scale,
            signal_variance,
        })
    }

    pub fn matern(nu: f64, length_scale: f64, signal_variance: f64) -> Result<Self> {
        Self::new(
            KernelFamily::Matern(Smoothness::from_nu(nu)?),
            length_scale,
            signal_variance,
        )
    }

    pub fn squared_exponential(length_scale: f64, signal_variance: f64) -> Result<Self> {
        Self::new(
            KernelFamily::SquaredExponential,
            length_scale,
            signal_variance,
        )
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    /// Covariance at distance `r`. Returns exactly σ² at `r = 0`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::invalid(format!(
                "kernel distance must be finite and nonnegative, got {r}"
            )));
        }
        Ok(self.eval_unchecked(r))
    }

    pub(crate) fn eval_unchecked(&self, r: f64) -> f64 {
        if r == 0.0 {
            return self.signal_variance;
        }
        let s = r / self.length_scale;
        let shape = match self.family {
            KernelFamily::SquaredExponential => (-0.5 * s * s).exp(),
            KernelFamily::Matern(Smoothness::Half) => (-s).exp(),
            KernelFamily::Matern(Smoothness::ThreeHalves) => {
                let a = 3f64.sqrt() * s;
                (1.0 + a) * (-a).exp()
            }
            KernelFamily::Matern(Smoothness::FiveHalves) => {
                let a = 5f64.sqrt() * s;
                (1.0 + a + 5.0 * s * s / 3.0) * (-a).exp()
            }
        };
        self.signal_variance * shape
    }

    /// Cross-covariance matrix with entry `(p, q) = k(|x_p - y_q|)`.
    pub fn gram(&self, xs: &PointSet, ys: &PointSet) -> Result<DMatrix<f64>> {
        if xs.dim() != ys.dim() {
            return Err(Error::DimensionMismatch {
                expected: xs.dim(),
                found: ys.dim(),
            });
        }
        let rows = xs.len();
        let mut data = vec![0.0; rows * ys.len()];
        if rows > 0 {
            // column-major: one chunk per column of the result
            data.par_chunks_mut(rows).enumerate().for_each(|(q, col)| {
                let y = ys.point(q);
                for (p, entry) in col.iter_mut().enumerate() {
                    *entry = self.eval_unchecked(distance(xs.point(p), y));
                }
            });
        }
        Ok(DMatrix::from_vec(rows, ys.len(), data))
    }
}
