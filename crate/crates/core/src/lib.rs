//! Consensus-based optimization (CBO) in discretized function spaces.
//!
//! Candidate functions are drawn from Gaussian processes conditioned on the
//! problem's boundary, initial and state-constraint data, so every agent of the
//! swarm satisfies those constraints at all times. The crate ships the building
//! blocks ([`kernel`], [`mesh`], [`gp`]), the optimizer itself ([`cbo`]), and the
//! benchmark problems: boundary value problems ([`bvp`]) and a sheep–shepherd
//! optimal control problem ([`control`]).
//!
//! ```
//! use gpcbo::bvp::{BvpKind, BvpProblem};
//! use gpcbo::cbo::{self, CboParams, WeightedL2};
//! use gpcbo::gp::{self, EvaluationSet};
//! use gpcbo::kernel::KernelSpec;
//! use gpcbo::mesh::Mesh;
//!
//! let mesh = Mesh::interval(0.0, std::f64::consts::FRAC_PI_2, 20).unwrap();
//! let problem = BvpProblem::new(BvpKind::Harmonic1D, mesh, false).unwrap();
//! let data = problem.training_data();
//! let eval = EvaluationSet::covering(problem.mesh(), &data).unwrap();
//! let kernel = KernelSpec::matern(2.5, 1.0, 1.0).unwrap();
//! let gp_c = gp::build_posterior(&kernel, eval.points(), 0.0, &data, false).unwrap();
//! let gp_0 = gp_c.homogeneous();
//! let params = CboParams::new(20, 1e5, 1.0, 0.1, 2.0, 7).unwrap();
//! let norm = WeightedL2::new(eval.norm_weights(problem.mesh()));
//! let n = problem.mesh().len();
//! let out = cbo::run(&|u: &[f64]| problem.cost(&u[..n]), &gp_c, &gp_0, &params, &norm).unwrap();
//! assert_eq!(out.history.len(), 21);
//! ```

pub mod bvp;
pub mod cbo;
pub mod control;
pub mod error;
pub mod gp;
pub mod kernel;
pub mod mesh;
pub mod points;

pub use error::{Error, Result};
