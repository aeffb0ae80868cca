//! Scenario files.
//!
//! A scenario is a TOML document. Every section is optional; missing values
//! fall back to per-problem defaults, and unknown keys are rejected.
//!
//! ```toml
//! problem = "poisson2d"
//! seed = 3
//! repeats = 2
//!
//! [kernel]
//! nu = 2.5
//! length_scale = 1.0
//! signal_variance = 4.0
//!
//! [cbo]
//! agents = 100
//! iterations = 1000
//!
//! [mesh]
//! nx = 15
//! ny = 15
//! ```

use std::path::{Path, PathBuf};

use gpcbo::cbo::CboParams;
use gpcbo::control::{Morse, ShepherdParams};
use gpcbo::kernel::KernelSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Harmonic1d,
    Harmonic1dConstrained,
    Poisson2d,
    Poisson2dConstrained,
    Nonlinear2d,
    Shepherd,
    QuadraticSanity,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Harmonic1d => "harmonic1d",
            Problem::Harmonic1dConstrained => "harmonic1d_constrained",
            Problem::Poisson2d => "poisson2d",
            Problem::Poisson2dConstrained => "poisson2d_constrained",
            Problem::Nonlinear2d => "nonlinear2d",
            Problem::Shepherd => "shepherd",
            Problem::QuadraticSanity => "quadratic_sanity",
        }
    }

    pub fn is_2d(self) -> bool {
        matches!(
            self,
            Problem::Poisson2d | Problem::Poisson2dConstrained | Problem::Nonlinear2d
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamilyName {
    Matern,
    SquaredExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseNorm {
    L2,
    H1,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub family: Option<KernelFamilyName>,
    pub nu: Option<f64>,
    pub length_scale: Option<f64>,
    pub signal_variance: Option<f64>,
    pub sigma_gp2: Option<f64>,
    pub noise_on_training: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CboSection {
    pub agents: Option<usize>,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub horizon: Option<f64>,
    pub iterations: Option<usize>,
    pub noise_norm: Option<NoiseNorm>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub points: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseConfig {
    pub c_rep: f64,
    pub l_rep: f64,
    pub c_att: f64,
    pub l_att: f64,
}

impl From<Morse> for MorseConfig {
    fn from(m: Morse) -> Self {
        Self {
            c_rep: m.c_rep,
            l_rep: m.l_rep,
            c_att: m.c_att,
            l_att: m.l_att,
        }
    }
}

impl From<MorseConfig> for Morse {
    fn from(m: MorseConfig) -> Self {
        Morse {
            c_rep: m.c_rep,
            l_rep: m.l_rep,
            c_att: m.c_att,
            l_att: m.l_att,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShepherdSection {
    pub sheep: Option<usize>,
    pub dogs: Option<usize>,
    pub steps: Option<usize>,
    pub horizon: Option<f64>,
    pub damping: Option<f64>,
    pub sigma: Option<[f64; 3]>,
    pub target_variance: Option<f64>,
    pub destination: Option<[f64; 2]>,
    pub morse_ss: Option<MorseConfig>,
    pub morse_sd: Option<MorseConfig>,
    pub sheep_positions: Option<Vec<[f64; 2]>>,
    pub sheep_velocities: Option<Vec<[f64; 2]>>,
    pub dog_positions: Option<Vec<[f64; 2]>>,
}

/// A scenario file as written.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub out: Option<PathBuf>,
    /// Record wall times in `history.csv`. Off by default so that outputs are
    /// reproducible byte for byte.
    pub timing: Option<bool>,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub cbo: CboSection,
    pub mesh: Option<MeshSection>,
    pub shepherd: Option<ShepherdSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// A scenario with every value at its default.
    pub fn defaults(problem: Problem) -> Self {
        Self {
            problem,
            seed: None,
            repeats: None,
            out: None,
            timing: None,
            kernel: KernelSection::default(),
            cbo: CboSection::default(),
            mesh: None,
            shepherd: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelConfig {
    pub family: KernelFamilyName,
    pub nu: Option<f64>,
    pub length_scale: f64,
    pub signal_variance: f64,
    pub sigma_gp2: f64,
    pub noise_on_training: bool,
}

impl KernelConfig {
    pub fn spec(&self) -> Result<KernelSpec, CliError> {
        let k = match self.family {
            KernelFamilyName::Matern => KernelSpec::matern(
                self.nu.expect("resolved Matérn kernels carry nu"),
                self.length_scale,
                self.signal_variance,
            ),
            KernelFamilyName::SquaredExponential => {
                KernelSpec::squared_exponential(self.length_scale, self.signal_variance)
            }
        };
        k.map_err(|e| CliError::Config(format!("kernel: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CboConfig {
    pub agents: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub tau: f64,
    pub horizon: f64,
    pub iterations: usize,
    pub noise_norm: NoiseNorm,
}

impl CboConfig {
    pub fn params(&self, seed: u64) -> CboParams {
        CboParams::new(
            self.agents,
            self.alpha,
            self.lambda,
            self.tau,
            self.horizon,
            seed,
        )
        .expect("validated during resolution")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshConfig {
    pub points: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShepherdConfig {
    pub sheep: usize,
    pub dogs: usize,
    pub steps: usize,
    pub horizon: f64,
    pub damping: f64,
    pub sigma: [f64; 3],
    pub target_variance: f64,
    pub destination: [f64; 2],
    pub morse_ss: MorseConfig,
    pub morse_sd: MorseConfig,
    pub sheep_positions: Vec<[f64; 2]>,
    pub sheep_velocities: Vec<[f64; 2]>,
    pub dog_positions: Vec<[f64; 2]>,
}

impl ShepherdConfig {
    pub fn params(&self) -> ShepherdParams {
        ShepherdParams {
            damping: self.damping,
            morse_ss: self.morse_ss.into(),
            morse_sd: self.morse_sd.into(),
            sigma: self.sigma,
            target_variance: self.target_variance,
            destination: self.destination,
            horizon: self.horizon,
            steps: self.steps,
            x0: self.sheep_positions.clone(),
            v0: self.sheep_velocities.clone(),
            d0: self.dog_positions.clone(),
        }
    }
}

/// A fully specified scenario. Serialized verbatim into `config_echo.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub problem: Problem,
    pub seed: u64,
    pub repeats: usize,
    pub timing: bool,
    pub kernel: KernelConfig,
    pub cbo: CboConfig,
    pub mesh: Option<MeshConfig>,
    pub shepherd: Option<ShepherdConfig>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub timing: Option<bool>,
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "{field} must be positive and finite, got {v}"
        )))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "{field} must be nonnegative and finite, got {v}"
        )))
    }
}

impl RunConfig {
    /// Applies defaults and overrides and validates every field.
    pub fn resolve(&self, overrides: &Overrides) -> Result<Resolved, CliError> {
        let problem = self.problem;
        let shepherd = problem == Problem::Shepherd;

        let repeats = overrides.repeats.or(self.repeats).unwrap_or(1);
        if repeats == 0 {
            return Err(CliError::Config("repeats must be at least 1".into()));
        }

        let k = &self.kernel;
        let family = k.family.unwrap_or(KernelFamilyName::Matern);
        let nu = match family {
            KernelFamilyName::Matern => Some(k.nu.unwrap_or(if shepherd { 0.5 } else { 2.5 })),
            KernelFamilyName::SquaredExponential => {
                if k.nu.is_some() {
                    return Err(CliError::Config(
                        "kernel.nu only applies to the matern family".into(),
                    ));
                }
                None
            }
        };
        let kernel = KernelConfig {
            family,
            nu,
            length_scale: k.length_scale.unwrap_or(if shepherd { 2.0 } else { 1.0 }),
            signal_variance: k
                .signal_variance
                .unwrap_or(if shepherd { 0.05 } else { 1.0 }),
            sigma_gp2: nonnegative("kernel.sigma_gp2", k.sigma_gp2.unwrap_or(0.0))?,
            noise_on_training: k.noise_on_training.unwrap_or(false),
        };
        kernel.spec()?;

        let c = &self.cbo;
        let (agents, alpha, lambda, iterations) = match problem {
            Problem::Shepherd => (50, 100.0, 2.0, 500),
            Problem::QuadraticSanity => (50, 1e5, 1.0, 500),
            _ => (100, 1e5, 1.0, 2000),
        };
        let tau = positive("cbo.tau", c.tau.unwrap_or(0.1))?;
        let (horizon, iterations) = match (c.horizon, c.iterations) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "cbo.horizon and cbo.iterations are mutually exclusive".into(),
                ))
            }
            (Some(t), None) => {
                let t = nonnegative("cbo.horizon", t)?;
                let p = CboParams::new(2, 1.0, c.lambda.unwrap_or(lambda), tau, t, 0)
                    .map_err(|e| CliError::Config(format!("cbo: {e}")))?;
                (t, p.iterations())
            }
            (None, j) => {
                let j = j.unwrap_or(iterations);
                (j as f64 * tau, j)
            }
        };
        let cbo = CboConfig {
            agents: c.agents.unwrap_or(agents),
            alpha: c.alpha.unwrap_or(alpha),
            lambda: c.lambda.unwrap_or(lambda),
            tau,
            horizon,
            iterations,
            noise_norm: c.noise_norm.unwrap_or(NoiseNorm::L2),
        };
        let check = CboParams::new(cbo.agents, cbo.alpha, cbo.lambda, cbo.tau, cbo.horizon, 0)
            .map_err(|e| CliError::Config(format!("cbo: {e}")))?;
        if check.iterations() != cbo.iterations {
            return Err(CliError::Config(format!(
                "cbo: horizon {} with tau {} gives {} iterations, expected {}",
                cbo.horizon,
                cbo.tau,
                check.iterations(),
                cbo.iterations
            )));
        }

        let mesh = if shepherd {
            if self.mesh.is_some() {
                return Err(CliError::Config(
                    "mesh: the shepherd problem takes its time grid from shepherd.steps".into(),
                ));
            }
            if cbo.noise_norm == NoiseNorm::H1 {
                return Err(CliError::Config(
                    "cbo.noise_norm = \"h1\" is only available for scalar fields".into(),
                ));
            }
            None
        } else {
            if self.shepherd.is_some() {
                return Err(CliError::Config(format!(
                    "shepherd: section not used by problem {}",
                    problem.name()
                )));
            }
            let m = self.mesh.clone().unwrap_or_default();
            Some(if problem.is_2d() {
                if m.points.is_some() {
                    return Err(CliError::Config(
                        "mesh.points is for 1D problems; use nx, ny".into(),
                    ));
                }
                let (nx, ny) = (m.nx.unwrap_or(15), m.ny.unwrap_or(15));
                if nx < 3 || ny < 3 {
                    return Err(CliError::Config(format!(
                        "mesh: need nx, ny ≥ 3, got {nx}×{ny}"
                    )));
                }
                MeshConfig {
                    points: None,
                    nx: Some(nx),
                    ny: Some(ny),
                }
            } else {
                if m.nx.is_some() || m.ny.is_some() {
                    return Err(CliError::Config(
                        "mesh.nx and mesh.ny are for 2D problems; use points".into(),
                    ));
                }
                let p = m.points.unwrap_or(50);
                if p < 3 {
                    return Err(CliError::Config(format!(
                        "mesh.points must be at least 3, got {p}"
                    )));
                }
                MeshConfig {
                    points: Some(p),
                    nx: None,
                    ny: None,
                }
            })
        };

        let shepherd_cfg = if shepherd {
            Some(resolve_shepherd(
                &self.shepherd.clone().unwrap_or_default(),
            )?)
        } else {
            None
        };

        Ok(Resolved {
            problem,
            seed: overrides.seed.or(self.seed).unwrap_or(0),
            repeats,
            timing: overrides.timing.or(self.timing).unwrap_or(false),
            kernel,
            cbo,
            mesh,
            shepherd: shepherd_cfg,
        })
    }
}

fn resolve_shepherd(s: &ShepherdSection) -> Result<ShepherdConfig, CliError> {
    let dogs = s.dogs.unwrap_or(1);
    if !(1..=2).contains(&dogs) {
        return Err(CliError::Config(format!(
            "shepherd.dogs must be 1 or 2, got {dogs}"
        )));
    }
    let sheep = match (&s.sheep_positions, s.sheep) {
        (Some(p), Some(n)) if p.len() != n => {
            return Err(CliError::Config(format!(
                "shepherd.sheep = {n} but {} sheep_positions given",
                p.len()
            )))
        }
        (Some(p), _) => p.len(),
        (None, n) => n.unwrap_or(20),
    };
    let base = ShepherdParams::scenario(sheep, dogs);
    let cfg = ShepherdConfig {
        sheep,
        dogs,
        steps: s.steps.unwrap_or(base.steps),
        horizon: s.horizon.unwrap_or(base.horizon),
        damping: s.damping.unwrap_or(base.damping),
        sigma: s.sigma.unwrap_or(base.sigma),
        target_variance: s.target_variance.unwrap_or(base.target_variance),
        destination: s.destination.unwrap_or(base.destination),
        morse_ss: s.morse_ss.unwrap_or(base.morse_ss.into()),
        morse_sd: s.morse_sd.unwrap_or(base.morse_sd.into()),
        sheep_positions: s.sheep_positions.clone().unwrap_or(base.x0),
        sheep_velocities: s.sheep_velocities.clone().unwrap_or(base.v0),
        dog_positions: s.dog_positions.clone().unwrap_or(base.d0),
    };
    if cfg.dog_positions.len() != dogs {
        return Err(CliError::Config(format!(
            "shepherd.dog_positions has {} entries for {dogs} dogs",
            cfg.dog_positions.len()
        )));
    }
    cfg.params()
        .validate()
        .map_err(|e| CliError::Config(format!("shepherd: {e}")))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> Result<Resolved, CliError> {
        RunConfig::from_toml(text)?.resolve(&Overrides::default())
    }

    #[test]
    fn defaults_follow_the_problem() {
        let r = resolve("problem = \"harmonic1d\"").unwrap();
        assert_eq!(r.kernel.nu, Some(2.5));
        assert_eq!(r.kernel.length_scale, 1.0);
        assert_eq!(r.cbo.iterations, 2000);
        assert_eq!(r.mesh.unwrap().points, Some(50));

        let r = resolve("problem = \"shepherd\"").unwrap();
        assert_eq!(r.kernel.nu, Some(0.5));
        let s = r.shepherd.unwrap();
        assert_eq!((s.sheep, s.dogs, s.steps), (20, 1, 100));
        assert_eq!(s.sheep_positions.len(), 20);
    }

    #[test]
    fn horizon_or_iterations() {
        let r = resolve("problem = \"poisson2d\"\n[cbo]\nhorizon = 50.0").unwrap();
        assert_eq!(r.cbo.iterations, 500);
        assert!(resolve("problem = \"poisson2d\"\n[cbo]\nhorizon = 5.0\niterations = 3").is_err());
    }

    #[test]
    fn overrides_win() {
        let cfg =
            RunConfig::from_toml("problem = \"quadratic_sanity\"\nseed = 4\nrepeats = 2").unwrap();
        let r = cfg
            .resolve(&Overrides {
                seed: Some(9),
                repeats: None,
                timing: Some(true),
            })
            .unwrap();
        assert_eq!((r.seed, r.repeats, r.timing), (9, 2, true));
    }

    #[test]
    fn rejects_bad_fields() {
        let msg = |t: &str| resolve(t).unwrap_err().to_string();
        assert!(msg("problem = \"harmonic1d\"\n[kernel]\nnu = 1.0").contains("smoothness"));
        assert!(msg("problem = \"harmonic1d\"\nbogus = 1").contains("bogus"));
        assert!(msg("problem = \"heat\"").contains("unknown variant"));
        assert!(msg("problem = \"harmonic1d\"\n[cbo]\nlambda = 20.0").contains("lambda"));
        assert!(msg("problem = \"poisson2d\"\n[mesh]\npoints = 10").contains("mesh.points"));
        assert!(msg("problem = \"shepherd\"\n[shepherd]\ndogs = 3").contains("dogs"));
        assert!(msg("problem = \"harmonic1d\"\n[shepherd]\ndogs = 1").contains("shepherd"));
        assert!(
            msg("problem = \"harmonic1d\"\n[kernel]\nlength_scale = -1.0").contains("length scale")
        );
    }
}
