//! Wiring a resolved scenario into kernel, GP measures, CBO and problem.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use gpcbo::bvp::{self, BvpKind, BvpProblem, ErrorNorms};
use gpcbo::cbo::{self, AgentNorm, RunOutput, Snapshot, WeightedH1, WeightedL2};
use gpcbo::control::{self, ShepherdParams};
use gpcbo::gp::{self, EvaluationSet, FieldSampler, GaussianMeasure, IndependentComponents};
use gpcbo::mesh::Mesh;
use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{NoiseNorm, Problem, Resolved};
use crate::output;
use crate::CliError;

/// Either a scalar field or independent vector components.
#[derive(Debug, Clone)]
pub enum Sampler {
    Scalar(GaussianMeasure),
    Vector(IndependentComponents),
}

impl Sampler {
    pub fn homogeneous(&self) -> Self {
        match self {
            Sampler::Scalar(m) => Sampler::Scalar(m.homogeneous()),
            Sampler::Vector(m) => Sampler::Vector(m.homogeneous()),
        }
    }

    pub fn measure(&self) -> &GaussianMeasure {
        match self {
            Sampler::Scalar(m) => m,
            Sampler::Vector(m) => m.measure(),
        }
    }
}

impl FieldSampler for Sampler {
    fn dim(&self) -> usize {
        match self {
            Sampler::Scalar(m) => FieldSampler::dim(m),
            Sampler::Vector(m) => m.dim(),
        }
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Sampler::Scalar(m) => FieldSampler::sample_into(m, rng, out),
            Sampler::Vector(m) => m.sample_into(rng, out),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Task {
    Bvp(BvpProblem),
    /// Squared L² distance to a fixed target that satisfies the boundary data.
    Quadratic {
        mesh: Mesh,
        target: Vec<f64>,
    },
    Shepherd(ShepherdParams),
}

/// Everything needed to run repeats of one scenario.
pub struct Scenario {
    pub resolved: Resolved,
    pub task: Task,
    pub gp_c: Sampler,
    pub gp_0: Sampler,
    /// Spatial mesh, or the time grid for the shepherd problem.
    pub mesh: Mesh,
    /// Evaluation points of scalar fields; `None` for the shepherd problem.
    pub eval: Option<EvaluationSet>,
    norm: Box<dyn AgentNorm>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("problem", &self.resolved.problem)
            .field("dim", &self.gp_c.dim())
            .finish()
    }
}

impl Scenario {
    pub fn build(resolved: Resolved) -> Result<Self, CliError> {
        let kernel = resolved.kernel.spec()?;
        let sigma_gp2 = resolved.kernel.sigma_gp2;
        let problem = resolved.problem;

        if problem == Problem::Shepherd {
            let params = resolved
                .shepherd
                .as_ref()
                .expect("shepherd scenarios carry a shepherd section")
                .params();
            let mesh = Mesh::interval(0.0, params.horizon, params.steps + 1)?;
            let prior = gp::build_prior(&kernel, mesh.points(), sigma_gp2)?;
            let gp_c = Sampler::Vector(IndependentComponents::new(prior, 2 * params.dogs())?);
            return Ok(Self {
                gp_0: gp_c.homogeneous(),
                gp_c,
                norm: Box::new(WeightedL2::for_mesh(&mesh)),
                mesh,
                eval: None,
                task: Task::Shepherd(params),
                resolved,
            });
        }

        let m = resolved
            .mesh
            .as_ref()
            .expect("field problems carry a mesh section");
        let mesh = if problem.is_2d() {
            Mesh::unit_square(m.nx.unwrap(), m.ny.unwrap())?
        } else {
            Mesh::interval(0.0, FRAC_PI_2, m.points.unwrap())?
        };
        let (kind, constrained) = match problem {
            Problem::Harmonic1d | Problem::QuadraticSanity => (BvpKind::Harmonic1D, false),
            Problem::Harmonic1dConstrained => (BvpKind::Harmonic1D, true),
            Problem::Poisson2d => (BvpKind::Poisson2D, false),
            Problem::Poisson2dConstrained => (BvpKind::Poisson2D, true),
            Problem::Nonlinear2d => (BvpKind::NonlinearPoisson2D, false),
            Problem::Shepherd => unreachable!(),
        };
        let bvp = BvpProblem::new(kind, mesh.clone(), constrained)?;
        let data = bvp.training_data();
        let eval = EvaluationSet::covering(&mesh, &data)?;
        let posterior = gp::build_posterior(
            &kernel,
            eval.points(),
            sigma_gp2,
            &data,
            resolved.kernel.noise_on_training,
        )?;
        let weights = eval.norm_weights(&mesh);
        let norm: Box<dyn AgentNorm> = match resolved.cbo.noise_norm {
            NoiseNorm::L2 => Box::new(WeightedL2::new(weights)),
            NoiseNorm::H1 => Box::new(WeightedH1::new(weights, mesh.clone())?),
        };
        let task = if problem == Problem::QuadraticSanity {
            Task::Quadratic {
                mesh: mesh.clone(),
                target: bvp.reference_solution(),
            }
        } else {
            Task::Bvp(bvp)
        };
        let gp_c = Sampler::Scalar(posterior);
        Ok(Self {
            gp_0: gp_c.homogeneous(),
            gp_c,
            norm,
            mesh,
            eval: Some(eval),
            task,
            resolved,
        })
    }

    /// Number of leading agent entries that are mesh values (per component).
    pub fn mesh_len(&self) -> usize {
        self.mesh.len()
    }

    pub fn dim(&self) -> usize {
        self.gp_c.dim()
    }

    pub fn jitter_used(&self) -> f64 {
        self.gp_c.measure().jitter_used()
    }

    pub fn norm(&self) -> &dyn AgentNorm {
        self.norm.as_ref()
    }

    pub fn cost(&self, u: &[f64]) -> f64 {
        let n = self.mesh.len();
        match &self.task {
            Task::Bvp(p) => p.cost(&u[..n]),
            Task::Quadratic { mesh, target } => {
                bvp::cost_distance(&u[..n], target, mesh).expect("agent length matches mesh")
            }
            Task::Shepherd(p) => control::reduced_cost(p, u),
        }
    }

    /// Nodal values of the known solution, if any.
    pub fn exact(&self) -> Option<&[f64]> {
        match &self.task {
            Task::Bvp(p) => p.exact(),
            Task::Quadratic { target, .. } => Some(target),
            Task::Shepherd(_) => None,
        }
    }

    /// Agent indices and prescribed values of every training point.
    pub fn prescribed(&self) -> Vec<(usize, f64)> {
        match (&self.task, &self.eval) {
            (Task::Bvp(p), Some(eval)) => eval
                .training_index()
                .iter()
                .copied()
                .zip(p.training_data().values().iter().copied())
                .collect(),
            (Task::Quadratic { target, .. }, Some(eval)) => {
                let ends = [0, self.mesh.len() - 1];
                debug_assert_eq!(eval.training_index(), &ends);
                ends.iter().map(|&k| (k, target[k])).collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn error_norms(&self, u: &[f64]) -> Option<ErrorNorms> {
        let n = self.mesh.len();
        self.exact()
            .map(|e| bvp::error_norms(&u[..n], e, &self.mesh).expect("lengths match mesh"))
    }

    /// Cost of the zero control, for the shepherd problem.
    pub fn zero_control_cost(&self) -> Option<f64> {
        match &self.task {
            Task::Shepherd(p) => Some(control::zero_control_cost(p)),
            _ => None,
        }
    }

    /// Runs CBO with `seed`, calling `observer` on every iterate.
    pub fn run_with<O>(&self, seed: u64, mut observer: O) -> Result<RepeatOutcome, CliError>
    where
        O: FnMut(&Snapshot<'_>),
    {
        let params = self.resolved.cbo.params(seed);
        let timing = self.resolved.timing;
        let mut rows = Vec::with_capacity(params.iterations() + 1);
        let mut initial = (f64::NAN, f64::NAN);
        let output = cbo::run_observed(
            &|u: &[f64]| self.cost(u),
            &self.gp_c,
            &self.gp_0,
            &params,
            self.norm(),
            |s| {
                if s.record.iteration == 0 {
                    initial = (median(&s.ensemble.costs), s.record.best_cost);
                }
                let err = self.error_norms(s.consensus);
                rows.push(HistoryRow {
                    iteration: s.record.iteration,
                    best_cost: s.record.best_cost,
                    consensus_cost: s.record.consensus_cost,
                    spread: s.record.spread,
                    err_l2: err.map(|e| e.l2),
                    err_linf: err.map(|e| e.linf),
                    seconds: timing.then_some(s.record.seconds),
                });
                observer(s);
            },
        )?;
        Ok(RepeatOutcome {
            seed,
            final_error: self.error_norms(&output.consensus),
            initial_median: initial.0,
            initial_best: initial.1,
            rows,
            output,
        })
    }

    pub fn run(&self, seed: u64) -> Result<RepeatOutcome, CliError> {
        self.run_with(seed, |_| {})
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One row of `history.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub best_cost: f64,
    pub consensus_cost: f64,
    pub spread: f64,
    pub err_l2: Option<f64>,
    pub err_linf: Option<f64>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RepeatOutcome {
    pub seed: u64,
    pub rows: Vec<HistoryRow>,
    pub output: RunOutput,
    pub initial_median: f64,
    pub initial_best: f64,
    pub final_error: Option<ErrorNorms>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Summary {
    pub problem: String,
    pub repeats: usize,
    pub seeds: Vec<u64>,
    pub iterations: usize,
    pub final_costs: Vec<f64>,
    pub mean_final_cost: f64,
    pub best_final_cost: f64,
    pub max_final_cost: f64,
    pub initial_median_costs: Vec<f64>,
    pub initial_best_costs: Vec<f64>,
    pub final_err_l2: Option<Vec<f64>>,
    pub final_err_linf: Option<Vec<f64>>,
    pub zero_control_cost: Option<f64>,
    pub jitter_used: f64,
    pub config_hash: String,
}

/// SHA-256 of the resolved configuration's JSON form.
pub fn config_hash(resolved: &Resolved) -> String {
    let json = serde_json::to_string(resolved).expect("configuration serializes");
    format!("{:x}", Sha256::digest(json.as_bytes()))
}

#[derive(Serialize)]
struct Echo<'a> {
    #[serde(flatten)]
    config: &'a Resolved,
    repeat: usize,
    repeat_seed: u64,
    jitter_used: f64,
    derived_iterations: usize,
    agent_dim: usize,
    config_hash: &'a str,
}

/// Runs every repeat and writes all artifacts under `out`.
pub fn run_experiment(resolved: &Resolved, out: &Path) -> Result<Summary, CliError> {
    let scenario = Scenario::build(resolved.clone())?;
    let hash = config_hash(resolved);
    output::create_dir(out)?;

    let mut outcomes = Vec::with_capacity(resolved.repeats);
    for k in 0..resolved.repeats {
        let seed = resolved.seed.wrapping_add(k as u64);
        let outcome = scenario.run(seed)?;
        let dir = repeat_dir(out, k);
        output::create_dir(&dir)?;
        output::write_history(&dir.join("history.csv"), &outcome.rows)?;
        output::write_solution(&dir, &scenario, &outcome.output.consensus)?;
        output::write_json(
            &dir.join("config_echo.json"),
            &Echo {
                config: resolved,
                repeat: k,
                repeat_seed: seed,
                jitter_used: scenario.jitter_used(),
                derived_iterations: resolved.cbo.iterations,
                agent_dim: scenario.dim(),
                config_hash: &hash,
            },
        )?;
        outcomes.push(outcome);
    }

    let finals: Vec<f64> = outcomes.iter().map(|o| o.output.consensus_cost).collect();
    let errors = outcomes
        .iter()
        .map(|o| o.final_error)
        .collect::<Option<Vec<_>>>();
    let summary = Summary {
        problem: resolved.problem.name().to_string(),
        repeats: resolved.repeats,
        seeds: outcomes.iter().map(|o| o.seed).collect(),
        iterations: resolved.cbo.iterations,
        mean_final_cost: finals.iter().sum::<f64>() / finals.len() as f64,
        best_final_cost: finals.iter().cloned().fold(f64::INFINITY, f64::min),
        max_final_cost: finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        final_costs: finals,
        initial_median_costs: outcomes.iter().map(|o| o.initial_median).collect(),
        initial_best_costs: outcomes.iter().map(|o| o.initial_best).collect(),
        final_err_l2: errors.as_ref().map(|e| e.iter().map(|n| n.l2).collect()),
        final_err_linf: errors.as_ref().map(|e| e.iter().map(|n| n.linf).collect()),
        zero_control_cost: scenario.zero_control_cost(),
        jitter_used: scenario.jitter_used(),
        config_hash: hash,
    };
    output::write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

pub fn repeat_dir(out: &Path, k: usize) -> PathBuf {
    out.join(format!("repeat_{k}"))
}
