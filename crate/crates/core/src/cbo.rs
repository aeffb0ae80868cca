//! Consensus-based optimization over sampled functions.
//!
//! Agents are vectors of nodal values. Each iteration computes the Gibbs
//! weighted consensus point `v = Σ U^i e^{-α f(U^i)} / Σ e^{-α f(U^i)}` and
//! moves every agent by
//!
//! ```text
//! U^i ← U^i − λτ (U^i − v) + √(2τ) ‖U^i − v‖ ξ^i,    ξ^i ~ GP_0
//! ```
//!
//! Initial agents come from `GP_c` and the noise from `GP_0`, so prescribed
//! values are carried unchanged through every iterate.
//!
//! Randomness is drawn from per-agent ChaCha streams keyed by
//! `(seed, phase, iteration, agent)`; results do not depend on how rayon
//! schedules the agents.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::gp::FieldSampler;
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Resample attempts for an agent whose update or cost is not finite.
pub const MAX_RESAMPLES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CboParams {
    agents: usize,
    alpha: f64,
    lambda: f64,
    tau: f64,
    horizon: f64,
    seed: u64,
}

impl CboParams {
    pub fn new(
        agents: usize,
        alpha: f64,
        lambda: f64,
        tau: f64,
        horizon: f64,
        seed: u64,
    ) -> Result<Self> {
        if agents < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 agents, got {agents}"
            )));
        }
        for (name, v) in [("alpha", alpha), ("lambda", lambda), ("tau", tau)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::invalid(format!(
                "horizon must be nonnegative, got {horizon}"
            )));
        }
        if lambda * tau > 1.0 {
            return Err(Error::invalid(format!(
                "lambda * tau = {} exceeds 1; the drift would overshoot the consensus point",
                lambda * tau
            )));
        }
        Ok(Self {
            agents,
            alpha,
            lambda,
            tau,
            horizon,
            seed,
        })
    }

    /// Parameters whose horizon is exactly `iterations` steps of size `tau`.
    pub fn with_iterations(
        agents: usize,
        alpha: f64,
        lambda: f64,
        tau: f64,
        iterations: usize,
        seed: u64,
    ) -> Result<Self> {
        let p = Self::new(agents, alpha, lambda, tau, iterations as f64 * tau, seed)?;
        debug_assert_eq!(p.iterations(), iterations);
        Ok(p)
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// `J = int(T / τ)`, tolerant of `T / τ` landing a few ulps below an integer.
    pub fn iterations(&self) -> usize {
        (self.horizon / self.tau * (1.0 + 8.0 * f64::EPSILON)).floor() as usize
    }
}

/// A cost functional on agent vectors. Must be pure: CBO evaluates it
/// concurrently for different agents.
pub trait Objective: Sync {
    fn cost(&self, u: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn cost(&self, u: &[f64]) -> f64 {
        self(u)
    }
}

/// The norm `‖U − v‖` scaling the noise.
pub trait AgentNorm: Sync {
    fn norm(&self, diff: &[f64]) -> f64;
}

/// `sqrt(Σ w_p d_p²)`. Vectors longer than the weights are treated as
/// stacked components, each weighted by the same `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedL2 {
    weights: Vec<f64>,
}

impl WeightedL2 {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    pub fn for_mesh(mesh: &Mesh) -> Self {
        Self::new(mesh.weights().to_vec())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn squared(&self, diff: &[f64]) -> f64 {
        assert!(
            diff.len().is_multiple_of(self.weights.len()),
            "vector of length {} does not stack components of length {}",
            diff.len(),
            self.weights.len()
        );
        diff.chunks_exact(self.weights.len())
            .map(|c| {
                c.iter()
                    .zip(&self.weights)
                    .map(|(d, w)| w * d * d)
                    .sum::<f64>()
            })
            .sum()
    }
}

impl AgentNorm for WeightedL2 {
    fn norm(&self, diff: &[f64]) -> f64 {
        self.squared(diff).sqrt()
    }
}

/// L² norm plus the finite-difference H¹ seminorm of the mesh part of each
/// component. Component `c` occupies `diff[c·stride .. c·stride + mesh.len()]`.
#[derive(Debug, Clone)]
pub struct WeightedH1 {
    l2: WeightedL2,
    mesh: Mesh,
}

impl WeightedH1 {
    /// `weights` has one entry per component slot; its first `mesh.len()`
    /// entries belong to mesh nodes.
    pub fn new(weights: Vec<f64>, mesh: Mesh) -> Result<Self> {
        if weights.len() < mesh.len() {
            return Err(Error::DimensionMismatch {
                expected: mesh.len(),
                found: weights.len(),
            });
        }
        Ok(Self {
            l2: WeightedL2::new(weights),
            mesh,
        })
    }
}

impl AgentNorm for WeightedH1 {
    fn norm(&self, diff: &[f64]) -> f64 {
        let stride = self.l2.weights.len();
        let semi: f64 = diff
            .chunks_exact(stride)
            .map(|c| {
                self.mesh
                    .gradient_seminorm_sq(&c[..self.mesh.len()])
                    .expect("component length matches mesh")
            })
            .sum();
        (self.l2.squared(diff) + semi).sqrt()
    }
}

/// Discrete L² norm of nodal values on `mesh`.
pub fn ensemble_norm(diff: &[f64], mesh: &Mesh) -> f64 {
    mesh.l2_norm(diff).expect("difference vector matches mesh")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub agents: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    pub iteration: usize,
}

impl Ensemble {
    /// Evaluates `objective` on every agent.
    pub fn evaluate<F: Objective + ?Sized>(
        agents: Vec<Vec<f64>>,
        objective: &F,
        iteration: usize,
    ) -> Self {
        let costs = agents.par_iter().map(|u| objective.cost(u)).collect();
        Self {
            agents,
            costs,
            iteration,
        }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Index and cost of the lowest-cost agent, first one on ties.
    pub fn best(&self) -> (usize, f64) {
        self.costs.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, &c)| if c < acc.1 { (i, c) } else { acc },
        )
    }

    /// Agents with a non-finite entry or cost.
    pub fn non_finite_agents(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                !self.costs[i].is_finite() || self.agents[i].iter().any(|v| !v.is_finite())
            })
            .collect()
    }

    /// Largest pairwise distance between agents.
    pub fn spread<N: AgentNorm + ?Sized>(&self, norm: &N) -> f64 {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let mut diff = vec![0.0; self.agents[i].len()];
                let mut worst: f64 = 0.0;
                for j in 0..i {
                    for ((d, a), b) in diff.iter_mut().zip(&self.agents[i]).zip(&self.agents[j]) {
                        *d = a - b;
                    }
                    worst = worst.max(norm.norm(&diff));
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Gibbs-weighted mean of the agents. Weights are `exp(−α (f_i − min f))`,
/// so the result is unchanged when all costs shift by a constant; agents with
/// cost `+∞` get weight zero.
pub fn consensus(ensemble: &Ensemble, alpha: f64) -> Result<Vec<f64>> {
    if ensemble.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    for (i, &c) in ensemble.costs.iter().enumerate() {
        if c.is_nan() {
            return Err(Error::NanCost { agent: i });
        }
        if c == f64::NEG_INFINITY {
            return Err(Error::invalid(format!("cost of agent {i} is -inf")));
        }
    }
    let fmin = ensemble.costs.iter().cloned().fold(f64::INFINITY, f64::min);
    if fmin == f64::INFINITY {
        return Err(Error::AllCostsInfinite);
    }
    let dim = ensemble.agents[0].len();
    let mut acc = vec![0.0; dim];
    let mut total = 0.0;
    for (u, &c) in ensemble.agents.iter().zip(&ensemble.costs) {
        let w = (-alpha * (c - fmin)).exp();
        if w == 0.0 {
            continue;
        }
        total += w;
        for (a, x) in acc.iter_mut().zip(u) {
            *a += w * x;
        }
    }
    for a in &mut acc {
        *a /= total;
    }
    Ok(acc)
}

/// One agent update, written as `v + (1 − λτ)(u − v) + √(2τ)‖u − v‖ ξ` so that
/// `u = v` is a fixed point and `λτ = 1` lands on `v` exactly.
pub fn update_agent<N: AgentNorm + ?Sized>(
    agent: &[f64],
    consensus: &[f64],
    noise: &[f64],
    params: &CboParams,
    norm: &N,
) -> Vec<f64> {
    let diff: Vec<f64> = agent.iter().zip(consensus).map(|(u, v)| u - v).collect();
    let amplitude = (2.0 * params.tau).sqrt() * norm.norm(&diff);
    let keep = 1.0 - params.lambda * params.tau;
    consensus
        .iter()
        .zip(&diff)
        .zip(noise)
        .map(|((v, d), xi)| v + keep * d + amplitude * xi)
        .collect()
}

/// Moves every agent toward `v` with the given noise draws and re-evaluates
/// the costs. Non-finite results are left in place for the caller to recover.
pub fn step<F, N>(
    ensemble: &Ensemble,
    v: &[f64],
    params: &CboParams,
    noise: &[Vec<f64>],
    norm: &N,
    objective: &F,
) -> Result<Ensemble>
where
    F: Objective + ?Sized,
    N: AgentNorm + ?Sized,
{
    if noise.len() != ensemble.len() {
        return Err(Error::DimensionMismatch {
            expected: ensemble.len(),
            found: noise.len(),
        });
    }
    let agents: Vec<Vec<f64>> = ensemble
        .agents
        .par_iter()
        .zip(noise.par_iter())
        .map(|(u, xi)| update_agent(u, v, xi, params, norm))
        .collect();
    Ok(Ensemble::evaluate(
        agents,
        objective,
        ensemble.iteration + 1,
    ))
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Initial = 0,
    Noise = 1,
    Resample = 2,
}

fn stream_rng(seed: u64, phase: Phase, iteration: usize, agent: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 2 bits phase | 38 bits iteration | 24 bits agent
    let stream =
        ((phase as u64) << 62) | ((iteration as u64 & ((1 << 38) - 1)) << 24) | agent as u64;
    rng.set_stream(stream);
    rng
}

fn draw<S: FieldSampler + ?Sized>(sampler: &S, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = vec![0.0; sampler.dim()];
    sampler.sample_into(rng, &mut out);
    out
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub best_cost: f64,
    pub consensus_cost: f64,
    pub spread: f64,
    /// Wall time since the start of the run.
    pub seconds: f64,
    /// Agents resampled from `GP_c` while producing this iterate.
    pub resampled: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<IterationRecord>,
}

impl History {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&IterationRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Equality of everything except wall times.
    pub fn same_trajectory(&self, other: &History) -> bool {
        self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                a.iteration == b.iteration
                    && a.best_cost.to_bits() == b.best_cost.to_bits()
                    && a.consensus_cost.to_bits() == b.consensus_cost.to_bits()
                    && a.spread.to_bits() == b.spread.to_bits()
                    && a.resampled == b.resampled
            })
    }
}

/// State handed to a run observer once per iterate `U_j`, `j = 0..=J`.
#[derive(Debug)]
pub struct Snapshot<'a> {
    pub ensemble: &'a Ensemble,
    pub consensus: &'a [f64],
    pub record: &'a IterationRecord,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub consensus: Vec<f64>,
    pub consensus_cost: f64,
    pub ensemble: Ensemble,
    pub history: History,
}

/// Runs GP-CBO for `params.iterations()` steps.
pub fn run<F, S, N>(
    objective: &F,
    gp_c: &S,
    gp_0: &S,
    params: &CboParams,
    norm: &N,
) -> Result<RunOutput>
where
    F: Objective + ?Sized,
    S: FieldSampler + ?Sized,
    N: AgentNorm + ?Sized,
{
    run_observed(objective, gp_c, gp_0, params, norm, |_| {})
}

/// [`run`] with a callback invoked on every iterate, initial and final ones
/// included.
pub fn run_observed<F, S, N, O>(
    objective: &F,
    gp_c: &S,
    gp_0: &S,
    params: &CboParams,
    norm: &N,
    mut observer: O,
) -> Result<RunOutput>
where
    F: Objective + ?Sized,
    S: FieldSampler + ?Sized,
    N: AgentNorm + ?Sized,
    O: FnMut(&Snapshot<'_>),
{
    if gp_c.dim() != gp_0.dim() {
        return Err(Error::DimensionMismatch {
            expected: gp_c.dim(),
            found: gp_0.dim(),
        });
    }
    let start = Instant::now();
    let seed = params.seed;
    let n = params.agents;

    let initial: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| draw(gp_c, &mut stream_rng(seed, Phase::Initial, 0, i)))
        .collect();
    let mut ensemble = Ensemble::evaluate(initial, objective, 0);
    let mut resampled = recover(&mut ensemble, gp_c, objective, seed)?;

    let mut history = History::default();
    let iterations = params.iterations();
    loop {
        let v = consensus(&ensemble, params.alpha)?;
        let record = IterationRecord {
            iteration: ensemble.iteration,
            best_cost: ensemble.best().1,
            consensus_cost: objective.cost(&v),
            spread: ensemble.spread(norm),
            seconds: start.elapsed().as_secs_f64(),
            resampled,
        };
        observer(&Snapshot {
            ensemble: &ensemble,
            consensus: &v,
            record: &record,
        });
        history.records.push(record);

        if ensemble.iteration == iterations {
            return Ok(RunOutput {
                consensus: v,
                consensus_cost: record.consensus_cost,
                ensemble,
                history,
            });
        }

        let j = ensemble.iteration;
        let noise: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| draw(gp_0, &mut stream_rng(seed, Phase::Noise, j, i)))
            .collect();
        ensemble = step(&ensemble, &v, params, &noise, norm, objective)?;
        resampled = recover(&mut ensemble, gp_c, objective, seed)?;
    }
}

/// Replaces agents with a non-finite entry or cost by fresh `GP_c` draws.
fn recover<F, S>(ensemble: &mut Ensemble, gp_c: &S, objective: &F, seed: u64) -> Result<usize>
where
    F: Objective + ?Sized,
    S: FieldSampler + ?Sized,
{
    let bad = ensemble.non_finite_agents();
    for &i in &bad {
        let mut rng = stream_rng(seed, Phase::Resample, ensemble.iteration, i);
        let mut attempt = 0;
        loop {
            if attempt == MAX_RESAMPLES {
                return Err(Error::Unrecoverable {
                    agent: i,
                    iteration: ensemble.iteration,
                    attempts: MAX_RESAMPLES,
                });
            }
            attempt += 1;
            let u = draw(gp_c, &mut rng);
            let c = objective.cost(&u);
            if c.is_finite() && u.iter().all(|v| v.is_finite()) {
                ensemble.agents[i] = u;
                ensemble.costs[i] = c;
                break;
            }
        }
    }
    Ok(bad.len())
}
