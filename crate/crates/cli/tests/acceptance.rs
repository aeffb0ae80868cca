//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gpcbo::cbo::{self, CboParams, Ensemble, WeightedL2};
use gpcbo::control::{self, Morse, ShepherdParams};
use gpcbo::gp::{self, EvaluationSet, TrainingData};
use gpcbo::kernel::KernelSpec;
use gpcbo::mesh::Mesh;
use gpcbo::points::PointSet;
use gpcbo_cli::config::{Overrides, Resolved, RunConfig};
use gpcbo_cli::experiment::{self, RepeatOutcome, Scenario, Summary};
use gpcbo_cli::output;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn resolve(toml: &str) -> Resolved {
    RunConfig::from_toml(toml)
        .and_then(|c| c.resolve(&Overrides::default()))
        .unwrap_or_else(|e| panic!("acceptance scenario is invalid: {e}"))
}

fn scenario(toml: &str) -> Scenario {
    Scenario::build(resolve(toml)).unwrap_or_else(|e| panic!("scenario build failed: {e}"))
}

fn run(s: &Scenario, seed: u64) -> Result<RepeatOutcome, String> {
    s.run(seed).map_err(|e| format!("seed {seed}: {e}"))
}

fn reduction(o: &RepeatOutcome) -> f64 {
    o.output.consensus_cost / o.initial_median
}

// ---------------------------------------------------------------- criterion 1

fn gp_suite() -> Check {
    let kernel = KernelSpec::matern(2.5, 0.7, 1.5).unwrap();
    let bc = TrainingData::new(
        PointSet::from_1d(&[0.0, FRAC_PI_2]).unwrap(),
        vec![0.0, 2.0],
    )
    .unwrap();

    let fine = Mesh::interval(0.0, FRAC_PI_2, 41).unwrap();
    let coarse = Mesh::interval(0.0, FRAC_PI_2, 11).unwrap();
    let mut marg: f64 = 0.0;
    for data in [TrainingData::empty(1), bc.clone()] {
        let f = gp::build_posterior(&kernel, fine.points(), 0.0, &data, false)
            .map_err(|e| e.to_string())?;
        let c = gp::build_posterior(&kernel, coarse.points(), 0.0, &data, false)
            .map_err(|e| e.to_string())?;
        for p in 0..11 {
            for q in 0..11 {
                marg = marg.max((c.covariance()[(p, q)] - f.covariance()[(4 * p, 4 * q)]).abs());
            }
            marg = marg.max((c.mean()[p] - f.mean()[4 * p]).abs());
        }
    }
    ensure(marg <= 1e-12, || format!("marginalization gap {marg:e}"))?;

    let mesh = Mesh::interval(0.0, FRAC_PI_2, 30).unwrap();
    let xs = mesh.points().as_flat().to_vec();
    let idx = [0usize, 7, 18, 29];
    let data = TrainingData::new(
        PointSet::from_1d(&idx.map(|k| xs[k])).unwrap(),
        vec![0.0, -1.25, 3.5, 2.0],
    )
    .unwrap();
    let post = gp::build_posterior(&kernel, mesh.points(), 0.0, &data, false)
        .map_err(|e| e.to_string())?;
    let interp = idx
        .iter()
        .zip(data.values())
        .map(|(&k, y)| (post.mean()[k] - y).abs())
        .fold(0.0, f64::max);
    ensure(interp <= 1e-6, || format!("interpolation gap {interp:e}"))?;

    let square = Mesh::grid([0.0, 1.0], [0.0, 1.0], 8, 8).unwrap();
    let data2 = TrainingData::new(
        PointSet::from_2d(&[[0.0, 0.0], [0.31, 0.77], [1.0, 0.5], [0.5, 0.5]]).unwrap(),
        vec![1.0, -1.0, 0.5, 2.0],
    )
    .unwrap();
    let eval = EvaluationSet::covering(&square, &data2).map_err(|e| e.to_string())?;
    let prior = gp::build_prior(&kernel, eval.points(), 0.0).map_err(|e| e.to_string())?;
    let post2 = gp::build_posterior(&kernel, eval.points(), 0.0, &data2, false)
        .map_err(|e| e.to_string())?;
    let grown = (0..eval.len())
        .filter(|&p| post2.covariance()[(p, p)] > prior.covariance()[(p, p)] + 1e-10)
        .count();
    ensure(grown == 0, || {
        format!("{grown} variances grew after conditioning")
    })?;

    let small = Mesh::interval(0.0, FRAC_PI_2, 15).unwrap();
    let m =
        gp::build_posterior(&kernel, small.points(), 0.0, &bc, false).map_err(|e| e.to_string())?;
    let n = 10_000;
    let samples = m.sample_n(&mut ChaCha8Rng::seed_from_u64(11), n);
    let dim = m.dim();
    let mut mean = vec![0.0; dim];
    for s in &samples {
        for (a, v) in mean.iter_mut().zip(s) {
            *a += v / n as f64;
        }
    }
    let sd_max = (0..dim)
        .map(|p| m.covariance()[(p, p)].sqrt())
        .fold(0.0, f64::max);
    let mean_gap = (0..dim)
        .map(|p| (mean[p] - m.mean()[p]).abs())
        .fold(0.0, f64::max);
    ensure(mean_gap <= 4.0 * sd_max / (n as f64).sqrt(), || {
        format!("sample mean off by {mean_gap:e}")
    })?;
    let mut cov = DMatrix::zeros(dim, dim);
    for s in &samples {
        for p in 0..dim {
            for q in 0..dim {
                cov[(p, q)] += (s[p] - mean[p]) * (s[q] - mean[q]) / (n - 1) as f64;
            }
        }
    }
    let rel = (&cov - m.covariance()).norm() / m.covariance().norm();
    ensure(rel <= 0.1, || {
        format!("sample covariance relative error {rel:.3}")
    })?;

    Ok(format!(
        "marginalization {marg:.1e}, interpolation {interp:.1e}, sample mean gap {mean_gap:.1e}, covariance error {rel:.3}"
    ))
}

// ---------------------------------------------------------------- criterion 2

/// Generic half-integer Matérn sum, independent of the closed forms.
fn matern_sum(p: u32, r: f64, ell: f64, var: f64) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let z = (2.0 * p as f64 + 1.0).sqrt() * r / ell;
    let poly: f64 = (0..=p)
        .map(|i| fact(p + i) / (fact(i) * fact(p - i)) * (2.0 * z).powi((p - i) as i32))
        .sum();
    var * (-z).exp() * fact(p) / fact(2 * p) * poly
}

fn kernel_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let ell = rng.random_range(0.05..5.0);
        let var = rng.random_range(0.1..10.0);
        let r = rng.random_range(0.0..6.0 * ell);
        for p in 0..3u32 {
            let k = KernelSpec::matern(f64::from(p) + 0.5, ell, var).unwrap();
            let want = matern_sum(p, r, ell, var);
            worst = worst.max((k.eval(r).unwrap() - want).abs() / want);
        }
        let se = KernelSpec::squared_exponential(ell, var).unwrap();
        let want = var * (-(r * r) / (2.0 * ell * ell)).exp();
        worst = worst.max((se.eval(r).unwrap() - want).abs() / want);
    }
    ensure(worst <= 1e-12, || format!("worst relative error {worst:e}"))?;
    Ok(format!("400 evaluations, worst relative error {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 3

fn ensemble(agents: Vec<Vec<f64>>, costs: Vec<f64>) -> Ensemble {
    Ensemble {
        agents,
        costs,
        iteration: 0,
    }
}

fn cbo_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..200 {
        let n = rng.random_range(2..12);
        let agents: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..6).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let costs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let alpha = 10f64.powf(rng.random_range(-2.0..6.0));
        let v = cbo::consensus(&ensemble(agents.clone(), costs.clone()), alpha)
            .map_err(|e| e.to_string())?;
        for (p, vp) in v.iter().enumerate() {
            let lo = agents.iter().map(|u| u[p]).fold(f64::INFINITY, f64::min);
            let hi = agents
                .iter()
                .map(|u| u[p])
                .fold(f64::NEG_INFINITY, f64::max);
            ensure(lo - 1e-12 <= *vp && *vp <= hi + 1e-12, || {
                format!("trial {trial}: consensus outside hull")
            })?;
        }
    }

    let agents: Vec<Vec<f64>> = (0..7)
        .map(|i| vec![i as f64, (i * i) as f64 - 3.0])
        .collect();
    let costs = vec![2.0, 0.9, 1.7, 0.5, 0.6, 3.0, 0.55];
    let v =
        cbo::consensus(&ensemble(agents.clone(), costs.clone()), 1e3).map_err(|e| e.to_string())?;
    let (best, _) = ensemble(agents.clone(), costs).best();
    let argmin_gap = v
        .iter()
        .zip(&agents[best])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(argmin_gap <= 1e-8, || format!("argmin gap {argmin_gap:e}"))?;

    let l2 = WeightedL2::new(vec![0.5, 1.0, 0.5]);
    let v = vec![1.0, -2.0, 0.5];
    let noise = vec![0.3, -1.1, 0.7];
    let p = CboParams::with_iterations(2, 1.0, 1.0, 0.1, 1, 0).unwrap();
    ensure(cbo::update_agent(&v, &v, &noise, &p, &l2) == v, || {
        "U = v is not a fixed point".into()
    })?;
    let collapse = CboParams::with_iterations(2, 1.0, 10.0, 0.1, 1, 0).unwrap();
    ensure(
        cbo::update_agent(&[0.1, 0.2, 0.3], &v, &[0.0; 3], &collapse, &l2) == v,
        || "lambda tau = 1 does not collapse onto v".into(),
    )?;

    let q = scenario(
        "problem = \"quadratic_sanity\"\n[cbo]\nagents = 16\nalpha = 1e3\niterations = 40\n",
    );
    let with_threads = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| q.run(99))
            .map_err(|e| e.to_string())
    };
    let one = with_threads(1)?;
    for threads in [2, 5] {
        let other = with_threads(threads)?;
        ensure(
            one.output.history.same_trajectory(&other.output.history)
                && one.output.consensus == other.output.consensus,
            || format!("{threads} threads diverge from 1 thread"),
        )?;
    }
    Ok(format!(
        "hull check on 200 draws, argmin gap {argmin_gap:.1e}, threads 1/2/5 identical"
    ))
}

fn shift_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..10);
        let agents: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..4).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        // dyadic costs and integer shifts, so shifting itself is exact
        let costs: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..5 << 20)) / f64::from(1 << 20))
            .collect();
        let alpha = rng.random_range(0.01..100.0);
        let shift = f64::from(rng.random_range(-1000..=1000));
        let a = cbo::consensus(&ensemble(agents.clone(), costs.clone()), alpha)
            .map_err(|e| e.to_string())?;
        let b = cbo::consensus(
            &ensemble(agents, costs.iter().map(|c| c + shift).collect()),
            alpha,
        )
        .map_err(|e| e.to_string())?;
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs() / (1.0 + x.abs()));
        }
    }
    ensure(worst <= 1e-12, || {
        format!("shift changes consensus by {worst:e}")
    })?;
    Ok(format!("{worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 4

fn constraint_preservation() -> Check {
    let s = scenario(
        "problem = \"harmonic1d_constrained\"\nseed = 1\n[cbo]\nagents = 50\niterations = 500\n[mesh]\npoints = 50\n",
    );
    let prescribed = s.prescribed();
    ensure(prescribed.len() == 4, || {
        format!("expected 4 prescribed values, found {}", prescribed.len())
    })?;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    s.run_with(1, |snap| {
        for u in &snap.ensemble.agents {
            for &(k, val) in &prescribed {
                worst = worst.max((u[k] - val).abs());
                checked += 1;
            }
        }
    })
    .map_err(|e| e.to_string())?;
    ensure(worst <= 1e-3, || format!("deviation {worst:e}"))?;
    Ok(format!(
        "{checked} checks over 501 iterates, worst deviation {worst:.1e}"
    ))
}

// ---------------------------------------------------------------- criterion 5

const HARMONIC: &str = r#"
problem = "harmonic1d"
[kernel]
nu = 2.5
length_scale = 1.0
signal_variance = 4.0
[cbo]
agents = 100
alpha = 1e5
lambda = 1.0
tau = 0.1
iterations = 2000
[mesh]
points = 50
"#;

fn harmonic_reproduction() -> Check {
    let s = scenario(HARMONIC);
    let mut passed = 0;
    let mut lines = Vec::new();
    for seed in 1..=5 {
        let o = run(&s, seed)?;
        let ratio = reduction(&o);
        let linf = o.final_error.map_or(f64::INFINITY, |e| e.linf);
        if ratio <= 1e-2 && linf <= 0.15 {
            passed += 1;
        }
        lines.push(format!("seed {seed}: ratio {ratio:.1e} linf {linf:.1e}"));
    }
    let detail = format!("{passed}/5 seeds [{}]", lines.join("; "));
    ensure(passed >= 4, || detail.clone())?;
    Ok(detail)
}

// ------------------------------------------------------------ criteria 6 and 7

fn grid_scenario(problem: &str) -> String {
    format!(
        r#"
problem = "{problem}"
[kernel]
nu = 2.5
length_scale = 1.0
signal_variance = 4.0
[cbo]
agents = 100
alpha = 1e5
lambda = 1.0
tau = 0.1
iterations = 1000
[mesh]
nx = 15
ny = 15
"#
    )
}

const GRID_SEEDS: [u64; 3] = [1, 2, 3];

fn poisson_reproduction(poisson: &[RepeatOutcome]) -> Check {
    let mut passed = 0;
    let mut lines = Vec::new();
    for o in poisson {
        let ratio = reduction(o);
        let first = o.rows[0].err_linf.unwrap_or(f64::NAN);
        let last = o.final_error.map_or(f64::NAN, |e| e.linf);
        if ratio <= 0.1 && first / last >= 2.0 {
            passed += 1;
        }
        lines.push(format!(
            "seed {}: ratio {ratio:.1e} linf {first:.2} -> {last:.3}",
            o.seed
        ));
    }

    let s = scenario(&grid_scenario("poisson2d_constrained"));
    let prescribed = s.prescribed();
    let boundary = s.mesh.boundary_indices().len();
    ensure(prescribed.len() == boundary + 4, || {
        format!(
            "expected {boundary} boundary and 4 interior values, found {}",
            prescribed.len()
        )
    })?;
    let mut constrained_ok = 0;
    for seed in GRID_SEEDS {
        let mut worst: f64 = 0.0;
        let o = s
            .run_with(seed, |snap| {
                for u in snap
                    .ensemble
                    .agents
                    .iter()
                    .chain(std::iter::once(&snap.consensus.to_vec()))
                {
                    for &(k, val) in &prescribed {
                        worst = worst.max((u[k] - val).abs());
                    }
                }
            })
            .map_err(|e| e.to_string())?;
        if worst <= 1e-3 && o.output.consensus_cost < o.initial_median {
            constrained_ok += 1;
        }
        lines.push(format!(
            "constrained seed {seed}: prescribed gap {worst:.1e} ratio {:.1e}",
            reduction(&o)
        ));
    }
    let detail = format!(
        "poisson2d {passed}/3, constrained {constrained_ok}/3 [{}]",
        lines.join("; ")
    );
    ensure(passed >= 2 && constrained_ok >= 2, || detail.clone())?;
    Ok(detail)
}

fn nonlinear_matches_poisson(poisson: &[RepeatOutcome]) -> Check {
    let s = scenario(&grid_scenario("nonlinear2d"));
    let mut lines = Vec::new();
    let mut ok = true;
    for p in poisson {
        let o = run(&s, p.seed)?;
        let rel = reduction(&o) / reduction(p);
        ok &= (0.1..=10.0).contains(&rel);
        lines.push(format!(
            "seed {}: nonlinear {:.1e} vs poisson {:.1e}",
            p.seed,
            reduction(&o),
            reduction(p)
        ));
    }
    let detail = lines.join("; ");
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

// ------------------------------------------------------------ criteria 8 and 9

fn shepherd_toml(nu: f64, iterations: usize, repeats: usize) -> String {
    format!(
        r#"
problem = "shepherd"
seed = 1
repeats = {repeats}
[kernel]
nu = {nu:?}
length_scale = 2.0
signal_variance = 0.05
[cbo]
agents = 50
alpha = 100.0
lambda = 2.0
tau = 0.1
iterations = {iterations}
[shepherd]
sheep = 20
dogs = 1
steps = 100
"#
    )
}

fn run_to(dir: &Path, toml: &str) -> Result<Summary, String> {
    experiment::run_experiment(&resolve(toml), dir).map_err(|e| e.to_string())?;
    output::read_json(&dir.join("summary.json")).map_err(|e| e.to_string())
}

fn shepherd_desk() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let s = run_to(tmp.path(), &shepherd_toml(0.5, 500, 3))?;
    let zero = s
        .zero_control_cost
        .ok_or("summary has no zero-control cost")?;
    let mut lines = Vec::new();
    let mut ok = true;
    for k in 0..3 {
        let (fin, best0) = (s.final_costs[k], s.initial_best_costs[k]);
        ok &= fin < zero && fin < best0;
        lines.push(format!(
            "seed {}: {fin:.2} (initial best {best0:.2})",
            s.seeds[k]
        ));
    }
    let detail = format!("zero control {zero:.2}; {}", lines.join("; "));
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

fn smoothness_comparison() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for nu in [0.5, 2.5] {
        let dir = tmp.path().join(format!("nu_{nu}"));
        let s = run_to(&dir, &shepherd_toml(nu, 200, 5))?;
        let zero = s
            .zero_control_cost
            .ok_or("summary has no zero-control cost")?;
        let improved = s.final_costs.iter().filter(|&&c| c < zero).count();
        ok &= s.final_costs.len() == 5 && improved == 5 && s.mean_final_cost.is_finite();
        lines.push(format!(
            "nu {nu}: mean {:.2}, {improved}/5 below {zero:.2}",
            s.mean_final_cost
        ));
    }
    let detail = lines.join("; ");
    ensure(ok, || detail.clone())?;
    Ok(detail)
}

// --------------------------------------------------------------- criterion 10

fn numerics_suite() -> Check {
    let order = |coarse: f64, fine: f64| (coarse / fine).log2();
    let d2_err = |n: usize| {
        let mesh = Mesh::interval(0.0, 2.0, n).unwrap();
        let u: Vec<f64> = mesh
            .points()
            .iter()
            .map(|p| p[0].exp() * p[0].sin())
            .collect();
        let d2 = mesh.second_derivative(&u).unwrap();
        mesh.interior_indices()
            .iter()
            .zip(&d2)
            .map(|(&k, v)| {
                let x = mesh.points().point(k)[0];
                (v - 2.0 * x.exp() * x.cos()).abs()
            })
            .fold(0.0, f64::max)
    };
    let lap_err = |n: usize| {
        let mesh = Mesh::unit_square(n, n).unwrap();
        let f = |p: &[f64]| (PI * p[0]).sin() * (2.0 * p[1]).cos();
        let u: Vec<f64> = mesh.points().iter().map(f).collect();
        let lap = mesh.laplacian(&u).unwrap();
        mesh.interior_indices()
            .iter()
            .zip(&lap)
            .map(|(&k, v)| (v + (PI * PI + 4.0) * f(mesh.points().point(k))).abs())
            .fold(0.0, f64::max)
    };
    let fd = order(d2_err(21), d2_err(41)).min(order(lap_err(17), lap_err(33)));
    ensure(fd >= 1.9, || format!("stencil order {fd:.3}"))?;

    let rk_err = |m: usize| {
        let mut p = ShepherdParams::desk(1);
        let neutral = Morse::new(1.0, 1.0, 1.0, 1.0).unwrap();
        p.morse_ss = neutral;
        p.morse_sd = neutral;
        p.x0 = vec![[0.0, 0.0]];
        p.v0 = vec![[1.0, 0.0]];
        p.horizon = 1.0;
        p.steps = m;
        let traj = control::simulate(&p, &vec![0.0; p.control_len()]).unwrap();
        (traj.v[m][0][0] - (-1f64).exp()).abs()
    };
    let rk = order(rk_err(50), rk_err(100)).min(order(rk_err(100), rk_err(200)));
    ensure(rk >= 3.8, || format!("RK4 order {rk:.3}"))?;

    let mut quad: f64 = 0.0;
    for mesh in [
        Mesh::interval(-1.0, 2.5, 17).unwrap(),
        Mesh::grid([0.0, 2.0], [-1.0, 0.5], 9, 13).unwrap(),
    ] {
        let c = 3.7;
        let got = mesh.integrate(&vec![c; mesh.len()]).unwrap();
        quad = quad.max((got - c * mesh.measure()).abs() / (c * mesh.measure()));
    }
    ensure(quad <= 1e-12, || format!("quadrature error {quad:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut morse: f64 = 0.0;
    for _ in 0..1000 {
        let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.1..5.0));
        let r = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
        let p = Morse::new(c[0], c[1], c[2], c[3]).unwrap();
        let f = control::morse_force(r, &p);
        let g = control::morse_force([-r[0], -r[1]], &p);
        morse = morse.max((f[0] + g[0]).abs()).max((f[1] + g[1]).abs());
        let same = control::morse_force(r, &Morse::new(c[0], c[1], c[0], c[1]).unwrap());
        morse = morse.max(same[0].abs()).max(same[1].abs());
    }
    ensure(morse <= 1e-12, || format!("Morse identity gap {morse:e}"))?;
    Ok(format!(
        "stencil order {fd:.2}, RK4 order {rk:.2}, quadrature {quad:.1e}, Morse {morse:.1e}"
    ))
}

// ------------------------------------------------------------------- driver

/// Criteria named in `GPCBO_ACCEPTANCE` (comma separated), or all of them.
fn selected(n: u32) -> bool {
    std::env::var("GPCBO_ACCEPTANCE")
        .map(|v| v.split(',').any(|c| c.trim().parse() == Ok(n)))
        .unwrap_or(true)
}

fn report(n: u32, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    if !selected(n) {
        println!("criterion {n}: SKIP (not selected)");
        return true;
    }
    let start = Instant::now();
    let result = f();
    let took = start.elapsed();
    let over = limit.is_some_and(|l| took > l);
    let (pass, detail) = match result {
        Ok(d) if !over => (true, d),
        Ok(d) => (false, format!("{d}; took longer than {:?}", limit.unwrap())),
        Err(d) => (false, d),
    };
    println!(
        "criterion {n}: {} ({detail}) [{:.1} s]",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    pass
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let mut all = true;
    all &= report(1, secs(10), gp_suite);
    all &= report(2, secs(1), kernel_suite);
    all &= report(3, secs(5), || {
        let a = cbo_suite()?;
        let b = shift_invariance()?;
        Ok(format!("{a}, shift gap {b}"))
    });
    all &= report(4, secs(60), constraint_preservation);
    all &= report(5, secs(180), harmonic_reproduction);

    let start = Instant::now();
    let poisson = if !(selected(6) || selected(7)) {
        Err("not selected".to_string())
    } else {
        let s = scenario(&grid_scenario("poisson2d"));
        GRID_SEEDS
            .iter()
            .map(|&seed| run(&s, seed))
            .collect::<Result<Vec<_>, _>>()
    };
    let poisson_time = start.elapsed();
    all &= report(6, secs(600).map(|l| l.saturating_sub(poisson_time)), || {
        poisson_reproduction(poisson.as_ref().map_err(String::clone)?)
    });
    all &= report(7, None, || {
        nonlinear_matches_poisson(poisson.as_ref().map_err(String::clone)?)
    });
    all &= report(8, secs(600), shepherd_desk);
    all &= report(9, None, smoothness_comparison);
    all &= report(10, None, numerics_suite);

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
