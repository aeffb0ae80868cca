//! Sheep–shepherd optimal control.
//!
//! Sheep positions `x_i` and velocities `v_i` follow
//!
//! ```text
//! x_i' = v_i
//! v_i' = −α_damp v_i − (1/N_S) Σ_j K_s(x_j − x_i) − Σ_k K_d(d_k − x_i)
//! d_k' = u_k
//! ```
//!
//! where `K_s`, `K_d` are Morse forces and `u_k` is the velocity of dog `k`.
//! A control is a vector of nodal values on the uniform time grid, laid out
//! component-major: component `2k + a` holds axis `a` of dog `k`.

use crate::{Error, Result};

/// Regularization of `|r|` inside the Morse force.
pub const MORSE_EPS: f64 = 1e-8;

/// Strengths and ranges of a Morse interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Morse {
    pub c_rep: f64,
    pub l_rep: f64,
    pub c_att: f64,
    pub l_att: f64,
}

impl Morse {
    pub fn new(c_rep: f64, l_rep: f64, c_att: f64, l_att: f64) -> Result<Self> {
        let m = Self {
            c_rep,
            l_rep,
            c_att,
            l_att,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_rep", self.c_rep),
            ("l_rep", self.l_rep),
            ("c_att", self.c_att),
            ("l_att", self.l_att),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "Morse {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Scalar factor multiplying the unit direction.
    #[inline]
    pub fn magnitude(&self, dist: f64) -> f64 {
        -self.c_rep / self.l_rep * (-dist / self.l_rep).exp()
            + self.c_att / self.l_att * (-dist / self.l_att).exp()
    }
}

/// `K(r) = (−C_r/l_r e^{−|r|/l_r} + C_a/l_a e^{−|r|/l_a}) r/|r|` with
/// `|r|` regularized to `sqrt(|r|² + ε²)`.
#[inline]
pub fn morse_force(r: [f64; 2], p: &Morse) -> [f64; 2] {
    let dist = (r[0] * r[0] + r[1] * r[1] + MORSE_EPS * MORSE_EPS).sqrt();
    let s = p.magnitude(dist) / dist;
    [s * r[0], s * r[1]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShepherdParams {
    pub damping: f64,
    pub morse_ss: Morse,
    pub morse_sd: Morse,
    /// Weights of the variance, center-of-mass and control terms.
    pub sigma: [f64; 3],
    pub target_variance: f64,
    pub destination: [f64; 2],
    pub horizon: f64,
    pub steps: usize,
    pub x0: Vec<[f64; 2]>,
    pub v0: Vec<[f64; 2]>,
    pub d0: Vec<[f64; 2]>,
}

impl ShepherdParams {
    /// Desk-scale scenario with 20 sheep.
    pub fn desk(dogs: usize) -> Self {
        Self::scenario(20, dogs)
    }

    /// `sheep` sheep at rest on a centered lattice with spacing 0.6, dogs
    /// starting at x = −3, destination at (4, 0).
    pub fn scenario(sheep: usize, dogs: usize) -> Self {
        let x0 = lattice(sheep, 0.6);
        let d0 = (0..dogs)
            .map(|k| {
                let y = if dogs == 1 {
                    0.0
                } else {
                    -1.5 + 3.0 * k as f64 / (dogs - 1) as f64
                };
                [-3.0, y]
            })
            .collect();
        Self {
            damping: 1.0,
            morse_ss: Morse {
                c_rep: 3.0,
                l_rep: 3.0,
                c_att: 2.0,
                l_att: 0.5,
            },
            morse_sd: Morse {
                c_rep: 0.5,
                l_rep: 0.5,
                c_att: 4.0,
                l_att: 2.0,
            },
            sigma: [1.0, 1.0, 0.05],
            target_variance: 0.5,
            destination: [4.0, 0.0],
            horizon: 10.0,
            steps: 100,
            x0,
            v0: vec![[0.0; 2]; sheep],
            d0,
        }
    }

    pub fn sheep(&self) -> usize {
        self.x0.len()
    }

    pub fn dogs(&self) -> usize {
        self.d0.len()
    }

    pub fn time_step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Length of a control vector: `2 · dogs · (steps + 1)`.
    pub fn control_len(&self) -> usize {
        2 * self.dogs() * (self.steps + 1)
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.time_step();
        let mut t: Vec<f64> = (0..=self.steps).map(|k| k as f64 * h).collect();
        t[self.steps] = self.horizon;
        t
    }

    pub fn validate(&self) -> Result<()> {
        self.morse_ss.validate()?;
        self.morse_sd.validate()?;
        if !(self.damping.is_finite() && self.damping > 0.0) {
            return Err(Error::invalid(format!(
                "damping must be positive, got {}",
                self.damping
            )));
        }
        if self.sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid("cost weights must be nonnegative"));
        }
        if !(self.target_variance.is_finite() && self.target_variance >= 0.0) {
            return Err(Error::invalid("target variance must be nonnegative"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("horizon must be positive"));
        }
        if self.steps < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 time steps, got {}",
                self.steps
            )));
        }
        if self.x0.is_empty() {
            return Err(Error::invalid("need at least one sheep"));
        }
        if self.v0.len() != self.x0.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x0.len(),
                found: self.v0.len(),
            });
        }
        let finite = |v: &[[f64; 2]]| v.iter().flatten().all(|x| x.is_finite());
        if !(finite(&self.x0)
            && finite(&self.v0)
            && finite(&self.d0)
            && self.destination.iter().all(|x| x.is_finite()))
        {
            return Err(Error::invalid(
                "initial state and destination must be finite",
            ));
        }
        Ok(())
    }
}

/// `n` points on a centered grid with `floor(sqrt(n))` columns.
pub fn lattice(n: usize, spacing: f64) -> Vec<[f64; 2]> {
    let cols = ((n as f64).sqrt().floor() as usize).max(1);
    let rows = n.div_ceil(cols);
    let (cx, cy) = (
        (cols - 1) as f64 * spacing / 2.0,
        (rows - 1) as f64 * spacing / 2.0,
    );
    (0..n)
        .map(|i| {
            [
                (i % cols) as f64 * spacing - cx,
                (i / cols) as f64 * spacing - cy,
            ]
        })
        .collect()
}

/// States on the time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `x[k][i]`: sheep `i` at time `k`.
    pub x: Vec<Vec<[f64; 2]>>,
    pub v: Vec<Vec<[f64; 2]>>,
    pub d: Vec<Vec<[f64; 2]>>,
}

/// Center of mass and mean squared distance to it.
pub fn flock_stats(positions: &[[f64; 2]]) -> ([f64; 2], f64) {
    let n = positions.len() as f64;
    let mut e = [0.0; 2];
    for p in positions {
        e[0] += p[0];
        e[1] += p[1];
    }
    e[0] /= n;
    e[1] /= n;
    let var = positions
        .iter()
        .map(|p| (p[0] - e[0]).powi(2) + (p[1] - e[1]).powi(2))
        .sum::<f64>()
        / n;
    (e, var)
}

struct Layout {
    sheep: usize,
    dogs: usize,
}

impl Layout {
    fn len(&self) -> usize {
        4 * self.sheep + 2 * self.dogs
    }
    fn x(&self, i: usize) -> usize {
        2 * i
    }
    fn v(&self, i: usize) -> usize {
        2 * self.sheep + 2 * i
    }
    fn d(&self, k: usize) -> usize {
        4 * self.sheep + 2 * k
    }
}

fn rhs(
    p: &ShepherdParams,
    lay: &Layout,
    u: &[[f64; 2]],
    s: &[f64],
    acc: &mut [[f64; 2]],
    out: &mut [f64],
) {
    let inv_n = 1.0 / lay.sheep as f64;
    // K is odd, so each unordered pair is evaluated once; the j = i term is 0
    acc.iter_mut().for_each(|a| *a = [0.0; 2]);
    for i in 0..lay.sheep {
        let xi = lay.x(i);
        for j in i + 1..lay.sheep {
            let xj = lay.x(j);
            let f = morse_force([s[xj] - s[xi], s[xj + 1] - s[xi + 1]], &p.morse_ss);
            acc[i][0] += f[0];
            acc[i][1] += f[1];
            acc[j][0] -= f[0];
            acc[j][1] -= f[1];
        }
    }
    for i in 0..lay.sheep {
        let (xi, vi) = (lay.x(i), lay.v(i));
        let pos = [s[xi], s[xi + 1]];
        out[xi] = s[vi];
        out[xi + 1] = s[vi + 1];
        let mut acc_sd = [0.0; 2];
        for k in 0..lay.dogs {
            let dk = lay.d(k);
            let f = morse_force([s[dk] - pos[0], s[dk + 1] - pos[1]], &p.morse_sd);
            acc_sd[0] += f[0];
            acc_sd[1] += f[1];
        }
        for a in 0..2 {
            out[vi + a] = -p.damping * s[vi + a] - inv_n * acc[i][a] - acc_sd[a];
        }
    }
    for (k, uk) in u.iter().enumerate() {
        let dk = lay.d(k);
        out[dk] = uk[0];
        out[dk + 1] = uk[1];
    }
}

fn check_control(p: &ShepherdParams, control: &[f64]) -> Result<()> {
    p.validate()?;
    if control.len() != p.control_len() {
        return Err(Error::DimensionMismatch {
            expected: p.control_len(),
            found: control.len(),
        });
    }
    if control.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("control values must be finite"));
    }
    Ok(())
}

/// Dog velocities at time node `k`.
fn control_at(p: &ShepherdParams, control: &[f64], k: usize) -> Vec<[f64; 2]> {
    let stride = p.steps + 1;
    (0..p.dogs())
        .map(|dog| {
            [
                control[2 * dog * stride + k],
                control[(2 * dog + 1) * stride + k],
            ]
        })
        .collect()
}

fn midpoint(a: &[[f64; 2]], b: &[[f64; 2]]) -> Vec<[f64; 2]> {
    a.iter()
        .zip(b)
        .map(|(x, y)| [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])])
        .collect()
}

/// Integrates the dynamics with classical RK4 on `steps` uniform steps.
pub fn simulate(p: &ShepherdParams, control: &[f64]) -> Result<Trajectory> {
    check_control(p, control)?;
    let lay = Layout {
        sheep: p.sheep(),
        dogs: p.dogs(),
    };
    let n = lay.len();
    let h = p.time_step();

    let mut state = vec![0.0; n];
    for i in 0..lay.sheep {
        state[lay.x(i)..lay.x(i) + 2].copy_from_slice(&p.x0[i]);
        state[lay.v(i)..lay.v(i) + 2].copy_from_slice(&p.v0[i]);
    }
    for k in 0..lay.dogs {
        state[lay.d(k)..lay.d(k) + 2].copy_from_slice(&p.d0[k]);
    }

    let unpack = |s: &[f64]| {
        let x = (0..lay.sheep)
            .map(|i| [s[lay.x(i)], s[lay.x(i) + 1]])
            .collect();
        let v = (0..lay.sheep)
            .map(|i| [s[lay.v(i)], s[lay.v(i) + 1]])
            .collect();
        let d = (0..lay.dogs)
            .map(|k| [s[lay.d(k)], s[lay.d(k) + 1]])
            .collect();
        (x, v, d)
    };

    let times = p.times();
    let mut traj = Trajectory {
        times: times.clone(),
        x: Vec::with_capacity(p.steps + 1),
        v: Vec::with_capacity(p.steps + 1),
        d: Vec::with_capacity(p.steps + 1),
    };
    let push = |traj: &mut Trajectory, s: &[f64]| {
        let (x, v, d) = unpack(s);
        traj.x.push(x);
        traj.v.push(v);
        traj.d.push(d);
    };
    push(&mut traj, &state);

    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut acc = vec![[0.0; 2]; lay.sheep];
    let mut u0 = control_at(p, control, 0);
    for step in 0..p.steps {
        let u1 = control_at(p, control, step + 1);
        let um = midpoint(&u0, &u1);

        rhs(p, &lay, &u0, &state, &mut acc, &mut k1);
        for q in 0..n {
            tmp[q] = state[q] + 0.5 * h * k1[q];
        }
        rhs(p, &lay, &um, &tmp, &mut acc, &mut k2);
        for q in 0..n {
            tmp[q] = state[q] + 0.5 * h * k2[q];
        }
        rhs(p, &lay, &um, &tmp, &mut acc, &mut k3);
        for q in 0..n {
            tmp[q] = state[q] + h * k3[q];
        }
        rhs(p, &lay, &u1, &tmp, &mut acc, &mut k4);
        for q in 0..n {
            state[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }

        if state.iter().any(|s| !s.is_finite()) {
            return Err(Error::SimulationBlowUp {
                step: step + 1,
                time: times[step + 1],
            });
        }
        push(&mut traj, &state);
        u0 = u1;
    }
    Ok(traj)
}

/// Trapezoid-in-time integral of the running cost along a trajectory.
pub fn trajectory_cost(p: &ShepherdParams, traj: &Trajectory, control: &[f64]) -> f64 {
    let h = p.time_step();
    let [s1, s2, s3] = p.sigma;
    (0..=p.steps)
        .map(|k| {
            let (e, var) = flock_stats(&traj.x[k]);
            let effort: f64 = control_at(p, control, k)
                .iter()
                .map(|u| u[0] * u[0] + u[1] * u[1])
                .sum();
            let g = s1 * (var - p.target_variance).powi(2)
                + s2 * ((e[0] - p.destination[0]).powi(2) + (e[1] - p.destination[1]).powi(2))
                + s3 * effort;
            let w = if k == 0 || k == p.steps { 0.5 * h } else { h };
            w * g
        })
        .sum()
}

/// `f(u) = J(S(u), u)`. Invalid controls and blow-ups cost `+∞`.
pub fn reduced_cost(p: &ShepherdParams, control: &[f64]) -> f64 {
    match simulate(p, control) {
        Ok(traj) => trajectory_cost(p, &traj, control),
        Err(_) => f64::INFINITY,
    }
}

/// Cost of leaving every dog at rest.
pub fn zero_control_cost(p: &ShepherdParams) -> f64 {
    reduced_cost(p, &vec![0.0; p.control_len()])
}
