//! Fixed-step RK4 integration of the delayed network
//!
//! ```text
//! x'(t) = -(L ⊗ I_d) x(t - tau1) - (L ⊗ A_cross) x(t - tau2)
//! ```
//!
//! Delayed states are read from a ring buffer of past step values by linear
//! interpolation. A zero delay reads the current RK stage instead. States are
//! stacked agent-major: component `q` of agent `i` lives at `i * d + q`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::Graph;
use crate::pattern::InteractionPattern;
use crate::stability::DelayPair;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 30.0;
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;
pub const CONVERGENCE_EPS: f64 = 1e-6;
pub const CONVERGENCE_WINDOW: f64 = 1.0;
/// Final disagreement above this multiple of the initial one counts as divergence.
pub const GROWTH_FACTOR: f64 = 1e3;
/// Half-width of the uniform distribution used for random initial states.
pub const RANDOM_X0_RANGE: f64 = 5.0;

/// Initial function on `[-max delay, 0]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum History {
    /// `x(t) = x0`.
    #[default]
    Constant,
    /// Ramps linearly from `0` at `t = -max delay` to `x0` at `t = 0`.
    LinearToZero,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub graph: Graph,
    pub pattern: InteractionPattern,
    pub delays: DelayPair,
    /// `n * d` values, agent-major.
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub step: f64,
    pub history: History,
    /// Keep every k-th step in the trajectory (1 keeps all).
    pub record_every: usize,
}

impl SimConfig {
    /// Defaults: horizon 30 s, step 1 ms, constant history, random `x0` from seed 0.
    pub fn new(graph: Graph, pattern: InteractionPattern, delays: DelayPair) -> Self {
        let x0 = random_initial_state(graph.n(), pattern.dim(), 0);
        Self {
            graph,
            pattern,
            delays,
            x0,
            horizon: DEFAULT_HORIZON,
            step: DEFAULT_STEP,
            history: History::Constant,
            record_every: 1,
        }
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.x0 = random_initial_state(self.graph.n(), self.pattern.dim(), seed);
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_history(mut self, history: History) -> Self {
        self.history = history;
        self
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    /// The step actually used: shrunk to `delay / 10` when a positive delay
    /// is shorter than the requested step.
    pub fn effective_step(&self) -> Result<f64> {
        let step = self.step;
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        let Some(delay) = self.delays.min_positive() else {
            return Ok(step);
        };
        if delay < step {
            Ok(delay / 10.0)
        } else if step > delay / 10.0 * (1.0 + 1e-12) {
            Err(Error::StepTooLarge { step, delay })
        } else {
            Ok(step)
        }
    }

    fn validate(&self) -> Result<f64> {
        let step = self.effective_step()?;
        let n_states = self.graph.n() * self.pattern.dim();
        if self.x0.len() != n_states {
            return Err(Error::InvalidArgument(format!(
                "x0 has {} values, expected n * d = {n_states}",
                self.x0.len()
            )));
        }
        if !self.horizon.is_finite() || self.horizon < step {
            return Err(Error::InvalidArgument(format!(
                "horizon {} must be at least one step ({step})",
                self.horizon
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be >= 1".into()));
        }
        Ok(step)
    }
}

/// Uniform in `[-5, 5]` per coordinate, reproducible from `seed`.
pub fn random_initial_state(n: usize, d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n * d)
        .map(|_| rng.random_range(-RANDOM_X0_RANGE..=RANDOM_X0_RANGE))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Classification {
    Converged { value: Vec<f64>, at_time: f64 },
    Bounded,
    Diverged { at_time: f64 },
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Converged { .. } => "Converged",
            Classification::Bounded => "Bounded",
            Classification::Diverged { .. } => "Diverged",
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, Classification::Converged { .. })
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, Classification::Diverged { .. })
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub n: usize,
    pub d: usize,
    /// Integration step after any automatic shrinking.
    pub step: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub disagreement: Vec<f64>,
    /// Time at which some `|x| > DIVERGENCE_THRESHOLD` stopped the run.
    pub aborted_at: Option<f64>,
    /// Largest deviation of any per-layer sum from its initial value, over every step.
    pub layer_sum_drift: f64,
    pub classification: Classification,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_disagreement(&self) -> f64 {
        *self.disagreement.last().expect("trajectory holds the initial state")
    }

    /// Per-layer average of the final state.
    pub fn final_mean(&self) -> Vec<f64> {
        consensus_value(self.final_state(), self.n, self.d)
    }

    /// Angular frequency of `x_{agent, layer}` relative to its layer mean,
    /// estimated from zero crossings over `t >= from_time`. `None` with fewer
    /// than three crossings.
    pub fn oscillation_frequency(&self, agent: usize, layer: usize, from_time: f64) -> Option<f64> {
        let (n, d) = (self.n, self.d);
        let signal: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.states)
            .filter(|(t, _)| **t >= from_time)
            .map(|(&t, x)| {
                let mean = (0..n).map(|i| x[i * d + layer]).sum::<f64>() / n as f64;
                (t, x[agent * d + layer] - mean)
            })
            .collect();
        let crossings: Vec<f64> = signal
            .windows(2)
            .filter(|w| (w[0].1 < 0.0) != (w[1].1 < 0.0))
            .map(|w| {
                let ((t0, y0), (t1, y1)) = (w[0], w[1]);
                t0 + (t1 - t0) * y0 / (y0 - y1)
            })
            .collect();
        if crossings.len() < 3 {
            return None;
        }
        let span = crossings[crossings.len() - 1] - crossings[0];
        Some(std::f64::consts::PI * (crossings.len() - 1) as f64 / span)
    }
}

/// Euclidean norm of the component orthogonal to the consensus space.
pub fn disagreement_norm(state: &[f64], n: usize, d: usize) -> f64 {
    assert_eq!(state.len(), n * d, "state length must be n * d");
    let mean = consensus_value(state, n, d);
    state
        .iter()
        .enumerate()
        .map(|(k, x)| (x - mean[k % d]).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `(1/n) sum_i x_i`: the per-layer average, conserved by the dynamics.
pub fn consensus_value(x: &[f64], n: usize, d: usize) -> Vec<f64> {
    assert_eq!(x.len(), n * d, "state length must be n * d");
    let mut mean = vec![0.0; d];
    for (k, v) in x.iter().enumerate() {
        mean[k % d] += v;
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    mean
}

fn layer_sums(x: &[f64], d: usize) -> Vec<f64> {
    let mut sums = vec![0.0; d];
    for (k, v) in x.iter().enumerate() {
        sums[k % d] += v;
    }
    sums
}

/// Converged when disagreement stays below `eps` over the final `window`
/// seconds; Diverged when the run aborted or the final disagreement exceeds
/// `GROWTH_FACTOR` times the initial one; Bounded otherwise.
pub fn classify_trajectory(t: &Trajectory, eps: f64, window: f64) -> Classification {
    if let Some(at_time) = t.aborted_at {
        return Classification::Diverged { at_time };
    }
    let limit = GROWTH_FACTOR * t.disagreement[0].max(eps);
    if t.final_disagreement() > limit {
        let idx = t.disagreement.iter().position(|&v| v > limit).unwrap_or(0);
        return Classification::Diverged { at_time: t.times[idx] };
    }
    let t_end = *t.times.last().unwrap();
    let covers_window = t_end - t.times[0] >= window;
    let tail_ok = t
        .times
        .iter()
        .zip(&t.disagreement)
        .filter(|(time, _)| **time >= t_end - window)
        .all(|(_, &v)| v < eps);
    if covers_window && tail_ok {
        let first = t
            .disagreement
            .iter()
            .rposition(|&v| v >= eps)
            .map_or(0, |i| i + 1);
        return Classification::Converged {
            value: t.final_mean(),
            at_time: t.times[first],
        };
    }
    Classification::Bounded
}

struct Network {
    n: usize,
    d: usize,
    neighbors: Vec<Vec<usize>>,
    /// `A_cross`, row-major.
    cross: Vec<f64>,
}

impl Network {
    /// `out_i = sum_j (u_j - u_i) + A_cross sum_j (v_j - v_i)` over neighbours `j`.
    fn rhs(&self, intra: &[f64], cross: &[f64], out: &mut [f64], diff: &mut [f64]) {
        let d = self.d;
        for i in 0..self.n {
            let base = i * d;
            for q in 0..d {
                let (mut a, mut b) = (0.0, 0.0);
                for &j in &self.neighbors[i] {
                    a += intra[j * d + q] - intra[base + q];
                    b += cross[j * d + q] - cross[base + q];
                }
                out[base + q] = a;
                diff[q] = b;
            }
            for q in 0..d {
                let row = &self.cross[q * d..(q + 1) * d];
                out[base + q] += row.iter().zip(diff.iter()).map(|(m, v)| m * v).sum::<f64>();
            }
        }
    }
}

/// Past step values `x(k h)` for the last `cap` steps.
struct HistoryBuffer<'a> {
    dim: usize,
    cap: usize,
    step: f64,
    data: Vec<f64>,
    latest: usize,
    x0: &'a [f64],
    initial: History,
    max_delay: f64,
}

impl<'a> HistoryBuffer<'a> {
    fn new(x0: &'a [f64], step: f64, max_delay: f64, initial: History) -> Self {
        let dim = x0.len();
        let cap = (max_delay / step).ceil() as usize + 3;
        let mut data = vec![0.0; cap * dim];
        data[..dim].copy_from_slice(x0);
        Self { dim, cap, step, data, latest: 0, x0, initial, max_delay }
    }

    fn slot(&self, k: usize) -> &[f64] {
        let at = (k % self.cap) * self.dim;
        &self.data[at..at + self.dim]
    }

    fn push(&mut self, k: usize, x: &[f64]) {
        let at = (k % self.cap) * self.dim;
        self.data[at..at + self.dim].copy_from_slice(x);
        self.latest = k;
    }

    fn at(&self, t: f64, out: &mut [f64]) {
        if t <= 0.0 {
            match self.initial {
                History::Constant => out.copy_from_slice(self.x0),
                History::LinearToZero => {
                    let w = (1.0 + t / self.max_delay).max(0.0);
                    out.iter_mut().zip(self.x0).for_each(|(o, x)| *o = w * x);
                }
            }
            return;
        }
        let pos = t / self.step;
        let k0 = (pos.floor() as usize).min(self.latest);
        if k0 == self.latest {
            out.copy_from_slice(self.slot(k0));
            return;
        }
        let frac = pos - k0 as f64;
        let (a, b) = (self.slot(k0), self.slot(k0 + 1));
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = x + frac * (y - x);
        }
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    let h = cfg.validate()?;
    let (n, d) = (cfg.graph.n(), cfg.pattern.dim());
    let dim = n * d;
    let net = Network {
        n,
        d,
        neighbors: cfg.graph.neighbors(),
        cross: cfg.pattern.cross_matrix().transpose().as_slice().to_vec(),
    };
    let DelayPair { tau1, tau2 } = cfg.delays;
    let mut hist = HistoryBuffer::new(&cfg.x0, h, cfg.delays.max(), cfg.history);
    let n_steps = ((cfg.horizon / h).round() as usize).max(1);

    let mut x = cfg.x0.clone();
    let mut stage = vec![0.0; dim];
    let mut k = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    let mut lag1 = vec![0.0; dim];
    let mut lag2 = vec![0.0; dim];
    let mut diff = vec![0.0; d];
    let sums0 = layer_sums(&x, d);
    let mut drift: f64 = 0.0;

    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut disagreement = vec![disagreement_norm(&x, n, d)];
    let mut aborted_at = None;

    // Evaluates the right-hand side at stage time `t` for stage state `y`.
    let eval = |t: f64, y: &[f64], out: &mut [f64], lag1: &mut [f64], lag2: &mut [f64], diff: &mut [f64], hist: &HistoryBuffer| {
        let u: &[f64] = if tau1 > 0.0 {
            hist.at(t - tau1, lag1);
            lag1
        } else {
            y
        };
        let v: &[f64] = if tau2 > 0.0 {
            hist.at(t - tau2, lag2);
            lag2
        } else {
            y
        };
        net.rhs(u, v, out, diff);
    };

    for step in 0..n_steps {
        let t = step as f64 * h;
        let [k1, k2, k3, k4] = &mut k;
        eval(t, &x, k1, &mut lag1, &mut lag2, &mut diff, &hist);
        axpy(&x, 0.5 * h, k1, &mut stage);
        eval(t + 0.5 * h, &stage, k2, &mut lag1, &mut lag2, &mut diff, &hist);
        axpy(&x, 0.5 * h, k2, &mut stage);
        eval(t + 0.5 * h, &stage, k3, &mut lag1, &mut lag2, &mut diff, &hist);
        axpy(&x, h, k3, &mut stage);
        eval(t + h, &stage, k4, &mut lag1, &mut lag2, &mut diff, &hist);
        for i in 0..dim {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        let t_next = (step + 1) as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState(t_next));
        }
        hist.push(step + 1, &x);
        for (s, s0) in layer_sums(&x, d).iter().zip(&sums0) {
            drift = drift.max((s - s0).abs());
        }
        let blown = x.iter().any(|v| v.abs() > DIVERGENCE_THRESHOLD);
        if (step + 1) % cfg.record_every == 0 || blown || step + 1 == n_steps {
            times.push(t_next);
            states.push(x.clone());
            disagreement.push(disagreement_norm(&x, n, d));
        }
        if blown {
            aborted_at = Some(t_next);
            break;
        }
    }

    let mut traj = Trajectory {
        n,
        d,
        step: h,
        times,
        states,
        disagreement,
        aborted_at,
        layer_sum_drift: drift,
        classification: Classification::Bounded,
    };
    traj.classification = classify_trajectory(&traj, CONVERGENCE_EPS, CONVERGENCE_WINDOW);
    Ok(traj)
}

fn axpy(x: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

/// Runs independent simulations, results in input order.
pub fn simulate_batch(cfgs: &[SimConfig], exec: Exec) -> Vec<Result<Trajectory>> {
    exec.map(cfgs, simulate)
}
