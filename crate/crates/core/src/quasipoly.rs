//! Scalar characteristic quasi-polynomials
//!
//! ```text
//! f(s) = s + lambda e^{-tau1 s} + lambda mu e^{-tau2 s}
//! ```
//!
//! one per nonzero Laplacian eigenvalue `lambda` and cross-pattern eigenvalue
//! `mu`. The network reaches consensus iff every such `f` has all its roots in
//! the open left half-plane. Roots are located by a coarse grid on `|f|`
//! followed by damped Newton refinement from each local minimum.
//!
//! Any root with `Re s >= 0` satisfies `|s| <= lambda (1 + |mu|)`, so the
//! default search rectangle covers the whole closed right half-plane part of
//! the root set; roots deep in the left half-plane may be clipped.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::LaplacianSpectrum;
use crate::pattern::PatternSpectrum;
use crate::stability::DelayPair;

/// Newton stops once `|f| < NEWTON_TOL`.
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITERS: usize = 50;
/// Roots closer than this are merged.
pub const ROOT_MERGE_TOL: f64 = 1e-6;
/// Crossings must satisfy `|f(j omega)| < CROSSING_TOL`.
pub const CROSSING_TOL: f64 = 1e-8;
/// The oracle calls an instance stable when its rightmost root is below `-STABLE_MARGIN`.
pub const STABLE_MARGIN: f64 = 1e-6;

const AXIS_GRID_HALF: usize = 2000;
const MIN_CELLS: f64 = 160.0;
const MAX_GRID: usize = 4000;
/// Widest `omega` range searched by [`rightmost_abscissa`], in units of `lambda (1 + |mu|)`.
const OMEGA_EXPANSION_CAP: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharInstance {
    pub lambda: f64,
    pub mu: Complex64,
    pub tau1: f64,
    pub tau2: f64,
}

impl CharInstance {
    pub fn new(lambda: f64, mu: Complex64, delays: DelayPair) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(mu.re.is_finite() && mu.im.is_finite()) {
            return Err(Error::InvalidArgument("mu must be finite".into()));
        }
        let DelayPair { tau1, tau2 } = DelayPair::new(delays.tau1, delays.tau2)?;
        Ok(Self { lambda, mu, tau1, tau2 })
    }

    pub fn value(&self, s: Complex64) -> Complex64 {
        s + self.lambda * (-self.tau1 * s).exp() + self.lambda * self.mu * (-self.tau2 * s).exp()
    }

    pub fn derivative(&self, s: Complex64) -> Complex64 {
        1.0 - self.lambda * self.tau1 * (-self.tau1 * s).exp()
            - self.lambda * self.mu * self.tau2 * (-self.tau2 * s).exp()
    }

    /// Magnitude of the three terms of `f(s)`, the scale of rounding error.
    fn term_scale(&self, s: Complex64) -> f64 {
        s.norm()
            + self.lambda * (-self.tau1 * s.re).exp()
            + self.lambda * self.mu.norm() * (-self.tau2 * s.re).exp()
    }

    /// `lambda (1 + |mu|)`, a bound on `|s|` for roots with `Re s >= 0`.
    pub fn radius(&self) -> f64 {
        self.lambda * (1.0 + self.mu.norm())
    }

    pub fn default_sigma_range(&self) -> (f64, f64) {
        let r = self.radius();
        (-2.0 * r, 2.0 * r)
    }

    pub fn omega_bound(&self) -> f64 {
        1.1 * self.radius()
    }

    /// `lambda (e^{-sigma tau1} + |mu| e^{-sigma tau2})`: no root with
    /// `Re s >= sigma` has a larger imaginary part.
    pub fn omega_bound_from(&self, sigma: f64) -> f64 {
        self.lambda * ((-sigma * self.tau1).exp() + self.mu.norm() * (-sigma * self.tau2).exp())
    }

    /// The single root when both delays vanish.
    pub fn delay_free_root(&self) -> Complex64 {
        -self.lambda * (1.0 + self.mu)
    }

    /// Damped Newton iteration; `None` when it fails to converge.
    pub fn newton(&self, start: Complex64) -> Option<Complex64> {
        let mut s = start;
        let mut f = self.value(s);
        for _ in 0..NEWTON_MAX_ITERS {
            if !(f.re.is_finite() && f.im.is_finite()) {
                return None;
            }
            if f.norm() < NEWTON_TOL {
                return Some(s);
            }
            let df = self.derivative(s);
            if df.norm() == 0.0 {
                return None;
            }
            let step = f / df;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = s - t * step;
                let fc = self.value(cand);
                if fc.norm() < f.norm() {
                    s = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted || (t * step).norm() <= 1e-15 * (1.0 + s.norm()) {
                // Stagnation: accept only if the residual is at rounding level.
                return (f.norm() <= 1e-12 * self.term_scale(s)).then_some(s);
            }
        }
        (f.norm() < NEWTON_TOL).then_some(s)
    }
}

pub fn char_value(s: Complex64, inst: &CharInstance) -> Complex64 {
    inst.value(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootScanResult {
    /// Imaginary-axis crossing frequencies, ascending.
    pub crossings: Vec<f64>,
    /// Largest real part among the refined roots; `-inf` if none was found.
    pub rightmost_abscissa: f64,
    /// False when some candidate failed to refine and was dropped.
    pub converged: bool,
}

/// Samples `(omega, |f(j omega)|)` on `[-omega_max, omega_max]`.
pub fn axis_scan(inst: &CharInstance, omega_max: f64, half_points: usize) -> Vec<(f64, f64)> {
    let h = omega_max / half_points as f64;
    (0..=2 * half_points)
        .map(|k| {
            let w = -omega_max + k as f64 * h;
            (w, inst.value(Complex64::new(0.0, w)).norm())
        })
        .collect()
}

/// Finds frequencies where `f(j omega) = 0` for `|omega| <= omega_max`.
pub fn imag_axis_crossings(inst: &CharInstance, omega_max: f64) -> Result<RootScanResult> {
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "omega_max must be positive, got {omega_max}"
        )));
    }
    let scan = axis_scan(inst, omega_max, AXIS_GRID_HALF);
    let h = omega_max / AXIS_GRID_HALF as f64;
    let mut crossings: Vec<f64> = Vec::new();
    let mut roots = Vec::new();
    let mut converged = true;
    for k in 1..scan.len() - 1 {
        let g = scan[k].1;
        if !(g <= scan[k - 1].1 && g <= scan[k + 1].1) {
            continue;
        }
        match inst.newton(Complex64::new(0.0, scan[k].0)) {
            Some(root) => {
                roots.push(root);
                let w = root.im;
                let on_axis = inst.value(Complex64::new(0.0, w)).norm() < CROSSING_TOL;
                if on_axis
                    && w.abs() <= omega_max + h
                    && crossings.iter().all(|c| (c - w).abs() > ROOT_MERGE_TOL)
                {
                    crossings.push(w);
                }
            }
            None => converged = false,
        }
    }
    crossings.sort_by(f64::total_cmp);
    let rightmost_abscissa = roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(RootScanResult {
        crossings,
        rightmost_abscissa,
        converged,
    })
}

/// Roots of `f` located inside `sigma_range x [-omega_bound, omega_bound]`.
pub fn roots_in_rectangle(
    inst: &CharInstance,
    sigma_range: (f64, f64),
    omega_bound: f64,
) -> Result<Vec<Complex64>> {
    let (lo, hi) = sigma_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "sigma range must be ordered, got ({lo}, {hi})"
        )));
    }
    let tau = inst.tau1.max(inst.tau2);
    let mut h = ((hi - lo) / MIN_CELLS).min(2.0 * omega_bound / MIN_CELLS);
    if tau > 0.0 {
        // Root chains of a retarded quasi-polynomial are spaced ~2 pi / tau apart.
        h = h.min(std::f64::consts::FRAC_PI_4 / tau);
    }
    let ns = (((hi - lo) / h).ceil() as usize + 1).min(MAX_GRID);
    let nw = ((2.0 * omega_bound / h).ceil() as usize + 1).min(MAX_GRID);
    let hs = (hi - lo) / (ns - 1) as f64;
    let hw = 2.0 * omega_bound / (nw - 1) as f64;
    let point = |i: usize, j: usize| Complex64::new(lo + i as f64 * hs, -omega_bound + j as f64 * hw);

    let grid: Vec<f64> = (0..ns)
        .flat_map(|i| (0..nw).map(move |j| (i, j)))
        .map(|(i, j)| inst.value(point(i, j)).norm())
        .collect();
    let at = |i: usize, j: usize| grid[i * nw + j];

    let mut seeds = vec![inst.delay_free_root()];
    for i in 0..ns {
        for j in 0..nw {
            let g = at(i, j);
            let is_min = (i.saturating_sub(1)..=(i + 1).min(ns - 1))
                .flat_map(|a| (j.saturating_sub(1)..=(j + 1).min(nw - 1)).map(move |b| (a, b)))
                .all(|(a, b)| (a, b) == (i, j) || g <= at(a, b));
            if is_min {
                seeds.push(point(i, j));
            }
        }
    }

    let inside = |s: Complex64| {
        s.re >= lo - hs && s.re <= hi + hs && s.im.abs() <= omega_bound + hw
    };
    let mut roots: Vec<Complex64> = Vec::new();
    let mut any_converged = false;
    for seed in seeds {
        // A real seed stays real under Newton when f is real on the real
        // axis, so a nearly coalesced complex pair needs a nudge off it.
        let refined = inst
            .newton(seed)
            .or_else(|| inst.newton(seed + Complex64::new(0.0, 0.25 * hw.max(1e-3))));
        if let Some(root) = refined {
            any_converged = true;
            if inside(root) && roots.iter().all(|r| (r - root).norm() > ROOT_MERGE_TOL) {
                roots.push(root);
            }
        }
    }
    if !any_converged {
        return Err(Error::NoConvergence);
    }
    Ok(roots)
}

/// Largest real part among the roots in the search rectangle, or `-inf`
/// when no root was found. `None` uses [`CharInstance::default_sigma_range`].
///
/// The default `omega` bound only covers roots with `Re s >= 0`. Once a
/// rightmost candidate `sigma*` is known, every root with `Re s >= sigma*`
/// obeys `|omega| <= lambda (e^{-sigma* tau1} + |mu| e^{-sigma* tau2})`, so
/// the search is widened to that bound (capped at `OMEGA_EXPANSION_CAP r`)
/// until no root further right turns up.
pub fn rightmost_abscissa(inst: &CharInstance, sigma_range: Option<(f64, f64)>) -> Result<f64> {
    let (lo, hi) = sigma_range.unwrap_or_else(|| inst.default_sigma_range());
    let mut omega = inst.omega_bound();
    let mut best = roots_in_rectangle(inst, (lo, hi), omega)?
        .iter()
        .map(|r| r.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let cap = OMEGA_EXPANSION_CAP * inst.radius();
    for _ in 0..4 {
        let from = best.max(lo);
        let needed = (1.05 * inst.omega_bound_from(from)).min(cap);
        if needed <= omega * (1.0 + 1e-9) || from >= hi {
            break;
        }
        omega = needed;
        let found = match roots_in_rectangle(inst, (from, hi), omega) {
            Ok(roots) => roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max),
            // The widened band may hold no root at all.
            Err(Error::NoConvergence) => break,
            Err(e) => return Err(e),
        };
        if found <= best + ROOT_MERGE_TOL {
            break;
        }
        best = found;
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub stable: bool,
    /// Max over all `(lambda_i, mu_k)` of the rightmost root's real part.
    pub rightmost: f64,
    pub critical_lambda: f64,
    pub critical_mu: Complex64,
    pub instances: usize,
}

/// The distinct `(lambda_i, mu_k)` pairs, `i >= 2`. Conjugate `mu` give
/// conjugate root sets, so only `Im mu >= 0` is kept.
pub fn oracle_instances(
    spec: &LaplacianSpectrum,
    s: &PatternSpectrum,
    delays: DelayPair,
) -> Result<Vec<CharInstance>> {
    let mut lambdas: Vec<f64> = Vec::new();
    for &l in spec.nonzero() {
        if lambdas.iter().all(|x| (x - l).abs() > 1e-9) {
            lambdas.push(l);
        }
    }
    let mut mus: Vec<Complex64> = Vec::new();
    for &m in &s.mu {
        let m = Complex64::new(m.re, m.im.abs());
        if mus.iter().all(|x| (x - m).norm() > 1e-9) {
            mus.push(m);
        }
    }
    lambdas
        .iter()
        .flat_map(|&l| mus.iter().map(move |&m| (l, m)))
        .map(|(l, m)| CharInstance::new(l, m, delays))
        .collect()
}

/// Consensus holds iff every characteristic quasi-polynomial is Hurwitz.
pub fn network_stable_oracle(
    spec: &LaplacianSpectrum,
    s: &PatternSpectrum,
    delays: DelayPair,
    exec: Exec,
) -> Result<OracleReport> {
    if !spec.is_connected() {
        return Err(Error::DisconnectedGraph(spec.lambda2));
    }
    let instances = oracle_instances(spec, s, delays)?;
    let abscissae = exec.try_map(&instances, |inst| rightmost_abscissa(inst, None))?;
    let (idx, rightmost) = abscissae
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, r)| if r > best.1 { (i, r) } else { best });
    Ok(OracleReport {
        stable: rightmost < -STABLE_MARGIN,
        rightmost,
        critical_lambda: instances[idx].lambda,
        critical_mu: instances[idx].mu,
        instances: instances.len(),
    })
}
