//! Closed-form consensus conditions and delay margins, and a decision
//! procedure that maps an instance onto the strongest applicable result.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::LaplacianSpectrum;
use crate::pattern::{general_eigenvalues, two_layer_cross_eigenvalues, InteractionPattern, PatternSpectrum};

/// Absolute tolerance for comparing a delay against a margin.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Real parts of `-A`'s eigenvalues must be below `-HURWITZ_TOL`.
pub const HURWITZ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayPair {
    /// Intra-layer delay.
    pub tau1: f64,
    /// Cross-layer delay.
    pub tau2: f64,
}

impl DelayPair {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        for (name, tau) in [("tau1", tau1), ("tau2", tau2)] {
            if !tau.is_finite() || tau < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and non-negative, got {tau}"
                )));
            }
        }
        Ok(Self { tau1, tau2 })
    }

    pub fn zero() -> Self {
        Self { tau1: 0.0, tau2: 0.0 }
    }

    pub fn max(&self) -> f64 {
        self.tau1.max(self.tau2)
    }

    /// Smallest strictly positive delay, if any.
    pub fn min_positive(&self) -> Option<f64> {
        [self.tau1, self.tau2]
            .into_iter()
            .filter(|&t| t > 0.0)
            .reduce(f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    ConsensusGuaranteed,
    UnstableGuaranteed,
    MarginalBoundary,
    OutsideTheory,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ConsensusGuaranteed => "ConsensusGuaranteed",
            Verdict::UnstableGuaranteed => "UnstableGuaranteed",
            Verdict::MarginalBoundary => "MarginalBoundary",
            Verdict::OutsideTheory => "OutsideTheory",
        }
    }
}

/// Which result a verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Justification {
    /// `tau1 = tau2 = 0`: consensus iff `-A` is Hurwitz.
    DelayFree,
    /// `tau1 = 0` and `|mu_k| < 1`: consensus for every `tau2`.
    NoIntraDelay,
    /// `tau2 = 0`, `a_k >= 0`: sufficient bound on `tau1`.
    NoCrossDelay,
    /// `tau1 = tau2`: exact margin.
    EqualDelay,
    /// `tau1 <= tau2` below the calibrated two-delay margin.
    TwoDelay,
    None,
}

impl Justification {
    pub fn as_str(self) -> &'static str {
        match self {
            Justification::DelayFree => "delay-free",
            Justification::NoIntraDelay => "no-intra-delay",
            Justification::NoCrossDelay => "no-cross-delay",
            Justification::EqualDelay => "equal-delay",
            Justification::TwoDelay => "two-delay",
            Justification::None => "none",
        }
    }
}

/// All applicable margins for one instance plus the regime verdict.
/// Margin fields are present only when `mu_max_abs < 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub tau1: f64,
    pub tau2: f64,
    pub lambda_max: f64,
    /// Equal-delay margin `c / (lambda_max zeta_max)`.
    pub tau_max: Option<f64>,
    pub tau_max_over_sqrt2: Option<f64>,
    /// `c / (lambda_max zeta'_max)`.
    pub tau_prime_max: Option<f64>,
    /// `pi / (2 lambda_max (1 + b_max))`, only when every `a_k >= 0`.
    pub tau_intra_only: Option<f64>,
    /// `min_k c_k / (lambda_max |zeta_k|)`; equals `tau_max` for `d = 2`.
    pub tau_equal_exact: Option<f64>,
    pub hurwitz_delay_free: bool,
    pub mu_max_abs: f64,
    pub verdict: Verdict,
    pub justification: Justification,
    pub note: Option<String>,
}

/// `-A` is Hurwitz, checked on the eigenvalues of `A` itself.
pub fn delay_free_consensus(p: &InteractionPattern) -> Result<bool> {
    let eig = general_eigenvalues(p.matrix().clone())?;
    Ok(eig.iter().all(|z| -z.re < -HURWITZ_TOL))
}

fn check_lambda(lambda_max: f64) -> Result<()> {
    if lambda_max.is_finite() && lambda_max > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "lambda_max must be positive, got {lambda_max}"
        )))
    }
}

fn require_unit_disc(s: &PatternSpectrum) -> Result<()> {
    if s.mu_max_abs < 1.0 - BOUNDARY_TOL {
        Ok(())
    } else {
        Err(Error::HypothesisViolated(format!(
            "max |mu_k| = {:.6} is not below 1",
            s.mu_max_abs
        )))
    }
}

/// Exact equal-delay margin `c / (lambda_max zeta_max)`.
pub fn margin_equal_delays(lambda_max: f64, s: &PatternSpectrum) -> Result<f64> {
    check_lambda(lambda_max)?;
    require_unit_disc(s)?;
    Ok(s.c / (lambda_max * s.zeta_max))
}

/// Per-mode equal-delay crossing `min_k c_k / (lambda_max |zeta_k|)`.
pub fn equal_delay_exact_margin(lambda_max: f64, s: &PatternSpectrum) -> Result<f64> {
    check_lambda(lambda_max)?;
    require_unit_disc(s)?;
    Ok(s.per_mode_ratio() / lambda_max)
}

/// `(tau_max / sqrt(2), tau'_max)`; consensus holds for
/// `0 <= tau1 <= tau2 <` the larger of the two.
pub fn margin_unequal_delays(lambda_max: f64, s: &PatternSpectrum) -> Result<(f64, f64)> {
    let tau_max = margin_equal_delays(lambda_max, s)?;
    Ok((tau_max / SQRT_2, s.c / (lambda_max * s.zeta_prime_max)))
}

/// Sufficient bound on `tau1` when `tau2 = 0`.
pub fn margin_intra_only(lambda_max: f64, s: &PatternSpectrum) -> Result<f64> {
    check_lambda(lambda_max)?;
    require_unit_disc(s)?;
    if let Some(m) = s.mu.iter().find(|m| m.re < -HURWITZ_TOL) {
        return Err(Error::HypothesisViolated(format!(
            "requires every Re(mu_k) >= 0, found {:.6}",
            m.re
        )));
    }
    Ok(PI / (2.0 * lambda_max * (1.0 + s.b_max)))
}

struct Margins {
    tau_max: f64,
    over_sqrt2: f64,
    prime: f64,
    intra: Option<f64>,
    exact: f64,
}

fn margins(lambda_max: f64, s: &PatternSpectrum) -> Option<Margins> {
    let tau_max = margin_equal_delays(lambda_max, s).ok()?;
    let (over_sqrt2, prime) = margin_unequal_delays(lambda_max, s).ok()?;
    Some(Margins {
        tau_max,
        over_sqrt2,
        prime,
        intra: margin_intra_only(lambda_max, s).ok(),
        exact: equal_delay_exact_margin(lambda_max, s).ok()?,
    })
}

/// Decision procedure; the first matching rule wins.
pub fn classify(
    spec: &LaplacianSpectrum,
    s: &PatternSpectrum,
    delays: DelayPair,
) -> Result<MarginReport> {
    if !spec.is_connected() {
        return Err(Error::DisconnectedGraph(spec.lambda2));
    }
    let lambda_max = spec.lambda_max;
    let DelayPair { tau1, tau2 } = delays;
    let hurwitz = s.min_zeta_re() > HURWITZ_TOL;
    let m = margins(lambda_max, s);
    let in_disc = m.is_some();
    let marginal_pattern = (s.mu_max_abs - 1.0).abs() <= BOUNDARY_TOL;

    let mut report = MarginReport {
        tau1,
        tau2,
        lambda_max,
        tau_max: m.as_ref().map(|m| m.tau_max),
        tau_max_over_sqrt2: m.as_ref().map(|m| m.over_sqrt2),
        tau_prime_max: m.as_ref().map(|m| m.prime),
        tau_intra_only: m.as_ref().and_then(|m| m.intra),
        tau_equal_exact: m.as_ref().map(|m| m.exact),
        hurwitz_delay_free: hurwitz,
        mu_max_abs: s.mu_max_abs,
        verdict: Verdict::OutsideTheory,
        justification: Justification::None,
        note: None,
    };
    let mut decide = |verdict, justification| {
        report.verdict = verdict;
        report.justification = justification;
    };

    if s.mu_max_abs >= 1.0 + BOUNDARY_TOL && !hurwitz {
        decide(Verdict::UnstableGuaranteed, Justification::DelayFree);
    } else if tau1 == 0.0 && tau2 == 0.0 {
        let verdict = if hurwitz {
            Verdict::ConsensusGuaranteed
        } else if s.min_zeta_re() >= -HURWITZ_TOL {
            Verdict::MarginalBoundary
        } else {
            Verdict::UnstableGuaranteed
        };
        decide(verdict, Justification::DelayFree);
    } else if let Some(m) = m.as_ref().filter(|_| in_disc) {
        if tau1 == 0.0 {
            decide(Verdict::ConsensusGuaranteed, Justification::NoIntraDelay);
        } else if tau2 == 0.0 && m.intra.is_some_and(|b| tau1 < b - BOUNDARY_TOL) {
            decide(Verdict::ConsensusGuaranteed, Justification::NoCrossDelay);
        } else if let Some(v) = equal_delay_verdict(m, tau1, tau2) {
            decide(v, Justification::EqualDelay);
        } else if tau1 <= tau2 && tau2 < m.over_sqrt2.max(m.prime) - BOUNDARY_TOL {
            decide(Verdict::ConsensusGuaranteed, Justification::TwoDelay);
        }
    }

    if report.verdict == Verdict::OutsideTheory {
        report.note = Some(if marginal_pattern {
            "marginal pattern; simulate".to_string()
        } else {
            "no closed-form claim; run the oracle or simulate".to_string()
        });
    }
    Ok(report)
}

fn equal_delay_verdict(m: &Margins, tau1: f64, tau2: f64) -> Option<Verdict> {
    if (tau1 - tau2).abs() > BOUNDARY_TOL {
        return None;
    }
    let tau = tau1.max(tau2);
    if tau < m.tau_max - BOUNDARY_TOL {
        return Some(Verdict::ConsensusGuaranteed);
    }
    // Above c / (lambda_max zeta_max) instability is only certain past the
    // per-mode crossing; the two coincide unless c and zeta_max come from
    // different modes.
    let boundary = if (m.exact - m.tau_max).abs() <= BOUNDARY_TOL {
        m.tau_max
    } else {
        m.exact
    };
    if (tau - boundary).abs() <= BOUNDARY_TOL {
        Some(Verdict::MarginalBoundary)
    } else if tau > boundary {
        Some(Verdict::UnstableGuaranteed)
    } else {
        None
    }
}

/// Two-layer specialisation for `A = [[1, a12], [a21, 1]]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoLayerReport {
    pub a12: f64,
    pub a21: f64,
    pub product: f64,
    pub mu: [Complex64; 2],
    /// `tau1 = 0` gives consensus for every `tau2`.
    pub tau1_zero_consensus: bool,
    /// Bound on `tau1` for `tau2 = 0`: `pi / (2 lambda_max (1 + sqrt|a12 a21|))`.
    pub tau_intra_only: f64,
    /// For `-1 < a12 a21 < 0`, the bound claimed for `0 <= tau1 <= tau2`.
    /// Reported as stated; it exceeds the exact equal-delay margin, so the
    /// general-path margins below are the ones to trust.
    pub tau_two_delay_as_stated: Option<f64>,
    pub general_tau_max: f64,
    pub general_tau_max_over_sqrt2: f64,
    pub general_tau_prime_max: f64,
    pub general_tau_intra_only: Option<f64>,
    /// Closed-form `mu` and shared formulas agree with the general path.
    pub consistent: bool,
}

pub fn two_layer_margins(a12: f64, a21: f64, lambda_max: f64) -> Result<TwoLayerReport> {
    check_lambda(lambda_max)?;
    let product = a12 * a21;
    if product.abs() >= 1.0 {
        return Err(Error::HypothesisViolated(format!(
            "|a12 a21| = {:.6} is not below 1",
            product.abs()
        )));
    }
    let mu = two_layer_cross_eigenvalues(a12, a21);
    let general = InteractionPattern::two_layer(a12, a21).cross_spectrum()?;
    let tau_intra_only = PI / (2.0 * lambda_max * (1.0 + product.abs().sqrt()));
    let general_tau_max = margin_equal_delays(lambda_max, &general)?;
    let (general_tau_max_over_sqrt2, general_tau_prime_max) =
        margin_unequal_delays(lambda_max, &general)?;
    let general_tau_intra_only = margin_intra_only(lambda_max, &general).ok();

    let mu_agree = mu
        .iter()
        .zip(&general.mu)
        .all(|(x, y)| (x - y).norm() <= BOUNDARY_TOL);
    let intra_agree = general_tau_intra_only.map_or(true, |g| (g - tau_intra_only).abs() <= BOUNDARY_TOL);

    Ok(TwoLayerReport {
        a12,
        a21,
        product,
        mu,
        tau1_zero_consensus: true,
        tau_intra_only,
        tau_two_delay_as_stated: (product < 0.0).then_some(tau_intra_only),
        general_tau_max,
        general_tau_max_over_sqrt2,
        general_tau_prime_max,
        general_tau_intra_only,
        consistent: mu_agree && intra_agree,
    })
}

/// `pi / (2 lambda)`: the scalar delayed-consensus margin, useful as a
/// sanity reference (decoupled layers, `A = I`).
pub fn scalar_margin(lambda: f64) -> f64 {
    FRAC_PI_2 / lambda
}
