//! The repeated interaction pattern `A` (unit diagonal) and the spectral
//! quantities of `A_cross = A - I` that every delay margin is built from.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const DIAGONAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionPattern {
    a: DMatrix<f64>,
}

impl InteractionPattern {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = a.shape();
        if rows != cols || rows < 2 {
            return Err(Error::BadDimension { rows, cols });
        }
        for p in 0..rows {
            if (a[(p, p)] - 1.0).abs() > DIAGONAL_TOL {
                return Err(Error::NonUnitDiagonal(p));
            }
        }
        Ok(Self { a })
    }

    /// Builds a pattern from row-major rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != d) {
            return Err(Error::BadDimension {
                rows: d,
                cols: bad.as_ref().len(),
            });
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i].as_ref()[j]))
    }

    /// Two-layer pattern `[[1, a12], [a21, 1]]`.
    pub fn two_layer(a12: f64, a21: f64) -> Self {
        Self {
            a: DMatrix::from_row_slice(2, 2, &[1.0, a12, a21, 1.0]),
        }
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.a
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// `A` with its diagonal zeroed.
    pub fn cross_matrix(&self) -> DMatrix<f64> {
        let mut c = self.a.clone();
        c.fill_diagonal(0.0);
        c
    }

    pub fn cross_spectrum(&self) -> Result<PatternSpectrum> {
        Ok(PatternSpectrum::from_eigenvalues(general_eigenvalues(
            self.cross_matrix(),
        )?))
    }

    /// `||A_cross||_inf < 1`, which places every `mu_k` inside the unit disc.
    pub fn gershgorin_bound(&self) -> bool {
        cross_row_sum_max(&self.cross_matrix()) < 1.0
    }
}

fn cross_row_sum_max(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn general_eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    let schur = Schur::try_new(m, f64::EPSILON, 1000 * n.max(10))
        .ok_or(Error::EigenFailure("nonsymmetric Schur"))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// `mu = ±sqrt(a12 a21)` for a two-layer pattern, sorted like
/// [`PatternSpectrum::mu`].
pub fn two_layer_cross_eigenvalues(a12: f64, a21: f64) -> [Complex64; 2] {
    let p = a12 * a21;
    let r = p.abs().sqrt();
    if p >= 0.0 {
        [Complex64::new(-r, 0.0), Complex64::new(r, 0.0)]
    } else {
        [Complex64::new(0.0, -r), Complex64::new(0.0, r)]
    }
}

/// Spectral summary of `A_cross`. Per-mode vectors share the ordering of
/// `mu`, which is ascending by (real, imaginary).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternSpectrum {
    pub mu: Vec<Complex64>,
    /// `1 + mu_k`, the eigenvalues of `A`.
    pub zeta: Vec<Complex64>,
    /// Principal argument of `zeta_k`.
    pub alpha: Vec<f64>,
    pub c: f64,
    pub zeta_max: f64,
    pub zeta_prime_max: f64,
    pub b_max: f64,
    pub mu_max_abs: f64,
}

impl PatternSpectrum {
    pub fn from_eigenvalues(mut mu: Vec<Complex64>) -> Self {
        assert!(!mu.is_empty());
        mu.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        let zeta: Vec<Complex64> = mu.iter().map(|m| m + 1.0).collect();
        let alpha: Vec<f64> = zeta.iter().map(|z| z.arg()).collect();
        let c = alpha.iter().map(|&a| c_of(a)).fold(f64::INFINITY, f64::min);
        let zeta_max = zeta.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let zeta_prime_max = mu
            .iter()
            .map(|m| 1.0 + m.re.abs() + m.im.abs())
            .fold(0.0, f64::max);
        let b_max = mu.iter().map(|m| m.im.abs()).fold(0.0, f64::max);
        let mu_max_abs = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
        Self {
            mu,
            zeta,
            alpha,
            c,
            zeta_max,
            zeta_prime_max,
            b_max,
            mu_max_abs,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `c_k = min{|alpha_k - pi/2|, |alpha_k + pi/2|}`.
    pub fn c_k(&self, k: usize) -> f64 {
        c_of(self.alpha[k])
    }

    /// `min_k c_k / |zeta_k|`: the equal-delay crossing of the slowest mode,
    /// per unit of `lambda_max`. Never below `c / zeta_max`; the two agree
    /// whenever one mode attains both `c` and `zeta_max` (always for `d = 2`).
    pub fn per_mode_ratio(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.c_k(k) / self.zeta[k].norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Real parts of the eigenvalues of `A`; `-A` is Hurwitz iff all are positive.
    pub fn min_zeta_re(&self) -> f64 {
        self.zeta.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    pub fn min_mu_re(&self) -> f64 {
        self.mu.iter().map(|m| m.re).fold(f64::INFINITY, f64::min)
    }
}

fn c_of(alpha: f64) -> f64 {
    (alpha - FRAC_PI_2).abs().min((alpha + FRAC_PI_2).abs())
}
