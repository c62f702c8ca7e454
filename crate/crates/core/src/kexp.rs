//! The κ-exponential, its inverse, and the κ-generalised distribution on
//! `(0, ∞)` with survival function `exp_κ(-β x^α)`.
//!
//! Everything is evaluated in log space through the identity
//! `ln exp_κ(y) = asinh(κ y) / κ`, so large `β x^α` never overflows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest `u` (and largest `1 - u`) passed to the quantile function.
pub const QUANTILE_CLAMP: f64 = 1e-15;

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("kappa must lie in (0, 1), got {kappa}")))
    }
}

/// κ-exponential `(√(1+κ²x²) + κx)^(1/κ)`.
pub fn kexp(x: f64, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("kexp argument must be finite, got {x}")));
    }
    Ok(ln_kexp(x, kappa).exp())
}

/// `ln exp_κ(x)`; unchecked.
#[inline]
pub(crate) fn ln_kexp(x: f64, kappa: f64) -> f64 {
    (kappa * x).asinh() / kappa
}

/// κ-logarithm `(x^κ - x^(-κ)) / (2κ)`, the inverse of [`kexp`].
pub fn klog(x: f64, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(x > 0.0) || x.is_infinite() {
        return Err(Error::Domain(format!("klog argument must be positive and finite, got {x}")));
    }
    Ok(klog_of_ln(x.ln(), kappa))
}

/// κ-logarithm of `e^ln_x`, written as `sinh(κ ln x) / κ`.
#[inline]
fn klog_of_ln(ln_x: f64, kappa: f64) -> f64 {
    (kappa * ln_x).sinh() / kappa
}

/// Parameters `(κ, α, β)` of the κ-generalised distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKappaParams")]
pub struct KappaParams {
    kappa: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawKappaParams {
    kappa: f64,
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawKappaParams> for KappaParams {
    type Error = Error;
    fn try_from(r: RawKappaParams) -> Result<Self> {
        KappaParams::new(r.kappa, r.alpha, r.beta)
    }
}

impl KappaParams {
    pub fn new(kappa: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0 && kappa < 1.0) {
            return Err(Error::InvalidParams(format!("kappa must lie in (0, 1), got {kappa}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be positive and finite, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParams(format!("beta must be positive and finite, got {beta}")));
        }
        Ok(Self { kappa, alpha, beta })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Power-law exponent `α/κ` and prefactor `(2κβ)^(-1/κ)` of the
    /// large-`x` tail `P(X > x) ~ prefactor · x^(-exponent)`.
    pub fn tail_asymptote(&self) -> (f64, f64) {
        (self.alpha / self.kappa, (2.0 * self.kappa * self.beta).powf(-1.0 / self.kappa))
    }

    /// `β x^α`
    #[inline]
    fn stretched(&self, x: f64) -> f64 {
        self.beta * x.powf(self.alpha)
    }

    /// `ln P(X > x)`.
    pub fn ln_survival(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        Ok(ln_kexp(-self.stretched(x), self.kappa))
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        self.ln_survival(x).map(f64::exp)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        // 1 - e^l without cancellation for small x
        self.ln_survival(x).map(|l| -l.exp_m1())
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.log_pdf(x).map(f64::exp)
    }

    /// `ln α + ln β + (α-1) ln x + asinh(-κβx^α)/κ - ½ ln(1 + κ²β²x^(2α))`.
    pub fn log_pdf(&self, x: f64) -> Result<f64> {
        check_support(x)?;
        let ln_x = x.ln();
        let y = self.stretched(x);
        let k = self.kappa * y;
        // ½ ln(1+k²) = ln hypot(1, k), which stays finite for huge k.
        Ok(self.alpha.ln() + self.beta.ln() + (self.alpha - 1.0) * ln_x - k.asinh() / self.kappa
            - 1.0f64.hypot(k).ln())
    }

    /// Inverse CDF `((-ln_κ(1-u)) / β)^(1/α)`, with `u` clamped to
    /// `[1e-15, 1 - 1e-15]`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {u}")));
        }
        let u = u.clamp(QUANTILE_CLAMP, 1.0 - QUANTILE_CLAMP);
        Ok(self.quantile_unchecked(u))
    }

    #[inline]
    fn quantile_unchecked(&self, u: f64) -> f64 {
        let y = -klog_of_ln((-u).ln_1p(), self.kappa);
        (y / self.beta).powf(1.0 / self.alpha)
    }

    /// Inverse-transform draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                self.quantile_unchecked(u.clamp(QUANTILE_CLAMP, 1.0 - QUANTILE_CLAMP))
            })
            .collect()
    }

    /// Log-likelihood `Σ ln f(x_i)`.
    pub fn loglik(&self, data: &[f64]) -> Result<f64> {
        data.iter().map(|&x| self.log_pdf(x)).sum()
    }
}

fn check_support(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("x must be positive and finite, got {x}")))
    }
}

/// A positive sample with `ln x` precomputed, for repeated likelihood
/// evaluation inside an optimizer.
#[derive(Debug, Clone)]
pub(crate) struct LogSample {
    ln_x: Vec<f64>,
    sum_ln_x: f64,
}

impl LogSample {
    pub(crate) fn new(data: &[f64]) -> Result<Self> {
        let ln_x = data
            .iter()
            .map(|&x| check_support(x).map(|_| x.ln()))
            .collect::<Result<Vec<_>>>()?;
        let sum_ln_x = ln_x.iter().sum();
        Ok(Self { ln_x, sum_ln_x })
    }

    pub(crate) fn ln_values(&self) -> &[f64] {
        &self.ln_x
    }

    /// Same value as [`KappaParams::loglik`] up to rounding; parameters are
    /// not validated.
    pub(crate) fn loglik(&self, kappa: f64, alpha: f64, beta: f64) -> f64 {
        let ln_beta = beta.ln();
        let inv_kappa = 1.0 / kappa;
        let mut acc = 0.0;
        for &lx in &self.ln_x {
            let k = kappa * (ln_beta + alpha * lx).exp();
            if k > 1e150 {
                acc += (2.0 * k).ln() * inv_kappa + k.ln();
                continue;
            }
            let k2 = k * k;
            let r = (1.0 + k2).sqrt();
            // asinh(k) = ln1p(k + k²/(1+r)); ln r = ½ ln1p(k²)
            acc += (k + k2 / (1.0 + r)).ln_1p() * inv_kappa + 0.5 * k2.ln_1p();
        }
        self.ln_x.len() as f64 * (alpha.ln() + ln_beta) + (alpha - 1.0) * self.sum_ln_x - acc
    }
}
