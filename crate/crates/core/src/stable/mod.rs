//! Stable distributions `S(α, β, γ, δ; 0)` in the 0-parameterization.
//!
//! Density and distribution function have no closed form; both are obtained
//! by numerical inversion of the characteristic function. With
//! `z = (x - δ)/γ` and `η(s)` the skewness phase,
//!
//! ```text
//! γ f(x)  = 1/π ∫_0^∞ e^{-s^α} cos(z s + η(s)) ds
//! F(x)    = 1/2 + 1/π ∫_0^∞ e^{-s^α} sin(z s + η(s)) / s ds
//! ```
//!
//! Each integral is truncated where `s^α = 34` and split at the periods of
//! the oscillating factor before adaptive Gauss–Kronrod quadrature.

mod fit;

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::roots::brent;

pub use fit::{fit_mle, StableFit};

/// Below this distance from 1 the `α = 1` form of the characteristic
/// function is used.
pub const ALPHA_ONE_BAND: f64 = 1e-8;

/// Truncation point of the inversion integrals: `e^{-34} < 1.8e-15`.
const ENVELOPE_CUTOFF: f64 = 34.0;

/// Accepted absolute error of a single density or CDF evaluation.
const MAX_QUAD_ERROR: f64 = 1e-9;

/// Oscillation periods above which the tail series replaces quadrature.
const SERIES_PERIODS: f64 = 400.0;

/// Quadrature is refused beyond this many periods.
const MAX_PERIODS: f64 = 2.0e6;

const SERIES_TERMS: i32 = 80;

const QUAD_TOL: Tolerance = Tolerance {
    abs: 1e-14,
    rel: 0.0,
    max_subdivisions: 200,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStableParams")]
pub struct StableParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
}

#[derive(Deserialize)]
struct RawStableParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
}

impl TryFrom<RawStableParams> for StableParams {
    type Error = Error;
    fn try_from(r: RawStableParams) -> Result<Self> {
        StableParams::new(r.alpha, r.beta, r.gamma, r.delta)
    }
}

/// Which tail of a distribution on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParams(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParams(format!("beta must lie in [-1, 1], got {beta}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!("gamma must be positive and finite, got {gamma}")));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParams(format!("delta must be finite, got {delta}")));
        }
        Ok(Self { alpha, beta, gamma, delta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn standardize(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("x must be finite, got {x}")));
        }
        Ok((x - self.delta) / self.gamma)
    }

    pub(crate) fn shape(&self) -> Shape {
        Shape::new(self.alpha, self.beta)
    }

    pub fn char_fn(&self, t: f64) -> Complex64 {
        char_fn(t, self)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        let z = self.standardize(x)?;
        Ok(self.shape().density(z)? / self.gamma)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        let z = self.standardize(x)?;
        Ok(self.shape().cdf_sf(z)?.0)
    }

    /// Survival function `P(X > x)`, computed directly so that small upper
    /// tail probabilities keep their relative accuracy.
    pub fn sf(&self, x: f64) -> Result<f64> {
        let z = self.standardize(x)?;
        Ok(self.shape().cdf_sf(z)?.1)
    }

    pub fn loglik(&self, data: &[f64]) -> Result<f64> {
        let shape = self.shape();
        let ln_gamma = self.gamma.ln();
        let mut acc = 0.0;
        for &x in data {
            let z = self.standardize(x)?;
            acc += shape.density(z)?.ln() - ln_gamma;
        }
        Ok(acc)
    }

    /// `x` with `P(X ≤ x) = u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {u}")));
        }
        if u > 0.5 {
            self.upper_quantile(1.0 - u)
        } else {
            let mirrored = StableParams::new(self.alpha, -self.beta, self.gamma, -self.delta)?;
            Ok(-mirrored.upper_quantile(u)?)
        }
    }

    /// `x` with `P(X > x) = p`.
    pub fn upper_quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("tail probability must lie in (0, 1), got {p}")));
        }
        let shape = self.shape();
        let f = |z: f64| -> Result<f64> { Ok(shape.cdf_sf(z)?.1 - p) };
        // Start from the power-law guess when there is one.
        let weight = c_alpha(self.alpha).map(|c| c * (1.0 + self.beta)).unwrap_or(0.0);
        let guess = if weight > 0.0 { (weight / p).powf(1.0 / self.alpha) } else { 1.0 };
        let (mut lo, mut hi) = (guess.min(1.0) - 1.0, guess.max(1.0));
        let mut f_lo = f(lo)?;
        let mut expansions = 0;
        while f_lo < 0.0 {
            hi = lo;
            lo -= 2f64.powi(expansions);
            f_lo = f(lo)?;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::Numerical("could not bracket the quantile from below".into()));
            }
        }
        expansions = 0;
        while f(hi)? > 0.0 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::Numerical("could not bracket the quantile from above".into()));
            }
        }
        let z = brent(f, lo, hi, 1e-11 * hi.abs().max(1.0), 200)?;
        Ok(self.delta + self.gamma * z)
    }
}

/// Characteristic function `E[e^{itX}]` of `S(α, β, γ, δ; 0)`.
pub fn char_fn(t: f64, p: &StableParams) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let StableParams { alpha, beta, gamma, delta } = *p;
    let gt = gamma * t.abs();
    let sign = t.signum();
    let (re, im) = if (alpha - 1.0).abs() < ALPHA_ONE_BAND {
        (-gt, -gt * beta * FRAC_2_PI * sign * gt.ln())
    } else {
        let ga = gamma.powf(alpha) * t.abs().powf(alpha);
        let tan = (PI * alpha / 2.0).tan();
        (-ga, -ga * beta * tan * sign * (gt.powf(1.0 - alpha) - 1.0))
    };
    Complex64::new(re, im + delta * t).exp()
}

/// Tail constant `sin(πα/2) Γ(α) / π`, defined for `α ∈ (0, 2)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("c_alpha requires alpha in (0, 2), got {alpha}")));
    }
    Ok((PI * alpha / 2.0).sin() * libm::tgamma(alpha) / PI)
}

/// Power-law approximant of `P(X > x)` (upper) or `P(X < -x)` (lower).
pub fn tail_asymptote(x: f64, p: &StableParams, side: Side) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("tail asymptote needs x > 0, got {x}")));
    }
    let c = c_alpha(p.alpha)?;
    let skew = match side {
        Side::Upper => 1.0 + p.beta,
        Side::Lower => 1.0 - p.beta,
    };
    Ok(p.gamma.powf(p.alpha) * c * skew * x.powf(-p.alpha))
}

/// The standardized law `S(α, β, 1, 0; 0)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Shape {
    alpha: f64,
    beta: f64,
    near_one: bool,
    tan: f64,
    upper: f64,
}

impl Shape {
    pub(crate) fn new(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            near_one: (alpha - 1.0).abs() < ALPHA_ONE_BAND,
            tan: (PI * alpha / 2.0).tan(),
            upper: ENVELOPE_CUTOFF.powf(1.0 / alpha),
        }
    }

    pub(crate) fn alpha(&self) -> f64 {
        self.alpha
    }

    /// End of the truncated integration range.
    pub(crate) fn upper(&self) -> f64 {
        self.upper
    }

    /// Phase contributed by skewness, `-Im ln φ(s) ` for `s > 0`.
    #[inline]
    fn eta(&self, s: f64) -> f64 {
        if self.beta == 0.0 {
            0.0
        } else if self.near_one {
            self.beta * FRAC_2_PI * s * s.ln()
        } else {
            // β tan(πα/2) (s - s^α), with s - s^α = -s·expm1((α-1) ln s)
            -self.beta * self.tan * s * ((self.alpha - 1.0) * s.ln()).exp_m1()
        }
    }

    /// Upper bound on `|η'(s)|` away from the origin, for segmenting.
    fn eta_rate(&self) -> f64 {
        if self.beta == 0.0 {
            return 0.0;
        }
        let at = |s: f64| {
            if self.near_one {
                (self.beta * FRAC_2_PI * (1.0 + s.ln())).abs()
            } else {
                (self.beta * self.tan * (1.0 - self.alpha * s.powf(self.alpha - 1.0))).abs()
            }
        };
        at(1.0).max(at(self.upper))
    }

    /// Periods of `cos(z s + η(s))` over `[0, upper]`, bounded above.
    fn periods(&self, z: f64) -> f64 {
        self.upper * (z.abs() + self.eta_rate() + 1.0) / (2.0 * PI)
    }

    /// One break per period of `cos(z s + η(s))` over `[0, upper]`.
    fn breaks(&self, z: f64) -> Result<Vec<f64>> {
        let periods = self.periods(z);
        if periods > MAX_PERIODS {
            return Err(Error::Numerical(format!("z = {z} is too far out for the inversion integral")));
        }
        let n = periods.ceil().max(1.0) as usize;
        let step = self.upper / n as f64;
        Ok((0..=n).map(|i| i as f64 * step).collect())
    }

    /// Density at `z` and the probability beyond `z` on its own side of the
    /// origin, from the series in powers of `z₁^{-α}`, where `z₁` is `|z|`
    /// shifted to the 1-parameterization. Convergent for `α < 1`, asymptotic
    /// otherwise. `None` where the series is unusable or has not settled.
    fn tail_series(&self, z: f64) -> Option<(f64, f64)> {
        let beta = if z > 0.0 { self.beta } else { -self.beta };
        if self.near_one && beta != 0.0 {
            return None;
        }
        let shift: f64 = if beta == 0.0 { 0.0 } else { beta * self.tan };
        let z1 = z.abs() + shift;
        if !(z1 > 0.0) {
            return None;
        }
        if 1.0 + beta < 1e-12 {
            // Totally skewed away from this side: bounded support for α < 1,
            // a tail lighter than any power otherwise.
            return if self.alpha < 1.0 { Some((0.0, 0.0)) } else { None };
        }
        if 1.0 + beta < 1e-3 {
            return None;
        }
        // θ = α θ₀ and sec θ = σ^α in the polar form of the exponent.
        let theta = shift.atan();
        let ln_scale = -theta.cos().ln();
        let phase = self.alpha * PI / 2.0 + theta;
        let ln_z1 = z1.ln();
        let (mut tail, mut dens) = (0.0f64, 0.0f64);
        let (mut tail_abs, mut dens_abs) = (0.0, 0.0);
        let mut prev = f64::INFINITY;
        for k in 1..=SERIES_TERMS {
            let kf = k as f64;
            let ka = kf * self.alpha;
            let ln_bound = libm::lgamma(ka) - libm::lgamma(kf + 1.0) + kf * ln_scale - ka * ln_z1;
            let bound = ln_bound.exp();
            let bound_dens = bound * ka / z1;
            if k > 1 && bound <= 1e-17 * tail.abs() && bound_dens <= 1e-17 * dens.abs() {
                if tail <= 0.0 || dens <= 0.0 || tail_abs > 4.0 * tail || dens_abs > 4.0 * dens {
                    return None;
                }
                return Some((dens / PI, tail / PI));
            }
            if bound > prev {
                return None;
            }
            prev = bound;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let t = sign * bound * (kf * phase).sin();
            tail += t;
            dens += t * ka / z1;
            tail_abs += t.abs();
            dens_abs += (t * ka / z1).abs();
        }
        None
    }

    /// `(P(Z ≤ z), P(Z > z))`, each with relative accuracy in its own tail
    /// once the series takes over.
    pub(crate) fn cdf_sf(&self, z: f64) -> Result<(f64, f64)> {
        if self.periods(z) > SERIES_PERIODS {
            if let Some((_, far)) = self.tail_series(z) {
                return Ok(if z > 0.0 { (1.0 - far, far) } else { (far, 1.0 - far) });
            }
        }
        let i = self.gil_pelaez(z)? / PI;
        Ok(((0.5 + i).clamp(0.0, 1.0), (0.5 - i).clamp(0.0, 1.0)))
    }

    /// Density of the standardized law at `z`.
    pub(crate) fn density(&self, z: f64) -> Result<f64> {
        if self.periods(z) > SERIES_PERIODS {
            if let Some((d, _)) = self.tail_series(z) {
                return Ok(d);
            }
        }
        let r = quad::integrate_pieces(
            |s| (-s.powf(self.alpha)).exp() * (z * s + self.eta(s)).cos(),
            &self.breaks(z)?,
            QUAD_TOL,
        )?;
        check_error(r.error, "density")?;
        Ok((r.value / PI).max(0.0))
    }

    /// `∫_0^∞ e^{-s^α} sin(z s + η(s)) / s ds`; the CDF is `1/2 + I/π`.
    fn gil_pelaez(&self, z: f64) -> Result<f64> {
        let r = quad::integrate_pieces(
            |s| (-s.powf(self.alpha)).exp() * (z * s + self.eta(s)).sin() / s,
            &self.breaks(z)?,
            QUAD_TOL,
        )?;
        check_error(r.error, "distribution function")?;
        Ok(r.value)
    }

    /// Leading-order density in the far tails: `α c_α (1 ± β) |z|^{-α-1}`.
    pub(crate) fn tail_density(&self, z: f64) -> f64 {
        match c_alpha(self.alpha) {
            Ok(c) => {
                let skew = if z > 0.0 { 1.0 + self.beta } else { 1.0 - self.beta };
                self.alpha * c * skew * z.abs().powf(-self.alpha - 1.0)
            }
            Err(_) => 0.0,
        }
    }
}

fn check_error(err: f64, what: &str) -> Result<()> {
    if err <= MAX_QUAD_ERROR {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{what} quadrature error {err:e} exceeds {MAX_QUAD_ERROR:e}")))
    }
}
