//! Maximum-likelihood fits for the three families compared on return data:
//! κ-generalised (per tail), stable and normal (full sample).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gof::{ks_sorted, ks_statistic};
use crate::kexp::{KappaParams, LogSample};
use crate::optim::NelderMead;
use crate::stable::{self, StableParams};

/// Below this many observations a fit is flagged as low-sample.
pub const LOW_SAMPLE: usize = 30;

/// Distance of the fitted κ from the ends of `(0, 1)`.
pub const KAPPA_MARGIN: f64 = 1e-6;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Kappa,
    Stable,
    Normal,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Kappa, Family::Stable, Family::Normal];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Kappa => "kappa",
            Family::Stable => "stable",
            Family::Normal => "normal",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kappa" => Ok(Family::Kappa),
            "stable" => Ok(Family::Stable),
            "normal" => Ok(Family::Normal),
            _ => Err(Error::InvalidParams(format!("unknown family `{s}` (expected kappa, stable or normal)"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNormalParams")]
pub struct NormalParams {
    mu: f64,
    sigma: f64,
}

#[derive(Deserialize)]
struct RawNormalParams {
    mu: f64,
    sigma: f64,
}

impl TryFrom<RawNormalParams> for NormalParams {
    type Error = Error;
    fn try_from(r: RawNormalParams) -> Result<Self> {
        NormalParams::new(r.mu, r.sigma)
    }
}

impl NormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParams(format!("need finite mu and positive sigma, got ({mu}, {sigma})")));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn survival(&self, x: f64) -> f64 {
        0.5 * libm::erfc((x - self.mu) / (self.sigma * std::f64::consts::SQRT_2))
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        -0.5 * z * z - self.sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    pub fn loglik(&self, data: &[f64]) -> f64 {
        data.iter().map(|&x| self.log_pdf(x)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FitParams {
    Kappa(KappaParams),
    Stable(StableParams),
    Normal(NormalParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub params: FitParams,
    pub loglik: f64,
    /// KS statistic of the fitted sample against the fitted law.
    pub ks: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n: usize,
    pub low_sample: bool,
}

impl FitResult {
    pub fn kappa_params(&self) -> Option<KappaParams> {
        match self.params {
            FitParams::Kappa(p) => Some(p),
            _ => None,
        }
    }

    pub fn stable_params(&self) -> Option<StableParams> {
        match self.params {
            FitParams::Stable(p) => Some(p),
            _ => None,
        }
    }

    pub fn normal_params(&self) -> Option<NormalParams> {
        match self.params {
            FitParams::Normal(p) => Some(p),
            _ => None,
        }
    }

    /// Model survival `P(X > x)` of the fitted law.
    pub fn survival(&self, x: f64) -> Result<f64> {
        match self.params {
            FitParams::Kappa(p) => {
                if x <= 0.0 {
                    Ok(1.0)
                } else {
                    p.survival(x)
                }
            }
            FitParams::Stable(p) => p.sf(x),
            FitParams::Normal(p) => Ok(p.survival(x)),
        }
    }
}

/// `θ = (logit-scaled κ, ln α, ln β)` to parameters.
fn kappa_from_theta(t: &[f64]) -> (f64, f64, f64) {
    let s = 1.0 / (1.0 + (-t[0]).exp());
    (s * (1.0 - 2.0 * KAPPA_MARGIN) + KAPPA_MARGIN, t[1].exp(), t[2].exp())
}

fn kappa_to_theta(kappa: f64, alpha: f64, beta: f64) -> [f64; 3] {
    let s = ((kappa - KAPPA_MARGIN) / (1.0 - 2.0 * KAPPA_MARGIN)).clamp(1e-9, 1.0 - 1e-9);
    [(s / (1.0 - s)).ln(), alpha.ln(), beta.ln()]
}

/// Starting points `(κ, α, β)`: a Weibull log-moment match paired with
/// κ = 0.3 and with κ = 0.7, and a tail-slope start whose κ maps the
/// upper-decile log-log slope through `exponent = α/κ`.
pub fn kappa_initializers(tail: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let sample = LogSample::new(tail)?;
    let ln_x = sample.ln_values();
    let n = ln_x.len() as f64;
    let mean = ln_x.iter().sum::<f64>() / n;
    let var = ln_x.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) || ln_x.iter().all(|&l| l == ln_x[0]) {
        return Err(Error::Degenerate("tail sample has no spread".into()));
    }
    // ln X is Gumbel-min for a Weibull law: Var = π²/(6α²), E = -(γ + ln β)/α.
    let alpha0 = std::f64::consts::PI / (6.0 * var).sqrt();
    let beta0 = (-EULER_GAMMA - alpha0 * mean).exp();
    let mut starts = vec![(0.3, alpha0, beta0), (0.7, alpha0, beta0)];

    let mut sorted = ln_x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let k = (m / 10).max(5).min(m);
    // Empirical ln P(X > x) at the top k order statistics (plotting position (i+0.5)/m).
    let pts: Vec<(f64, f64)> = (m - k..m).map(|i| (sorted[i], ((m - i) as f64 - 0.5).ln() - (m as f64).ln())).collect();
    if let Some(slope) = ls_slope(&pts).filter(|s| *s < 0.0) {
        let kappa = (alpha0 / -slope).clamp(0.05, 0.95);
        // β from the median: exp_κ(-β m^α) = ½.
        let median = (0.5 * (sorted[(m - 1) / 2] + sorted[m / 2])).exp();
        let y = -crate::kexp::klog(0.5, kappa)?;
        starts.push((kappa, alpha0, y / median.powf(alpha0)));
    }
    Ok(starts)
}

fn ls_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// κ-generalised MLE on a positive tail sample. Each initializer is refined
/// with a coarse simplex search, and the best is polished until the
/// log-likelihood changes by less than 1e-9 across the simplex.
pub fn fit_kappa(tail: &[f64]) -> Result<FitResult> {
    if tail.is_empty() {
        return Err(Error::Degenerate("empty tail sample".into()));
    }
    let sample = LogSample::new(tail)?;
    let objective = |t: &[f64]| {
        let (k, a, b) = kappa_from_theta(t);
        sample.loglik(k, a, b)
    };
    let coarse = NelderMead { x_tol: 1e-2, f_tol: 1e-2, max_iter: 1000, initial_step: 0.3, restarts: 0 };
    let polish = NelderMead { x_tol: 1e-5, f_tol: 1e-9, max_iter: 4000, initial_step: 0.02, restarts: 1 };

    let mut best: Option<crate::optim::Maximum> = None;
    let mut iterations = 0;
    for (k, a, b) in kappa_initializers(tail)? {
        if let Ok(m) = coarse.maximize(objective, &kappa_to_theta(k, a, b)) {
            iterations += m.iterations;
            if best.as_ref().is_none_or(|b| m.value > b.value) {
                best = Some(m);
            }
        }
    }
    let best = best.ok_or_else(|| Error::Convergence("no initializer gave a finite likelihood".into()))?;
    let fin = polish.maximize(objective, &best.x)?;
    iterations += fin.iterations;

    let (k, a, b) = kappa_from_theta(&fin.x);
    let params = KappaParams::new(k, a, b)?;
    let loglik = params.loglik(tail)?;
    if !loglik.is_finite() {
        return Err(Error::Convergence("kappa fit ended at a non-finite likelihood".into()));
    }
    let ks = ks_statistic(tail, |x| params.survival(x).unwrap_or(f64::NAN));
    Ok(FitResult {
        family: Family::Kappa,
        params: FitParams::Kappa(params),
        loglik,
        ks,
        converged: fin.converged,
        iterations,
        n: tail.len(),
        low_sample: tail.len() < LOW_SAMPLE,
    })
}

/// Sample mean and divide-by-n standard deviation.
pub fn fit_normal(returns: &[f64]) -> Result<FitResult> {
    if returns.len() < 2 {
        return Err(Error::Degenerate(format!("normal fit needs at least 2 observations, got {}", returns.len())));
    }
    if let Some(bad) = returns.iter().find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("non-finite observation {bad}")));
    }
    let n = returns.len() as f64;
    let mu = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    let params = NormalParams::new(mu, var.sqrt())?;
    Ok(FitResult {
        family: Family::Normal,
        params: FitParams::Normal(params),
        loglik: params.loglik(returns),
        ks: ks_statistic(returns, |x| params.survival(x)),
        converged: true,
        iterations: 0,
        n: returns.len(),
        low_sample: returns.len() < LOW_SAMPLE,
    })
}

/// Stable MLE on the full return sample.
pub fn fit_stable(returns: &[f64], heavy_tailed: bool) -> Result<FitResult> {
    let fit = stable::fit_mle(returns, heavy_tailed)?;
    let mut sorted = returns.to_vec();
    sorted.sort_by(f64::total_cmp);
    let survivals = sorted.par_iter().map(|&x| fit.params.sf(x)).collect::<Result<Vec<_>>>()?;
    Ok(FitResult {
        family: Family::Stable,
        params: FitParams::Stable(fit.params),
        loglik: fit.loglik,
        ks: ks_sorted(&survivals),
        converged: fit.converged,
        iterations: fit.iterations,
        n: returns.len(),
        low_sample: returns.len() < LOW_SAMPLE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_closed_form() {
        let f = fit_normal(&[0.0, 2.0]).unwrap();
        let p = f.normal_params().unwrap();
        assert_eq!((p.mu(), p.sigma()), (1.0, 1.0));
        assert!(matches!(fit_normal(&[3.0; 3]), Err(Error::Degenerate(_))));
        assert!(fit_normal(&[1.0]).is_err());
    }

    #[test]
    fn normal_survival_values() {
        let p = NormalParams::new(0.0, 1.0).unwrap();
        assert_eq!(p.survival(0.0), 0.5);
        // Φ(-1.96)
        assert!((p.survival(1.96) / 0.024_997_895_148_220_435 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn theta_roundtrip() {
        let t = kappa_to_theta(0.4, 1.3, 25.0);
        let (k, a, b) = kappa_from_theta(&t);
        assert!((k - 0.4).abs() < 1e-12 && (a - 1.3).abs() < 1e-12 && (b - 25.0).abs() < 1e-9);
        let (k, _, _) = kappa_from_theta(&[-800.0, 0.0, 0.0]);
        assert_eq!(k, KAPPA_MARGIN);
    }

    #[test]
    fn initializers_from_weibull_sample() {
        // Weibull(α=2, β=1) quantiles: x = (-ln(1-u))^(1/2)
        let data: Vec<f64> = (0..4000).map(|i| (-(1.0 - (i as f64 + 0.5) / 4000.0).ln()).sqrt()).collect();
        let starts = kappa_initializers(&data).unwrap();
        assert_eq!(starts.len(), 3);
        let (_, a, b) = starts[0];
        assert!((a - 2.0).abs() < 0.05, "{a}");
        assert!((b - 1.0).abs() < 0.05, "{b}");
    }

    #[test]
    fn kappa_fit_recovers_and_ascends() {
        let truth = KappaParams::new(0.5, 1.2, 40.0).unwrap();
        let tail = truth.sample(3000, 9);
        let fit = fit_kappa(&tail).unwrap();
        let p = fit.kappa_params().unwrap();
        assert!(fit.converged);
        assert!((p.kappa() - 0.5).abs() < 0.15, "{p:?}");
        assert!((fit.loglik - p.loglik(&tail).unwrap()).abs() < 1e-10 * fit.loglik.abs().max(1.0));
        for (k, a, b) in kappa_initializers(&tail).unwrap() {
            assert!(fit.loglik >= KappaParams::new(k, a, b).unwrap().loglik(&tail).unwrap());
        }
        assert!(fit_kappa(&[]).is_err());
        assert!(fit_kappa(&[1.0, -2.0, 3.0]).is_err());
    }

    #[test]
    fn low_sample_is_flagged() {
        let tail = KappaParams::new(0.5, 1.2, 40.0).unwrap().sample(25, 3);
        assert!(fit_kappa(&tail).unwrap().low_sample);
    }
}
