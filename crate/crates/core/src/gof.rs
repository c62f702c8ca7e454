//! Kolmogorov–Smirnov statistic and the parametric-bootstrap goodness-of-fit
//! test for κ-generalised tail fits, where every synthetic sample is refitted.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kexp::KappaParams;
use crate::mle;

/// Attempts per replicate before it is counted as exceeding the data statistic.
const REPLICATE_ATTEMPTS: u64 = 4;

/// `max_i |P̂(X > x_i) - P(X > x_i)|`, checking both one-sided limits
/// `(n-i)/n` and `(n-i+1)/n` of the empirical tail at the i-th order statistic.
pub fn ks_statistic<F: FnMut(f64) -> f64>(data: &[f64], mut survival_fn: F) -> f64 {
    try_ks_statistic(data, |x| Ok(survival_fn(x))).expect("infallible survival function")
}

/// As [`ks_statistic`] for a fallible survival function.
pub fn try_ks_statistic<F: FnMut(f64) -> Result<f64>>(data: &[f64], mut survival_fn: F) -> Result<f64> {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let survivals = sorted.iter().map(|&x| survival_fn(x)).collect::<Result<Vec<_>>>()?;
    Ok(ks_sorted(&survivals))
}

/// KS statistic from model survival values at the ascending order statistics.
pub(crate) fn ks_sorted(survivals: &[f64]) -> f64 {
    let n = survivals.len() as f64;
    survivals
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let above = (n - (i + 1) as f64) / n;
            let at_or_above = (n - i as f64) / n;
            (above - s).abs().max((at_or_above - s).abs())
        })
        .fold(0.0, f64::max)
}

/// The SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `i`; attempt 0 is `seed ⊕ splitmix64(i)`.
pub fn child_seed(seed: u64, replicate: u64, attempt: u64) -> u64 {
    seed ^ splitmix64(replicate | (attempt << 32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    /// Parameters fitted to the data.
    pub params: KappaParams,
    pub s_data: f64,
    pub s_boot: Vec<f64>,
    pub p_value: f64,
    pub n_boot: usize,
    pub alpha_level: f64,
    pub reject: bool,
    pub seed: u64,
    /// Replicates whose refit failed on every attempt. They are counted as
    /// exceeding and recorded in `s_boot` as 1, the largest possible statistic.
    pub failed_replicates: usize,
}

/// Fits the tail, then compares its KS statistic with those of `n_boot`
/// samples drawn from the fit and refitted. `p` is the fraction of replicate
/// statistics strictly above the data statistic; reject iff `p < alpha_level`.
pub fn mc_gof_test(tail: &[f64], n_boot: usize, alpha_level: f64, seed: u64) -> Result<GofResult> {
    if n_boot == 0 {
        return Err(crate::Error::InvalidParams("n_boot must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&alpha_level) {
        return Err(crate::Error::InvalidParams(format!("level must lie in [0, 1], got {alpha_level}")));
    }
    let fit = mle::fit_kappa(tail)?;
    let params = fit.kappa_params().expect("kappa fit");
    let s_data = fit.ks;

    let s_boot: Vec<Option<f64>> = (0..n_boot as u64)
        .into_par_iter()
        .map(|i| replicate_statistic(&params, tail.len(), seed, i))
        .collect();
    let failed_replicates = s_boot.iter().filter(|s| s.is_none()).count();
    let exceed = s_boot.iter().filter(|s| s.is_none_or(|s| s > s_data)).count();
    let p_value = exceed as f64 / n_boot as f64;
    Ok(GofResult {
        params,
        s_data,
        s_boot: s_boot.into_iter().map(|s| s.unwrap_or(1.0)).collect(),
        p_value,
        n_boot,
        alpha_level,
        reject: p_value < alpha_level,
        seed,
        failed_replicates,
    })
}

fn replicate_statistic(params: &KappaParams, n: usize, seed: u64, i: u64) -> Option<f64> {
    (0..REPLICATE_ATTEMPTS).find_map(|attempt| {
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, i, attempt));
        let synthetic = params.sample_with(n, &mut rng);
        mle::fit_kappa(&synthetic).ok().map(|f| f.ks)
    })
}
