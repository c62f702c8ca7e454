//! Maximum-likelihood fitting of stable laws.
//!
//! Starting values come from quantile matching (McCulloch style): the
//! spread ratio `(x95 - x05)/(x75 - x25)` identifies α, the skewness ratio
//! `(x95 + x05 - 2 x50)/(x95 - x05)` identifies β. The lookup table is built
//! once from this crate's own quantile function.
//!
//! The likelihood surface is explored on a tabulated log-density of the
//! standardized law (one table per candidate `(α, β)`), and the final
//! log-likelihood is recomputed with the exact density.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{Shape, StableParams};
use crate::error::{Error, Result};
use crate::optim::NelderMead;

/// Upper bound on α when fitting a strictly heavy-tailed law.
pub const HEAVY_TAILED_ALPHA_MAX: f64 = 2.0 - 1e-6;

const MIN_SAMPLE: usize = 20;

/// Table spacing in `asinh(z)`.
const TABLE_STEP: f64 = 0.1;

/// Periods of the density integrand allowed at the edge of a table; beyond
/// the corresponding `|z|` a matched tail expansion replaces quadrature.
const PERIOD_BUDGET: f64 = 300.0;

/// Smallest table half-width in `z`.
const MIN_Z_CAP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableFit {
    pub params: StableParams,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Exact log-likelihood at the quantile-matching start.
    pub initial_loglik: f64,
}

pub fn fit_mle(data: &[f64], heavy_tailed: bool) -> Result<StableFit> {
    if data.len() < MIN_SAMPLE {
        return Err(Error::Degenerate(format!(
            "stable fit needs at least {MIN_SAMPLE} observations, got {}",
            data.len()
        )));
    }
    if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("non-finite observation {bad}")));
    }
    let alpha_max = if heavy_tailed { HEAVY_TAILED_ALPHA_MAX } else { 2.0 };
    let start = quantile_start(data, alpha_max)?;

    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unpack = |t: &[f64]| -> (f64, f64, f64, f64) {
        (
            alpha_max * logistic(t[0]),
            t[1].tanh(),
            start.gamma() * t[2].exp(),
            start.delta() + start.gamma() * t[3],
        )
    };
    let objective = |t: &[f64]| -> f64 {
        let (alpha, beta, gamma, delta) = unpack(t);
        if !(alpha > 0.0 && gamma > 0.0 && gamma.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let shape = Shape::new(alpha, beta);
        let z_lo = (lo - delta) / gamma;
        let z_hi = (hi - delta) / gamma;
        match DensityTable::build(shape, z_lo, z_hi) {
            Ok(table) => {
                let ln_g: f64 = data.iter().map(|&x| table.ln_density((x - delta) / gamma)).sum();
                ln_g - data.len() as f64 * gamma.ln()
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let theta0 = [
        logit((start.alpha() / alpha_max).clamp(1e-3, 1.0 - 1e-3)),
        start.beta().clamp(-0.95, 0.95).atanh(),
        0.0,
        0.0,
    ];
    let nm = NelderMead {
        x_tol: 1e-5,
        f_tol: 1e-6,
        max_iter: 2000,
        initial_step: 0.2,
        restarts: 1,
    };
    let best = nm.maximize(objective, &theta0)?;
    let (alpha, beta, gamma, delta) = unpack(&best.x);
    let params = StableParams::new(alpha.min(alpha_max), beta, gamma, delta)?;
    let loglik = params.loglik(data)?;
    if !loglik.is_finite() {
        return Err(Error::Convergence("stable fit ended at a non-finite likelihood".into()));
    }
    Ok(StableFit {
        params,
        loglik,
        converged: best.converged,
        iterations: best.iterations,
        initial_loglik: start.loglik(data).unwrap_or(f64::NEG_INFINITY),
    })
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Log-density of a standardized stable law, cubic-interpolated in `asinh z`.
struct DensityTable {
    shape: Shape,
    u0: f64,
    step: f64,
    ln_g: Vec<f64>,
    z_min: f64,
    z_max: f64,
    /// `ln g - ln tail` at each edge, carried into the tails with decay `|z|^-α`.
    edge_lo: f64,
    edge_hi: f64,
}

impl DensityTable {
    fn build(shape: Shape, z_lo: f64, z_hi: f64) -> Result<Self> {
        let z_cap = (2.0 * std::f64::consts::PI * PERIOD_BUDGET / shape.upper()).max(MIN_Z_CAP);
        let z_min = z_lo.max(-z_cap);
        let z_max = z_hi.min(z_cap);
        let (u_lo, u_hi) = (z_min.asinh(), z_max.asinh());
        // Three extra nodes on each side for the interpolation stencil.
        let n = (((u_hi - u_lo) / TABLE_STEP).ceil() as usize).max(4);
        let step = (u_hi - u_lo) / n as f64;
        let u0 = u_lo - 3.0 * step;
        let ln_g = (0..n + 7)
            .map(|i| {
                let z = (u0 + i as f64 * step).sinh();
                let g = shape.density(z)?;
                // Quadrature noise swamps the far tail; use the tail term there.
                let g = if g < 1e-12 { shape.tail_density(z).max(g) } else { g };
                if g > 0.0 {
                    Ok(g.ln())
                } else {
                    Err(Error::Numerical(format!("non-positive density at z = {z}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = Self { shape, u0, step, ln_g, z_min, z_max, edge_lo: 0.0, edge_hi: 0.0 };
        let mismatch = |z: f64, ln_g: f64| {
            let d = ln_g - shape.tail_density(z).ln();
            if d.is_finite() { d } else { 0.0 }
        };
        table.edge_lo = mismatch(z_min, table.interpolate(z_min));
        table.edge_hi = mismatch(z_max, table.interpolate(z_max));
        Ok(table)
    }

    fn ln_density(&self, z: f64) -> f64 {
        if z < self.z_min {
            let decay = (self.z_min / z).powf(self.shape.alpha());
            return self.shape.tail_density(z).ln() + self.edge_lo * decay;
        }
        if z > self.z_max {
            let decay = (self.z_max / z).powf(self.shape.alpha());
            return self.shape.tail_density(z).ln() + self.edge_hi * decay;
        }
        self.interpolate(z)
    }

    fn interpolate(&self, z: f64) -> f64 {
        let pos = (z.asinh() - self.u0) / self.step;
        let g = &self.ln_g;
        let i = (pos.floor() as usize).clamp(2, g.len() - 4);
        let t = pos - i as f64;
        // Cubic Hermite with fourth-order central-difference slopes.
        let slope = |j: usize| (g[j - 2] - 8.0 * g[j - 1] + 8.0 * g[j + 1] - g[j + 2]) / 12.0;
        let (m1, m2) = (slope(i), slope(i + 1));
        let (p1, p2) = (g[i], g[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p1 + (t3 - 2.0 * t2 + t) * m1 + (-2.0 * t3 + 3.0 * t2) * p2 + (t3 - t2) * m2
    }
}

/// Quantile-matching lookup row for one α.
#[derive(Debug, Clone, Copy)]
struct QuantileRow {
    alpha: f64,
    /// `(x95 - x05)/(x75 - x25)` for β = 0.
    spread: f64,
    /// Interquartile range of the standardized symmetric law.
    iqr: f64,
    /// `(x95 + x05 - 2 x50)/(x95 - x05)` for β = 1.
    skew_max: f64,
}

fn quantile_rows() -> &'static [QuantileRow] {
    static ROWS: OnceLock<Vec<QuantileRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        (0..=14)
            .filter_map(|i| {
                let alpha = 0.6 + 0.1 * i as f64;
                let sym = StableParams::new(alpha, 0.0, 1.0, 0.0).ok()?;
                let q75 = sym.upper_quantile(0.25).ok()?;
                let q95 = sym.upper_quantile(0.05).ok()?;
                let skew_max = if alpha < 2.0 {
                    let skewed = StableParams::new(alpha, 1.0, 1.0, 0.0).ok()?;
                    let (a, m, b) = (
                        skewed.quantile(0.05).ok()?,
                        skewed.quantile(0.5).ok()?,
                        skewed.quantile(0.95).ok()?,
                    );
                    (b + a - 2.0 * m) / (b - a)
                } else {
                    0.0
                };
                Some(QuantileRow { alpha, spread: q95 / q75, iqr: 2.0 * q75, skew_max })
            })
            .collect()
    })
}

fn sample_quantile(sorted: &[f64], u: f64) -> f64 {
    let pos = u * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

fn quantile_start(data: &[f64], alpha_max: f64) -> Result<StableParams> {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |u| sample_quantile(&sorted, u);
    let (q05, q25, q50, q75, q95) = (q(0.05), q(0.25), q(0.5), q(0.75), q(0.95));
    if !(q95 > q05 && q75 > q25) {
        return Err(Error::Degenerate("sample quantiles have no spread".into()));
    }
    let spread = (q95 - q05) / (q75 - q25);
    let skew = (q95 + q05 - 2.0 * q50) / (q95 - q05);

    let rows = quantile_rows();
    if rows.is_empty() {
        return Err(Error::Numerical("quantile lookup table could not be built".into()));
    }
    // Spread decreases with α.
    let row = if spread >= rows[0].spread {
        rows[0]
    } else if spread <= rows[rows.len() - 1].spread {
        rows[rows.len() - 1]
    } else {
        let j = rows.windows(2).position(|w| spread <= w[0].spread && spread >= w[1].spread).unwrap_or(0);
        let (a, b) = (rows[j], rows[j + 1]);
        let t = (a.spread - spread) / (a.spread - b.spread);
        let lerp = |x: f64, y: f64| x + t * (y - x);
        QuantileRow {
            alpha: lerp(a.alpha, b.alpha),
            spread,
            iqr: lerp(a.iqr, b.iqr),
            skew_max: lerp(a.skew_max, b.skew_max),
        }
    };
    let alpha = row.alpha.min(alpha_max * 0.999);
    let beta = if row.skew_max.abs() > 1e-3 { (skew / row.skew_max).clamp(-0.9, 0.9) } else { 0.0 };
    let gamma = (q75 - q25) / row.iqr;
    StableParams::new(alpha, beta, gamma, q50)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_quadrature() {
        let shape = Shape::new(1.4, 0.3);
        let table = DensityTable::build(shape, -30.0, 40.0).unwrap();
        for z in [-25.0, -3.0, -0.7, 0.0, 0.4, 2.2, 9.0, 35.0] {
            let exact = shape.density(z).unwrap().ln();
            assert!((table.ln_density(z) - exact).abs() < 2e-5, "z={z}");
        }
    }

    #[test]
    fn tail_beyond_table_edge() {
        for (alpha, beta) in [(0.7, 0.0), (1.0, 0.5), (1.5, -0.3)] {
            let shape = Shape::new(alpha, beta);
            let table = DensityTable::build(shape, -1e4, 1e4).unwrap();
            for z in [table.z_min * 1.5, table.z_max * 1.5, table.z_max * 4.0] {
                let exact = shape.density(z).unwrap().ln();
                assert!((table.ln_density(z) - exact).abs() < 1e-2, "α={alpha} z={z}");
            }
        }
    }

    #[test]
    fn lookup_rows_are_monotone() {
        let rows = quantile_rows();
        assert_eq!(rows.len(), 15);
        assert!(rows.windows(2).all(|w| w[0].spread > w[1].spread));
        // Normal: (z95 / z75) with z the standard normal quantile
        let last = rows.last().unwrap();
        assert!((last.spread - 1.644_853_626_951_472 / 0.674_489_750_196_081_7).abs() < 1e-6);
    }

    #[test]
    fn rejects_small_or_flat_samples() {
        assert!(fit_mle(&[0.1; 10], false).is_err());
        assert!(fit_mle(&[0.3; 50], false).is_err());
    }
}
