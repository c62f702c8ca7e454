//! Per-instrument analysis reports and batch summaries.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gof::{ks_statistic, mc_gof_test, GofResult};
use crate::mle::{fit_kappa, fit_normal, fit_stable, Family, FitResult, LOW_SAMPLE};
use crate::returns::{compute_returns, load_prices, split_tails, CompositeModel, PriceSeries, Tail};

pub const DEFAULT_N_BOOT: usize = 100;
pub const DEFAULT_LEVEL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofOptions {
    pub n_boot: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for GofOptions {
    fn default() -> Self {
        Self { n_boot: DEFAULT_N_BOOT, level: DEFAULT_LEVEL, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub families: Vec<Family>,
    pub tails: Vec<Tail>,
    /// Constrain the stable fit to α < 2.
    pub heavy_tailed: bool,
    /// Run the bootstrap test on each requested tail.
    pub gof: Option<GofOptions>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { families: Family::ALL.to_vec(), tails: Tail::BOTH.to_vec(), heavy_tailed: true, gof: None }
    }
}

/// Tool name, version and the randomness settings of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub n_boot: Option<usize>,
    pub level: Option<f64>,
}

impl RunInfo {
    pub fn new(gof: Option<GofOptions>) -> Self {
        Self {
            tool: "ktail".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: gof.map(|g| g.seed),
            n_boot: gof.map(|g| g.n_boot),
            level: gof.map(|g| g.level),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerTail<T> {
    pub neg: Option<T>,
    pub pos: Option<T>,
}

impl<T> Default for PerTail<T> {
    fn default() -> Self {
        Self { neg: None, pos: None }
    }
}

impl<T> PerTail<T> {
    pub fn get(&self, tail: Tail) -> Option<&T> {
        match tail {
            Tail::Negative => self.neg.as_ref(),
            Tail::Positive => self.pos.as_ref(),
        }
    }

    fn set(&mut self, tail: Tail, value: T) {
        match tail {
            Tail::Negative => self.neg = Some(value),
            Tail::Positive => self.pos = Some(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Fits {
    pub normal: Option<FitResult>,
    pub stable: Option<FitResult>,
    pub kappa: PerTail<FitResult>,
}

/// Full-sample KS of each family; the κ-generalised entry uses the
/// composite two-tail model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KsComparison {
    pub normal: Option<f64>,
    pub stable: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IssueKind {
    Input,
    Convergence,
}

/// A component of the analysis that failed or did not converge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub component: String,
    pub kind: IssueKind,
    pub message: String,
}

impl Issue {
    fn from_error(component: impl Into<String>, e: &Error) -> Self {
        let kind = if e.is_input_error() { IssueKind::Input } else { IssueKind::Convergence };
        Self { component: component.into(), kind, message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentReport {
    pub ticker: String,
    pub n_returns: usize,
    pub q: f64,
    pub zero_count: usize,
    pub fits: Fits,
    pub gof: PerTail<GofResult>,
    pub ks_comparison: KsComparison,
    pub issues: Vec<Issue>,
}

impl InstrumentReport {
    /// Whether the κ-generalised fit of `tail` passed the bootstrap test.
    pub fn significant(&self, tail: Tail) -> Option<bool> {
        self.gof.get(tail).map(|g| !g.reject)
    }

    pub fn has_input_issue(&self) -> bool {
        self.issues.iter().any(|i| i.kind == IssueKind::Input)
    }

    pub fn has_convergence_issue(&self) -> bool {
        self.issues.iter().any(|i| i.kind == IssueKind::Convergence)
    }
}

/// Fits the requested families and tails. Failures of individual fits are
/// recorded as issues; only an unusable series is an error.
pub fn analyze(prices: &PriceSeries, opts: &AnalysisOptions) -> Result<InstrumentReport> {
    let returns = compute_returns(prices);
    if returns.len() < LOW_SAMPLE {
        return Err(Error::Validation {
            path: prices.ticker().into(),
            msg: format!("insufficient returns for any fit: {} (need at least {LOW_SAMPLE})", returns.len()),
        });
    }
    let tails = split_tails(&returns)?;
    let mut report = InstrumentReport {
        ticker: prices.ticker().to_string(),
        n_returns: returns.len(),
        q: tails.q,
        zero_count: tails.zero_count,
        fits: Fits::default(),
        gof: PerTail::default(),
        ks_comparison: KsComparison::default(),
        issues: Vec::new(),
    };
    let record = |report: &mut InstrumentReport, component: String, fit: Result<FitResult>| match fit {
        Ok(f) => {
            if !f.converged {
                report.issues.push(Issue {
                    component: component.clone(),
                    kind: IssueKind::Convergence,
                    message: format!("optimizer stopped after {} iterations without converging", f.iterations),
                });
            }
            Some(f)
        }
        Err(e) => {
            report.issues.push(Issue::from_error(component, &e));
            None
        }
    };

    for &family in &opts.families {
        match family {
            Family::Normal => {
                let f = record(&mut report, "normal".into(), fit_normal(&returns.returns));
                report.ks_comparison.normal = f.as_ref().map(|f| f.ks);
                report.fits.normal = f;
            }
            Family::Stable => {
                let f = record(&mut report, "stable".into(), fit_stable(&returns.returns, opts.heavy_tailed));
                report.ks_comparison.stable = f.as_ref().map(|f| f.ks);
                report.fits.stable = f;
            }
            Family::Kappa => {
                for &tail in &opts.tails {
                    let component = format!("kappa.{tail}");
                    let fit = tails.require(tail).and_then(fit_kappa);
                    if let Some(f) = record(&mut report, component, fit) {
                        report.fits.kappa.set(tail, f);
                    }
                }
                if let (Some(neg), Some(pos)) = (&report.fits.kappa.neg, &report.fits.kappa.pos) {
                    let model = CompositeModel::from_samples(
                        &tails,
                        neg.kappa_params().expect("kappa fit"),
                        pos.kappa_params().expect("kappa fit"),
                    );
                    report.ks_comparison.kappa = Some(ks_statistic(&returns.returns, |r| model.survival(r)));
                }
            }
        }
    }

    if let Some(g) = opts.gof {
        for &tail in &opts.tails {
            match tails.require(tail).and_then(|xs| mc_gof_test(xs, g.n_boot, g.level, g.seed)) {
                Ok(r) => report.gof.set(tail, r),
                Err(e) => report.issues.push(Issue::from_error(format!("gof.{tail}"), &e)),
            }
        }
    }
    Ok(report)
}

/// Loads and analyzes one price file; the ticker is the file stem.
pub fn analyze_file(path: &Path, opts: &AnalysisOptions) -> Result<InstrumentReport> {
    let ticker = ticker_from_path(path);
    let prices = load_prices(path, &ticker)?;
    analyze(&prices, opts)
}

pub fn ticker_from_path(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDocument {
    pub run: RunInfo,
    pub report: InstrumentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofDocument {
    pub run: RunInfo,
    pub ticker: String,
    pub tail: Tail,
    pub result: GofResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Count {
    pub count: usize,
    pub percent: f64,
}

/// An instrument left out of the summary, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub ticker: String,
    pub reason: String,
}

/// Instruments whose κ-generalised tail fit is not rejected at the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub attempted: usize,
    pub negative: Count,
    pub positive: Count,
    pub both: Count,
    pub either: Count,
    pub significant_neg: Vec<String>,
    pub significant_pos: Vec<String>,
    /// Instruments with a degenerate tail; excluded from the percentages.
    pub skipped: Vec<Excluded>,
    /// Instruments that could not be loaded or analyzed.
    pub failed: Vec<Excluded>,
}

impl BatchSummary {
    /// Tallies `(ticker, outcome)` pairs in the given order.
    pub fn from_outcomes(outcomes: &[(String, Result<InstrumentReport>)]) -> Self {
        let mut s = BatchSummary {
            attempted: 0,
            negative: Count { count: 0, percent: 0.0 },
            positive: Count { count: 0, percent: 0.0 },
            both: Count { count: 0, percent: 0.0 },
            either: Count { count: 0, percent: 0.0 },
            significant_neg: Vec::new(),
            significant_pos: Vec::new(),
            skipped: Vec::new(),
            failed: Vec::new(),
        };
        for (ticker, outcome) in outcomes {
            let report = match outcome {
                Ok(r) => r,
                Err(e) => {
                    s.failed.push(Excluded { ticker: ticker.clone(), reason: e.to_string() });
                    continue;
                }
            };
            let (neg, pos) = match (report.significant(Tail::Negative), report.significant(Tail::Positive)) {
                (Some(n), Some(p)) => (n, p),
                _ => {
                    let reason = report
                        .issues
                        .iter()
                        .filter(|i| i.component.starts_with("gof."))
                        .map(|i| format!("{}: {}", i.component, i.message))
                        .collect::<Vec<_>>()
                        .join("; ");
                    s.skipped.push(Excluded { ticker: ticker.clone(), reason });
                    continue;
                }
            };
            s.attempted += 1;
            if neg {
                s.negative.count += 1;
                s.significant_neg.push(ticker.clone());
            }
            if pos {
                s.positive.count += 1;
                s.significant_pos.push(ticker.clone());
            }
            if neg && pos {
                s.both.count += 1;
            }
            if neg || pos {
                s.either.count += 1;
            }
        }
        let pct = |c: usize| if s.attempted == 0 { 0.0 } else { 100.0 * c as f64 / s.attempted as f64 };
        for c in [&mut s.negative, &mut s.positive, &mut s.both, &mut s.either] {
            c.percent = pct(c.count);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchDocument {
    pub run: RunInfo,
    pub summary: BatchSummary,
    pub instruments: Vec<InstrumentReport>,
}

/// The `.csv` files directly inside `dir`, sorted by name.
pub fn price_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Empty(format!("no .csv files in {}", dir.display())));
    }
    Ok(files)
}

/// Analyzes every price file in `dir` concurrently. Requires bootstrap
/// options, since the summary counts bootstrap outcomes.
pub fn run_batch(dir: &Path, opts: &AnalysisOptions) -> Result<BatchDocument> {
    let gof = opts
        .gof
        .ok_or_else(|| Error::InvalidParams("batch runs need bootstrap settings".into()))?;
    let files = price_files(dir)?;
    let outcomes: Vec<(String, Result<InstrumentReport>)> = files
        .par_iter()
        .map(|path| (ticker_from_path(path), analyze_file(path, opts)))
        .collect();
    let summary = BatchSummary::from_outcomes(&outcomes);
    let instruments = outcomes.into_iter().filter_map(|(_, r)| r.ok()).collect();
    Ok(BatchDocument { run: RunInfo::new(Some(gof)), summary, instruments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kexp::KappaParams;

    fn gof_stub(reject: bool) -> GofResult {
        GofResult {
            params: KappaParams::new(0.5, 1.0, 1.0).unwrap(),
            s_data: 0.1,
            s_boot: vec![0.2],
            p_value: if reject { 0.0 } else { 1.0 },
            n_boot: 1,
            alpha_level: 0.1,
            reject,
            seed: 0,
            failed_replicates: 0,
        }
    }

    fn stub(ticker: &str, neg: Option<bool>, pos: Option<bool>) -> (String, Result<InstrumentReport>) {
        let r = InstrumentReport {
            ticker: ticker.into(),
            n_returns: 100,
            q: 0.5,
            zero_count: 0,
            fits: Fits::default(),
            gof: PerTail { neg: neg.map(|s| gof_stub(!s)), pos: pos.map(|s| gof_stub(!s)) },
            ks_comparison: KsComparison::default(),
            issues: Vec::new(),
        };
        (ticker.into(), Ok(r))
    }

    #[test]
    fn summary_counts() {
        let outcomes = vec![
            stub("A", Some(true), Some(true)),
            stub("B", Some(true), Some(false)),
            stub("C", Some(false), Some(false)),
            stub("D", Some(false), Some(true)),
            stub("E", None, Some(true)),
            ("F".to_string(), Err(Error::Empty("x".into()))),
        ];
        let s = BatchSummary::from_outcomes(&outcomes);
        assert_eq!(s.attempted, 4);
        assert_eq!((s.negative.count, s.positive.count, s.both.count, s.either.count), (2, 2, 1, 3));
        assert_eq!(s.either.percent, 75.0);
        assert_eq!(s.significant_neg, vec!["A", "B"]);
        assert_eq!(s.skipped.len(), 1);
        assert_eq!(s.failed.len(), 1);
    }

    #[test]
    fn short_series_is_an_input_error() {
        let d = chrono::NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let ps = PriceSeries::new("T", vec![(d, 1.0), (d + chrono::Days::new(1), 1.1)]).unwrap();
        let e = analyze(&ps, &AnalysisOptions::default()).unwrap_err();
        assert!(e.is_input_error());
    }
}
