//! Daily closes to log returns, and the split of returns into a negated
//! negative tail and a positive tail, both living on `(0, ∞)`.

use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kexp::KappaParams;

/// Dated closing prices for one instrument, ascending by date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    ticker: String,
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
}

impl PriceSeries {
    /// Sorts rows by date, then validates: at least two rows, distinct
    /// dates, positive finite closes.
    pub fn new(ticker: impl Into<String>, rows: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let ticker = ticker.into();
        let invalid = |msg: String| Error::Validation { path: ticker.clone().into(), msg };
        let mut rows = rows;
        rows.sort_by_key(|r| r.0);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(invalid(format!("duplicate date {}", w[0].0)));
        }
        if let Some((d, c)) = rows.iter().find(|(_, c)| !(c.is_finite() && *c > 0.0)) {
            return Err(invalid(format!("close on {d} must be positive and finite, got {c}")));
        }
        if rows.len() < 2 {
            return Err(invalid(format!("need at least 2 prices, got {}", rows.len())));
        }
        let (dates, closes) = rows.into_iter().unzip();
        Ok(Self { ticker, dates, closes })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }
}

/// Reads a `date,close` CSV (ISO dates, extra columns ignored).
pub fn load_prices(path: impl AsRef<Path>, ticker: &str) -> Result<PriceSeries> {
    let path = path.as_ref();
    let parse_err = |msg: String| Error::Parse { path: path.to_path_buf(), msg };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => parse_err(format!("{other:?}")),
        })?;
    let headers = reader.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(Error::Empty(format!("{} has no header row", path.display())));
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            .ok_or_else(|| parse_err(format!("missing `{name}` column")))
    };
    let (date_col, close_col) = (column("date")?, column("close")?);

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(format!("line {line}: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let date = record
            .get(date_col)
            .ok_or_else(|| parse_err(format!("line {line}: missing date")))?;
        let date = NaiveDate::parse_from_str(date, "%Y-%m-%d")
            .map_err(|e| parse_err(format!("line {line}: bad date `{date}`: {e}")))?;
        let close = record.get(close_col).unwrap_or("");
        if close.is_empty() {
            return Err(parse_err(format!("line {line}: empty close")));
        }
        let close: f64 = close
            .parse()
            .map_err(|_| parse_err(format!("line {line}: bad close `{close}`")))?;
        rows.push((date, close));
    }
    if rows.is_empty() {
        return Err(Error::Empty(format!("{} contains no price rows", path.display())));
    }
    PriceSeries::new(ticker, rows).map_err(|e| match e {
        Error::Validation { msg, .. } => Error::Validation { path: path.to_path_buf(), msg },
        other => other,
    })
}

/// One-day log returns `ln(S_i / S_{i-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub ticker: String,
    pub returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

pub fn compute_returns(ps: &PriceSeries) -> ReturnSeries {
    ReturnSeries {
        ticker: ps.ticker.clone(),
        returns: ps.closes.windows(2).map(|w| (w[1] / w[0]).ln()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tail {
    #[serde(rename = "neg")]
    Negative,
    #[serde(rename = "pos")]
    Positive,
}

impl Tail {
    pub const BOTH: [Tail; 2] = [Tail::Negative, Tail::Positive];

    pub fn as_str(&self) -> &'static str {
        match self {
            Tail::Negative => "neg",
            Tail::Positive => "pos",
        }
    }
}

impl std::str::FromStr for Tail {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neg" | "negative" => Ok(Tail::Negative),
            "pos" | "positive" => Ok(Tail::Positive),
            _ => Err(Error::InvalidParams(format!("unknown tail `{s}` (expected neg or pos)"))),
        }
    }
}

impl std::fmt::Display for Tail {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Negated negative returns, positive returns, the number of exact zeros,
/// and `q`, the fraction of all returns that are negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSamples {
    pub neg: Vec<f64>,
    pub pos: Vec<f64>,
    pub zero_count: usize,
    pub q: f64,
}

impl TailSamples {
    pub fn total(&self) -> usize {
        self.neg.len() + self.pos.len() + self.zero_count
    }

    pub fn get(&self, tail: Tail) -> &[f64] {
        match tail {
            Tail::Negative => &self.neg,
            Tail::Positive => &self.pos,
        }
    }

    /// The tail's sample, or a degenerate-input error when it is empty.
    pub fn require(&self, tail: Tail) -> Result<&[f64]> {
        let xs = self.get(tail);
        if xs.is_empty() {
            Err(Error::Degenerate(format!("the {} tail has no observations", tail.as_str())))
        } else {
            Ok(xs)
        }
    }

    /// Fraction of returns above zero; equals `1 - q` without zeros.
    pub fn upper_weight(&self) -> f64 {
        self.pos.len() as f64 / self.total() as f64
    }
}

pub fn split_tails(rs: &ReturnSeries) -> Result<TailSamples> {
    if let Some(bad) = rs.returns.iter().find(|r| !r.is_finite()) {
        return Err(Error::Domain(format!("non-finite return {bad}")));
    }
    let neg: Vec<f64> = rs.returns.iter().filter(|&&r| r < 0.0).map(|r| -r).collect();
    let pos: Vec<f64> = rs.returns.iter().copied().filter(|&r| r > 0.0).collect();
    if neg.is_empty() && pos.is_empty() {
        return Err(Error::Degenerate(format!("{} has no nonzero returns", rs.ticker)));
    }
    let zero_count = rs.returns.len() - neg.len() - pos.len();
    let q = neg.len() as f64 / rs.returns.len() as f64;
    Ok(TailSamples { neg, pos, zero_count, q })
}

/// Two-tail model on the real line: `P(R < r) = w₋ S₋(-r)` for `r < 0` and
/// `P(R > r) = w₊ S₊(r)` for `r > 0`, with κ-generalised survival functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeModel {
    pub lower_weight: f64,
    pub upper_weight: f64,
    pub neg: KappaParams,
    pub pos: KappaParams,
}

impl CompositeModel {
    /// Weights `q` and `1 - q`.
    pub fn new(q: f64, neg: KappaParams, pos: KappaParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("q must lie in [0, 1], got {q}")));
        }
        Ok(Self { lower_weight: q, upper_weight: 1.0 - q, neg, pos })
    }

    /// Weights from the sample, so that an atom of exact zeros keeps its
    /// empirical mass.
    pub fn from_samples(tails: &TailSamples, neg: KappaParams, pos: KappaParams) -> Self {
        Self { lower_weight: tails.q, upper_weight: tails.upper_weight(), neg, pos }
    }

    /// `P(R < r)` for `r < 0`, `P(R > r)` for `r > 0`.
    pub fn tail(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            Ok(self.lower_weight * self.neg.survival(-r)?)
        } else if r > 0.0 {
            Ok(self.upper_weight * self.pos.survival(r)?)
        } else {
            Err(Error::Domain("composite tail is undefined at r = 0".into()))
        }
    }

    /// `P(R > r)` over the whole line, for full-sample comparisons.
    pub fn survival(&self, r: f64) -> f64 {
        if r < 0.0 {
            1.0 - self.lower_weight * self.neg.survival(-r).unwrap_or(0.0)
        } else if r > 0.0 {
            self.upper_weight * self.pos.survival(r).unwrap_or(0.0)
        } else {
            self.upper_weight
        }
    }
}

/// A seeded weekday price path from 100 whose log returns are
/// `-X₋` with probability `q` and `+X₊` otherwise, with `X₋`, `X₊` drawn from
/// the κ-generalised laws `neg` and `pos`.
pub fn synthetic_prices(
    ticker: &str,
    neg: &KappaParams,
    pos: &KappaParams,
    q: f64,
    n_returns: usize,
    seed: u64,
) -> Result<PriceSeries> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q must lie in [0, 1], got {q}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut date = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let mut close = 100.0f64;
    let mut rows = Vec::with_capacity(n_returns + 1);
    rows.push((date, close));
    for _ in 0..n_returns {
        let r = if rng.random::<f64>() < q {
            -neg.sample_with(1, &mut rng)[0]
        } else {
            pos.sample_with(1, &mut rng)[0]
        };
        close *= r.exp();
        date = next_weekday(date);
        rows.push((date, close));
    }
    PriceSeries::new(ticker, rows)
}

fn next_weekday(d: NaiveDate) -> NaiveDate {
    let mut d = d.succ_opt().expect("date in range");
    while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
        d = d.succ_opt().expect("date in range");
    }
    d
}

/// Writes `date,close` rows with round-trip precision.
pub fn write_prices<W: std::io::Write>(ps: &PriceSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["date", "close"]).map_err(csv_err)?;
    for (d, c) in ps.dates.iter().zip(&ps.closes) {
        w.write_record([d.format("%Y-%m-%d").to_string(), format!("{c:?}")]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Tail probability of the composite model with weights `q` and `1 - q`.
pub fn composite_tail(r: f64, q: f64, neg: &KappaParams, pos: &KappaParams) -> Result<f64> {
    CompositeModel::new(q, *neg, *pos)?.tail(r)
}
