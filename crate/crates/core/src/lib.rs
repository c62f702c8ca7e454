//! Heavy-tailed fits to daily log-returns.
//!
//! * [`kexp`]: κ-exponential and the κ-generalised distribution on `(0, ∞)`.
//! * [`stable`]: stable laws in the 0-parameterization via Fourier inversion.
//! * [`returns`]: price ingestion, log returns, tail split, composite model.
//! * [`optim`] and [`mle`]: Nelder–Mead maximizer and the family fitters.
//! * [`gof`]: KS statistic and the parametric-bootstrap goodness-of-fit test.
//! * [`report`] and [`plot`]: per-instrument reports, batch summaries, SVG.

pub mod error;
pub mod gof;
pub mod kexp;
pub mod mle;
pub mod optim;
pub mod plot;
pub mod quad;
pub mod report;
pub mod returns;
mod roots;
pub mod stable;

pub use error::{Error, Result};
pub use gof::{ks_statistic, mc_gof_test, GofResult};
pub use kexp::KappaParams;
pub use mle::{fit_kappa, fit_normal, fit_stable, Family, FitParams, FitResult, NormalParams};
pub use returns::{compute_returns, load_prices, split_tails, CompositeModel, PriceSeries, ReturnSeries, Tail, TailSamples};
pub use stable::StableParams;
