//! Regenerates the bundled price fixtures from their `params.csv` files.
//!
//! `cargo run -p ktail-cli --example gen_fixtures -- fixtures`

use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::Days;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ktail::returns::{synthetic_prices, write_prices, PriceSeries};
use ktail::KappaParams;

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).expect("params file");
    reader
        .records()
        .map(|r| r.expect("params row").iter().map(str::to_string).collect())
        .collect()
}

fn num<T: std::str::FromStr>(s: &str) -> T
where
    T::Err: std::fmt::Debug,
{
    s.parse().expect("numeric field")
}

fn normal_prices(ticker: &str, mu: f64, sigma: f64, n: usize, seed: u64) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = chrono::NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
    let mut close = 100.0f64;
    let mut rows = vec![(start, close)];
    for i in 1..=n {
        let (u1, u2): (f64, f64) = (rng.random(), rng.random());
        let z = (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        close *= (mu + sigma * z).exp();
        rows.push((start + Days::new(i as u64), close));
    }
    PriceSeries::new(ticker, rows).unwrap()
}

fn main() {
    let root: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()).into();
    for r in rows(&root.join("kgen_params.csv")) {
        let params = KappaParams::new(num(&r[1]), num(&r[2]), num(&r[3])).unwrap();
        let ps = synthetic_prices(&r[0], &params, &params, num(&r[4]), num(&r[5]), num(&r[6])).unwrap();
        write_prices(&ps, File::create(root.join(format!("kgen/{}.csv", r[0]))).unwrap()).unwrap();
    }
    for r in rows(&root.join("normal_params.csv")) {
        let ps = normal_prices(&r[0], num(&r[1]), num(&r[2]), num(&r[3]), num(&r[4]));
        write_prices(&ps, File::create(root.join(format!("normal/{}.csv", r[0]))).unwrap()).unwrap();
    }
}
