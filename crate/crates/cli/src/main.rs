use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ktail::mle::{fit_kappa, fit_normal, fit_stable, Family};
use ktail::plot::{tail_plot_svg, PlotModels};
use ktail::report::{
    analyze_file, run_batch, ticker_from_path, AnalysisOptions, FitDocument, GofDocument, GofOptions, RunInfo,
    DEFAULT_LEVEL, DEFAULT_N_BOOT,
};
use ktail::returns::{compute_returns, load_prices, split_tails, synthetic_prices, write_prices, Tail};
use ktail::{mc_gof_test, Error, KappaParams};

mod output;

const EXIT_INPUT: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ktail", version, about = "Heavy-tailed fits to daily log-returns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit normal and stable laws to all returns and the kappa law to each tail.
    Fit {
        csv: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "kappa,stable,normal")]
        families: Vec<Family>,
        #[arg(long, value_delimiter = ',', default_value = "neg,pos")]
        tails: Vec<Tail>,
        /// Constrain the stable fit to alpha < 2.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        heavy_tailed: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo KS goodness-of-fit test of the kappa fit to one tail.
    Gof {
        csv: PathBuf,
        #[arg(long)]
        tail: Tail,
        #[arg(long, default_value_t = DEFAULT_N_BOOT)]
        n_boot: usize,
        #[arg(long, default_value_t = DEFAULT_LEVEL)]
        level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit and test every CSV in a directory and summarize the significant tails.
    Batch {
        dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_N_BOOT)]
        n_boot: usize,
        #[arg(long, default_value_t = DEFAULT_LEVEL)]
        level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "kappa,normal")]
        families: Vec<Family>,
        /// Also write summary.json and one report per instrument here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// SVG of both tails with the fitted normal, stable and kappa curves.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw from the kappa law, as values or as a price path.
    Sample {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit a date,close price path whose log returns are the draws with
        /// a negative sign with probability q.
        #[arg(long)]
        prices: bool,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_CONVERGENCE
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Fit { csv, families, tails, heavy_tailed, out } => {
            let opts = AnalysisOptions { families: dedup(families), tails: dedup(tails), heavy_tailed, gof: None };
            let report = analyze_file(&csv, &opts)?;
            for issue in &report.issues {
                eprintln!("warning: {}: {}", issue.component, issue.message);
            }
            let code = if report.has_input_issue() {
                ExitCode::from(EXIT_INPUT)
            } else if report.has_convergence_issue() {
                ExitCode::from(EXIT_CONVERGENCE)
            } else {
                ExitCode::SUCCESS
            };
            emit_json(&FitDocument { run: RunInfo::new(None), report }, out.as_deref())?;
            Ok(code)
        }
        Command::Gof { csv, tail, n_boot, level, seed, out } => {
            let ticker = ticker_from_path(&csv);
            let prices = load_prices(&csv, &ticker)?;
            let tails = split_tails(&compute_returns(&prices))?;
            let result = mc_gof_test(tails.require(tail)?, n_boot, level, seed)?;
            let run = RunInfo::new(Some(GofOptions { n_boot, level, seed }));
            emit_json(&GofDocument { run, ticker, tail, result }, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Batch { dir, n_boot, level, seed, families, out_dir } => {
            let opts = AnalysisOptions {
                families: dedup(families),
                gof: Some(GofOptions { n_boot, level, seed }),
                ..AnalysisOptions::default()
            };
            let doc = run_batch(&dir, &opts)?;
            for f in &doc.summary.failed {
                eprintln!("warning: {} failed: {}", f.ticker, f.reason);
            }
            for s in &doc.summary.skipped {
                eprintln!("warning: {} skipped: {}", s.ticker, s.reason);
            }
            if let Some(out_dir) = &out_dir {
                std::fs::create_dir_all(out_dir)?;
                for r in &doc.instruments {
                    output::write_atomic(&out_dir.join(format!("{}.json", r.ticker)), &to_json(r)?)?;
                }
                output::write_atomic(&out_dir.join("summary.json"), &to_json(&doc.summary)?)?;
            }
            emit_json(&doc, None)?;
            if doc.summary.attempted == 0 && doc.summary.skipped.is_empty() {
                eprintln!("error: every instrument failed");
                return Ok(ExitCode::from(EXIT_INPUT));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { csv, out } => {
            let ticker = ticker_from_path(&csv);
            let returns = compute_returns(&load_prices(&csv, &ticker)?);
            let tails = split_tails(&returns)?;
            let kappa = |t| -> Result<KappaParams, Error> {
                Ok(fit_kappa(tails.require(t)?)?.kappa_params().expect("kappa fit"))
            };
            let models = PlotModels {
                normal: fit_normal(&returns.returns)?.normal_params().expect("normal fit"),
                stable: fit_stable(&returns.returns, true)?.stable_params().expect("stable fit"),
                kappa_neg: kappa(Tail::Negative)?,
                kappa_pos: kappa(Tail::Positive)?,
            };
            output::write_atomic(&out, tail_plot_svg(&returns, &models)?.as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample { kappa, alpha, beta, n, seed, prices, q, out } => {
            let params = KappaParams::new(kappa, alpha, beta)?;
            let mut buf = Vec::new();
            if prices {
                let ticker = out.as_deref().map(ticker_from_path).unwrap_or_else(|| "SAMPLE".into());
                write_prices(&synthetic_prices(&ticker, &params, &params, q, n, seed)?, &mut buf)?;
            } else {
                writeln!(buf, "x")?;
                for x in params.sample(n, seed) {
                    writeln!(buf, "{x:?}")?;
                }
            }
            emit(&buf, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn dedup<T: PartialEq>(items: Vec<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, Error> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.into()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Error> {
    emit(&to_json(value)?, out)
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => output::write_atomic(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
