//! The `hawkes` command line: fit, simulate, intensity, compare, backtest.
//!
//! Exit codes: 0 success, 1 invalid input (flags, files, schemas, model
//! constraints), 2 numerical failure. Diagnostics go to standard error;
//! results are written only to the paths given by the output flags.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{compare_kernels, intensity_csv, intensity_svg};
use crate::error::{Error, Result};
use crate::estimate::{fit, FitConfig, DEFAULT_RESTARTS, DEFAULT_SEED};
use crate::event_data::{parse_csv, EventStream, IngestConfig};
use crate::kernels::KernelKind;
use crate::model::{intensity_path, HawkesModel};
use crate::simulate::{simulate, SimConfig};
use crate::strategy::{run_backtest, StrategyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hawkes",
    version,
    about = "Bivariate Hawkes models for order-book event streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to an event CSV by maximum likelihood.
    Fit(FitArgs),
    /// Simulate an event CSV from a model.
    Simulate(SimulateArgs),
    /// Export the fitted intensity path as CSV (and optionally SVG).
    Intensity(IntensityArgs),
    /// Fit both kernel kinds and compare them by AIC.
    Compare(CompareArgs),
    /// Run the liquidity-provision backtest.
    Backtest(BacktestArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Event CSV with header `time,side,price,size`.
    #[arg(long)]
    data: PathBuf,
    /// Sort unsorted rows and nudge same-side ties instead of rejecting them.
    #[arg(long)]
    lenient: bool,
}

impl DataArgs {
    fn load(&self) -> Result<EventStream> {
        let cfg = if self.lenient {
            IngestConfig::lenient()
        } else {
            IngestConfig::default()
        };
        parse_csv(&self.data, &cfg).map_err(|e| in_file(&self.data, e))
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    kernel: KernelKind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Model JSON, or a fit result whose `model` entry is used.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct IntensityArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Grid spacing in seconds.
    #[arg(long)]
    step: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
}

#[derive(Debug, Args)]
struct BacktestArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Strategy config JSON; missing keys take their defaults.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_VALIDATION
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit(a) => {
            let stream = a.data.load()?;
            let cfg = FitConfig::new(a.kernel).with_restarts(a.restarts).with_seed(a.seed);
            let r = fit(&stream, &cfg)?;
            for flag in &r.flags {
                eprintln!("warning: {flag}");
            }
            eprintln!(
                "fit {}: log-likelihood {:.6}, aic {:.6}, converged {}, {} iterations",
                a.kernel, r.log_likelihood, r.aic, r.converged, r.iterations
            );
            write_output(&a.out, &json_line(r.to_json_string()))
        }
        Command::Simulate(a) => {
            let model = load_model(&a.model)?;
            let sim = simulate(&model, &SimConfig::new(a.horizon, a.seed))?;
            if sim.truncated {
                eprintln!("warning: simulation stopped at the event cap");
            }
            eprintln!("simulated {} events over {} s", sim.stream.len(), a.horizon);
            let text = sim.stream.to_csv_string(&[("seed", a.seed.to_string())]);
            write_output(&a.out, &text)
        }
        Command::Intensity(a) => {
            let model = load_model(&a.model)?;
            let stream = a.data.load()?;
            let samples = intensity_path(&model, &stream, a.step)?;
            let csv = intensity_csv(&samples);
            let svg = a.svg.as_ref().map(|_| intensity_svg(&samples));
            write_output(&a.out, &csv)?;
            if let (Some(path), Some(svg)) = (&a.svg, svg) {
                write_output(path, &svg)?;
            }
            eprintln!("wrote {} intensity samples", samples.len());
            Ok(())
        }
        Command::Compare(a) => {
            let stream = a.data.load()?;
            let exp = FitConfig::new(KernelKind::Exponential)
                .with_restarts(a.restarts)
                .with_seed(a.seed);
            let pl = FitConfig::new(KernelKind::PowerLaw)
                .with_restarts(a.restarts)
                .with_seed(a.seed);
            let report = compare_kernels(&stream, &exp, &pl)?;
            eprintln!(
                "winner {}: delta aic (power_law - exponential) {:.6}",
                report.winner, report.delta_aic
            );
            let text = serde_json::to_string_pretty(&report)?;
            write_output(&a.out, &json_line(text))
        }
        Command::Backtest(a) => {
            let model = load_model(&a.model)?;
            let stream = a.data.load()?;
            let cfg_text = read_text(&a.config)?;
            let cfg = StrategyConfig::from_json_str(&cfg_text).map_err(|e| in_file(&a.config, e))?;
            let report = run_backtest(&model, &stream, &cfg)?;
            eprintln!(
                "{} clusters, {} trades, total pnl {}",
                report.n_clusters_detected,
                report.trades.len(),
                report.total_pnl
            );
            write_output(&a.out, &json_line(report.to_json_string()))
        }
    }
}

fn json_line(mut s: String) -> String {
    s.push('\n');
    s
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

/// Reads a bare model document or the `model` entry of a fit result.
pub fn load_model(path: &Path) -> Result<HawkesModel> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let doc = match value {
        serde_json::Value::Object(mut map) if map.contains_key("model") => map.remove("model").expect("key checked"),
        other => other,
    };
    Ok(serde_json::from_value(doc)?)
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}
