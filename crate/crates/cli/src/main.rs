//! `conispec`: config-driven batch runs writing CSV tables, gnuplot
//! scripts and a JSON summary.
//!
//! Exit codes: 0 success, 1 configuration error, 2 hypothesis violation,
//! 3 numerical failure.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::{Ctx, Report};
use conispec::error::ErrorClass;
use serde_json::{json, Map, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "conispec", version, about = "Low-energy spectral kernels and propagators on metric cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (results do not depend on this)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fit the predicted power law and report it
    #[arg(long, global = true)]
    fit: bool,
    /// Overrides numerics.tol
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Overrides geometry.l_max
    #[arg(long, global = true)]
    modes: Option<usize>,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Cross-section spectrum
    Eigens,
    /// Mode-summed resolvent kernel on a λ grid
    Resolvent,
    /// Spectral-measure density on a λ grid
    Specmeasure,
    /// Zero-energy solution and its leading coefficient
    Zeromode,
    /// Stone-formula propagator time series
    Propagate {
        /// schrodinger | wave_sin | wave_cos
        #[arg(long)]
        kind: Option<String>,
    },
    /// Power-law fit of a time series CSV
    FitDecay {
        #[arg(long)]
        kind: Option<String>,
    },
    /// Finite-box eigenfunction comparison for one mode
    OracleBox,
    /// Evaluate index-set expressions
    Indexset,
    /// Leaf samples and contact residuals
    Legendrian,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eigens => "eigens",
            Command::Resolvent => "resolvent",
            Command::Specmeasure => "specmeasure",
            Command::Zeromode => "zeromode",
            Command::Propagate { .. } => "propagate",
            Command::FitDecay { .. } => "fit-decay",
            Command::OracleBox => "oracle-box",
            Command::Indexset => "indexset",
            Command::Legendrian => "legendrian",
        }
    }
}

#[derive(Debug)]
pub struct RunError {
    code: u8,
    message: String,
}

impl RunError {
    pub fn config(msg: impl Into<String>) -> Self {
        RunError { code: 1, message: format!("configuration error: {}", msg.into()) }
    }
}

impl From<conispec::Error> for RunError {
    fn from(e: conispec::Error) -> Self {
        let code = match e.class() {
            ErrorClass::Config => 1,
            ErrorClass::Hypothesis => 2,
            ErrorClass::Numerical => 3,
        };
        let message = match &e {
            conispec::Error::Hypothesis { .. } => format!("{e} (hyp2)"),
            _ => e.to_string(),
        };
        RunError { code, message }
    }
}

fn run(cli: &Cli) -> Result<(), RunError> {
    let path = cli.config.as_ref().ok_or_else(|| RunError::config("--config is required"))?;
    let loaded = config::load(path)?;
    let cfg = &loaded.config;
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(RunError::config(format!("--tol must lie in (0, 1), got {t}")));
        }
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::config(format!("--threads: {e}")))?;
    }
    // hyp2 is checked before any output is produced
    let spectrum = match &cfg.geometry {
        Some(_) => Some(cfg.spectrum(cli.modes)?),
        None => None,
    };
    let kind = match &cli.command {
        Command::Propagate { kind } | Command::FitDecay { kind } => kind.clone(),
        _ => None,
    };
    let ctx = Ctx {
        cfg,
        dir: &loaded.dir,
        spectrum,
        fit: cli.fit,
        tol: cli.tol.unwrap_or(cfg.numerics.tol),
        kind: kind.clone(),
    };
    let mut out = output::Output::create(&cli.out)?;
    let report: Report = match &cli.command {
        Command::Eigens => commands::eigens(&ctx, &mut out),
        Command::Resolvent => commands::resolvent(&ctx, &mut out),
        Command::Specmeasure => commands::specmeasure(&ctx, &mut out),
        Command::Zeromode => commands::zeromode(&ctx, &mut out),
        Command::Propagate { .. } => commands::propagate(&ctx, &mut out),
        Command::FitDecay { .. } => commands::fit_decay_cmd(&ctx, &mut out),
        Command::OracleBox => commands::oracle_box(&ctx, &mut out),
        Command::Indexset => commands::indexset(&ctx, &mut out),
        Command::Legendrian => commands::legendrian(&ctx, &mut out),
    }?;
    let mut overrides = Map::new();
    overrides.insert("fit".into(), json!(cli.fit));
    overrides.insert("tol".into(), json!(cli.tol));
    overrides.insert("modes".into(), json!(cli.modes));
    overrides.insert("kind".into(), json!(kind));
    let all_pass = report.checks.iter().all(|c| c["pass"] == Value::Bool(true));
    let mut body = Map::new();
    body.insert("schema_version".into(), json!(output::SCHEMA_VERSION));
    body.insert("command".into(), json!(cli.command.name()));
    body.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    body.insert("config".into(), serde_json::to_value(&loaded.raw).map_err(|e| RunError::config(e.to_string()))?);
    body.insert("overrides".into(), Value::Object(overrides));
    body.insert("results".into(), Value::Object(report.results));
    body.insert("predicted".into(), Value::Object(report.predicted));
    body.insert("measured".into(), Value::Object(report.measured));
    body.insert("checks".into(), Value::Array(report.checks));
    body.insert("all_checks_pass".into(), json!(all_pass));
    body.insert("warnings".into(), json!(report.warnings));
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    out.summary(body)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
