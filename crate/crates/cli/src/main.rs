use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dynbif::runner::{self, Command, RunConfig, EXIT_ERROR};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Spectrum,
    Check,
    Bifvalues,
    Profile,
    Branch,
    Sweep,
    Simulate,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Spectrum => Command::Spectrum,
            Sub::Check => Command::Check,
            Sub::Bifvalues => Command::Bifvalues,
            Sub::Profile => Command::Profile,
            Sub::Branch => Command::Branch,
            Sub::Sweep => Command::Sweep,
            Sub::Simulate => Command::Simulate,
        }
    }
}

/// Global dynamic bifurcation analysis for −Δu = f_λ(u) on intervals and
/// rectangles.
///
/// Exit codes: 0 success, 1 error, 2 hypothesis check failed,
/// 3 undetermined within budget, 4 internal consistency flag.
#[derive(Debug, Parser)]
#[command(name = "dynbif", version)]
struct Cli {
    #[arg(value_enum)]
    command: Sub,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of retained modes.
    #[arg(long)]
    modes: Option<usize>,
    /// Parameter window as `lo:hi`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    lambda_window: Option<(f64, f64)>,
    #[arg(long)]
    norm_budget: Option<f64>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo = a.trim().parse::<f64>().map_err(|e| format!("lo: {e}"))?;
    let hi = b.trim().parse::<f64>().map_err(|e| format!("hi: {e}"))?;
    Ok((lo, hi))
}

fn config(cli: &Cli) -> dynbif::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(m) = cli.modes {
        cfg.modes = m;
        cfg.tensor = None;
    }
    if let Some(w) = cli.lambda_window {
        cfg.lambda_window = w;
    }
    if let Some(n) = cli.norm_budget {
        cfg.budgets.norm = n;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(&cli).and_then(|cfg| runner::run(cli.command.into(), &cfg));
    match result {
        Ok(out) => {
            print!("{}", out.summary);
            println!(
                "artifacts in {}: {}",
                out.report.config.out,
                out.report.artifacts.join(", ")
            );
            ExitCode::from(out.report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("dynbif: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
