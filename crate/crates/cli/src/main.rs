use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sphericity_cli::{execute, CliError, Command, RunConfig};

/// High-dimensional sphericity tests and simulation campaigns.
///
/// Worker threads for simulations come from SPHERICITY_THREADS; results do
/// not depend on it.
#[derive(Parser)]
#[command(name = "sphericity", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the tests on a CSV dataset (rows are observations).
    Test(Flags),
    /// Empirical size under the null.
    Size(Flags),
    /// Power against block-spiked alternatives over block sizes s (a = 0.5).
    PowerSparsity(Flags),
    /// Power against block-spiked alternatives over signal strengths a.
    PowerStrength(Flags),
    /// Dependence between sum- and max-type statistics.
    Independence(Flags),
    /// Write one synthetic dataset as CSV.
    Generate(Flags),
}

#[derive(Args)]
struct Flags {
    /// Input CSV (test).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    /// Comma list of NS, NM, SS, SM, CN, CS, or "all".
    #[arg(long)]
    tests: Option<String>,
}

fn build(cli: Cli) -> Result<RunConfig, CliError> {
    let (command, flags) = match cli.command {
        Sub::Test(f) => (Command::Test, f),
        Sub::Size(f) => (Command::Size, f),
        Sub::PowerSparsity(f) => (Command::PowerSparsity, f),
        Sub::PowerStrength(f) => (Command::PowerStrength, f),
        Sub::Independence(f) => (Command::Independence, f),
        Sub::Generate(f) => (Command::Generate, f),
    };
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &flags.config {
        cfg.apply_file(path)?;
    }
    if let Some(p) = flags.input {
        cfg.input_path = Some(p);
    }
    if let Some(p) = flags.output {
        cfg.output_path = Some(p);
    }
    for (key, value) in [
        ("format", flags.format),
        ("alpha", flags.alpha),
        ("seed", flags.seed),
        ("reps", flags.reps),
        ("tests", flags.tests),
    ] {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match build(cli).and_then(|cfg| execute(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
