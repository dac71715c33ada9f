//! `lra`: fit orthanchor bases, encode/decode contours, and run the
//! reconstruction, noise, sweep, generalization and assignment experiments.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::{CliError, EXIT_USAGE};

#[derive(Parser)]
#[command(
    name = "lra",
    version,
    about = "Low-rank contour representation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat TOML config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        RunConfig::resolve(self.config.as_deref(), &self.set)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a basis and write it as a basis file.
    Fit {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// JSONL annotations; omit to use the configured synthetic corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Basis file to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Encode a corpus into shape codes (JSONL).
    Encode {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode shape codes back into polygons (annotation JSONL).
    Decode {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        codes: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruction IoU of a corpus under a basis.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Output prefix for `.csv`, `.json`, `.contours.csv` and `.log`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean IoU and squared error over a list of dimensions.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// SVD vs FMS under spike-noise corruption.
    Noise {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit on one corpus, evaluate on another.
    Generalize {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Held-out JSONL annotations; omit for a disjoint synthetic draw.
        #[arg(long)]
        eval_corpus: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a prediction grid and run sparse assignment.
    AssignSim {
        #[arg(long)]
        scenario: PathBuf,
        /// Assignment JSON to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a basis summary; with `--out`, also write its importance profile.
    InspectBasis {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Fit {
            cfg,
            corpus,
            out,
            trace,
        } => commands::fit(&cfg.resolve()?, corpus.as_deref(), &out, trace.as_deref()),
        Command::Encode {
            cfg,
            basis,
            corpus,
            out,
        } => commands::encode_cmd(&cfg.resolve()?, &basis, corpus.as_deref(), &out),
        Command::Decode { basis, codes, out } => commands::decode_cmd(&basis, &codes, &out),
        Command::Eval {
            cfg,
            basis,
            corpus,
            out,
        } => commands::eval(&cfg.resolve()?, &basis, corpus.as_deref(), &out),
        Command::Sweep { cfg, corpus, out } => {
            commands::sweep(&cfg.resolve()?, corpus.as_deref(), &out)
        }
        Command::Noise { cfg, corpus, out } => {
            commands::noise(&cfg.resolve()?, corpus.as_deref(), &out)
        }
        Command::Generalize {
            cfg,
            corpus,
            eval_corpus,
            out,
        } => commands::generalize(
            &cfg.resolve()?,
            corpus.as_deref(),
            eval_corpus.as_deref(),
            &out,
        ),
        Command::AssignSim { scenario, out } => commands::assign_sim(&scenario, &out),
        Command::InspectBasis {
            cfg,
            basis,
            corpus,
            out,
        } => commands::inspect_basis(&cfg.resolve()?, &basis, corpus.as_deref(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
