//! Command-line driver for the identification toolkit: generates the
//! benchmark datasets, trains the three objectives, evaluates and sweeps
//! them, and emits plot-ready curve data.

mod artifact;
mod commands;
mod config;
mod csv;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ssnn", version, about = "State-space neural completion benchmark driver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Flat TOML config; keys mirror the experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training objective: baseline, classical, wpgnn or all.
    #[arg(long, default_value = "all")]
    method: String,
    /// Override the completion-init seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Artifact directory (datasets, models, reports).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the benchmark datasets as CSV files.
    Generate(Common),
    /// Train the selected objective(s) on the generated datasets.
    Train(Common),
    /// Score trained models on a dataset (default: test.csv in --out).
    Eval {
        #[command(flatten)]
        common: Common,
        /// Dataset file to evaluate on.
        dataset: Option<PathBuf>,
    },
    /// Repeat training over randomized initializations and summarize.
    Montecarlo(Common),
    /// Pick regularization hyperparameters by validation RMSE.
    Gridsearch(Common),
    /// Emit the completion-function curves over the plot grid.
    Plotdata(Common),
}

fn run() -> error::Result<()> {
    let cli = Cli::parse();
    let common = match &cli.cmd {
        Cmd::Generate(c)
        | Cmd::Train(c)
        | Cmd::Montecarlo(c)
        | Cmd::Gridsearch(c)
        | Cmd::Plotdata(c) => c,
        Cmd::Eval { common, .. } => common,
    };
    let rc = config::load(common.config.as_deref(), common.seed)?;
    let methods = commands::parse_methods(&common.method)?;
    match &cli.cmd {
        Cmd::Generate(c) => commands::cmd_generate(&rc, &c.out),
        Cmd::Train(c) => commands::cmd_train(&rc, &methods, &c.out),
        Cmd::Eval { common, dataset } => {
            commands::cmd_eval(&rc, &methods, &common.out, dataset.as_deref())
        }
        Cmd::Montecarlo(c) => commands::cmd_montecarlo(&rc, &methods, &c.out),
        Cmd::Gridsearch(c) => commands::cmd_gridsearch(&rc, &methods, &c.out),
        Cmd::Plotdata(c) => commands::cmd_plotdata(&c.out),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
