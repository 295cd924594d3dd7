//! Experiment front end for `topotrack`.
//!
//! Every command reads one TOML file (see [`config`]) and writes its results
//! into an output directory. Errors map to process exit codes through
//! [`CliError::exit_code`].

pub mod batch;
pub mod config;
pub mod error;
pub mod grid;
pub mod output;
pub mod plot;
pub mod runner;
pub mod synth;
pub mod track;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::{CliError, CliResult};

use config::{Config, Format, Overrides};

#[derive(Debug, Parser)]
#[command(name = "topotrack", version, about = "Track graph topologies from streaming signals")]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Format of result tables.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and score every method against batch references.
    Synth,
    /// Run the tracker over a recorded signal matrix.
    Track,
    /// Solve the batch problem on a file's mean dissimilarity.
    Batch,
    /// Grid search over alpha and beta on a simulated scenario.
    Gridsearch,
    /// Redraw the figure of a `track` or `weights` table.
    Plot {
        /// Result table (CSV or JSON).
        input: PathBuf,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            format: self.format,
        }
    }

    fn load(&self) -> CliResult<Config> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
        Config::load(path, &self.overrides())
    }
}

/// Runs one command; returns a one-line description of what was written.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Synth => {
            let cfg = cli.load()?;
            let s = synth::cmd_synth(&cfg)?;
            Ok(format!("synth: wrote {} files to {}", s.files.len(), cfg.out.display()))
        }
        Command::Track => {
            let cfg = cli.load()?;
            let s = track::cmd_track(&cfg)?;
            Ok(format!("track: {} rows, wrote {} files to {}", s.n_rows, s.files.len(), cfg.out.display()))
        }
        Command::Batch => {
            let cfg = cli.load()?;
            let r = batch::cmd_batch(&cfg)?;
            Ok(format!("batch: converged in {} iterations, wrote {}", r.iterations, cfg.out.display()))
        }
        Command::Gridsearch => {
            let cfg = cli.load()?;
            let g = grid::cmd_gridsearch(&cfg)?;
            Ok(format!(
                "gridsearch: best alpha = {}, beta = {} (F = {:.4})",
                g.best.alpha, g.best.beta, g.best.f_measure
            ))
        }
        Command::Plot { input } => {
            let dir = cli
                .out
                .clone()
                .or_else(|| input.parent().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let path = plot::cmd_plot(input, &dir)?;
            Ok(format!("plot: wrote {}", path.display()))
        }
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}
