//! The `tmlp` command line: train, evaluate, probe, truncate and render
//! tailed MLP models.
//!
//! Exit codes: 0 on success, 1 for configuration or argument errors, 2 for
//! runtime failures such as divergence or mismatched inputs, 3 for I/O and
//! container errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "tmlp",
    version,
    about = "Level-of-detail neural signal fitting with tailed MLPs"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to the configured signal and write the model file,
    /// training history, per-level metrics and renders.
    Train,
    /// Report per-level metrics of a model file against a signal.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Reference image (instead of the config's signal).
        #[arg(long, conflicts_with = "shape")]
        image: Option<PathBuf>,
        /// Reference shape, e.g. "circle2d 0 0 0.5".
        #[arg(long)]
        shape: Option<String>,
        /// Comma-separated levels; fractional values blend adjacent levels.
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
    },
    /// Compare retrained heads on a frozen plain MLP with a tailed MLP.
    Probe,
    /// Write the first `layers` layers of a model file.
    Truncate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        layers: usize,
        /// Destination file; defaults to `<out>/<stem>.L<layers>.tmlp`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render a model at one level: a PNG for 2D inputs, an OBJ mesh for 3D.
    Render {
        #[arg(long)]
        model: PathBuf,
        /// Level to render; defaults to the deepest stored level.
        #[arg(long)]
        level: Option<f64>,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        /// Also write the iso-contour of a scalar 2D field at this value.
        #[arg(long)]
        iso: Option<f64>,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors go to stderr.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tmlp: {e}");
            e.exit_code()
        }
    }
}
