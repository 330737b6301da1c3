//! Command-line front end: batch runs over JSONL manifests with
//! deterministic, provenance-stamped outputs.
//!
//! Exit codes: 0 success, 1 hard error, 2 some samples failed.

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Envelope, RunConfig, FORMAT_VERSION};
pub use manifest::{LoadedSample, Manifest, SampleRecord};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "hoi", version, about = "Hand-object interaction contact, metrics, refinement and frame-pair tools")]
struct Cli {
    /// JSON run configuration; absent fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Contact maps and 7-bit labels for ground-truth poses.
    Contact { manifest: PathBuf },
    /// Evaluation report for predicted poses.
    Metrics { manifest: PathBuf },
    /// Test-time refinement of predicted (or ground-truth) poses.
    Refine {
        #[arg(required_unless_present = "scene", conflicts_with = "scene")]
        manifest: Option<PathBuf>,
        /// Single scene file instead of a manifest.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Reference/interaction frame pair of one mask clip.
    Framepair { clip: PathBuf },
    /// Writes the generated hand template.
    Template,
    /// Class-balanced resampling indices over 7-bit contact labels.
    Resample { manifest: PathBuf },
}

/// Outcome of a batch command.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub succeeded: usize,
    pub failed: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            2
        } else {
            0
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let cfg = resolve_config(cli)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| crate::Error::io(&cli.out, e))?;
    match &cli.command {
        Command::Contact { manifest } => commands::contact(&cfg, &Manifest::load(manifest)?, &cli.out),
        Command::Metrics { manifest } => commands::metrics(&cfg, &Manifest::load(manifest)?, &cli.out),
        Command::Refine { manifest: Some(m), .. } => commands::refine(&cfg, &Manifest::load(m)?, &cli.out),
        Command::Refine { scene: Some(s), .. } => commands::refine_scene(cfg, s, &cli.out),
        Command::Refine { .. } => unreachable!("clap requires a manifest or a scene"),
        Command::Framepair { clip } => commands::framepair(&cfg, clip, &cli.out),
        Command::Template => commands::template(&cfg, &cli.out),
        Command::Resample { manifest } => commands::resample(&cfg, &Manifest::load(manifest)?, &cli.out),
    }
}

/// Parses `args` (program name first), runs the command and returns the
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
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            1
        }
    }
}
