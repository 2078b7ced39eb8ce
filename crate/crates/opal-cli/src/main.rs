//! `opal`: train, evaluate, compare, and inspect instance-adaptive
//! optimizer policies from the command line.
//!
//! Every run resolves its configuration the same way: a scale profile
//! supplies defaults, an optional TOML file overrides any subset of keys,
//! and command-line flags override the file. The resolved snapshot is
//! written into the run manifest so results can be reproduced exactly.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use opal_core::env::Family;

use opal_cli::commands;
use opal_cli::config::{ExperimentConfig, Mode, Profile};
use opal_cli::error::{CliError, Result};

/// Options shared by every subcommand.
#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML configuration file; its keys override profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Scale preset: `desk` (minutes) or `paper` (full scale).
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Master seed for the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for evaluation fan-out (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for run artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(
    name = "opal",
    about = "Instance-adaptive optimizer synthesis: probe, encode, decode, execute.",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Meta-train a policy, writing a checkpoint and an episode log.
    Train {
        /// Number of training episodes.
        #[arg(long)]
        episodes: Option<usize>,
        /// Training problem dimensions (comma separated).
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Fraction of each budget spent on the design-phase probe.
        #[arg(long)]
        design_ratio: Option<f64>,
        /// Auxiliary-classification loss weight.
        #[arg(long)]
        aux_weight: Option<f64>,
        /// Resume from this checkpoint instead of a fresh initialization.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Where to write the final checkpoint.
        #[arg(long)]
        checkpoint_out: Option<PathBuf>,
        /// Write intermediate checkpoints every N episodes (0 = final only).
        #[arg(long)]
        checkpoint_every: Option<usize>,
    },
    /// Benchmark a checkpoint against the reference optimizers.
    Evaluate {
        /// Checkpoint to evaluate.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Function families to evaluate (comma separated).
        #[arg(long, value_delimiter = ',')]
        functions: Option<Vec<String>>,
        /// Problem dimensions (comma separated).
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Independent trials per (function, dim).
        #[arg(long)]
        runs: Option<usize>,
        /// Budget per dimension: T = multiplier · d.
        #[arg(long)]
        multiplier: Option<usize>,
        /// Where to write the run records CSV.
        #[arg(long)]
        records_out: Option<PathBuf>,
    },
    /// Build the statistics report from a records CSV.
    Compare {
        /// Records CSV written by `evaluate` or `ablate`.
        #[arg(long)]
        records: PathBuf,
        /// Where to write the text report.
        #[arg(long)]
        report_out: Option<PathBuf>,
        /// Reference algorithm for the pairwise tests.
        #[arg(long, default_value = "opal")]
        reference: String,
        /// Significance level for the win/tie/loss calls.
        #[arg(long, default_value_t = commands::compare::DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Train and benchmark the four ablation variants.
    Ablate {
        /// Training episodes per variant.
        #[arg(long)]
        episodes: Option<usize>,
        /// Function families to evaluate (comma separated).
        #[arg(long, value_delimiter = ',')]
        functions: Option<Vec<String>>,
        /// Independent trials per (function, dim).
        #[arg(long)]
        runs: Option<usize>,
        /// Where to write the four-row report.
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Dump one design-phase trajectory graph as CSV + JSON.
    GraphDump {
        /// Function family to probe.
        #[arg(long)]
        function: String,
        /// Problem dimension.
        #[arg(long)]
        dim: usize,
    },
    /// Print the program a checkpoint decodes for one task.
    InspectProgram {
        /// Checkpoint to inspect.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Function family to probe.
        #[arg(long)]
        function: String,
        /// Problem dimension.
        #[arg(long)]
        dim: usize,
    },
}

impl Command {
    fn mode(&self) -> Mode {
        match self {
            Command::Train { .. } => Mode::Train,
            Command::Evaluate { .. } => Mode::Evaluate,
            Command::Compare { .. } => Mode::Compare,
            Command::Ablate { .. } => Mode::Ablate,
            Command::GraphDump { .. } => Mode::GraphDump,
            Command::InspectProgram { .. } => Mode::InspectProgram,
        }
    }
}

/// Builds the resolved configuration: profile defaults, then the config
/// file, then command-line flags, most specific last.
fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let forced_profile = cli
        .common
        .profile
        .as_deref()
        .map(str::parse::<Profile>)
        .transpose()?;
    let mut config = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path, forced_profile)?,
        None => ExperimentConfig::for_profile(forced_profile.unwrap_or(Profile::Desk)),
    };

    config.mode = cli.command.mode();
    if let Some(seed) = cli.common.seed {
        config.seed = seed;
    }
    if let Some(jobs) = cli.common.jobs {
        config.jobs = jobs;
    }
    if let Some(out_dir) = &cli.common.out_dir {
        config.paths.out_dir = out_dir.clone();
    }

    match &cli.command {
        Command::Train {
            episodes,
            dims,
            design_ratio,
            aux_weight,
            resume,
            checkpoint_out,
            checkpoint_every,
        } => {
            if let Some(episodes) = episodes {
                config.train.episodes = *episodes;
            }
            if let Some(dims) = dims {
                config.train.dims = dims.clone();
            }
            if let Some(ratio) = design_ratio {
                config.train.design_ratio = *ratio;
            }
            if let Some(weight) = aux_weight {
                config.train.aux_weight = *weight;
            }
            if let Some(path) = resume {
                config.paths.checkpoint_in = Some(path.clone());
            }
            if let Some(path) = checkpoint_out {
                config.paths.checkpoint_out = Some(path.clone());
            }
            if let Some(every) = checkpoint_every {
                config.train.checkpoint_every = *every;
            }
        }
        Command::Evaluate {
            checkpoint,
            functions,
            dims,
            runs,
            multiplier,
            records_out,
        } => {
            config.paths.checkpoint_in = Some(checkpoint.clone());
            if let Some(functions) = functions {
                config.eval.functions = functions.clone();
            }
            if let Some(dims) = dims {
                config.eval.dims = dims.clone();
            }
            if let Some(runs) = runs {
                config.eval.runs = *runs;
            }
            if let Some(multiplier) = multiplier {
                config.eval.budget_multiplier = *multiplier;
            }
            if let Some(path) = records_out {
                config.paths.records_out = Some(path.clone());
            }
        }
        Command::Compare {
            records,
            report_out,
            ..
        } => {
            config.paths.records_out = Some(records.clone());
            if let Some(path) = report_out {
                config.paths.report_out = Some(path.clone());
            }
        }
        Command::Ablate {
            episodes,
            functions,
            runs,
            report_out,
        } => {
            if let Some(episodes) = episodes {
                config.train.episodes = *episodes;
            }
            if let Some(functions) = functions {
                config.eval.functions = functions.clone();
            }
            if let Some(runs) = runs {
                config.eval.runs = *runs;
            }
            if let Some(path) = report_out {
                config.paths.report_out = Some(path.clone());
            }
        }
        Command::GraphDump { .. } => {}
        Command::InspectProgram { checkpoint, .. } => {
            config.paths.checkpoint_in = Some(checkpoint.clone());
        }
    }
    Ok(config)
}

fn parse_family(name: &str) -> Result<Family> {
    name.parse::<Family>().map_err(|_| {
        CliError::Config(format!("field `function`: unknown function family `{name}`"))
    })
}

fn dispatch(cli: &Cli) -> Result<()> {
    let config = resolve_config(cli)?;
    match &cli.command {
        Command::Train { .. } => {
            commands::train::run(&config)?;
        }
        Command::Evaluate { .. } => {
            commands::evaluate::run(&config)?;
        }
        Command::Compare {
            reference, alpha, ..
        } => {
            commands::compare::run(&config, reference, *alpha)?;
        }
        Command::Ablate { .. } => {
            commands::ablate::run(&config)?;
        }
        Command::GraphDump { function, dim } => {
            commands::graph_dump::run(&config, parse_family(function)?, *dim)?;
        }
        Command::InspectProgram { function, dim, .. } => {
            commands::inspect::run(&config, parse_family(function)?, *dim)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
