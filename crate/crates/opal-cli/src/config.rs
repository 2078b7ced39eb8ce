//! Experiment configuration: a single TOML document with full round-trip
//! serialization, two built-in scale profiles, and flag overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use opal_core::env::Family;
use opal_core::train::TrainConfig;

use crate::error::{io_at, CliError, Result};

/// What the run is for; set by the subcommand, recorded in manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Meta-train a policy.
    Train,
    /// Evaluate a checkpoint against the baselines.
    Evaluate,
    /// Build a statistics report from existing run records.
    Compare,
    /// Train and compare the four ablation variants.
    Ablate,
    /// Dump one design-phase graph as CSV + JSON.
    GraphDump,
    /// Decode and print the program a checkpoint emits for one task.
    InspectProgram,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Mode::Train => "train",
            Mode::Evaluate => "evaluate",
            Mode::Compare => "compare",
            Mode::Ablate => "ablate",
            Mode::GraphDump => "graph_dump",
            Mode::InspectProgram => "inspect_program",
        };
        f.write_str(name)
    }
}

/// Built-in scale presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Minutes-scale settings: dims {10}, 10 runs, budget 1000·d,
    /// 500 training episodes.
    Desk,
    /// Full-scale settings: dims {10,30,50}, 20 runs, budget 10000·d,
    /// 10000 training episodes.
    Paper,
}

impl FromStr for Profile {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Profile> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(CliError::Config(format!(
                "field `profile`: unknown profile `{other}` (expected `desk` or `paper`)"
            ))),
        }
    }
}

/// Evaluation protocol settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Task families to evaluate, by name.
    pub functions: Vec<String>,
    /// Problem dimensions.
    pub dims: Vec<usize>,
    /// Independent trials per (function, dim).
    pub runs: usize,
    /// Evaluation budget per dimension: T = multiplier · d.
    pub budget_multiplier: usize,
    /// Fraction of T reserved for the design phase.
    pub design_ratio: f64,
}

impl EvalConfig {
    /// Parses the function names into families, reporting the first bad one.
    pub fn families(&self) -> Result<Vec<Family>> {
        self.functions
            .iter()
            .map(|name| {
                name.parse::<Family>().map_err(|_| {
                    CliError::Config(format!(
                        "field `eval.functions`: unknown function family `{name}`"
                    ))
                })
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.functions.is_empty() {
            return Err(CliError::Config(
                "field `eval.functions`: need at least one function".into(),
            ));
        }
        self.families()?;
        if self.dims.is_empty() || self.dims.iter().any(|&d| d == 0) {
            return Err(CliError::Config(
                "field `eval.dims`: need at least one nonzero dimension".into(),
            ));
        }
        if self.runs == 0 {
            return Err(CliError::Config(
                "field `eval.runs`: need at least one run".into(),
            ));
        }
        if self.budget_multiplier == 0 {
            return Err(CliError::Config(
                "field `eval.budget_multiplier`: must be positive".into(),
            ));
        }
        if !(self.design_ratio > 0.0 && self.design_ratio < 1.0) {
            return Err(CliError::Config(format!(
                "field `eval.design_ratio`: {} is outside (0, 1)",
                self.design_ratio
            )));
        }
        Ok(())
    }
}

/// Input and output locations.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PathsConfig {
    /// Checkpoint to read (evaluate, ablate-reuse, inspect, resume).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_in: Option<PathBuf>,
    /// Checkpoint to write (train, ablate).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_out: Option<PathBuf>,
    /// Run-record CSV to write (evaluate) or read (compare).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records_out: Option<PathBuf>,
    /// Report file to write (compare, ablate).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_out: Option<PathBuf>,
    /// Directory for run artifacts without explicit paths.
    pub out_dir: PathBuf,
}

/// The complete configuration of one CLI invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Operation the run performs.
    pub mode: Mode,
    /// Scale preset the remaining defaults came from.
    pub profile: Profile,
    /// Master seed for the whole run.
    pub seed: u64,
    /// Worker threads for evaluation fan-out (0 = all cores).
    pub jobs: usize,
    /// Meta-training settings.
    pub train: TrainConfig,
    /// Evaluation protocol settings.
    pub eval: EvalConfig,
    /// File locations.
    pub paths: PathsConfig,
}

impl ExperimentConfig {
    /// The full default configuration for a profile.
    pub fn for_profile(profile: Profile) -> ExperimentConfig {
        let (dims, runs, multiplier, episodes) = match profile {
            Profile::Desk => (vec![10usize], 10usize, 1000usize, 500usize),
            Profile::Paper => (vec![10, 30, 50], 20, 10_000, 10_000),
        };
        ExperimentConfig {
            mode: Mode::Train,
            profile,
            seed: 0,
            jobs: 0,
            train: TrainConfig {
                episodes,
                dims: dims.clone(),
                ..TrainConfig::default()
            },
            eval: EvalConfig {
                functions: vec![
                    "sphere".into(),
                    "rastrigin".into(),
                    "ackley".into(),
                    "rosenbrock".into(),
                    "hybrid_blend".into(),
                    "composition_blend".into(),
                ],
                dims,
                runs,
                budget_multiplier: multiplier,
                design_ratio: 0.2,
            },
            paths: PathsConfig {
                out_dir: PathBuf::from("runs"),
                ..PathsConfig::default()
            },
        }
    }

    /// Loads a TOML file on top of its profile's defaults: the file may
    /// set any subset of keys; everything else keeps the profile value.
    /// A `forced` profile wins over the file's own `profile` key.
    pub fn load(path: &Path, forced: Option<Profile>) -> Result<ExperimentConfig> {
        let text = io_at(path, std::fs::read_to_string(path))?;
        Self::from_toml_with_profile(&text, forced)
    }

    /// Parses TOML text on top of profile defaults (see [`Self::load`]).
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        Self::from_toml_with_profile(text, None)
    }

    /// [`Self::from_toml`] with an optional profile override.
    pub fn from_toml_with_profile(
        text: &str,
        forced: Option<Profile>,
    ) -> Result<ExperimentConfig> {
        let mut overlay: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("config file is not valid TOML: {e}")))?;

        // Resolve the profile first so partial files inherit the right base.
        let profile = match (forced, overlay.get("profile")) {
            (Some(profile), _) => profile,
            (None, Some(toml::Value::String(name))) => name.parse::<Profile>()?,
            (None, Some(other)) => {
                return Err(CliError::Config(format!(
                    "field `profile`: expected a string, got {other}"
                )))
            }
            (None, None) => Profile::Desk,
        };
        overlay.remove("profile");

        let defaults = toml::Value::try_from(Self::for_profile(profile))
            .map_err(|e| CliError::Config(format!("internal default serialization: {e}")))?;
        let merged = merge_toml(defaults, toml::Value::Table(overlay));
        merged
            .try_into()
            .map_err(|e| CliError::Config(format!("config file: {e}")))
    }

    /// Serializes the configuration as a TOML document.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("config serialization: {e}")))
    }

    /// Checks every invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        self.train.validate().map_err(CliError::Core)?;
        self.eval.validate()?;
        if self.mode == Mode::Evaluate || self.mode == Mode::InspectProgram {
            if self.paths.checkpoint_in.is_none() {
                return Err(CliError::Config(format!(
                    "field `paths.checkpoint_in`: required for mode `{}`",
                    self.mode
                )));
            }
        }
        if self.mode == Mode::Compare && self.paths.records_out.is_none() {
            return Err(CliError::Config(
                "field `paths.records_out`: required for mode `compare` (the records to read)"
                    .into(),
            ));
        }
        Ok(())
    }

    /// The evaluation budget for dimension `d`: multiplier · d.
    pub fn eval_budget(&self, dim: usize) -> usize {
        self.eval.budget_multiplier * dim
    }

    /// Resolved path helpers: explicit setting or a default under out_dir.
    pub fn checkpoint_out(&self) -> PathBuf {
        self.paths
            .checkpoint_out
            .clone()
            .unwrap_or_else(|| self.paths.out_dir.join("checkpoint.json"))
    }

    /// Records CSV location (explicit or default).
    pub fn records_out(&self) -> PathBuf {
        self.paths
            .records_out
            .clone()
            .unwrap_or_else(|| self.paths.out_dir.join("records.csv"))
    }

    /// Report location (explicit or default).
    pub fn report_out(&self) -> PathBuf {
        self.paths
            .report_out
            .clone()
            .unwrap_or_else(|| self.paths.out_dir.join("report.txt"))
    }

    /// Manifest location, derived from the output directory.
    pub fn manifest_out(&self) -> PathBuf {
        self.paths.out_dir.join("manifest.json")
    }
}

/// Recursively overlays `over` onto `base`; tables merge key-by-key, every
/// other value type is replaced wholesale.
fn merge_toml(base: toml::Value, over: toml::Value) -> toml::Value {
    match (base, over) {
        (toml::Value::Table(mut b), toml::Value::Table(o)) => {
            for (key, value) in o {
                match b.remove(&key) {
                    Some(existing) => {
                        b.insert(key, merge_toml(existing, value));
                    }
                    None => {
                        b.insert(key, value);
                    }
                }
            }
            toml::Value::Table(b)
        }
        (_, over) => over,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_profile_matches_documented_scale() {
        let config = ExperimentConfig::for_profile(Profile::Desk);
        assert_eq!(config.eval.dims, vec![10]);
        assert_eq!(config.eval.runs, 10);
        assert_eq!(config.eval.budget_multiplier, 1000);
        assert_eq!(config.train.episodes, 500);
    }

    #[test]
    fn paper_profile_matches_documented_scale() {
        let config = ExperimentConfig::for_profile(Profile::Paper);
        assert_eq!(config.eval.dims, vec![10, 30, 50]);
        assert_eq!(config.eval.runs, 20);
        assert_eq!(config.eval.budget_multiplier, 10_000);
        assert_eq!(config.train.episodes, 10_000);
    }

    #[test]
    fn toml_round_trips_exactly() {
        let mut config = ExperimentConfig::for_profile(Profile::Paper);
        config.seed = 99;
        config.paths.checkpoint_in = Some(PathBuf::from("w.json"));
        let text = config.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn partial_file_inherits_profile_defaults() {
        let text = "profile = \"paper\"\nseed = 7\n[eval]\nruns = 3\n";
        let config = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.eval.runs, 3);
        // Untouched keys come from the paper profile, not from desk.
        assert_eq!(config.eval.budget_multiplier, 10_000);
        assert_eq!(config.train.episodes, 10_000);
    }

    #[test]
    fn missing_profile_defaults_to_desk() {
        let config = ExperimentConfig::from_toml("seed = 1\n").unwrap();
        assert_eq!(config.profile, Profile::Desk);
        assert_eq!(config.eval.budget_multiplier, 1000);
    }

    #[test]
    fn bad_design_ratio_is_named_in_the_error() {
        let mut config = ExperimentConfig::for_profile(Profile::Desk);
        config.train.design_ratio = 1.5;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("design_ratio"), "{err}");
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
    }

    #[test]
    fn bad_eval_ratio_is_named_in_the_error() {
        let mut config = ExperimentConfig::for_profile(Profile::Desk);
        config.eval.design_ratio = 0.0;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("eval.design_ratio"), "{err}");
    }

    #[test]
    fn unknown_function_name_is_rejected() {
        let mut config = ExperimentConfig::for_profile(Profile::Desk);
        config.eval.functions = vec!["warp_field".into()];
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("warp_field"), "{err}");
    }

    #[test]
    fn eval_budget_is_multiplier_times_dim() {
        let config = ExperimentConfig::for_profile(Profile::Paper);
        assert_eq!(config.eval_budget(30), 300_000);
    }

    #[test]
    fn unknown_profile_is_rejected() {
        let err = ExperimentConfig::from_toml("profile = \"galaxy\"\n").unwrap_err();
        assert!(err.to_string().contains("galaxy"), "{err}");
    }
}
