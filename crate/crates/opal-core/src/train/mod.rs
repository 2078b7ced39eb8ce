//! The meta-training loop: sample a task, probe it, encode the probe
//! trajectory, decode a program stochastically, execute it, convert the
//! improvement into a reward, and take one baseline-corrected policy
//! gradient step per episode.

mod adam;

pub use adam::{clip_gradient, Adam};

use std::fs::File;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{
    sample_task_filtered, seeded_stream, Environment, Family, TaskPool, TaskSpec,
    DEFAULT_BUDGET_PER_DIM, GENERATOR_DIMS,
};
use crate::error::{CoreError, Result};
use crate::graph::{build_graph, GraphConfig, TrajectoryGraph, FEATURE_COUNT};
use crate::ops::{
    design_phase, execute_program, OperatorToken, RunTrace, DEFAULT_DE_CR, DEFAULT_DE_F,
    DEFAULT_POPULATION,
};
use crate::policy::{
    decode, forward, loss_and_gradient, Checkpoint, DecodeMode, PolicyArch, PolicyOutput,
    PolicyParams, TrainerState,
};

/// Additive constant guarding the logarithm in the reward.
pub const REWARD_EPSILON: f64 = 1e-12;

/// RNG sub-stream reserved for parameter initialization; episodes use
/// streams 1..=episodes.
const STREAM_PARAMS: u64 = 0;

/// Logarithmic improvement of the final best over the design-phase best.
///
/// When the optimum's value offset is known it is subtracted first so the
/// ratio measures true error; otherwise both arguments clamp to zero from
/// below. Either way the arguments are clamped nonnegative before adding
/// `epsilon`, which keeps the logarithm finite even under noisy
/// evaluations that dip below the known offset.
pub fn reward(f_design_best: f64, f_final_best: f64, known_shift: Option<f64>, epsilon: f64) -> f64 {
    debug_assert!(epsilon > 0.0);
    let shift = known_shift.unwrap_or(0.0);
    let design = (f_design_best - shift).max(0.0);
    let finals = (f_final_best - shift).max(0.0);
    ((design + epsilon) / (finals + epsilon)).log10()
}

/// Exponential-moving-average baseline update: the first episode adopts
/// the reward, later episodes blend with factor `smoothing`.
pub fn update_baseline(baseline: f64, reward: f64, episode_index: usize, smoothing: f64) -> f64 {
    debug_assert!(episode_index >= 1);
    if episode_index == 1 {
        reward
    } else {
        smoothing * baseline + (1.0 - smoothing) * reward
    }
}

/// Which adjacency the graph builder produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    /// Symmetric k-nearest-neighbor adjacency with self-loops.
    Knn,
    /// Identity adjacency: nodes are encoded independently.
    Identity,
}

impl GraphMode {
    /// Name used in logs and manifests.
    pub fn name(self) -> &'static str {
        match self {
            GraphMode::Knn => "knn",
            GraphMode::Identity => "identity",
        }
    }
}

impl std::fmt::Display for GraphMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GraphMode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<GraphMode> {
        match s {
            "knn" => Ok(GraphMode::Knn),
            "identity" => Ok(GraphMode::Identity),
            other => Err(CoreError::UnknownToken(other.to_string())),
        }
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of episodes.
    pub episodes: usize,
    /// Fraction of each task's budget spent probing.
    pub design_ratio: f64,
    /// Entropy bonus coefficient (β).
    pub entropy_weight: f64,
    /// Auxiliary classification loss weight (λ).
    pub aux_weight: f64,
    /// EMA smoothing factor for the reward baseline (α).
    pub baseline_smoothing: f64,
    /// Optimizer step size.
    pub learning_rate: f64,
    /// Maximum gradient norm.
    pub clip_norm: f64,
    /// Master seed; episode `e` derives its own stream from it.
    pub seed: u64,
    /// Which task families the sampler draws from.
    pub task_pool: TaskPool,
    /// Optional explicit family list overriding the pool (smoke setups).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<Family>>,
    /// Dimensions the sampler draws from.
    pub dims: Vec<usize>,
    /// Budget per dimension for sampled tasks.
    pub budget_per_dim: usize,
    /// Adjacency mode for the trajectory graph.
    pub graph_mode: GraphMode,
    /// Subsampling / k-NN settings.
    pub graph: GraphConfig,
    /// Encoder hidden width.
    pub hidden_dim: usize,
    /// Population size for the probe and the executed program.
    pub population: usize,
    /// Write a checkpoint every this many episodes (0 = final only).
    pub checkpoint_every: usize,
    /// Directory for checkpoints (none = keep everything in memory).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 10_000,
            design_ratio: 0.2,
            entropy_weight: 0.01,
            aux_weight: 0.3,
            baseline_smoothing: 0.9,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            seed: 0,
            task_pool: TaskPool::Mixed,
            families: None,
            dims: GENERATOR_DIMS.to_vec(),
            budget_per_dim: DEFAULT_BUDGET_PER_DIM,
            graph_mode: GraphMode::Knn,
            graph: GraphConfig::default(),
            hidden_dim: 64,
            population: DEFAULT_POPULATION,
            checkpoint_every: 500,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    /// Rejects out-of-range hyperparameters.
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(CoreError::InvalidConfig {
                field: "episodes",
                message: "need at least one episode".into(),
            });
        }
        if !(self.design_ratio > 0.0 && self.design_ratio < 1.0) {
            return Err(CoreError::InvalidConfig {
                field: "design_ratio",
                message: format!("must lie in (0,1), got {}", self.design_ratio),
            });
        }
        if !(0.0..1.0).contains(&self.baseline_smoothing) {
            return Err(CoreError::InvalidConfig {
                field: "baseline_smoothing",
                message: format!("must lie in [0,1), got {}", self.baseline_smoothing),
            });
        }
        for (field, value) in [
            ("entropy_weight", self.entropy_weight),
            ("aux_weight", self.aux_weight),
            ("learning_rate", self.learning_rate),
            ("clip_norm", self.clip_norm),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(CoreError::InvalidConfig {
                    field,
                    message: format!("must be finite and nonnegative, got {value}"),
                });
            }
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d == 0) {
            return Err(CoreError::InvalidConfig {
                field: "dims",
                message: "need a nonempty list of positive dimensions".into(),
            });
        }
        if let Some(families) = &self.families {
            if families.is_empty() {
                return Err(CoreError::InvalidConfig {
                    field: "families",
                    message: "explicit family list must be nonempty".into(),
                });
            }
        }
        if self.budget_per_dim == 0 {
            return Err(CoreError::InvalidConfig {
                field: "budget_per_dim",
                message: "budget multiplier must be positive".into(),
            });
        }
        if self.hidden_dim == 0 {
            return Err(CoreError::InvalidConfig {
                field: "hidden_dim",
                message: "hidden width must be positive".into(),
            });
        }
        if self.population < 4 {
            return Err(CoreError::InvalidConfig {
                field: "population",
                message: "the probe's donor sampling needs a population of at least 4".into(),
            });
        }
        self.graph.validate()?;
        Ok(())
    }

    /// The families the sampler actually draws from.
    pub fn effective_families(&self) -> Vec<Family> {
        match &self.families {
            Some(list) => list.clone(),
            None => self.task_pool.families().to_vec(),
        }
    }

    /// The graph configuration with the adjacency mode applied.
    pub fn effective_graph(&self) -> GraphConfig {
        let mut graph = self.graph.clone();
        graph.identity_adjacency = matches!(self.graph_mode, GraphMode::Identity);
        graph
    }
}

/// Everything produced by one probe-encode-decode-execute pass on a
/// single environment.
#[derive(Debug)]
pub struct Rollout {
    /// Decoded program and its sampling statistics.
    pub output: PolicyOutput,
    /// The graph the decision was based on.
    pub graph: TrajectoryGraph,
    /// Best fitness at the end of the design phase.
    pub f_design_best: f64,
    /// Best fitness after the program ran.
    pub f_final_best: f64,
    /// Evaluations consumed by the design phase.
    pub design_fes: usize,
    /// Execution trace of the decoded program.
    pub trace: RunTrace,
    /// Auxiliary head's predicted class index.
    pub aux_prediction: usize,
    /// Nominal design budget ⌊ratio·T⌋.
    pub t_design: usize,
    /// Nominal run budget T − ⌊ratio·T⌋.
    pub t_run: usize,
}

/// Per-rollout knobs shared by training and evaluation.
#[derive(Debug, Clone)]
pub struct RolloutConfig {
    /// Fraction of the environment budget spent probing.
    pub design_ratio: f64,
    /// Probe and program population size.
    pub population: usize,
    /// Graph construction settings.
    pub graph: GraphConfig,
    /// Token selection mode.
    pub decode_mode: DecodeMode,
}

impl RolloutConfig {
    /// Rollout settings implied by a training configuration.
    pub fn from_train(config: &TrainConfig, decode_mode: DecodeMode) -> RolloutConfig {
        RolloutConfig {
            design_ratio: config.design_ratio,
            population: config.population,
            graph: config.effective_graph(),
            decode_mode,
        }
    }
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig {
            design_ratio: 0.2,
            population: DEFAULT_POPULATION,
            graph: GraphConfig::default(),
            decode_mode: DecodeMode::Greedy,
        }
    }
}

/// Splits a total budget into the probe share ⌊ratio·T⌋ and the remainder.
pub fn split_budget(total: usize, design_ratio: f64) -> (usize, usize) {
    // The tiny additive guard keeps exact products like 0.2·10000 from
    // flooring to 1999 due to binary rounding.
    let t_design = (design_ratio * total as f64 + 1e-9).floor() as usize;
    let t_design = t_design.min(total);
    (t_design, total - t_design)
}

/// Probes `env`, encodes the trajectory, decodes a program, and executes
/// it on the remaining budget.
pub fn rollout(
    env: &mut Environment,
    params: &PolicyParams,
    config: &RolloutConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Rollout> {
    let (t_design, t_run) = split_budget(env.budget(), config.design_ratio);
    let design = design_phase(
        env,
        config.population,
        DEFAULT_DE_F,
        DEFAULT_DE_CR,
        t_design,
        rng,
    );
    let graph = build_graph(
        env.trajectory_points(),
        env.trajectory_fitness(),
        &config.graph,
        rng,
    )?;
    let pass = forward(graph.h.view(), graph.a.view(), params)?;
    let output = decode(&pass, config.decode_mode, rng);
    let aux_prediction = pass.aux_prediction();
    let exec_seed = rng.random::<u64>();
    let trace = execute_program(env, design.state, &output.program, t_run, exec_seed);
    Ok(Rollout {
        output,
        graph,
        f_design_best: design.f_design_best,
        f_final_best: trace.final_best(),
        design_fes: design.fes_used,
        trace,
        aux_prediction,
        t_design,
        t_run,
    })
}

/// One line of the episode log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// 1-based episode index.
    pub episode: usize,
    /// The sampled task.
    pub task: TaskSpec,
    /// Logarithmic improvement reward.
    pub reward: f64,
    /// Baseline value the advantage was computed against (pre-update).
    pub baseline: f64,
    /// `reward - baseline`.
    pub advantage: f64,
    /// Tokens of the sampled program, in phase order.
    pub tokens: Vec<OperatorToken>,
    /// Sum of per-phase categorical entropies at decode time.
    pub entropy: f64,
    /// Scalar training loss.
    pub loss: f64,
    /// Gradient norm after clipping.
    pub grad_norm: f64,
    /// Best fitness when the probe ended.
    pub f_design_best: f64,
    /// Best fitness when the program finished.
    pub f_final_best: f64,
    /// True when numerical failure aborted the update for this episode.
    pub flagged: bool,
}

/// State carried across a resumed run.
#[derive(Debug, Clone)]
pub struct ResumeState {
    /// Parameters to continue from.
    pub params: PolicyParams,
    /// Episodes already completed.
    pub episode: usize,
    /// Baseline value at the restart point.
    pub baseline: f64,
    /// Whether any episode has initialized the baseline yet.
    pub baseline_initialized: bool,
}

impl ResumeState {
    /// Restores resume state from a checkpoint.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<ResumeState> {
        let params = ckpt.restore_params()?;
        let trainer = ckpt.trainer.unwrap_or(TrainerState {
            baseline: 0.0,
            baseline_initialized: false,
        });
        Ok(ResumeState {
            params,
            episode: ckpt.episode,
            baseline: trainer.baseline,
            baseline_initialized: trainer.baseline_initialized,
        })
    }
}

/// Result of a training run.
#[derive(Debug)]
pub struct TrainOutcome {
    /// Final parameters.
    pub params: PolicyParams,
    /// Records for the episodes executed in this call.
    pub records: Vec<EpisodeRecord>,
    /// Final baseline value.
    pub baseline: f64,
    /// Whether the baseline was ever initialized.
    pub baseline_initialized: bool,
    /// Checkpoint files written, in order.
    pub checkpoints: Vec<PathBuf>,
}

/// Runs the full training loop from a fresh initialization.
pub fn train(config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(config, None, |_| {})
}

/// Runs the training loop, optionally resuming, invoking `on_episode`
/// after each episode record is finalized.
pub fn train_with(
    config: &TrainConfig,
    resume: Option<ResumeState>,
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    let arch = PolicyArch {
        input_dim: FEATURE_COUNT,
        hidden_dim: config.hidden_dim,
    };
    let (mut params, start_episode, mut baseline, mut baseline_initialized) = match resume {
        Some(state) => {
            if state.params.arch != arch {
                return Err(CoreError::Checkpoint(format!(
                    "resume parameters use {:?} but the config asks for {:?}",
                    state.params.arch, arch
                )));
            }
            (
                state.params,
                state.episode + 1,
                state.baseline,
                state.baseline_initialized,
            )
        }
        None => {
            let mut init_rng = seeded_stream(config.seed, STREAM_PARAMS);
            (PolicyParams::init(arch, &mut init_rng)?, 1, 0.0, false)
        }
    };
    if start_episode > config.episodes + 1 {
        return Err(CoreError::InvalidConfig {
            field: "episodes",
            message: format!(
                "resume point {} lies beyond the requested {} episodes",
                start_episode - 1,
                config.episodes
            ),
        });
    }

    let families = config.effective_families();
    let rollout_config = RolloutConfig::from_train(config, DecodeMode::Sample);
    let mut adam = Adam::new(arch.param_count(), config.learning_rate);
    let mut records = Vec::with_capacity(config.episodes + 1 - start_episode);
    let mut checkpoints = Vec::new();

    for episode in start_episode..=config.episodes {
        // Every episode draws from its own stream of the master seed, so a
        // run is reproducible regardless of how it is segmented.
        let mut rng = seeded_stream(config.seed, episode as u64);
        let task = sample_task_filtered(&mut rng, &families, &config.dims, config.budget_per_dim);
        let mut env = task.build();
        let b_pre = baseline;

        let mut record = EpisodeRecord {
            episode,
            task,
            reward: f64::NAN,
            baseline: b_pre,
            advantage: f64::NAN,
            tokens: Vec::new(),
            entropy: f64::NAN,
            loss: f64::NAN,
            grad_norm: 0.0,
            f_design_best: f64::NAN,
            f_final_best: f64::NAN,
            flagged: true,
        };

        let label = record.task.label;
        match episode_step(
            config,
            &rollout_config,
            &mut env,
            &params,
            b_pre,
            label,
            &mut rng,
        ) {
            Ok(step) => {
                record.reward = step.reward;
                record.advantage = step.advantage;
                record.tokens = step.tokens;
                record.entropy = step.entropy;
                record.loss = step.loss;
                record.f_design_best = step.f_design_best;
                record.f_final_best = step.f_final_best;
                let mut grad = step.gradient;
                record.grad_norm = clip_gradient(&mut grad, config.clip_norm);
                let delta = adam.step(&grad);
                params.add_flat(&delta)?;
                record.flagged = false;
                baseline = if baseline_initialized {
                    update_baseline(baseline, step.reward, 2, config.baseline_smoothing)
                } else {
                    step.reward
                };
                baseline_initialized = true;
            }
            Err(CoreError::NonFinite { .. }) => {
                // Numerical failure: keep the parameters and baseline as
                // they were, flag the episode, and move on.
                record.tokens = Vec::new();
                record.loss = f64::NAN;
                record.flagged = true;
            }
            Err(other) => return Err(other),
        }

        on_episode(&record);
        records.push(record);

        let due = config.checkpoint_every > 0 && episode % config.checkpoint_every == 0;
        if due {
            if let Some(dir) = &config.checkpoint_dir {
                let path = dir.join(format!("checkpoint_ep{episode}.json"));
                write_checkpoint(&params, config, episode, baseline, baseline_initialized, &path)?;
                checkpoints.push(path);
            }
        }
    }

    if let Some(dir) = &config.checkpoint_dir {
        let path = dir.join("checkpoint_final.json");
        write_checkpoint(
            &params,
            config,
            config.episodes,
            baseline,
            baseline_initialized,
            &path,
        )?;
        checkpoints.push(path);
    }

    Ok(TrainOutcome {
        params,
        records,
        baseline,
        baseline_initialized,
        checkpoints,
    })
}

struct EpisodeStep {
    reward: f64,
    advantage: f64,
    tokens: Vec<OperatorToken>,
    entropy: f64,
    loss: f64,
    gradient: Vec<f64>,
    f_design_best: f64,
    f_final_best: f64,
}

/// The fallible middle of an episode: rollout, reward, loss, gradient.
#[allow(clippy::too_many_arguments)]
fn episode_step(
    config: &TrainConfig,
    rollout_config: &RolloutConfig,
    env: &mut Environment,
    params: &PolicyParams,
    baseline: f64,
    label: crate::env::LandscapeLabel,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeStep> {
    let roll = rollout(env, params, rollout_config, rng)?;
    let r = reward(
        roll.f_design_best,
        roll.f_final_best,
        env.known_shift(),
        REWARD_EPSILON,
    );
    let advantage = r - baseline;
    let (loss, gradient) = loss_and_gradient(
        roll.graph.h.view(),
        roll.graph.a.view(),
        params,
        &roll.output.tokens,
        advantage,
        config.entropy_weight,
        config.aux_weight,
        Some(label),
    )?;
    Ok(EpisodeStep {
        reward: r,
        advantage,
        tokens: roll.output.tokens,
        entropy: roll.output.entropy,
        loss,
        gradient,
        f_design_best: roll.f_design_best,
        f_final_best: roll.f_final_best,
    })
}

fn write_checkpoint(
    params: &PolicyParams,
    config: &TrainConfig,
    episode: usize,
    baseline: f64,
    baseline_initialized: bool,
    path: &Path,
) -> Result<()> {
    Checkpoint::new(params, config.seed, episode)
        .with_trainer(TrainerState {
            baseline,
            baseline_initialized,
        })
        .save(path)
}

/// Streams episode records to a CSV file.
pub struct EpisodeLogWriter {
    inner: csv::Writer<File>,
}

impl EpisodeLogWriter {
    const HEADER: [&'static str; 13] = [
        "episode",
        "family",
        "dim",
        "reward",
        "baseline",
        "advantage",
        "loss",
        "grad_norm",
        "tokens",
        "f_design_best",
        "f_final_best",
        "task_seed",
        "flagged",
    ];

    /// Creates the file and writes the header row.
    pub fn create(path: &Path) -> Result<EpisodeLogWriter> {
        let mut inner = csv::Writer::from_path(path)?;
        inner.write_record(Self::HEADER)?;
        Ok(EpisodeLogWriter { inner })
    }

    /// Opens the file for appending; a fresh or empty file gets the header,
    /// an existing log continues after its last row.
    pub fn open_append(path: &Path) -> Result<EpisodeLogWriter> {
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        let fresh = file.metadata()?.len() == 0;
        let mut inner = csv::Writer::from_writer(file);
        if fresh {
            inner.write_record(Self::HEADER)?;
        }
        Ok(EpisodeLogWriter { inner })
    }

    /// Appends one record.
    pub fn append(&mut self, record: &EpisodeRecord) -> Result<()> {
        let tokens = record
            .tokens
            .iter()
            .map(|t| t.name())
            .collect::<Vec<_>>()
            .join(" ");
        self.inner.write_record([
            record.episode.to_string(),
            record.task.family.name().to_string(),
            record.task.dim.to_string(),
            record.reward.to_string(),
            record.baseline.to_string(),
            record.advantage.to_string(),
            record.loss.to_string(),
            record.grad_norm.to_string(),
            tokens,
            record.f_design_best.to_string(),
            record.f_final_best.to_string(),
            record.task.seed.to_string(),
            record.flagged.to_string(),
        ])?;
        Ok(())
    }

    /// Flushes buffered rows to disk.
    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Writes a whole episode log in one call.
pub fn write_episode_log(records: &[EpisodeRecord], path: &Path) -> Result<()> {
    let mut writer = EpisodeLogWriter::create(path)?;
    for record in records {
        writer.append(record)?;
    }
    writer.flush()
}
