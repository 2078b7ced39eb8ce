//! # opal-core
//!
//! OPAL synthesizes a small, instance-specific optimizer for each black-box
//! minimization problem it faces instead of committing to one general-purpose
//! metaheuristic. A run proceeds in five stages:
//!
//! 1. **Probe** — a short differential-evolution design phase spends a fixed
//!    fraction of the evaluation budget exploring the landscape and records
//!    every evaluated point ([`ops::design_phase`]).
//! 2. **Graph** — the probe trajectory is subsampled and turned into a
//!    k-nearest-neighbor graph whose nodes carry normalized fitness, rank,
//!    time, and geometry features ([`graph::build_graph`]).
//! 3. **Encode** — a small graph neural network pools the node features into
//!    a fixed-size landscape embedding ([`policy`]).
//! 4. **Decode** — three categorical heads read the embedding and emit a
//!    three-call operator program drawn from an eight-operator vocabulary
//!    ([`policy::decode`], [`ops::OperatorToken`]).
//! 5. **Execute** — the program runs cyclically under strict
//!    function-evaluation accounting until the remaining budget is spent
//!    ([`ops::execute_program`]).
//!
//! The policy is meta-trained across random task instances with a
//! score-function gradient estimator, an exponential-moving-average reward
//! baseline, an entropy bonus, and an auxiliary landscape-classification head
//! ([`train`]). Benchmarking utilities provide the task generator
//! ([`env`]), baseline optimizers ([`ops::de_baseline`],
//! [`ops::pso_baseline`]), and nonparametric comparison statistics
//! ([`stats`]).
//!
//! All randomness flows through explicitly seeded generators; identical seeds
//! and configurations reproduce identical runs bit for bit on noise-free
//! tasks.

#![warn(missing_docs)]

pub mod env;
pub mod error;
pub mod graph;
pub mod ops;
pub mod policy;
pub mod stats;
pub mod train;

pub use error::{CoreError, Result};
