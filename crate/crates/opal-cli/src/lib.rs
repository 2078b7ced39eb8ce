//! Command-line front end for instance-adaptive optimizer synthesis.
//!
//! The binary (`opal`) wires six subcommands over this library: `train`,
//! `evaluate`, `compare`, `ablate`, `graph-dump`, and `inspect-program`.
//! Every run resolves one [`config::ExperimentConfig`] (profile defaults,
//! then config file, then flags), performs its work, and records a
//! [`manifest::RunManifest`] plus a reloadable TOML snapshot of the
//! resolved configuration next to its outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
