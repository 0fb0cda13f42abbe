//! Benchmark harness for the sparse-recovery solvers in `rhtp-core`:
//! experiment configuration, deterministic Monte-Carlo sweeps over
//! Gaussian ensembles, canned protocol presets, and the `rhtp` CLI.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod presets;
