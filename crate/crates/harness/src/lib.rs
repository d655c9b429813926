//! Experiment harness: configuration, sweeps, Monte Carlo trials, heatmaps,
//! result tables and the acceptance checks.

pub mod check;
pub mod config;
pub mod heatmap;
pub mod sweep;
pub mod table;
pub mod trials;
