//! Experiment harness for block-sparse mixed l2/lp recovery: seeded
//! multi-trial sweeps mirroring the reference experiments at desk scale,
//! CSV output, and theory certification reports.

pub mod config;
pub mod experiment;
pub mod seed;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, summarize, theory_report_cmd, TrialRecord};
