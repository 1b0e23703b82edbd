//! Benchmark, evaluation, experiment orchestration and verdicts.

pub mod benchmark;
pub mod compare;
pub mod config;
pub mod experiment;

pub use benchmark::{evaluate, generate_benchmark, BenchmarkSet, Evaluation};
pub use compare::{compare, Verdict};
pub use config::{build_teacher, ExperimentConfig, HarnessConfig, TeacherConfig};
pub use experiment::{noise_std_calibration, run_experiment, Curve, ExperimentReport, RunSummary};
