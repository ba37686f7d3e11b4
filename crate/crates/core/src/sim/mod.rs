//! Simulated tactile localization experiments.
//!
//! A run hides a ground-truth pose, touches the object along candidate rays,
//! registers the collected points after every touch and logs pose errors.

pub mod config;
pub mod experiment;
pub mod fixtures;
pub mod metrics;
pub mod output;
pub mod scene;

pub use config::{CriterionSpec, ExperimentConfig, Policy, SceneSource};
pub use experiment::{run_experiment, run_experiment_observed, run_sweep, Model, RunFailure, SweepResult, TouchRecord};
pub use metrics::{adi_metric, adi_metric_indexed, pose_errors, PoseErrors};
pub use output::{summarize, write_csv, write_summary, Stats, Summary};
pub use scene::{execute_touch, make_scene, GroundTruth, RunStreams};
