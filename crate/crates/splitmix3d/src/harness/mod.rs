//! Batch harness: the TOML experiment config, task dispatch, and artifact
//! persistence with byte-identical reruns for identical config and seed.

pub mod config;
pub mod run;

pub use config::{ConfigError, Dynamics, FieldsSpec, OutputSpec, ResolvedConfig, TaskSpec,
    TASK_NAMES};
pub use run::{run, Overrides, RunError, RunOutcome, EXIT_DIAGNOSTIC, EXIT_INVALID, EXIT_OK};
