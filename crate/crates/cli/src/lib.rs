//! Configuration, planning and execution behind the `fracorlicz` binary.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod plan;
pub mod run;

pub use config::{parse_config, ConfigMap};
pub use plan::{Command, RunPlan};
pub use run::{execute, CliError, Outcome};
