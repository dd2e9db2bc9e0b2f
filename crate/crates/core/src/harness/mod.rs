//! Experiment execution: seeded evaluation of a policy, arrival-rate sweeps,
//! CSV output and the built-in self-test.

mod csv;
mod eval;
pub mod selftest;
mod sweep;

pub use self::csv::{emit_csv, format_sig6, parse_csv, write_csv, write_trajectory, CSV_HEADER, TRAJECTORY_HEADER};
pub use eval::{episode_records, load_policy, run_episode, run_eval, run_eval_with, EvalRun, ResultRow};
pub use sweep::{checkpoint_path, run_sweep, train_policy, SweepSpec, DEFAULT_I_MAX_GRID};

pub use crate::config::{load_config, SimConfig, TrainConfig};
