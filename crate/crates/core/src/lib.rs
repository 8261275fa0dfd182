//! Action-candidate clipped double estimation.
//!
//! The crate has three layers:
//!
//! - [`estimators`]: single, double, clipped double and action-candidate
//!   clipped double estimators of `max_i E[X_i]`, plus bias statistics.
//! - [`bandit`], [`tabular_rl`], [`gridworld`], [`mdp`]: the internet-ads
//!   bandit simulation and the twin-table TD learning engine with its
//!   environments and a value-iteration oracle.
//! - [`harness`]: configs, seeded trial scheduling, aggregation and CSV
//!   output behind the `acdq` command-line tool.
//!
//! Trials run on a rayon pool when the default `parallel` feature is on and
//! sequentially otherwise; results do not depend on which.

pub mod bandit;
pub mod error;
pub mod estimators;
pub mod gridworld;
pub mod harness;
pub mod mdp;
pub mod parallel;
pub mod record;
pub mod seeding;
pub mod stats;
pub mod tabular_rl;

pub use error::{BanditError, EstimatorError, HarnessError, RlError};
pub use record::{Metric, RunRecord};
