//! Deterministic discrete-time simulator for UAV small-cell swarms that
//! position themselves to meet per-class data-rate targets of ground users.
//!
//! The crate is layered bottom-up:
//!
//! * [`model`]: vectors, UAV/user state, radio and control constants.
//! * [`config`]: TOML scenario files.
//! * [`radio`]: air-to-ground path loss, SINR and Shannon rate.
//! * [`kernels`]: potential-field control terms.
//! * [`orchestrator`]: the tick loop (association, rates, channel switching,
//!   failures, dynamics).
//! * [`metrics`], [`scenario`], [`sweep`], [`export`], [`cli`]: experiment
//!   harness.

pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod kernels;
pub mod metrics;
pub mod model;
pub mod orchestrator;
pub mod radio;
pub mod scenario;
pub mod sweep;

pub use config::{ControllerMode, FailureEvent, Region, ScenarioConfig, UserSpec};
pub use error::{Error, Result};
pub use metrics::{ClassMetrics, TickMetrics};
pub use model::{ControlGains, RadioParams, UavState, UserClass, UserState, Vec3};
pub use orchestrator::{run, run_with, RunOptions, RunOutput, WorldState};
pub use sweep::{run_sweep, SweepResult};
