//! Controllers for linear time-varying systems: LQR, the DAC policy class, GPC and the
//! MARC meta-controller, all behind the [`Controller`] act/observe interface.

mod baseline;
mod controller;
mod cost;
mod dac;
mod gpc;
mod lqr;
mod marc;
mod memory;

pub use baseline::{FixedLqr, Stabilizing, ZeroController};
pub use controller::{Controller, Observation};
pub use cost::{normalize_cost, QuadraticCost, StageCost, ZeroCost};
pub use dac::{dac_action, proxy_loss, proxy_state, DacLearner, DacParams, History};
pub use gpc::{GainMode, Gpc, GpcConfig};
pub use lqr::{lqr_gain, Riccati, Stabilizer};
pub use marc::{Marc, MarcConfig, MarcMode, MarcRate, Selection};
pub use memory::{memory_epsilon, proxy_rollout};
