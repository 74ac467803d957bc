//! Adaptive-regret online learning with memory, and its use for online control
//! of time-varying linear dynamical systems.
//!
//! The crate is layered bottom-up:
//!
//! * [`oco`] decision sets, losses with memory, projected OGD learners and trajectory metrics.
//! * [`experts`] the shrinking expert pools (full and working-set based), epoch schedule and
//!   the lower-bound adversary.
//! * [`lds`] linear time-varying systems, disturbance generators and stability checks.
//! * [`control`] DAC policies, GPC, LQR and the MARC meta-controller.
//! * [`nonlinear`] the pendulum benchmark and an iLQR planner.
//! * [`harness`] configs, seeded runs, comparators, reports and file output.

pub mod control;
pub mod error;
pub mod experts;
pub mod harness;
pub mod lds;
pub mod linalg;
pub mod nonlinear;
pub mod oco;

pub use error::{Error, Result};
