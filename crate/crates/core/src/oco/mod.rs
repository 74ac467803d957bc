//! Online convex optimization with memory: decision sets, losses, projected OGD and the
//! trajectory metrics consumed by the expert and control layers.

mod loss;
mod metrics;
mod ogd;
mod regret;
mod set;

pub use loss::{LinearLoss, MemoryLoss, QuadraticLoss, ShiftPenalized, WindowMean};
pub use metrics::{action_shift, action_shift_on, memory_window, stability_gap, Trajectory};
pub use ogd::{ogd_step, Ogd, StepSchedule};
pub use regret::{best_fixed_point, grid_search_1d, quadratic_interval_regrets, IntervalGrid, QuadraticSums};
pub use set::{project_l1_ball, DecisionSet};
