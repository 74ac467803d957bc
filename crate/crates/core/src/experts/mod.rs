//! Shrinking expert pools for adaptive regret.
//!
//! [`ExpertPool`] keeps every expert; [`EffPool`] keeps only the working set and folds the
//! not-yet-born and expired experts into two aggregate masses. Both expose the same
//! select-then-update round structure and consume their random stream identically.

mod adversary;
mod eff;
mod lifetimes;
mod marginal;
mod meta;
mod pool;
mod schedule;

pub use adversary::lower_bound_adversary;
pub use eff::{EffPool, Member};
pub use lifetimes::{working_set, Lifetimes};
pub use marginal::{analytic_marginal, empirical_marginal, sample_path, PoolConfig};
pub use meta::{MetaLearner, MetaMode};
pub use pool::{categorical, ExpertPool};
pub use schedule::EpochSchedule;
