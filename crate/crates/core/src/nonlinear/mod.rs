//! Inverted pendulum, its analytic linearization, and an iLQR planner with an open-loop
//! executor.

mod ilqr;
mod pendulum;

pub use ilqr::{ilqr_plan, Dynamics, IlqrConfig, IlqrPlan, LinearDynamics, OpenLoop};
pub use pendulum::{linearize, pendulum_cost, pendulum_step, wrap_angle, Pendulum, PendulumCost};
