//! Linear time-varying systems `x_{t+1} = A_t x_t + B_t u_t + w_t`, the benchmark systems,
//! disturbance generators and sequential-stability checks.

mod noise;
mod stability;
mod system;

pub use noise::{DisturbanceSource, NoiseKind};
pub use stability::{check_sequential_stability, measure_stability, StabilityReport};
pub use system::{recover_disturbance, step, LtvSystem};
