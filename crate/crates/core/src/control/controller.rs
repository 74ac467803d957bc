use nalgebra::{DMatrix, DVector};

use super::cost::StageCost;
use crate::error::Result;

/// What a controller learns after acting in round `t`.
pub struct Observation<'a> {
    pub t: usize,
    pub x: &'a DVector<f64>,
    /// Action actually applied, after any actuator clamping.
    pub u: &'a DVector<f64>,
    pub x_next: &'a DVector<f64>,
    pub a: &'a DMatrix<f64>,
    pub b: &'a DMatrix<f64>,
    /// Disturbance recovered by the environment, `x_{t+1} − A_t x_t − B_t u_t`.
    pub w: &'a DVector<f64>,
    pub cost: &'a dyn StageCost,
}

/// Uniform act/observe interface the harness drives every policy through.
pub trait Controller {
    fn name(&self) -> String;

    /// Action for round `t` given the state and the revealed `(A_t, B_t)`.
    fn act(&mut self, t: usize, x: &DVector<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DVector<f64>>;

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()>;

    /// Expert followed in the latest round, for meta-controllers.
    fn expert(&self) -> Option<usize> {
        None
    }
}
