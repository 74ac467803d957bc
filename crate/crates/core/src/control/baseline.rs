use nalgebra::{DMatrix, DVector};

use super::controller::{Controller, Observation};
use super::lqr::Stabilizer;
use crate::error::Result;

/// Always plays zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroController {
    pub input_dim: usize,
}

impl Controller for ZeroController {
    fn name(&self) -> String {
        "zero".into()
    }

    fn act(&mut self, _t: usize, _x: &DVector<f64>, _a: &DMatrix<f64>, _b: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(DVector::zeros(self.input_dim))
    }

    fn observe(&mut self, _obs: &Observation<'_>) -> Result<()> {
        Ok(())
    }
}

/// `u_t = K_t x_t` with the LQR gain of the current `(A_t, B_t)`.
#[derive(Debug, Clone)]
pub struct Stabilizing {
    stabilizer: Stabilizer,
}

impl Stabilizing {
    pub fn new(state_dim: usize, input_dim: usize) -> Self {
        Stabilizing {
            stabilizer: Stabilizer::identity(state_dim, input_dim),
        }
    }
}

impl Controller for Stabilizing {
    fn name(&self) -> String {
        "lqr".into()
    }

    fn act(&mut self, _t: usize, x: &DVector<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(self.stabilizer.gain(a, b)? * x)
    }

    fn observe(&mut self, _obs: &Observation<'_>) -> Result<()> {
        Ok(())
    }
}

/// LQR gain computed once from the first revealed `(A_1, B_1)` and kept.
#[derive(Debug, Clone)]
pub struct FixedLqr {
    stabilizer: Stabilizer,
    gain: Option<DMatrix<f64>>,
}

impl FixedLqr {
    pub fn new(state_dim: usize, input_dim: usize) -> Self {
        FixedLqr {
            stabilizer: Stabilizer::identity(state_dim, input_dim),
            gain: None,
        }
    }
}

impl Controller for FixedLqr {
    fn name(&self) -> String {
        "fixed-lqr".into()
    }

    fn act(&mut self, _t: usize, x: &DVector<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DVector<f64>> {
        if self.gain.is_none() {
            self.gain = Some(self.stabilizer.gain(a, b)?);
        }
        Ok(self.gain.as_ref().expect("gain set") * x)
    }

    fn observe(&mut self, _obs: &Observation<'_>) -> Result<()> {
        Ok(())
    }
}
