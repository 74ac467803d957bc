use nalgebra::{DMatrix, DVector};

use super::controller::{Controller, Observation};
use super::dac::{DacLearner, DacParams, History};
use super::lqr::Stabilizer;
use crate::error::Result;
use crate::oco::StepSchedule;

/// How the stabilizing gain follows the revealed dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMode {
    /// LQR gain of the current `(A_t, B_t)` every round.
    #[default]
    Tracking,
    /// Tracks until round `start`, then keeps that round's gain.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpcConfig {
    pub memory: usize,
    pub budget: f64,
    pub lr: StepSchedule,
    /// First round whose proxy loss triggers an update; earlier rounds play `K_t x_t`.
    pub start: usize,
    pub gain: GainMode,
}

impl Default for GpcConfig {
    fn default() -> Self {
        GpcConfig {
            memory: 10,
            budget: 5.0,
            lr: StepSchedule::Constant { eta: 0.01 },
            start: 1,
            gain: GainMode::Tracking,
        }
    }
}

/// Gradient perturbation controller: LQR stabilizer plus a DAC term tuned by projected OGD.
#[derive(Debug, Clone)]
pub struct Gpc {
    config: GpcConfig,
    stabilizer: Stabilizer,
    history: History,
    learner: DacLearner,
    gain: Option<DMatrix<f64>>,
    frozen: Option<DMatrix<f64>>,
}

impl Gpc {
    pub fn new(config: GpcConfig, state_dim: usize, input_dim: usize) -> Result<Self> {
        Ok(Gpc {
            config,
            stabilizer: Stabilizer::identity(state_dim, input_dim),
            history: History::new(config.memory, state_dim),
            learner: DacLearner::new(config.memory, input_dim, state_dim, config.budget, config.lr)?,
            gain: None,
            frozen: None,
        })
    }

    pub fn params(&self) -> &DacParams {
        self.learner.params()
    }
}

impl Controller for Gpc {
    fn name(&self) -> String {
        "gpc".into()
    }

    fn act(&mut self, t: usize, x: &DVector<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DVector<f64>> {
        let k = match (&self.frozen, self.config.gain) {
            (Some(k), GainMode::Frozen) if t > self.config.start => k.clone(),
            _ => {
                let k = self.stabilizer.gain(a, b)?;
                if self.config.gain == GainMode::Frozen && t <= self.config.start {
                    self.frozen = Some(k.clone());
                }
                k
            }
        };
        let u = &k * x + self.learner.residual(&self.history);
        self.gain = Some(k);
        Ok(u)
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        let k = match self.gain.take() {
            Some(k) => k,
            None => self.stabilizer.gain(obs.a, obs.b)?,
        };
        self.history.push(obs.a, obs.b, &k, obs.w);
        if obs.t >= self.config.start {
            self.learner.step(&self.history, obs.cost)?;
        }
        Ok(())
    }
}
