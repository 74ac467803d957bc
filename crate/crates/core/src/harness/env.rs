use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{CostChoice, EnvironmentConfig, PendulumSettings};
use crate::control::{QuadraticCost, StageCost, ZeroCost};
use crate::error::Result;
use crate::lds::LtvSystem;
use crate::nonlinear::{linearize, pendulum_step, wrap_angle, Pendulum, PendulumCost};

/// Offset separating the initial-state stream from the noise stream of the same seed.
const INITIAL_STATE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Plant driven by the harness. Linear environments reveal their exact `(A_t, B_t)`;
/// the pendulum reveals its Jacobians at `(x_t, 0)`.
#[derive(Debug, Clone)]
pub enum Environment {
    Lds {
        system: LtvSystem,
        horizon: usize,
        cost: CostChoice,
    },
    Pendulum {
        settings: PendulumSettings,
    },
}

impl Environment {
    pub fn from_config(config: &EnvironmentConfig, horizon: usize) -> Self {
        match config {
            EnvironmentConfig::Lds { system, cost } => Environment::Lds {
                system: (*system).into(),
                horizon,
                cost: *cost,
            },
            EnvironmentConfig::Pendulum { settings } => Environment::Pendulum { settings: *settings },
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Environment::Lds { system, .. } => system.state_dim(),
            Environment::Pendulum { .. } => 2,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Environment::Lds { system, .. } => system.input_dim(),
            Environment::Pendulum { .. } => 1,
        }
    }

    pub fn pendulum(&self) -> Option<Pendulum> {
        match self {
            Environment::Pendulum { settings } => Some(settings.model()),
            _ => None,
        }
    }

    pub fn initial_state(&self, seed: u64) -> DVector<f64> {
        match self {
            Environment::Lds { .. } => DVector::zeros(self.state_dim()),
            Environment::Pendulum { settings } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(INITIAL_STATE_STREAM));
                let mut draw = |half: f64| if half > 0.0 { rng.gen_range(-half..=half) } else { 0.0 };
                let theta = draw(settings.initial_angle);
                let speed = draw(settings.initial_speed);
                DVector::from_column_slice(&[theta, speed])
            }
        }
    }

    pub fn matrices(&self, t: usize, x: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        match self {
            Environment::Lds { system, horizon, .. } => system.matrices(t, *horizon),
            Environment::Pendulum { settings } => Ok(linearize(&settings.model(), x[0], x[1], 0.0)),
        }
    }

    /// Advances one round. Returns the next state and the action actually applied.
    pub fn step(
        &self,
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        x: &DVector<f64>,
        u: &DVector<f64>,
        w: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        match self {
            Environment::Lds { .. } => (a * x + b * u + w, u.clone()),
            Environment::Pendulum { settings } => {
                let p = settings.model();
                let torque = p.clamp_torque(u[0]);
                let (th, sp) = pendulum_step(&p, x[0], x[1], torque);
                (
                    DVector::from_column_slice(&[wrap_angle(th + w[0]), sp + w[1]]),
                    DVector::from_element(1, torque),
                )
            }
        }
    }

    /// Disturbance a linear-model controller attributes to the round.
    pub fn residual(
        &self,
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        x: &DVector<f64>,
        u: &DVector<f64>,
        x_next: &DVector<f64>,
    ) -> DVector<f64> {
        let mut w = x_next - a * x - b * u;
        if let Environment::Pendulum { .. } = self {
            w[0] = wrap_angle(w[0]);
        }
        w
    }

    pub fn cost(&self) -> Box<dyn StageCost> {
        match self {
            Environment::Lds {
                cost: CostChoice::Quadratic,
                ..
            } => Box::new(QuadraticCost::identity(self.state_dim(), self.input_dim())),
            Environment::Lds {
                cost: CostChoice::Zero, ..
            } => Box::new(ZeroCost),
            Environment::Pendulum { .. } => Box::new(PendulumCost),
        }
    }
}
