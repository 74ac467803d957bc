use nalgebra::DVector;

use super::set::DecisionSet;
use crate::error::{contract, Result};

/// Step-size rule for projected online gradient descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `η_t = 1/(αt)`.
    StronglyConvex {
        alpha: f64,
    },
    /// `η_t = D/(G√t)`.
    Convex {
        diameter: f64,
        grad_bound: f64,
    },
    Constant {
        eta: f64,
    },
    /// `η_t = η₀/√t`.
    InvSqrt {
        eta0: f64,
    },
}

impl StepSchedule {
    pub fn eta(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(contract("rounds are numbered from 1"));
        }
        let t = t as f64;
        match *self {
            StepSchedule::StronglyConvex { alpha } => {
                if !(alpha > 0.0) {
                    return Err(contract(format!("strong convexity must be positive, got {alpha}")));
                }
                Ok(1.0 / (alpha * t))
            }
            StepSchedule::Convex { diameter, grad_bound } => {
                if !(diameter > 0.0 && grad_bound > 0.0) {
                    return Err(contract("convex schedule needs positive D and G"));
                }
                Ok(diameter / (grad_bound * t.sqrt()))
            }
            StepSchedule::Constant { eta } => Ok(eta),
            StepSchedule::InvSqrt { eta0 } => Ok(eta0 / t.sqrt()),
        }
    }
}

pub fn ogd_step(
    set: &DecisionSet,
    z: &DVector<f64>,
    grad: &DVector<f64>,
    schedule: StepSchedule,
    t: usize,
) -> Result<DVector<f64>> {
    let eta = schedule.eta(t)?;
    set.project(&(z - grad * eta))
}

/// Projected OGD learner. Its round counter starts at 1 on construction, so a learner
/// created late behaves like a fresh run from its birth.
#[derive(Debug, Clone)]
pub struct Ogd {
    set: DecisionSet,
    schedule: StepSchedule,
    point: DVector<f64>,
    round: usize,
}

impl Ogd {
    pub fn new(set: DecisionSet, schedule: StepSchedule, start: DVector<f64>) -> Result<Self> {
        schedule.eta(1)?;
        let point = set.project(&start)?;
        Ok(Ogd {
            set,
            schedule,
            point,
            round: 1,
        })
    }

    pub fn point(&self) -> &DVector<f64> {
        &self.point
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn set(&self) -> &DecisionSet {
        &self.set
    }

    pub fn update(&mut self, grad: &DVector<f64>) -> Result<()> {
        self.point = ogd_step(&self.set, &self.point, grad, self.schedule, self.round)?;
        self.round += 1;
        Ok(())
    }
}
