use std::collections::BTreeMap;

use nalgebra::DVector;

use super::eff::{EffPool, Member};
use super::lifetimes::Lifetimes;
use super::pool::ExpertPool;
use super::schedule::EpochSchedule;
use crate::error::Result;
use crate::oco::{DecisionSet, MemoryLoss, Ogd, StepSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaMode {
    /// One expert born per round, all kept forever.
    Full,
    /// Experts kept only while in their working-set lifetime.
    Efficient,
}

#[derive(Debug, Clone)]
enum Pool {
    Full(ExpertPool),
    Efficient(EffPool),
}

#[derive(Debug, Clone, Copy)]
struct Epochs {
    schedule: EpochSchedule,
    memory: usize,
    lipschitz: f64,
    shift_bound: f64,
}

/// Shrinking expert pool over projected-OGD experts, one born per round.
///
/// Expert `i` plays the default point before its birth (and after expiry in efficient mode)
/// and runs OGD from the default point while alive. Surrogate values fed to the pool must lie
/// in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct MetaLearner {
    set: DecisionSet,
    schedule: StepSchedule,
    default_point: DVector<f64>,
    pool: Pool,
    learners: BTreeMap<usize, Ogd>,
    lifetimes: Option<Lifetimes>,
    horizon: usize,
    round: usize,
    chosen: Option<usize>,
    cum_losses: BTreeMap<usize, f64>,
    default_cum: f64,
    epochs: Option<Epochs>,
    restarts: usize,
}

impl MetaLearner {
    pub fn new(
        set: DecisionSet,
        schedule: StepSchedule,
        horizon: usize,
        mode: MetaMode,
        eta: f64,
        sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        let default_point = set.center();
        let (pool, lifetimes) = match mode {
            MetaMode::Full => (Pool::Full(ExpertPool::new(horizon, eta, sigma, seed)?), None),
            MetaMode::Efficient => {
                let l = Lifetimes::default();
                (Pool::Efficient(EffPool::new(horizon, l, eta, sigma, seed)?), Some(l))
            }
        };
        let mut learners = BTreeMap::new();
        learners.insert(1, Ogd::new(set.clone(), schedule, default_point.clone())?);
        Ok(MetaLearner {
            set,
            schedule,
            default_point,
            pool,
            learners,
            lifetimes,
            horizon,
            round: 1,
            chosen: None,
            cum_losses: BTreeMap::from([(1, 0.0)]),
            default_cum: 0.0,
            epochs: None,
            restarts: 0,
        })
    }

    /// Replaces the fixed rate with the epoch schedule.
    pub fn with_epochs(mut self, memory: usize, lipschitz: f64, shift_bound: f64) -> Self {
        let schedule = EpochSchedule::default();
        self.set_eta(schedule.eta(memory, lipschitz, shift_bound));
        self.epochs = Some(Epochs {
            schedule,
            memory,
            lipschitz,
            shift_bound,
        });
        self
    }

    fn set_eta(&mut self, eta: f64) {
        match &mut self.pool {
            Pool::Full(p) => p.set_eta(eta),
            Pool::Efficient(p) => p.set_eta(eta),
        }
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Index chosen at the latest [`Self::play`]; `None` for an expired expert.
    pub fn chosen(&self) -> Option<usize> {
        self.chosen
    }

    fn point_of(&self, expert: Option<usize>) -> DVector<f64> {
        expert
            .and_then(|i| self.learners.get(&i))
            .map(|l| l.point().clone())
            .unwrap_or_else(|| self.default_point.clone())
    }

    /// Selects an expert and returns its decision for the current round.
    pub fn play(&mut self) -> DVector<f64> {
        let expert = match &mut self.pool {
            Pool::Full(p) => Some(p.select() + 1),
            Pool::Efficient(p) => match p.select() {
                Member::Active(j) | Member::Unborn(j) => Some(j),
                Member::Dead => None,
            },
        };
        self.chosen = expert;
        self.point_of(expert)
    }

    /// Feeds the round's loss to the pool and every live expert.
    pub fn learn(&mut self, loss: &dyn MemoryLoss) -> Result<()> {
        let default_value = loss.surrogate(&self.default_point);
        self.default_cum += default_value;
        let mut values = BTreeMap::new();
        for (&i, learner) in &self.learners {
            let v = loss.surrogate(learner.point());
            values.insert(i, v);
            *self.cum_losses.entry(i).or_insert(0.0) += v;
        }
        match &mut self.pool {
            Pool::Full(p) => {
                let all: Vec<f64> = (1..=self.horizon)
                    .map(|i| values.get(&i).copied().unwrap_or(default_value))
                    .collect();
                p.update(&all)?;
            }
            Pool::Efficient(p) => {
                let active: Vec<f64> = p.active_members().iter().map(|i| values[i]).collect();
                p.update(&active, default_value)?;
            }
        }
        for learner in self.learners.values_mut() {
            let grad = loss.surrogate_grad(learner.point());
            learner.update(&grad)?;
        }
        self.round += 1;
        if let Some(l) = self.lifetimes {
            self.learners.retain(|&i, _| l.is_alive(i, self.round));
            self.cum_losses.retain(|&i, _| l.is_alive(i, self.round));
        }
        if self.round <= self.horizon {
            self.learners.insert(
                self.round,
                Ogd::new(self.set.clone(), self.schedule, self.default_point.clone())?,
            );
            // an expert born now has followed the default point so far
            self.cum_losses.insert(self.round, self.default_cum);
        }
        if let Some(mut epochs) = self.epochs {
            let best = self.cum_losses.values().copied().fold(self.default_cum, f64::min);
            let (eta, restart) = epochs
                .schedule
                .observe(best, epochs.memory, epochs.lipschitz, epochs.shift_bound);
            self.epochs = Some(epochs);
            self.set_eta(eta);
            if restart {
                self.restarts += 1;
                match &mut self.pool {
                    Pool::Full(p) => p.reset(),
                    Pool::Efficient(p) => p.reset(),
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oco::QuadraticLoss;

    fn run(mode: MetaMode, targets: &[f64]) -> Vec<f64> {
        let set = DecisionSet::interval(-1.0, 1.0).unwrap();
        let mut meta = MetaLearner::new(
            set.clone(),
            StepSchedule::StronglyConvex { alpha: 0.5 },
            targets.len(),
            mode,
            0.5,
            1e-3,
            9,
        )
        .unwrap();
        targets
            .iter()
            .map(|c| {
                let z = meta.play()[0];
                meta.learn(&QuadraticLoss::on(&set, DVector::from_element(1, *c), 0.25))
                    .unwrap();
                z
            })
            .collect()
    }

    #[test]
    fn follows_a_switching_target() {
        let targets: Vec<f64> = (0..400).map(|t| if t < 200 { 1.0 } else { -1.0 }).collect();
        for mode in [MetaMode::Full, MetaMode::Efficient] {
            let z = run(mode, &targets);
            assert!(z[190] > 0.8, "{mode:?}");
            assert!(z[399] < -0.8, "{mode:?}");
        }
    }

    #[test]
    fn epoch_schedule_restarts_as_loss_accumulates() {
        let set = DecisionSet::interval(-1.0, 1.0).unwrap();
        let mut meta = MetaLearner::new(
            set.clone(),
            StepSchedule::StronglyConvex { alpha: 0.5 },
            200,
            MetaMode::Full,
            0.5,
            0.0,
            1,
        )
        .unwrap()
        .with_epochs(0, 1.0, 1.0);
        for t in 0..200 {
            meta.play();
            let c = if t % 2 == 0 { 1.0 } else { -1.0 };
            meta.learn(&QuadraticLoss::on(&set, DVector::from_element(1, c), 0.25))
                .unwrap();
        }
        // alternating targets force every expert to accumulate loss
        assert!(meta.restarts() >= 2);
    }
}
