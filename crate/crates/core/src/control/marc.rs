use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::controller::{Controller, Observation};
use super::cost::normalize_cost;
use super::dac::{proxy_loss, DacLearner, DacParams, History};
use super::gpc::GpcConfig;
use super::lqr::Stabilizer;
use crate::error::{contract, Result};
use crate::experts::{EffPool, EpochSchedule, ExpertPool, Lifetimes, Member};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarcMode {
    /// `experts` base controllers, the `i`-th born at round `i`, none ever retired.
    Full { experts: usize },
    /// Working-set pool over one expert per birth slot.
    Efficient(Lifetimes),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Lazy sampling from the shrinking pool.
    Sample,
    /// Follow the expert with the largest weight.
    Argmax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarcRate {
    Fixed(f64),
    /// Doubling epochs on the best cumulative normalized cost.
    Epochs {
        lipschitz: f64,
        shift_bound: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarcConfig {
    pub base: GpcConfig,
    pub horizon: usize,
    pub rate: MarcRate,
    pub sigma: f64,
    pub mode: MarcMode,
    pub selection: Selection,
    pub seed: u64,
}

impl MarcConfig {
    /// Sampling with per-round births kept on working sets.
    pub fn theory(base: GpcConfig, horizon: usize, seed: u64) -> Self {
        MarcConfig {
            base,
            horizon,
            rate: MarcRate::Fixed(0.05),
            sigma: 1e-2,
            mode: MarcMode::Efficient(Lifetimes::default()),
            selection: Selection::Sample,
            seed,
        }
    }

    /// Argmax selection, a birth every 20 rounds, lifetimes of at least 100 rounds.
    pub fn experimental(base: GpcConfig, horizon: usize, seed: u64) -> Self {
        MarcConfig {
            mode: MarcMode::Efficient(Lifetimes::padded(20, 100)),
            selection: Selection::Argmax,
            ..Self::theory(base, horizon, seed)
        }
    }
}

#[derive(Debug, Clone)]
enum Pool {
    Full(ExpertPool),
    Efficient(EffPool),
}

/// A base GPC running in its own simulated copy of the environment.
#[derive(Debug, Clone)]
struct Expert {
    learner: DacLearner,
    state: DVector<f64>,
    action: DVector<f64>,
    cum_value: f64,
}

/// Meta controller over GPC experts started at different rounds.
///
/// All experts share the stabilizer and the disturbance history. The emitted action is
/// `K_t x_t` plus the chosen expert's DAC term; experts that are unborn or retired
/// contribute the zero DAC term.
#[derive(Debug, Clone)]
pub struct Marc {
    config: MarcConfig,
    stabilizer: Stabilizer,
    history: History,
    pool: Pool,
    lifetimes: Option<Lifetimes>,
    experts: BTreeMap<usize, Expert>,
    input_dim: usize,
    state_dim: usize,
    gain: Option<DMatrix<f64>>,
    chosen: Option<usize>,
    round: usize,
    default_cum: f64,
    epochs: Option<EpochSchedule>,
    restarts: usize,
}

impl Marc {
    pub fn new(config: MarcConfig, state_dim: usize, input_dim: usize) -> Result<Self> {
        if config.horizon == 0 {
            return Err(contract("controller horizon must be positive"));
        }
        let (eta, epochs) = match config.rate {
            MarcRate::Fixed(eta) => (eta, None),
            MarcRate::Epochs { lipschitz, shift_bound } => {
                let s = EpochSchedule::default();
                (s.eta(config.base.memory, lipschitz, shift_bound), Some(s))
            }
        };
        let (pool, lifetimes) = match config.mode {
            MarcMode::Full { experts } => (
                Pool::Full(ExpertPool::new(
                    experts.min(config.horizon),
                    eta,
                    config.sigma,
                    config.seed,
                )?),
                None,
            ),
            MarcMode::Efficient(l) => (
                Pool::Efficient(EffPool::new(
                    l.born_by(config.horizon).max(1),
                    l,
                    eta,
                    config.sigma,
                    config.seed,
                )?),
                Some(l),
            ),
        };
        let mut marc = Marc {
            config,
            stabilizer: Stabilizer::identity(state_dim, input_dim),
            history: History::new(config.base.memory, state_dim),
            pool,
            lifetimes,
            experts: BTreeMap::new(),
            input_dim,
            state_dim,
            gain: None,
            chosen: None,
            round: 1,
            default_cum: 0.0,
            epochs,
            restarts: 0,
        };
        marc.spawn(1, &DVector::zeros(state_dim))?;
        Ok(marc)
    }

    fn expert_count(&self) -> usize {
        match &self.pool {
            Pool::Full(p) => p.len(),
            Pool::Efficient(p) => p.total(),
        }
    }

    fn spawn(&mut self, id: usize, state: &DVector<f64>) -> Result<()> {
        let base = self.config.base;
        let learner = DacLearner::new(base.memory, self.input_dim, self.state_dim, base.budget, base.lr)?;
        self.experts.insert(
            id,
            Expert {
                learner,
                state: state.clone(),
                action: DVector::zeros(self.input_dim),
                cum_value: self.default_cum,
            },
        );
        Ok(())
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    /// Live experts in ascending birth order.
    pub fn live_experts(&self) -> Vec<usize> {
        self.experts.keys().copied().collect()
    }

    /// Simulated state and last action of a live expert.
    pub fn expert_trajectory(&self, id: usize) -> Option<(&DVector<f64>, &DVector<f64>)> {
        self.experts.get(&id).map(|e| (&e.state, &e.action))
    }

    pub fn expert_params(&self, id: usize) -> Option<&DacParams> {
        self.experts.get(&id).map(|e| e.learner.params())
    }

    fn select(&mut self) -> Option<usize> {
        match (&mut self.pool, self.config.selection) {
            (Pool::Full(p), Selection::Sample) => Some(p.select() + 1),
            (Pool::Full(p), Selection::Argmax) => {
                let probs = p.probabilities();
                let mut best = 0;
                for (i, v) in probs.iter().enumerate() {
                    if *v > probs[best] {
                        best = i;
                    }
                }
                Some(best + 1)
            }
            (Pool::Efficient(p), selection) => {
                let m = match selection {
                    Selection::Sample => p.select(),
                    Selection::Argmax => p.argmax(),
                };
                match m {
                    Member::Active(j) | Member::Unborn(j) => Some(j),
                    Member::Dead => None,
                }
            }
        }
    }

    fn set_eta(&mut self, eta: f64) {
        match &mut self.pool {
            Pool::Full(p) => p.set_eta(eta),
            Pool::Efficient(p) => p.set_eta(eta),
        }
    }
}

impl Controller for Marc {
    fn name(&self) -> String {
        "marc".into()
    }

    fn act(&mut self, _t: usize, x: &DVector<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DVector<f64>> {
        let k = self.stabilizer.gain(a, b)?;
        let chosen = self.select();
        let mut residual = DVector::zeros(self.input_dim);
        for (id, expert) in self.experts.iter_mut() {
            let params = expert.learner.params();
            if !expert.learner.set().contains(&params.flat, 1e-9) {
                return Err(contract(format!("expert {id} left its DAC budget")));
            }
            let v = expert.learner.residual(&self.history);
            expert.action = &k * &expert.state + &v;
            if Some(*id) == chosen {
                residual = v;
            }
        }
        self.chosen = chosen;
        let u = &k * x + residual;
        self.gain = Some(k);
        Ok(u)
    }

    fn observe(&mut self, obs: &Observation<'_>) -> Result<()> {
        let k = match self.gain.take() {
            Some(k) => k,
            None => self.stabilizer.gain(obs.a, obs.b)?,
        };
        self.history.push(obs.a, obs.b, &k, obs.w);
        for expert in self.experts.values_mut() {
            expert.state = obs.a * &expert.state + obs.b * &expert.action + obs.w;
        }

        let zero = DacParams::zeros(self.config.base.memory, self.input_dim, self.state_dim);
        let default_value = normalize_cost(proxy_loss(&zero, &self.history, obs.cost)?.0);
        self.default_cum += default_value;
        let mut values = BTreeMap::new();
        for (&id, expert) in self.experts.iter_mut() {
            let v = normalize_cost(expert.learner.step(&self.history, obs.cost)?);
            expert.cum_value += v;
            values.insert(id, v);
        }
        match &mut self.pool {
            Pool::Full(p) => {
                let all: Vec<f64> = (1..=p.len())
                    .map(|i| values.get(&i).copied().unwrap_or(default_value))
                    .collect();
                p.update(&all)?;
            }
            Pool::Efficient(p) => {
                let members = p.active_members();
                let active = members
                    .iter()
                    .map(|i| {
                        values
                            .get(i)
                            .copied()
                            .ok_or_else(|| contract(format!("working-set expert {i} has no controller")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                p.update(&active, default_value)?;
            }
        }

        self.round += 1;
        if let Some(l) = self.lifetimes {
            let round = self.round;
            self.experts.retain(|&i, _| l.is_alive(i, round));
            if let Some(j) = l.newborn(round) {
                if j <= self.expert_count() {
                    self.spawn(j, obs.x_next)?;
                }
            }
        } else if self.round <= self.expert_count() {
            self.spawn(self.round, obs.x_next)?;
        }

        if let (Some(mut schedule), MarcRate::Epochs { lipschitz, shift_bound }) = (self.epochs, self.config.rate) {
            let best = self
                .experts
                .values()
                .map(|e| e.cum_value)
                .fold(self.default_cum, f64::min);
            let (eta, restart) = schedule.observe(best, self.config.base.memory, lipschitz, shift_bound);
            self.epochs = Some(schedule);
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

    fn expert(&self) -> Option<usize> {
        self.chosen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::cost::{QuadraticCost, StageCost, ZeroCost};
    use crate::control::gpc::Gpc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Run {
        actions: Vec<DVector<f64>>,
        experts: Vec<Option<usize>>,
    }

    fn drive(
        ctrl: &mut dyn Controller,
        rounds: usize,
        cost: &dyn StageCost,
        seed: u64,
        mut check: impl FnMut(&dyn Controller, &DVector<f64>),
    ) -> Run {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let mut x = DVector::zeros(2);
        let mut run = Run {
            actions: Vec::new(),
            experts: Vec::new(),
        };
        for t in 1..=rounds {
            let u = ctrl.act(t, &x, &a, &b).unwrap();
            let w = DVector::from_fn(2, |_, _| rng.gen_range(-0.5..0.5));
            let next = &a * &x + &b * &u + &w;
            ctrl.observe(&Observation {
                t,
                x: &x,
                u: &u,
                x_next: &next,
                a: &a,
                b: &b,
                w: &w,
                cost,
            })
            .unwrap();
            check(&*ctrl, &u);
            run.actions.push(u);
            run.experts.push(ctrl.expert());
            x = next;
        }
        run
    }

    fn base() -> GpcConfig {
        GpcConfig {
            memory: 3,
            ..GpcConfig::default()
        }
    }

    #[test]
    fn single_expert_replays_gpc() {
        let cost = QuadraticCost::identity(2, 1);
        let config = MarcConfig {
            mode: MarcMode::Full { experts: 1 },
            ..MarcConfig::theory(base(), 60, 4)
        };
        let mut marc = Marc::new(config, 2, 1).unwrap();
        let mut gpc = Gpc::new(base(), 2, 1).unwrap();
        let m = drive(&mut marc, 60, &cost, 8, |_, _| {});
        let g = drive(&mut gpc, 60, &cost, 8, |_, _| {});
        for (um, ug) in m.actions.iter().zip(&g.actions) {
            assert!((um - ug).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_costs_keep_the_first_sample() {
        for mode in [
            MarcMode::Full { experts: 40 },
            MarcMode::Efficient(Lifetimes::default()),
        ] {
            let config = MarcConfig {
                mode,
                ..MarcConfig::theory(base(), 40, 2)
            };
            let mut marc = Marc::new(config, 2, 1).unwrap();
            let run = drive(&mut marc, 40, &ZeroCost, 1, |_, _| {});
            assert!(run.experts.iter().all(|e| *e == run.experts[0]), "{mode:?}");
        }
    }

    #[test]
    fn simulated_experts_follow_the_shared_dynamics() {
        let cost = QuadraticCost::identity(2, 1);
        let config = MarcConfig::theory(base(), 80, 3);
        let mut marc = Marc::new(config, 2, 1).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut x = DVector::zeros(2);
        for t in 1..=80 {
            let u = marc.act(t, &x, &a, &b).unwrap();
            let before: BTreeMap<usize, (DVector<f64>, DVector<f64>)> = marc
                .experts
                .iter()
                .map(|(i, e)| (*i, (e.state.clone(), e.action.clone())))
                .collect();
            let w = DVector::from_fn(2, |_, _| rng.gen_range(-0.5..0.5));
            let next = &a * &x + &b * &u + &w;
            marc.observe(&Observation {
                t,
                x: &x,
                u: &u,
                x_next: &next,
                a: &a,
                b: &b,
                w: &w,
                cost: &cost,
            })
            .unwrap();
            for (i, (s, act)) in before {
                if let Some(e) = marc.experts.get(&i) {
                    assert!((&e.state - (&a * &s + &b * &act + &w)).norm() < 1e-12);
                }
            }
            x = next;
        }
    }

    #[test]
    fn working_set_matches_pool_members() {
        let cost = QuadraticCost::identity(2, 1);
        for config in [
            MarcConfig::theory(base(), 120, 5),
            MarcConfig::experimental(base(), 120, 5),
        ] {
            let mut marc = Marc::new(config, 2, 1).unwrap();
            drive(&mut marc, 120, &cost, 6, |c, _| {
                let _ = c.expert();
            });
            if let (Pool::Efficient(p), Some(l)) = (&marc.pool, marc.lifetimes) {
                assert_eq!(p.active_members(), marc.live_experts());
                let expected: Vec<usize> = l.members(121).into_iter().filter(|&j| j <= p.total()).collect();
                assert_eq!(marc.live_experts(), expected);
            }
        }
    }

    #[test]
    fn action_is_some_experts_action_plus_feedback() {
        let cost = QuadraticCost::identity(2, 1);
        let config = MarcConfig {
            mode: MarcMode::Full { experts: 30 },
            ..MarcConfig::theory(base(), 30, 7)
        };
        let mut marc = Marc::new(config, 2, 1).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut x = DVector::zeros(2);
        for t in 1..=30 {
            let u = marc.act(t, &x, &a, &b).unwrap();
            let k = marc.gain.clone().unwrap();
            let residual = &u - &k * &x;
            let matched = marc
                .experts
                .values()
                .any(|e| (&e.action - &k * &e.state - &residual).norm() < 1e-12)
                || residual.norm() < 1e-15;
            assert!(matched, "round {t}");
            let w = DVector::from_fn(2, |_, _| rng.gen_range(-0.5..0.5));
            let next = &a * &x + &b * &u + &w;
            marc.observe(&Observation {
                t,
                x: &x,
                u: &u,
                x_next: &next,
                a: &a,
                b: &b,
                w: &w,
                cost: &cost,
            })
            .unwrap();
            x = next;
        }
    }
}
