use nalgebra::{DMatrix, DVector};

use crate::control::{Controller, Observation, StageCost};
use crate::error::{contract, Error, Result};

/// Discrete-time dynamics with Jacobians, as seen by the planner.
pub trait Dynamics {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);

    /// Per-coordinate actuator limits.
    fn input_bounds(&self) -> Option<(f64, f64)> {
        None
    }

    /// `x − y` in local coordinates.
    fn state_diff(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        x - y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl Dynamics for LinearDynamics {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    fn jacobians(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.a.clone(), self.b.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlqrConfig {
    pub horizon: usize,
    pub iterations: usize,
    pub tolerance: f64,
    pub mu_init: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Extra regularization decades tried per iteration; the best resulting step wins.
    pub mu_sweep: u32,
    /// Line search tries `α = 2^{-k}` for `k = 0..=backtracks`.
    pub backtracks: u32,
}

impl Default for IlqrConfig {
    fn default() -> Self {
        IlqrConfig {
            horizon: 200,
            iterations: 10,
            tolerance: 1e-16,
            mu_init: 1e-8,
            mu_min: 1e-8,
            mu_max: 1e8,
            mu_sweep: 6,
            backtracks: 10,
        }
    }
}

impl IlqrConfig {
    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("iLQR horizon must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("iLQR tolerance must be positive".into()));
        }
        if !(0.0 < self.mu_min && self.mu_min <= self.mu_init && self.mu_init <= self.mu_max) {
            return Err(Error::Config(
                "iLQR regularization needs 0 < mu_min ≤ mu_init ≤ mu_max".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlqrPlan {
    pub actions: Vec<DVector<f64>>,
    /// Predicted states `x_0..x_N`.
    pub states: Vec<DVector<f64>>,
    pub cost: f64,
    /// Total cost after the initial rollout and after each accepted iteration.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

struct Gains {
    k: Vec<DVector<f64>>,
    big_k: Vec<DMatrix<f64>>,
}

fn rollout(
    dynamics: &dyn Dynamics,
    cost: &dyn StageCost,
    x0: &DVector<f64>,
    actions: &[DVector<f64>],
) -> (Vec<DVector<f64>>, f64) {
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(x0.clone());
    let mut total = 0.0;
    for u in actions {
        let x = states.last().expect("nonempty");
        total += cost.value(x, u);
        let next = dynamics.step(x, u);
        states.push(next);
    }
    let zero = DVector::zeros(dynamics.input_dim());
    total += cost.value(states.last().expect("nonempty"), &zero);
    (states, total)
}

fn backward(
    dynamics: &dyn Dynamics,
    cost: &dyn StageCost,
    states: &[DVector<f64>],
    actions: &[DVector<f64>],
    mu: f64,
) -> Option<Gains> {
    let n = actions.len();
    let du = dynamics.input_dim();
    let terminal = states.last().expect("nonempty");
    let zero = DVector::zeros(du);
    let mut vx = cost.gradient(terminal, &zero).0;
    let mut vxx = cost.hessian(terminal, &zero).0;
    let mut ks = vec![DVector::zeros(du); n];
    let mut big_ks = vec![DMatrix::zeros(du, dynamics.state_dim()); n];
    let bounds = dynamics.input_bounds();
    for t in (0..n).rev() {
        let (x, u) = (&states[t], &actions[t]);
        let (a, b) = dynamics.jacobians(x, u);
        let (lx, lu) = cost.gradient(x, u);
        let (lxx, luu, lux) = cost.hessian(x, u);
        let qx = lx + a.transpose() * &vx;
        let qu = lu + b.transpose() * &vx;
        let qxx = lxx + a.transpose() * &vxx * &a;
        let quu = luu + b.transpose() * &vxx * &b + DMatrix::identity(du, du) * mu;
        let qux = lux + b.transpose() * &vxx * &a;
        let chol = quu.clone().cholesky()?;
        let mut k = -chol.solve(&qu);
        let mut big_k = -chol.solve(&qux);
        if let Some((lo, hi)) = bounds {
            for i in 0..du {
                let target = u[i] + k[i];
                if target > hi || target < lo {
                    k[i] = target.clamp(lo, hi) - u[i];
                    big_k.row_mut(i).fill(0.0);
                }
            }
        }
        vx = &qx + big_k.transpose() * &quu * &k + big_k.transpose() * &qu + qux.transpose() * &k;
        let next = &qxx + big_k.transpose() * &quu * &big_k + big_k.transpose() * &qux + qux.transpose() * &big_k;
        vxx = 0.5 * (&next + next.transpose());
        ks[t] = k;
        big_ks[t] = big_k;
    }
    Some(Gains { k: ks, big_k: big_ks })
}

fn clamp_input(dynamics: &dyn Dynamics, mut u: DVector<f64>) -> DVector<f64> {
    if let Some((lo, hi)) = dynamics.input_bounds() {
        u.apply(|v| *v = v.clamp(lo, hi));
    }
    u
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    dynamics: &dyn Dynamics,
    cost: &dyn StageCost,
    x0: &DVector<f64>,
    states: &[DVector<f64>],
    actions: &[DVector<f64>],
    gains: &Gains,
    total: f64,
    backtracks: u32,
) -> Option<(Vec<DVector<f64>>, Vec<DVector<f64>>, f64)> {
    for step in 0..=backtracks {
        let alpha = 0.5f64.powi(step as i32);
        let mut x = x0.clone();
        let mut trial = Vec::with_capacity(actions.len());
        for t in 0..actions.len() {
            let dx = dynamics.state_diff(&x, &states[t]);
            let u = clamp_input(dynamics, &actions[t] + &gains.k[t] * alpha + &gains.big_k[t] * dx);
            x = dynamics.step(&x, &u);
            trial.push(u);
        }
        let (trial_states, trial_total) = rollout(dynamics, cost, x0, &trial);
        if trial_total < total {
            return Some((trial, trial_states, trial_total));
        }
    }
    None
}

/// Plans `config.horizon` actions from `x0` starting from the zero sequence. The objective
/// is the summed stage cost plus `c(x_N, 0)` at the final state.
pub fn ilqr_plan(
    x0: &DVector<f64>,
    dynamics: &dyn Dynamics,
    cost: &dyn StageCost,
    config: &IlqrConfig,
) -> Result<IlqrPlan> {
    config.validate()?;
    if x0.len() != dynamics.state_dim() {
        return Err(contract(format!(
            "initial state has dimension {}, expected {}",
            x0.len(),
            dynamics.state_dim()
        )));
    }
    let mut actions = vec![DVector::zeros(dynamics.input_dim()); config.horizon];
    let (mut states, mut total) = rollout(dynamics, cost, x0, &actions);
    let mut history = vec![total];
    let mut mu = config.mu_init;
    let mut iterations = 0;
    while iterations < config.iterations {
        iterations += 1;
        let mut accepted: Option<(Vec<DVector<f64>>, Vec<DVector<f64>>, f64)> = None;
        let mut used_mu = mu;
        for decade in 0..=config.mu_sweep {
            let mut trial_mu = mu * 10f64.powi(decade as i32);
            let gains = loop {
                match backward(dynamics, cost, &states, &actions, trial_mu) {
                    Some(g) => break Some(g),
                    None => {
                        trial_mu *= 10.0;
                        if trial_mu > config.mu_max {
                            break None;
                        }
                    }
                }
            };
            let Some(gains) = gains else {
                if decade == 0 && accepted.is_none() {
                    return Err(Error::Numerical(format!(
                        "iLQR diverged at iteration {iterations}: regularization {trial_mu:e} above {:e}, cost {total}",
                        config.mu_max
                    )));
                }
                break;
            };
            if let Some(found) = line_search(dynamics, cost, x0, &states, &actions, &gains, total, config.backtracks) {
                if accepted.as_ref().map_or(true, |best| found.2 < best.2) {
                    used_mu = trial_mu;
                    accepted = Some(found);
                }
            }
        }
        if accepted.is_some() {
            mu = used_mu;
        }
        match accepted {
            Some((a, s, c)) => {
                let improvement = total - c;
                actions = a;
                states = s;
                total = c;
                history.push(total);
                mu = (mu / 10.0).max(config.mu_min);
                if improvement < config.tolerance {
                    break;
                }
            }
            None => {
                mu *= 10.0;
                if mu > config.mu_max {
                    break;
                }
            }
        }
    }
    Ok(IlqrPlan {
        actions,
        states,
        cost: total,
        cost_history: history,
        iterations,
    })
}

/// Executes a fixed plan regardless of what it observes; zero after the plan runs out.
#[derive(Debug, Clone)]
pub struct OpenLoop {
    actions: Vec<DVector<f64>>,
    input_dim: usize,
}

impl OpenLoop {
    pub fn new(plan: &IlqrPlan, input_dim: usize) -> Self {
        OpenLoop {
            actions: plan.actions.clone(),
            input_dim,
        }
    }
}

impl Controller for OpenLoop {
    fn name(&self) -> String {
        "ilqr".into()
    }

    fn act(&mut self, t: usize, _x: &DVector<f64>, _a: &DMatrix<f64>, _b: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(self
            .actions
            .get(t - 1)
            .cloned()
            .unwrap_or_else(|| DVector::zeros(self.input_dim)))
    }

    fn observe(&mut self, _obs: &Observation<'_>) -> Result<()> {
        Ok(())
    }
}
