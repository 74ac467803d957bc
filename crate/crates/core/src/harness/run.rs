use nalgebra::DVector;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ControllerConfig, ExperimentConfig, MarcVariant};
use super::env::Environment;
use crate::control::{
    normalize_cost, Controller, FixedLqr, Gpc, Marc, MarcConfig, MarcMode, MarcRate, Observation, Stabilizing,
    ZeroController,
};
use crate::error::{Error, Result};
use crate::experts::Lifetimes;
use crate::lds::DisturbanceSource;
use crate::nonlinear::{ilqr_plan, IlqrConfig, OpenLoop, PendulumCost};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    /// Disturbance as recovered from the linear model of the round.
    pub disturbance: Vec<f64>,
    pub cost: f64,
    pub normalized: f64,
    pub expert: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub controller: String,
    pub seed: u64,
    /// SHA-256 of the injected disturbance stream.
    pub noise_hash: String,
    pub records: Vec<StepRecord>,
}

impl RunTrace {
    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost).collect()
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.records
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r.cost;
                Some(*acc)
            })
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.records.iter().map(|r| r.cost).sum()
    }

    pub fn windowed(&self) -> Vec<f64> {
        windowed_average(&self.costs())
    }
}

/// Average of the last `min(t, T/3)` costs at every round `t`.
pub fn windowed_average(costs: &[f64]) -> Vec<f64> {
    let window = (costs.len() / 3).max(1);
    let mut out = Vec::with_capacity(costs.len());
    let mut sum = 0.0;
    for (i, c) in costs.iter().enumerate() {
        sum += c;
        if i >= window {
            sum -= costs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

pub fn noise_hash(ws: &[DVector<f64>]) -> String {
    let mut hasher = Sha256::new();
    for w in ws {
        for v in w.iter() {
            hasher.update(v.to_le_bytes());
        }
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn controller_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(index as u64 + 1)
}

pub fn build_controller(
    config: &ControllerConfig,
    env: &Environment,
    horizon: usize,
    seed: u64,
    index: usize,
    x0: &DVector<f64>,
) -> Result<Box<dyn Controller>> {
    let (dx, du) = (env.state_dim(), env.input_dim());
    Ok(match config {
        ControllerConfig::Zero {} => Box::new(ZeroController { input_dim: du }),
        ControllerConfig::Lqr {} => Box::new(Stabilizing::new(dx, du)),
        ControllerConfig::FixedLqr {} => Box::new(FixedLqr::new(dx, du)),
        ControllerConfig::Gpc(s) => Box::new(Gpc::new(s.gpc_config(), dx, du)?),
        ControllerConfig::Marc(s) => {
            let base = s.base.gpc_config();
            let cseed = controller_seed(seed, index);
            let mut marc = match s.variant {
                MarcVariant::Theory => MarcConfig::theory(base, horizon, cseed),
                MarcVariant::Experimental => MarcConfig::experimental(base, horizon, cseed),
                MarcVariant::Full => MarcConfig {
                    mode: MarcMode::Full { experts: horizon },
                    ..MarcConfig::theory(base, horizon, cseed)
                },
            };
            if let MarcMode::Efficient(l) = marc.mode {
                marc.mode = MarcMode::Efficient(Lifetimes::padded(
                    s.birth_every.unwrap_or(l.birth_every),
                    s.min_lifetime.unwrap_or(l.min_lifetime),
                ));
            }
            marc.rate = if s.epochs {
                MarcRate::Epochs {
                    lipschitz: 1.0,
                    shift_bound: 1.0,
                }
            } else {
                MarcRate::Fixed(s.eta)
            };
            marc.sigma = s.sigma;
            Box::new(Marc::new(marc, dx, du)?)
        }
        ControllerConfig::Ilqr(s) => {
            let model = env
                .pendulum()
                .ok_or_else(|| Error::Config("ilqr needs the pendulum environment".into()))?;
            let cfg = IlqrConfig {
                horizon,
                iterations: s.iterations,
                tolerance: s.tolerance,
                mu_sweep: s.mu_sweep,
                ..IlqrConfig::default()
            };
            let plan = ilqr_plan(x0, &model, &PendulumCost, &cfg)?;
            Box::new(OpenLoop::new(&plan, du))
        }
    })
}

/// Runs one controller against a fixed disturbance sequence from `x0`.
pub fn drive(
    env: &Environment,
    x0: &DVector<f64>,
    noise: &[DVector<f64>],
    controller: &mut dyn Controller,
    label: &str,
    seed: u64,
) -> Result<RunTrace> {
    let cost = env.cost();
    let mut x = x0.clone();
    let mut records = Vec::with_capacity(noise.len());
    for (i, w) in noise.iter().enumerate() {
        let t = i + 1;
        let (a, b) = env.matrices(t, &x).map_err(|e| e.at_step(t))?;
        let u = controller.act(t, &x, &a, &b).map_err(|e| e.at_step(t))?;
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!("{label} produced a non-finite action")).at_step(t));
        }
        let (next, applied) = env.step(&a, &b, &x, &u, w);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!("state diverged under {label}")).at_step(t));
        }
        let c = cost.value(&x, &applied);
        let residual = env.residual(&a, &b, &x, &applied, &next);
        controller
            .observe(&Observation {
                t,
                x: &x,
                u: &applied,
                x_next: &next,
                a: &a,
                b: &b,
                w: &residual,
                cost: cost.as_ref(),
            })
            .map_err(|e| e.at_step(t))?;
        records.push(StepRecord {
            t,
            state: x.iter().copied().collect(),
            action: applied.iter().copied().collect(),
            disturbance: residual.iter().copied().collect(),
            cost: c,
            normalized: normalize_cost(c),
            expert: controller.expert(),
        });
        x = next;
    }
    Ok(RunTrace {
        controller: label.to_string(),
        seed,
        noise_hash: noise_hash(noise),
        records,
    })
}

/// Every configured controller on the same seeded disturbance stream and initial state.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<Vec<RunTrace>> {
    config.validate()?;
    let env = Environment::from_config(&config.environment, config.horizon);
    let mut source = DisturbanceSource::new(
        config.noise.kind(config.horizon),
        env.state_dim(),
        config.horizon,
        config.noise.bound,
        seed,
    )?;
    let noise = source.sequence();
    let x0 = env.initial_state(seed);
    let mut traces = Vec::with_capacity(config.controllers.len());
    for (index, c) in config.controllers.iter().enumerate() {
        let label = c.label();
        log::info!("seed {seed}: running {label}");
        let mut controller = build_controller(c, &env, config.horizon, seed, index, &x0)?;
        traces.push(drive(&env, &x0, &noise, controller.as_mut(), &label, seed)?);
    }
    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_uses_a_third_of_the_horizon() {
        let costs = [3.0, 0.0, 0.0, 6.0, 3.0, 3.0];
        let w = windowed_average(&costs);
        assert_eq!(w, vec![3.0, 1.5, 0.0, 3.0, 4.5, 3.0]);
        assert_eq!(windowed_average(&[2.0]), vec![2.0]);
        assert!(windowed_average(&[]).is_empty());
    }

    #[test]
    fn hash_is_order_sensitive() {
        let a = DVector::from_column_slice(&[1.0, 2.0]);
        let b = DVector::from_column_slice(&[2.0, 1.0]);
        assert_ne!(noise_hash(&[a.clone(), b.clone()]), noise_hash(&[b, a]));
        assert_eq!(noise_hash(&[]).len(), 64);
    }
}
