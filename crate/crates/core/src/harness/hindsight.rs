use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::env::Environment;
use super::run::RunTrace;
use crate::control::{DacParams, Stabilizer, StageCost};
use crate::error::{contract, Result};
use crate::oco::DecisionSet;

/// Everything needed to replay a fixed DAC policy over rounds `r..=s` of a run.
#[derive(Debug, Clone)]
pub struct TraceContext {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub k: Vec<DMatrix<f64>>,
    /// Disturbances of rounds `r..=s`.
    pub w: Vec<DVector<f64>>,
    /// Disturbances of the `H` rounds before `r`, oldest first, zero before round 1.
    pub past: Vec<DVector<f64>>,
    pub x_start: DVector<f64>,
}

impl TraceContext {
    /// Rebuilds the interval from a trace; the replay starts from the trace's state at `r`.
    pub fn from_trace(env: &Environment, trace: &RunTrace, r: usize, s: usize, memory: usize) -> Result<Self> {
        if r == 0 || r > s || s > trace.records.len() {
            return Err(contract(format!("interval [{r}, {s}] outside the trace")));
        }
        let mut stabilizer = Stabilizer::identity(env.state_dim(), env.input_dim());
        let (mut a, mut b, mut k, mut w) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for rec in &trace.records[r - 1..s] {
            let x = DVector::from_column_slice(&rec.state);
            let (at, bt) = env.matrices(rec.t, &x)?;
            k.push(stabilizer.gain(&at, &bt)?);
            a.push(at);
            b.push(bt);
            w.push(DVector::from_column_slice(&rec.disturbance));
        }
        let past = (0..memory)
            .map(|i| {
                // round r − memory + i
                let round = (r + i).checked_sub(memory).filter(|&t| t >= 1);
                match round {
                    Some(t) => DVector::from_column_slice(&trace.records[t - 1].disturbance),
                    None => DVector::zeros(env.state_dim()),
                }
            })
            .collect();
        let x_start = DVector::from_column_slice(&trace.records[r - 1].state);
        Ok(TraceContext {
            a,
            b,
            k,
            w,
            past,
            x_start,
        })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Disturbance `lag` rounds before round index `i` (zero-based within the interval).
    fn lagged(&self, i: usize, lag: usize) -> &DVector<f64> {
        if lag <= i {
            &self.w[i - lag]
        } else {
            &self.past[self.past.len() - (lag - i)]
        }
    }
}

/// Cost of playing `u_t = K_t x_t + Σ_j M^{[j]} w_{t−j}` over the context, and its
/// gradient in the flattened parameters.
pub fn dac_rollout(ctx: &TraceContext, params: &DacParams, cost: &dyn StageCost) -> (f64, DVector<f64>) {
    let n = ctx.len();
    let (rows, cols) = (params.rows, params.cols);
    let size = rows * cols;
    let blocks: Vec<DMatrix<f64>> = (1..=params.memory).map(|j| params.block(j)).collect();
    let mut xs = Vec::with_capacity(n);
    let mut us = Vec::with_capacity(n);
    let mut x = ctx.x_start.clone();
    let mut total = 0.0;
    for i in 0..n {
        let mut u = &ctx.k[i] * &x;
        for (j, m) in blocks.iter().enumerate() {
            u += m * ctx.lagged(i, j + 1);
        }
        total += cost.value(&x, &u);
        let next = &ctx.a[i] * &x + &ctx.b[i] * &u + &ctx.w[i];
        xs.push(x);
        us.push(u);
        x = next;
    }
    let mut grad = vec![0.0; params.flat.len()];
    let mut lambda = DVector::zeros(ctx.x_start.len());
    for i in (0..n).rev() {
        let (gx, gu) = cost.gradient(&xs[i], &us[i]);
        let gu = gu + ctx.b[i].transpose() * &lambda;
        for j in 0..params.memory {
            let w = ctx.lagged(i, j + 1);
            for c in 0..cols {
                if w[c] != 0.0 {
                    for r in 0..rows {
                        grad[j * size + c * rows + r] += gu[r] * w[c];
                    }
                }
            }
        }
        lambda = gx + ctx.k[i].transpose() * &gu + ctx.a[i].transpose() * lambda;
    }
    (total, DVector::from_vec(grad))
}

#[derive(Debug, Clone)]
pub struct DacFit {
    pub params: DacParams,
    pub cost: f64,
    pub converged: bool,
    /// Projected-gradient residual at the returned point.
    pub grad_norm: f64,
}

fn fista(
    objective: &dyn Fn(&DVector<f64>) -> (f64, DVector<f64>),
    set: &DecisionSet,
    start: DVector<f64>,
    iterations: usize,
    tol: f64,
) -> (DVector<f64>, f64, bool) {
    let mut z = set.project(&start).expect("dimension matches");
    let (mut best_value, _) = objective(&z);
    let mut best = z.clone();
    let mut y = z.clone();
    let mut momentum = 1.0f64;
    let mut lipschitz = 1.0f64;
    for _ in 0..iterations {
        let (fy, gy) = objective(&y);
        let mut next;
        loop {
            next = set.project(&(&y - &gy / lipschitz)).expect("dimension matches");
            let d = &next - &y;
            let fnext = objective(&next).0;
            if fnext <= fy + gy.dot(&d) + 0.5 * lipschitz * d.norm_squared() + 1e-12 * fy.abs().max(1.0) {
                break;
            }
            lipschitz *= 2.0;
        }
        let fnext = objective(&next).0;
        let moved = (&next - &z).norm();
        let restart = fnext > best_value;
        if fnext < best_value {
            best_value = fnext;
            best = next.clone();
        }
        let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        if restart {
            // adaptive restart drops the momentum when the objective goes up
            y = next.clone();
            momentum = 1.0;
        } else {
            y = &next + (&next - &z) * ((momentum - 1.0) / m_next);
            momentum = m_next;
        }
        z = next;
        if moved <= tol * z.norm().max(1.0) {
            return (best, best_value, true);
        }
    }
    (best, best_value, false)
}

/// Best fixed DAC policy in hindsight over the context, by accelerated projected gradient
/// from the origin and `restarts − 1` random feasible starts.
pub fn best_dac(
    ctx: &TraceContext,
    memory: usize,
    budget: f64,
    cost: &dyn StageCost,
    restarts: usize,
    seed: u64,
) -> Result<DacFit> {
    let du = ctx
        .k
        .first()
        .map(|k| k.nrows())
        .ok_or_else(|| contract("empty interval"))?;
    let dx = ctx.x_start.len();
    let template = DacParams::zeros(memory, du, dx);
    let set = template.set(budget)?;
    let objective = |flat: &DVector<f64>| {
        let p = DacParams {
            flat: flat.clone(),
            ..template.clone()
        };
        dac_rollout(ctx, &p, cost)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(DVector<f64>, f64, bool)> = None;
    for attempt in 0..restarts.max(1) {
        let start = if attempt == 0 {
            DVector::zeros(template.flat.len())
        } else {
            let v = DVector::<f64>::from_fn(template.flat.len(), |_, _| rng.gen_range(-1.0..1.0));
            let scale = budget * rng.gen::<f64>() / v.norm().max(1e-12);
            v * scale
        };
        let found = fista(&objective, &set, start, 500, 1e-10);
        if best.as_ref().map_or(true, |b| found.1 < b.1) {
            best = Some(found);
        }
    }
    let (flat, value, converged) = best.expect("at least one start");
    let (_, grad) = objective(&flat);
    let residual = (&flat - set.project(&(&flat - &grad)).expect("dimension matches")).norm();
    if !converged {
        log::warn!("DAC comparator stopped before convergence; projected gradient norm {residual:.3e}");
    }
    Ok(DacFit {
        params: DacParams { flat, ..template },
        cost: value,
        converged,
        grad_norm: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::QuadraticCost;
    use crate::oco::grid_search_1d;

    fn scalar_context(a: f64, w: &[f64]) -> TraceContext {
        let n = w.len();
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let stab = Stabilizer::identity(1, 1).gain(&one(a), &one(1.0)).unwrap();
        TraceContext {
            a: vec![one(a); n],
            b: vec![one(1.0); n],
            k: vec![stab; n],
            w: w.iter().map(|v| DVector::from_element(1, *v)).collect(),
            past: vec![DVector::zeros(1)],
            x_start: DVector::zeros(1),
        }
    }

    #[test]
    fn zero_disturbance_gives_the_stabilizer_cost() {
        let ctx = scalar_context(1.2, &[0.0; 30]);
        let cost = QuadraticCost::identity(1, 1);
        let fit = best_dac(&ctx, 1, 1.0, &cost, 5, 1).unwrap();
        assert_eq!(fit.cost, 0.0);
        assert_eq!(dac_rollout(&ctx, &DacParams::zeros(1, 1, 1), &cost).0, 0.0);
    }

    #[test]
    fn matches_grid_oracle_in_one_dimension() {
        let w: Vec<f64> = (0..60).map(|t| ((t * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let ctx = scalar_context(0.9, &w);
        let cost = QuadraticCost::identity(1, 1);
        let fit = best_dac(&ctx, 1, 1.0, &cost, 5, 3).unwrap();
        let (m, _) = grid_search_1d(
            |m| dac_rollout(&ctx, &DacParams::from_blocks(&[DMatrix::from_element(1, 1, m)]), &cost).0,
            -1.0,
            1.0,
            1e-3,
        );
        assert!((fit.params.flat[0] - m).abs() <= 1e-3, "{} vs {m}", fit.params.flat[0]);
    }

    #[test]
    fn rollout_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 25;
        let ctx = TraceContext {
            a: (0..n)
                .map(|_| DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-0.6..0.6)))
                .collect(),
            b: (0..n)
                .map(|_| DMatrix::from_fn(2, 1, |_, _| rng.gen_range(-1.0..1.0)))
                .collect(),
            k: (0..n)
                .map(|_| DMatrix::from_fn(1, 2, |_, _| rng.gen_range(-0.2..0.2)))
                .collect(),
            w: (0..n)
                .map(|_| DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)))
                .collect(),
            past: (0..3)
                .map(|_| DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)))
                .collect(),
            x_start: DVector::from_column_slice(&[0.3, -0.2]),
        };
        let cost = QuadraticCost::identity(2, 1);
        let mut p = DacParams::zeros(3, 1, 2);
        p.flat = DVector::from_fn(6, |_, _| rng.gen_range(-0.5..0.5));
        let (_, g) = dac_rollout(&ctx, &p, &cost);
        for i in 0..6 {
            let mut hi = p.clone();
            hi.flat[i] += 1e-6;
            let mut lo = p.clone();
            lo.flat[i] -= 1e-6;
            let fd = (dac_rollout(&ctx, &hi, &cost).0 - dac_rollout(&ctx, &lo, &cost).0) / 2e-6;
            assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0));
        }
    }

    #[test]
    fn beats_random_feasible_policies() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w: Vec<f64> = (0..80).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut ctx = scalar_context(1.0, &w);
        ctx.past = vec![DVector::zeros(1); 3];
        let cost = QuadraticCost::identity(1, 1);
        let fit = best_dac(&ctx, 3, 2.0, &cost, 5, 0).unwrap();
        let set = DacParams::zeros(3, 1, 1).set(2.0).unwrap();
        for _ in 0..100 {
            let v = set
                .project(&DVector::from_fn(3, |_, _| rng.gen_range(-2.0..2.0)))
                .unwrap();
            let p = DacParams {
                flat: v,
                ..DacParams::zeros(3, 1, 1)
            };
            assert!(fit.cost <= dac_rollout(&ctx, &p, &cost).0 + 1e-9);
        }
    }
}
