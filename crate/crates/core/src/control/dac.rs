use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::cost::StageCost;
use crate::error::{contract, Result};
use crate::oco::{DecisionSet, StepSchedule};

/// Stacked DAC matrices `M^{[1..H]}`, each `d_u × d_x`, flattened block by block in
/// column-major order (the layout of [`DecisionSet::DacBudget`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DacParams {
    pub memory: usize,
    pub rows: usize,
    pub cols: usize,
    pub flat: DVector<f64>,
}

impl DacParams {
    pub fn zeros(memory: usize, rows: usize, cols: usize) -> Self {
        DacParams {
            memory,
            rows,
            cols,
            flat: DVector::zeros(memory * rows * cols),
        }
    }

    pub fn from_blocks(blocks: &[DMatrix<f64>]) -> Self {
        let (rows, cols) = blocks.first().map(|m| m.shape()).unwrap_or((0, 0));
        let flat = DVector::from_iterator(
            blocks.len() * rows * cols,
            blocks.iter().flat_map(|m| m.iter().copied()),
        );
        DacParams {
            memory: blocks.len(),
            rows,
            cols,
            flat,
        }
    }

    /// `M^{[j]}` for `j` in `1..=H`.
    pub fn block(&self, j: usize) -> DMatrix<f64> {
        let size = self.rows * self.cols;
        DMatrix::from_column_slice(self.rows, self.cols, &self.flat.as_slice()[(j - 1) * size..j * size])
    }

    pub fn set(&self, budget: f64) -> Result<DecisionSet> {
        DecisionSet::dac_budget(self.memory, self.rows, self.cols, budget)
    }

    /// Adds `Σ_j M^{[j]} w_j` into `out`, where `w(j)` yields the disturbance paired with block `j`.
    fn apply<'a>(&self, w: impl Fn(usize) -> &'a DVector<f64>, out: &mut DVector<f64>) {
        let size = self.rows * self.cols;
        let m = self.flat.as_slice();
        for j in 1..=self.memory {
            let wj = w(j);
            let block = &m[(j - 1) * size..j * size];
            for c in 0..self.cols {
                let wc = wj[c];
                if wc != 0.0 {
                    for r in 0..self.rows {
                        out[r] += block[c * self.rows + r] * wc;
                    }
                }
            }
        }
    }

    fn accumulate_outer(grad: &mut [f64], rows: usize, offset: usize, g: &DVector<f64>, w: &DVector<f64>) {
        for (c, wc) in w.iter().enumerate() {
            if *wc != 0.0 {
                for r in 0..rows {
                    grad[offset + c * rows + r] += g[r] * wc;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Step {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    k: DMatrix<f64>,
}

/// Sliding window of the last `2H+1` disturbances and the last `H+1` `(A, B, K)` triples,
/// shared by every DAC learner of a controller.
#[derive(Debug, Clone)]
pub struct History {
    memory: usize,
    ws: VecDeque<DVector<f64>>,
    steps: VecDeque<Step>,
    zero: DVector<f64>,
    recorded: usize,
}

impl History {
    pub fn new(memory: usize, state_dim: usize) -> Self {
        History {
            memory,
            ws: VecDeque::with_capacity(2 * memory + 1),
            steps: VecDeque::with_capacity(memory + 1),
            zero: DVector::zeros(state_dim),
            recorded: 0,
        }
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Rounds recorded so far.
    pub fn len(&self) -> usize {
        self.recorded
    }

    pub fn is_empty(&self) -> bool {
        self.recorded == 0
    }

    /// Records round `τ`: its system, the stabilizer used, and the recovered disturbance.
    pub fn push(&mut self, a: &DMatrix<f64>, b: &DMatrix<f64>, k: &DMatrix<f64>, w: &DVector<f64>) {
        if self.ws.len() == 2 * self.memory + 1 {
            self.ws.pop_front();
        }
        self.ws.push_back(w.clone());
        if self.steps.len() == self.memory + 1 {
            self.steps.pop_front();
        }
        self.steps.push_back(Step {
            a: a.clone(),
            b: b.clone(),
            k: k.clone(),
        });
        self.recorded += 1;
    }

    /// Disturbance `back` rounds before the latest recorded one; zero before the first round.
    pub fn w(&self, back: usize) -> &DVector<f64> {
        if back < self.ws.len() {
            &self.ws[self.ws.len() - 1 - back]
        } else {
            &self.zero
        }
    }

    fn step(&self, back: usize) -> Option<&Step> {
        (back < self.steps.len()).then(|| &self.steps[self.steps.len() - 1 - back])
    }

    /// Stabilizer of the latest recorded round.
    pub fn latest_gain(&self) -> Option<&DMatrix<f64>> {
        self.steps.back().map(|s| &s.k)
    }
}

/// `u_t = K_t x_t + Σ_{i=1}^H M^{[i]} w_{t−i}`; the history's latest entry is round `t−1`.
pub fn dac_action(k: &DMatrix<f64>, x: &DVector<f64>, params: &DacParams, history: &History) -> DVector<f64> {
    let mut u = k * x;
    params.apply(|j| history.w(j - 1), &mut u);
    u
}

/// Proxy state `x̂_{t+1}`: the closed loop restarted from zero at `t−H` and driven by `M`,
/// where `t` is the latest recorded round.
pub fn proxy_state(params: &DacParams, history: &History) -> DVector<f64> {
    let h = history.memory;
    let mut x = history.zero.clone();
    for back in (0..=h).rev() {
        let Some(step) = history.step(back) else { continue };
        let mut v = DVector::zeros(params.rows);
        params.apply(|j| history.w(back + j), &mut v);
        x = (&step.a + &step.b * &step.k) * x + &step.b * v + history.w(back);
    }
    x
}

/// Proxy cost `c(x̂_{t+1}(M), u_{t+1}(M))` and its gradient in the flattened parameters.
///
/// The action pairs the latest stabilizer with the proxy state and the disturbances
/// `w_{t+1−j}`. Returns `(value, gradient)` for the raw cost.
pub fn proxy_loss(params: &DacParams, history: &History, cost: &dyn StageCost) -> Result<(f64, DVector<f64>)> {
    let Some(k) = history.latest_gain() else {
        return Err(contract("proxy loss needs at least one recorded round"));
    };
    let h = history.memory;
    let size = params.rows * params.cols;
    let x_hat = proxy_state(params, history);
    let mut u = k * &x_hat;
    params.apply(|j| history.w(j - 1), &mut u);
    let value = cost.value(&x_hat, &u);
    let (gx, gu) = cost.gradient(&x_hat, &u);

    let mut grad = vec![0.0; params.flat.len()];
    for j in 1..=h {
        DacParams::accumulate_outer(&mut grad, params.rows, (j - 1) * size, &gu, history.w(j - 1));
    }
    // adjoint of x_{τ+1} walking back through the window
    let mut lambda = gx + k.transpose() * gu;
    for back in 0..=h {
        let Some(step) = history.step(back) else { break };
        let g = step.b.transpose() * &lambda;
        for j in 1..=h {
            DacParams::accumulate_outer(&mut grad, params.rows, (j - 1) * size, &g, history.w(back + j));
        }
        lambda = (&step.a + &step.b * &step.k).transpose() * lambda;
    }
    Ok((value, DVector::from_vec(grad)))
}

/// Projected-OGD learner over DAC parameters; the GPC update without the stabilizer.
#[derive(Debug, Clone)]
pub struct DacLearner {
    params: DacParams,
    set: DecisionSet,
    schedule: StepSchedule,
    updates: usize,
}

impl DacLearner {
    pub fn new(memory: usize, input_dim: usize, state_dim: usize, budget: f64, schedule: StepSchedule) -> Result<Self> {
        let params = DacParams::zeros(memory, input_dim, state_dim);
        let set = params.set(budget)?;
        Ok(DacLearner {
            params,
            set,
            schedule,
            updates: 0,
        })
    }

    pub fn params(&self) -> &DacParams {
        &self.params
    }

    pub fn set(&self) -> &DecisionSet {
        &self.set
    }

    /// `Σ_i M^{[i]} w_{t−i}`, the part of the action added to the stabilizer's.
    pub fn residual(&self, history: &History) -> DVector<f64> {
        let mut v = DVector::zeros(self.params.rows);
        self.params.apply(|j| history.w(j - 1), &mut v);
        v
    }

    /// Evaluates the proxy cost at the current parameters, takes one projected step, and
    /// returns the evaluated raw cost.
    pub fn step(&mut self, history: &History, cost: &dyn StageCost) -> Result<f64> {
        let (value, grad) = proxy_loss(&self.params, history, cost)?;
        self.updates += 1;
        let eta = self.schedule.eta(self.updates)?;
        let moved = &self.params.flat - grad * eta;
        self.params.flat = self.set.project(&moved)?;
        Ok(value)
    }
}
