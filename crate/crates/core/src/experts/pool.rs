use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{contract, Result};

/// Inverse-CDF draw from `weights` visited in `order`, using a single uniform `u ∈ [0,1)`.
pub fn categorical(weights: &[f64], order: impl Iterator<Item = usize> + Clone, u: f64) -> usize {
    let total: f64 = order.clone().map(|i| weights[i]).sum();
    let target = u * total;
    let mut cumulative = 0.0;
    let mut last = None;
    for i in order {
        if weights[i] <= 0.0 {
            continue;
        }
        cumulative += weights[i];
        last = Some(i);
        if target < cumulative {
            return i;
        }
    }
    last.expect("categorical over empty support")
}

/// Exponential weights over `N` experts with fixed-share smoothing and shrinking selection.
///
/// Weights are stored normalized; `log_mass` tracks `ln W_t` so unnormalized ratios stay
/// available for the retention rule.
#[derive(Debug, Clone)]
pub struct ExpertPool {
    probs: Vec<f64>,
    log_mass: f64,
    /// `w_{t+1}^i / w_t^i` from the most recent update.
    ratios: Vec<f64>,
    eta: f64,
    sigma: f64,
    current: Option<usize>,
    rng: ChaCha8Rng,
}

impl ExpertPool {
    pub fn new(n: usize, eta: f64, sigma: f64, seed: u64) -> Result<Self> {
        Self::with_rng(n, eta, sigma, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(n: usize, eta: f64, sigma: f64, rng: ChaCha8Rng) -> Result<Self> {
        if n == 0 {
            return Err(contract("expert pool needs at least one expert"));
        }
        if !(eta >= 0.0 && eta.is_finite()) || !(0.0..1.0).contains(&sigma) {
            return Err(contract(format!("invalid pool parameters eta={eta}, sigma={sigma}")));
        }
        Ok(ExpertPool {
            probs: vec![1.0 / n as f64; n],
            log_mass: (n as f64).ln(),
            ratios: vec![1.0; n],
            eta,
            sigma,
            current: None,
            rng,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn set_eta(&mut self, eta: f64) {
        self.eta = eta;
    }

    /// Normalized weights `p_t^i = w_t^i / W_t`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Unnormalized weights `w_t^i` (starting from `w_1^i = 1`).
    pub fn weights(&self) -> Vec<f64> {
        let mass = self.log_mass.exp();
        self.probs.iter().map(|p| p * mass).collect()
    }

    pub fn log_mass(&self) -> f64 {
        self.log_mass
    }

    pub fn current(&self) -> Option<usize> {
        self.current
    }

    /// Retention probability for the expert chosen last round.
    pub fn retain_probability(&self) -> Option<f64> {
        self.current.map(|i| self.ratios[i].min(1.0))
    }

    /// Restarts from uniform weights; the next selection samples afresh.
    pub fn reset(&mut self) {
        let n = self.probs.len();
        self.probs = vec![1.0 / n as f64; n];
        self.log_mass = (n as f64).ln();
        self.ratios = vec![1.0; n];
        self.current = None;
    }

    pub fn select(&mut self) -> usize {
        let n = self.probs.len();
        self.select_ordered(&(0..n).collect::<Vec<_>>())
    }

    /// Selection with the inverse-CDF visiting experts in `order`.
    ///
    /// First round: one categorical draw. Later rounds: one uniform for the retention
    /// decision, then a categorical draw only if the previous expert is dropped.
    pub fn select_ordered(&mut self, order: &[usize]) -> usize {
        let chosen = match self.current {
            None => {
                let u: f64 = self.rng.gen();
                categorical(&self.probs, order.iter().copied(), u)
            }
            Some(prev) => {
                let keep: f64 = self.rng.gen();
                if keep < self.ratios[prev].min(1.0) {
                    prev
                } else {
                    let u: f64 = self.rng.gen();
                    categorical(&self.probs, order.iter().copied(), u)
                }
            }
        };
        self.current = Some(chosen);
        chosen
    }

    /// Exponential update followed by fixed-share smoothing.
    pub fn update(&mut self, values: &[f64]) -> Result<()> {
        let n = self.probs.len();
        if values.len() != n {
            return Err(contract(format!("expected {n} expert values, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(contract(format!("expert value {v} outside [0, 1]")));
        }
        let bar: Vec<f64> = self
            .probs
            .iter()
            .zip(values)
            .map(|(p, v)| p * (-self.eta * v).exp())
            .collect();
        let bar_mass: f64 = bar.iter().sum();
        if !(bar_mass > 0.0 && bar_mass.is_finite()) {
            return Err(contract(format!("pool mass became {bar_mass}; eta too large")));
        }
        let share = self.sigma * bar_mass / n as f64;
        for i in 0..n {
            let next = (1.0 - self.sigma) * bar[i] + share;
            self.ratios[i] = next / self.probs[i];
            self.probs[i] = next / bar_mass;
        }
        self.log_mass += bar_mass.ln();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_arithmetic_two_experts() {
        let mut pool = ExpertPool::new(2, std::f64::consts::LN_2, 0.0, 0).unwrap();
        pool.select();
        pool.update(&[0.0, 1.0]).unwrap();
        let w = pool.weights();
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn smoothing_arithmetic_three_experts() {
        let mut pool = ExpertPool::new(3, 1.0, 0.1, 0).unwrap();
        pool.update(&[0.0, 0.0, 1.0]).unwrap();
        let e = (-1.0f64).exp();
        let bar_mass = 2.0 + e;
        let expected = [
            0.9 + 0.1 * bar_mass / 3.0,
            0.9 + 0.1 * bar_mass / 3.0,
            0.9 * e + 0.1 * bar_mass / 3.0,
        ];
        for (w, x) in pool.weights().iter().zip(expected) {
            assert!((w - x).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_losses_never_switch() {
        let mut pool = ExpertPool::new(2, 1.0, 0.0, 42).unwrap();
        let first = pool.select();
        for _ in 0..100 {
            pool.update(&[0.0, 0.0]).unwrap();
            assert_eq!(pool.retain_probability(), Some(1.0));
            assert_eq!(pool.select(), first);
        }
        assert!((pool.weights()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_and_raw_ratios_agree() {
        // the retention ratio must equal the ratio of unnormalized weights
        let mut pool = ExpertPool::new(4, 0.7, 0.05, 1).unwrap();
        let values: [[f64; 4]; 3] = [[0.1, 0.9, 0.4, 0.0], [1.0, 0.2, 0.3, 0.5], [0.0, 0.0, 1.0, 0.6]];
        let mut raw = vec![1.0f64; 4];
        for v in values {
            let before = raw.clone();
            let bar: Vec<f64> = raw.iter().zip(v).map(|(w, x)| w * (-0.7 * x).exp()).collect();
            let total: f64 = bar.iter().sum();
            raw = bar.iter().map(|b| 0.95 * b + 0.05 * total / 4.0).collect();
            pool.current = Some(2);
            pool.update(&v).unwrap();
            assert!((pool.ratios[2] - raw[2] / before[2]).abs() < 1e-13);
            for (a, b) in pool.weights().iter().zip(&raw) {
                assert!((a - b).abs() < 1e-12 * b.max(1.0));
            }
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut pool = ExpertPool::new(5, 2.0, 0.01, 3).unwrap();
        for t in 0..200 {
            pool.select();
            let v: Vec<f64> = (0..5).map(|i| ((t * 7 + i * 3) % 11) as f64 / 10.0).collect();
            pool.update(&v).unwrap();
            let s: f64 = pool.probabilities().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(pool.probabilities().iter().all(|p| *p > 0.0));
        }
    }

    #[test]
    fn out_of_range_values_rejected() {
        let mut pool = ExpertPool::new(2, 1.0, 0.0, 0).unwrap();
        assert!(pool.update(&[0.5, 1.5]).is_err());
        assert!(pool.update(&[0.5]).is_err());
        assert!(ExpertPool::new(0, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn categorical_respects_order() {
        let w = [0.5, 0.25, 0.25];
        assert_eq!(categorical(&w, [0, 1, 2].into_iter(), 0.1), 0);
        assert_eq!(categorical(&w, [2, 1, 0].into_iter(), 0.1), 2);
        assert_eq!(categorical(&w, [0, 1, 2].into_iter(), 0.6), 1);
    }
}
