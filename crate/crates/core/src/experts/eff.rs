use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lifetimes::Lifetimes;
use crate::error::{contract, Result};

/// Which expert (or aggregate) the efficient pool currently follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Member {
    Active(usize),
    Unborn(usize),
    /// Some expired expert; all of them play the shared default point.
    Dead,
}

/// Working-set version of [`super::ExpertPool`] over `N` lifetime-restricted experts.
///
/// Only alive experts carry individual weights. Unborn experts share one weight and expired
/// experts are pooled into a single mass. Masses are stored normalized by `W_t`.
#[derive(Debug, Clone)]
pub struct EffPool {
    lifetimes: Lifetimes,
    total: usize,
    round: usize,
    active: Vec<(usize, f64)>,
    unborn_weight: f64,
    unborn_count: usize,
    dead_mass: f64,
    dead_count: usize,
    log_mass: f64,
    eta: f64,
    sigma: f64,
    current: Option<Member>,
    retain_ratio: f64,
    rng: ChaCha8Rng,
}

impl EffPool {
    pub fn new(total: usize, lifetimes: Lifetimes, eta: f64, sigma: f64, seed: u64) -> Result<Self> {
        if total == 0 {
            return Err(contract("expert pool needs at least one expert"));
        }
        if !(eta >= 0.0 && eta.is_finite()) || !(0.0..1.0).contains(&sigma) {
            return Err(contract(format!("invalid pool parameters eta={eta}, sigma={sigma}")));
        }
        let share = 1.0 / total as f64;
        Ok(EffPool {
            lifetimes,
            total,
            round: 1,
            active: vec![(1, share)],
            unborn_weight: share,
            unborn_count: total - 1,
            dead_mass: 0.0,
            dead_count: 0,
            log_mass: (total as f64).ln(),
            eta,
            sigma,
            current: None,
            retain_ratio: 1.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn set_eta(&mut self, eta: f64) {
        self.eta = eta;
    }

    /// Alive experts with normalized weights, ascending by index.
    pub fn active(&self) -> &[(usize, f64)] {
        &self.active
    }

    pub fn active_members(&self) -> Vec<usize> {
        self.active.iter().map(|(j, _)| *j).collect()
    }

    pub fn unborn(&self) -> (usize, f64) {
        (self.unborn_count, self.unborn_weight)
    }

    pub fn dead(&self) -> (usize, f64) {
        (self.dead_count, self.dead_mass)
    }

    pub fn log_mass(&self) -> f64 {
        self.log_mass
    }

    pub fn current(&self) -> Option<Member> {
        self.current
    }

    /// Total normalized mass; 1 up to rounding.
    pub fn mass(&self) -> f64 {
        self.active.iter().map(|(_, w)| w).sum::<f64>() + self.unborn_count as f64 * self.unborn_weight + self.dead_mass
    }

    /// Restarts from uniform weights at the current round.
    pub fn reset(&mut self) {
        let share = 1.0 / self.total as f64;
        for entry in &mut self.active {
            entry.1 = share;
        }
        self.unborn_weight = share;
        self.dead_mass = self.dead_count as f64 * share;
        self.log_mass = (self.total as f64).ln();
        self.current = None;
        self.retain_ratio = 1.0;
    }

    /// Same random-stream contract as [`super::ExpertPool::select_ordered`], with the
    /// inverse CDF visiting alive experts, then the expired pool, then unborn experts.
    pub fn select(&mut self) -> Member {
        let chosen = match self.current {
            Some(prev) => {
                let keep: f64 = self.rng.gen();
                if keep < self.retain_ratio.min(1.0) {
                    prev
                } else {
                    let u: f64 = self.rng.gen();
                    self.draw(u)
                }
            }
            None => {
                let u: f64 = self.rng.gen();
                self.draw(u)
            }
        };
        self.current = Some(chosen);
        chosen
    }

    fn draw(&self, u: f64) -> Member {
        let target = u * self.mass();
        let mut cumulative = 0.0;
        let mut last = None;
        for &(j, w) in &self.active {
            cumulative += w;
            last = Some(Member::Active(j));
            if target < cumulative {
                return Member::Active(j);
            }
        }
        if self.dead_mass > 0.0 {
            cumulative += self.dead_mass;
            last = Some(Member::Dead);
            if target < cumulative {
                return Member::Dead;
            }
        }
        if self.unborn_count > 0 && self.unborn_weight > 0.0 {
            let first = self.lifetimes.born_by(self.round) + 1;
            let offset = ((target - cumulative) / self.unborn_weight).floor().max(0.0) as usize;
            return Member::Unborn(first + offset.min(self.unborn_count - 1));
        }
        last.expect("pool has positive mass")
    }

    /// Expert with the largest individual weight; expired experts count at their average.
    pub fn argmax(&self) -> Member {
        let mut best = (Member::Dead, f64::NEG_INFINITY);
        for &(j, w) in &self.active {
            if w > best.1 {
                best = (Member::Active(j), w);
            }
        }
        if self.unborn_count > 0 && self.unborn_weight > best.1 {
            best = (
                Member::Unborn(self.lifetimes.born_by(self.round) + 1),
                self.unborn_weight,
            );
        }
        if self.dead_count > 0 && self.dead_mass / self.dead_count as f64 > best.1 {
            best = (Member::Dead, self.dead_mass / self.dead_count as f64);
        }
        best.0
    }

    /// Updates with the alive experts' values (aligned with [`Self::active`]) and the value of
    /// the shared default point, then advances to the next round's working set.
    pub fn update(&mut self, active_values: &[f64], shared_value: f64) -> Result<()> {
        if active_values.len() != self.active.len() {
            return Err(contract(format!(
                "expected {} active values, got {}",
                self.active.len(),
                active_values.len()
            )));
        }
        if let Some(v) = active_values
            .iter()
            .chain([&shared_value])
            .find(|v| !(0.0..=1.0).contains(*v))
        {
            return Err(contract(format!("expert value {v} outside [0, 1]")));
        }
        let shared_decay = (-self.eta * shared_value).exp();
        let bar_active: Vec<f64> = self
            .active
            .iter()
            .zip(active_values)
            .map(|((_, w), v)| w * (-self.eta * v).exp())
            .collect();
        let bar_unborn = self.unborn_weight * shared_decay;
        let bar_dead = self.dead_mass * shared_decay;
        let bar_mass = bar_active.iter().sum::<f64>() + self.unborn_count as f64 * bar_unborn + bar_dead;
        if !(bar_mass > 0.0 && bar_mass.is_finite()) {
            return Err(contract(format!("pool mass became {bar_mass}; eta too large")));
        }
        let share = self.sigma * bar_mass / self.total as f64;
        let next_unborn = (1.0 - self.sigma) * bar_unborn + share;
        let next_dead = (1.0 - self.sigma) * bar_dead + self.dead_count as f64 * share;

        self.retain_ratio = match self.current {
            Some(Member::Active(j)) => {
                let k = self
                    .active
                    .iter()
                    .position(|(i, _)| *i == j)
                    .expect("current expert alive");
                ((1.0 - self.sigma) * bar_active[k] + share) / self.active[k].1
            }
            Some(Member::Unborn(_)) => next_unborn / self.unborn_weight,
            Some(Member::Dead) => next_dead / self.dead_mass,
            None => 1.0,
        };

        for (entry, bar) in self.active.iter_mut().zip(&bar_active) {
            entry.1 = ((1.0 - self.sigma) * bar + share) / bar_mass;
        }
        self.unborn_weight = next_unborn / bar_mass;
        self.dead_mass = next_dead / bar_mass;
        self.log_mass += bar_mass.ln();
        self.advance()
    }

    fn advance(&mut self) -> Result<()> {
        let t = self.round;
        let expiring = self.lifetimes.expiring(t);
        if expiring.len() > 1 {
            return Err(contract(format!(
                "{} experts expire at round {t}; at most one allowed",
                expiring.len()
            )));
        }
        for j in expiring {
            let k = self
                .active
                .iter()
                .position(|(i, _)| *i == j)
                .expect("expiring expert alive");
            let (_, w) = self.active.remove(k);
            self.dead_mass += w;
            self.dead_count += 1;
            if self.current == Some(Member::Active(j)) {
                self.current = Some(Member::Dead);
            }
        }
        if let Some(j) = self.lifetimes.newborn(t + 1).filter(|&j| j <= self.total) {
            self.active.push((j, self.unborn_weight));
            self.unborn_count -= 1;
            if self.current == Some(Member::Unborn(j)) {
                self.current = Some(Member::Active(j));
            }
        }
        self.round = t + 1;
        Ok(())
    }
}
