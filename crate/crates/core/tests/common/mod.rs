#![allow(dead_code)]

use adactl::experts::{EffPool, ExpertPool, Lifetimes, Member};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of running the full pool and the working-set pool side by side.
pub struct Equivalence {
    pub max_weight_gap: f64,
    pub index_mismatches: usize,
    pub rounds: usize,
}

/// Runs both pools on random values in `[0, 1]` with identical seeds. The full pool samples
/// with the grouped order (alive, expired, unborn) so the two inverse CDFs line up.
pub fn run_equivalence(horizon: usize, sigma: f64, eta: f64, seed: u64) -> Equivalence {
    let lifetimes = Lifetimes::default();
    let mut values_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut full = ExpertPool::new(horizon, eta, sigma, seed).unwrap();
    let mut eff = EffPool::new(horizon, lifetimes, eta, sigma, seed).unwrap();
    let mut max_gap: f64 = 0.0;
    let mut mismatches = 0;
    for t in 1..=horizon {
        let alive = lifetimes.members(t);
        assert_eq!(alive, eff.active_members());
        let dead: Vec<usize> = (1..=t).filter(|j| !alive.contains(j)).collect();
        let order: Vec<usize> = alive
            .iter()
            .chain(&dead)
            .copied()
            .chain(t + 1..=horizon)
            .map(|j| j - 1)
            .collect();

        let chosen_full = full.select_ordered(&order) + 1;
        let class = if alive.contains(&chosen_full) {
            Member::Active(chosen_full)
        } else if chosen_full <= t {
            Member::Dead
        } else {
            Member::Unborn(chosen_full)
        };
        if class != eff.select() {
            mismatches += 1;
        }

        let shared: f64 = values_rng.gen();
        let active: Vec<f64> = alive.iter().map(|_| values_rng.gen()).collect();
        let all: Vec<f64> = (1..=horizon)
            .map(|j| alive.iter().position(|a| *a == j).map(|k| active[k]).unwrap_or(shared))
            .collect();
        full.update(&all).unwrap();
        eff.update(&active, shared).unwrap();

        let p = full.probabilities();
        for &(j, w) in eff.active() {
            max_gap = max_gap.max((p[j - 1] - w).abs());
        }
        let born = lifetimes.born_by(t + 1).min(horizon);
        let (unborn_count, unborn_w) = eff.unborn();
        assert_eq!(unborn_count, horizon - born);
        for j in born + 1..=horizon {
            max_gap = max_gap.max((p[j - 1] - unborn_w).abs());
        }
        let next_alive = lifetimes.members(t + 1);
        let dead_sum: f64 = (1..=born.min(t + 1))
            .filter(|j| !next_alive.contains(j))
            .map(|j| p[j - 1])
            .sum();
        max_gap = max_gap.max((dead_sum - eff.dead().1).abs());
        max_gap = max_gap.max((full.log_mass() - eff.log_mass()).abs());
    }
    Equivalence {
        max_weight_gap: max_gap,
        index_mismatches: mismatches,
        rounds: horizon,
    }
}
