use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pool::ExpertPool;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolConfig {
    pub experts: usize,
    pub eta: f64,
    pub sigma: f64,
}

/// `w_t^i / W_t` for every round of a fixed loss table (`table[t−1][i]`).
pub fn analytic_marginal(config: PoolConfig, table: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut pool = ExpertPool::new(config.experts, config.eta, config.sigma, 0)?;
    let mut out = Vec::with_capacity(table.len());
    for values in table {
        out.push(pool.probabilities().to_vec());
        pool.update(values)?;
    }
    Ok(out)
}

/// Indices chosen by one run of the shrinking pool on a fixed loss table.
pub fn sample_path(config: PoolConfig, table: &[Vec<f64>], seed: u64) -> Result<Vec<usize>> {
    let mut pool = ExpertPool::new(config.experts, config.eta, config.sigma, seed)?;
    let mut path = Vec::with_capacity(table.len());
    for values in table {
        path.push(pool.select());
        pool.update(values)?;
    }
    Ok(path)
}

/// Monte-Carlo frequency of `i_t = i` over `trials` independent runs.
pub fn empirical_marginal(config: PoolConfig, table: &[Vec<f64>], trials: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0usize; config.experts]; table.len()];
    for _ in 0..trials {
        let path = sample_path(config, table, master.gen())?;
        for (t, i) in path.into_iter().enumerate() {
            counts[t][i] += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|row| row.into_iter().map(|c| c as f64 / trials as f64).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn within_three_se(empirical: &[Vec<f64>], exact: &[Vec<f64>], trials: usize) -> bool {
        empirical.iter().zip(exact).all(|(er, xr)| {
            er.iter().zip(xr).all(|(e, p)| {
                let se = (p * (1.0 - p) / trials as f64).sqrt();
                (e - p).abs() <= 3.0 * se + 1e-12
            })
        })
    }

    #[test]
    fn no_learning_is_uniform() {
        let config = PoolConfig {
            experts: 3,
            eta: 0.0,
            sigma: 0.0,
        };
        let table = vec![vec![0.2, 0.9, 0.4]; 5];
        for row in analytic_marginal(config, &table).unwrap() {
            assert!(row.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn single_expert_always_chosen() {
        let config = PoolConfig {
            experts: 1,
            eta: 1.0,
            sigma: 0.0,
        };
        let table = vec![vec![0.5]; 4];
        let freq = empirical_marginal(config, &table, 10_000, 1).unwrap();
        assert!(freq.iter().all(|row| row[0] == 1.0));
    }

    #[test]
    fn two_experts_match_hand_weights() {
        let config = PoolConfig {
            experts: 2,
            eta: 1.0,
            sigma: 0.0,
        };
        let table = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let exact = analytic_marginal(config, &table).unwrap();
        // w_2 = (1, e^{-1}), w_3 = (e^{-1}, e^{-1})
        let e = (-1.0f64).exp();
        assert!((exact[1][0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((exact[2][0] - 0.5).abs() < 1e-15);
        let trials = 20_000;
        let freq = empirical_marginal(config, &table, trials, 17).unwrap();
        assert!(within_three_se(&freq, &exact, trials));
    }
}
