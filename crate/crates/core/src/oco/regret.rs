use nalgebra::DVector;

use super::loss::MemoryLoss;
use super::set::DecisionSet;

/// Family of intervals over which adaptive regret is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalGrid {
    /// `[k·2^j + 1, (k+1)·2^j]` inside `[1, T]`, plus `[1, T]` itself.
    Dyadic,
    /// Every `[r, s]` with `1 ≤ r ≤ s ≤ T`.
    Full,
}

impl IntervalGrid {
    pub fn intervals(self, horizon: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        if horizon == 0 {
            return out;
        }
        match self {
            IntervalGrid::Dyadic => {
                let mut len = 1;
                while len <= horizon {
                    let mut start = 1;
                    while start + len - 1 <= horizon {
                        out.push((start, start + len - 1));
                        start += len;
                    }
                    len *= 2;
                }
                if !out.contains(&(1, horizon)) {
                    out.push((1, horizon));
                }
            }
            IntervalGrid::Full => {
                for r in 1..=horizon {
                    for s in r..=horizon {
                        out.push((r, s));
                    }
                }
            }
        }
        out
    }
}

impl std::str::FromStr for IntervalGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dyadic" => Ok(IntervalGrid::Dyadic),
            "full" => Ok(IntervalGrid::Full),
            other => Err(format!("unknown interval grid `{other}` (expected dyadic or full)")),
        }
    }
}

/// Result of the fixed-point comparator search.
#[derive(Debug, Clone)]
pub struct FixedPointFit {
    pub point: DVector<f64>,
    pub cost: f64,
    pub converged: bool,
    pub grad_norm: f64,
}

/// Minimizes `Σ f̃_t(z)` over `set` by projected gradient descent with backtracking.
pub fn best_fixed_point(losses: &[&dyn MemoryLoss], set: &DecisionSet, iterations: usize, tol: f64) -> FixedPointFit {
    let objective = |z: &DVector<f64>| losses.iter().map(|l| l.surrogate(z)).sum::<f64>();
    let gradient = |z: &DVector<f64>| {
        let mut g = DVector::zeros(z.len());
        for l in losses {
            g += l.surrogate_grad(z);
        }
        g
    };
    let mut z = set.center();
    let mut value = objective(&z);
    let mut step = 1.0 / losses.len().max(1) as f64;
    let mut converged = false;
    let mut grad = gradient(&z);
    for _ in 0..iterations {
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = set.project(&(&z - &grad * step)).expect("dimension checked by caller");
            let cand_value = objective(&candidate);
            let moved = &candidate - &z;
            // sufficient decrease for projected steps
            if cand_value <= value + grad.dot(&moved) + moved.norm_squared() / (2.0 * step) + 1e-15 {
                accepted = Some((candidate, cand_value));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_value)) = accepted else { break };
        let moved = (&next - &z).norm();
        z = next;
        value = next_value;
        grad = gradient(&z);
        step *= 2.0;
        if moved <= tol {
            converged = true;
            break;
        }
    }
    // projected-gradient residual as the optimality measure
    let residual = (&z - set.project(&(&z - &grad)).expect("dimension checked by caller")).norm();
    if !converged {
        log::warn!("fixed-point comparator did not converge; projected gradient norm {residual:.3e}");
    }
    FixedPointFit {
        point: z,
        cost: value,
        converged,
        grad_norm: residual,
    }
}

/// Minimizes a 1-D objective on `[lo, hi]` by grid search with the given spacing.
pub fn grid_search_1d(objective: impl Fn(f64) -> f64, lo: f64, hi: f64, spacing: f64) -> (f64, f64) {
    let steps = ((hi - lo) / spacing).round() as usize;
    (0..=steps)
        .map(|k| (lo + k as f64 * spacing).min(hi))
        .map(|z| (z, objective(z)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid")
}

/// Prefix sums for scalar losses `s_t (z − c_t)²`, giving the best fixed point on any
/// interval in O(1).
#[derive(Debug, Clone)]
pub struct QuadraticSums {
    weight: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl QuadraticSums {
    /// `terms[t−1] = (scale_t, target_t)`.
    pub fn new(terms: &[(f64, f64)]) -> Self {
        let mut weight = vec![0.0];
        let mut first = vec![0.0];
        let mut second = vec![0.0];
        for &(s, c) in terms {
            weight.push(weight.last().unwrap() + s);
            first.push(first.last().unwrap() + s * c);
            second.push(second.last().unwrap() + s * c * c);
        }
        QuadraticSums { weight, first, second }
    }

    /// Best point in `[lo, hi]` for the interval `[r, s]` and its cumulative loss.
    pub fn best(&self, r: usize, s: usize, lo: f64, hi: f64) -> (f64, f64) {
        let w = self.weight[s] - self.weight[r - 1];
        let f = self.first[s] - self.first[r - 1];
        let q = self.second[s] - self.second[r - 1];
        if w <= 0.0 {
            return (0.5 * (lo + hi), 0.0);
        }
        // the objective is w·(z − f/w)² + q − f²/w, so clamping the mean is exact
        let z = (f / w).clamp(lo, hi);
        (z, (w * z * z - 2.0 * f * z + q).max(0.0))
    }
}

/// Regret of a scalar algorithm against the best fixed point on each interval of the grid.
///
/// `incurred[t−1]` is the algorithm's loss at round `t`.
pub fn quadratic_interval_regrets(
    incurred: &[f64],
    sums: &QuadraticSums,
    lo: f64,
    hi: f64,
    grid: IntervalGrid,
) -> Vec<((usize, usize), f64)> {
    let mut prefix = vec![0.0];
    for l in incurred {
        prefix.push(prefix.last().unwrap() + l);
    }
    grid.intervals(incurred.len())
        .into_iter()
        .map(|(r, s)| ((r, s), prefix[s] - prefix[r - 1] - sums.best(r, s, lo, hi).1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oco::QuadraticLoss;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dyadic_grid_counts() {
        let grid = IntervalGrid::Dyadic.intervals(8);
        assert_eq!(grid.len(), 8 + 4 + 2 + 1);
        assert!(grid.contains(&(5, 8)));
        let odd = IntervalGrid::Dyadic.intervals(6);
        assert!(odd.contains(&(1, 6)));
        assert_eq!(IntervalGrid::Full.intervals(4).len(), 10);
    }

    #[test]
    fn best_fixed_point_is_mean_of_targets() {
        let set = DecisionSet::interval(-1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let targets: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let losses: Vec<QuadraticLoss> = targets
            .iter()
            .map(|c| QuadraticLoss::on(&set, DVector::from_element(1, *c), 1.0))
            .collect();
        let refs: Vec<&dyn MemoryLoss> = losses.iter().map(|l| l as &dyn MemoryLoss).collect();
        let fit = best_fixed_point(&refs, &set, 500, 1e-10);
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        assert!(fit.converged);
        assert!((fit.point[0] - mean).abs() < 1e-8);
        let (grid_z, _) = grid_search_1d(
            |z| refs.iter().map(|l| l.surrogate(&DVector::from_element(1, z))).sum(),
            -1.0,
            1.0,
            1e-3,
        );
        assert!((grid_z - fit.point[0]).abs() <= 1e-3);
    }

    #[test]
    fn constrained_optimum_sits_on_boundary() {
        let set = DecisionSet::interval(-1.0, 1.0).unwrap();
        let loss = QuadraticLoss::on(&set, DVector::from_element(1, 3.0), 1.0);
        let refs: Vec<&dyn MemoryLoss> = vec![&loss; 3];
        let fit = best_fixed_point(&refs, &set, 500, 1e-10);
        assert!((fit.point[0] - 1.0).abs() < 1e-12);
        assert!((fit.cost - 12.0).abs() < 1e-9);
    }

    #[test]
    fn prefix_sums_agree_with_direct_minimization() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let terms: Vec<(f64, f64)> = (0..30)
            .map(|_| (rng.gen_range(0.1..1.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let sums = QuadraticSums::new(&terms);
        for (r, s) in IntervalGrid::Full.intervals(30) {
            let (z, cost) = sums.best(r, s, -1.0, 1.0);
            let (gz, gcost) = grid_search_1d(
                |z| terms[r - 1..s].iter().map(|(w, c)| w * (z - c) * (z - c)).sum(),
                -1.0,
                1.0,
                1e-4,
            );
            assert!(cost <= gcost + 1e-9);
            assert!((z - gz).abs() <= 2e-4);
        }
    }

    #[test]
    fn finer_grid_supremum_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let terms: Vec<(f64, f64)> = (0..32).map(|_| (1.0, rng.gen_range(-1.0..1.0))).collect();
        let incurred: Vec<f64> = terms.iter().map(|(_, c)| (0.3 - c) * (0.3 - c)).collect();
        let sums = QuadraticSums::new(&terms);
        let sup = |grid| {
            quadratic_interval_regrets(&incurred, &sums, -1.0, 1.0, grid)
                .into_iter()
                .map(|(_, r)| r)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        assert!(sup(IntervalGrid::Full) >= sup(IntervalGrid::Dyadic));
    }
}
