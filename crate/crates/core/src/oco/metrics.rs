use nalgebra::DVector;

use super::loss::MemoryLoss;

/// Decisions `z_1, z_2, …` with the memory loss and surrogate loss suffered at each round.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub points: Vec<DVector<f64>>,
    pub memory_losses: Vec<f64>,
    pub surrogate_losses: Vec<f64>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Appends `z_t` and evaluates `loss` on the window ending there.
    pub fn record(&mut self, point: DVector<f64>, loss: &dyn MemoryLoss) {
        self.points.push(point);
        let t = self.points.len();
        let window = memory_window(&self.points, t, loss.memory());
        self.memory_losses.push(loss.evaluate(&window));
        self.surrogate_losses.push(loss.surrogate(&self.points[t - 1]));
    }
}

/// `z_{t−H}, …, z_t` with rounds before 1 replaced by `z_1` (`t` is 1-based).
pub fn memory_window(points: &[DVector<f64>], t: usize, memory: usize) -> Vec<DVector<f64>> {
    (0..=memory)
        .map(|back| {
            let idx = (t as isize - (memory - back) as isize).max(1) as usize;
            points[idx - 1].clone()
        })
        .collect()
}

/// `Σ_{t=1}^{T−1} ‖z_{t+1} − z_t‖`.
pub fn action_shift(points: &[DVector<f64>]) -> f64 {
    points.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum()
}

/// Shift accumulated inside `[r, s]`: `Σ_{t=r}^{s−1} ‖z_{t+1} − z_t‖` (1-based, inclusive).
pub fn action_shift_on(points: &[DVector<f64>], r: usize, s: usize) -> f64 {
    if s <= r {
        return 0.0;
    }
    action_shift(&points[r - 1..s])
}

/// `Σ_{t=r}^{s} |f_t(z_{t−H:t}) − f̃_t(z_t)|`, with `losses[t−1]` the loss of round `t`.
pub fn stability_gap(losses: &[&dyn MemoryLoss], points: &[DVector<f64>], r: usize, s: usize) -> f64 {
    (r..=s)
        .map(|t| {
            let loss = losses[t - 1];
            let window = memory_window(points, t, loss.memory());
            (loss.evaluate(&window) - loss.surrogate(&points[t - 1])).abs()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oco::{DecisionSet, QuadraticLoss, ShiftPenalized, WindowMean};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn shift_examples() {
        assert_eq!(action_shift(&[s(0.0), s(0.0), s(0.0)]), 0.0);
        assert_eq!(action_shift(&[s(0.0), s(1.0), s(0.0)]), 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<_> = (0..5).map(|_| DVector::from_fn(2, |_, _| rng.gen::<f64>())).collect();
        let direct: f64 = (0..4).map(|i| (&pts[i + 1] - &pts[i]).norm()).sum();
        assert!((action_shift(&pts) - direct).abs() < 1e-15);
        assert!((action_shift_on(&pts, 2, 4) - (&pts[2] - &pts[1]).norm() - (&pts[3] - &pts[2]).norm()).abs() < 1e-15);
    }

    #[test]
    fn window_pads_with_first_point() {
        let pts = vec![s(1.0), s(2.0), s(3.0)];
        let w = memory_window(&pts, 2, 3);
        assert_eq!(w, vec![s(1.0), s(1.0), s(1.0), s(2.0)]);
    }

    #[test]
    fn gap_vanishes_without_memory_or_movement() {
        let set = DecisionSet::interval(-1.0, 1.0).unwrap();
        let quad = QuadraticLoss::on(&set, s(0.3), 0.25);
        let mean = WindowMean {
            inner: quad.clone(),
            memory: 2,
        };
        let constant = vec![s(0.5); 6];
        let losses: Vec<&dyn MemoryLoss> = vec![&mean; 6];
        assert_eq!(stability_gap(&losses, &constant, 1, 6), 0.0);

        let moving: Vec<_> = (0..6).map(|i| s(i as f64 / 6.0)).collect();
        let memoryless: Vec<&dyn MemoryLoss> = vec![&quad; 6];
        assert_eq!(stability_gap(&memoryless, &moving, 1, 6), 0.0);
    }

    #[test]
    fn shift_penalty_gap_equals_shift() {
        let set = DecisionSet::interval(-1.0, 1.0).unwrap();
        let loss = ShiftPenalized {
            inner: QuadraticLoss::on(&set, s(0.0), 0.25),
            weight: 1.0,
        };
        let pts = vec![s(0.0), s(0.7), s(-0.2)];
        let losses: Vec<&dyn MemoryLoss> = vec![&loss; 3];
        let gap = stability_gap(&losses, &pts, 1, 3);
        assert!((gap - action_shift(&pts)).abs() < 1e-15);
    }

    #[test]
    fn trajectory_records_consistent_lengths() {
        let set = DecisionSet::interval(-1.0, 1.0).unwrap();
        let loss = ShiftPenalized {
            inner: QuadraticLoss::on(&set, s(1.0), 0.25),
            weight: 0.5,
        };
        let mut traj = Trajectory::new();
        for z in [0.0, 0.5, 0.25] {
            traj.record(s(z), &loss);
        }
        assert_eq!(traj.len(), 3);
        assert_eq!(traj.memory_losses.len(), traj.surrogate_losses.len());
        assert!((traj.memory_losses[1] - traj.surrogate_losses[1] - 0.25).abs() < 1e-15);
    }
}
