/// Doubling-trick schedule for the pool learning rate: epoch `e` assumes the best expert's
/// cumulative loss stays below `OPT_e = C·4^e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochSchedule {
    pub base: f64,
    pub epoch: u32,
}

impl Default for EpochSchedule {
    fn default() -> Self {
        EpochSchedule { base: 1.0, epoch: 0 }
    }
}

/// Largest rate handed out; the exponential update is analysed for `η ≤ 1/2`.
const MAX_ETA: f64 = 0.5;

impl EpochSchedule {
    pub fn budget(&self) -> f64 {
        self.base * 4f64.powi(self.epoch as i32)
    }

    /// `(4H²L·shift·√OPT_e)^{-1}`, with the memory factor floored at 1 and the rate capped
    /// at 1/2.
    pub fn eta(&self, memory: usize, lipschitz: f64, shift_bound: f64) -> f64 {
        let h = memory as f64;
        let factor = (4.0 * h * h * lipschitz * shift_bound).max(1.0);
        (1.0 / (factor * self.budget().sqrt())).min(MAX_ETA)
    }

    /// Advances the epoch while `min_cum_loss + 1 > OPT_e`; returns whether a restart happened
    /// and the rate to use from now on.
    pub fn observe(&mut self, min_cum_loss: f64, memory: usize, lipschitz: f64, shift_bound: f64) -> (f64, bool) {
        let mut restart = false;
        while min_cum_loss + 1.0 > self.budget() {
            self.epoch += 1;
            restart = true;
        }
        (self.eta(memory, lipschitz, shift_bound), restart)
    }
}
