use crate::error::{contract, Result};

/// Minimizer sequence that flips between `+1` and `−1` every `k = ⌈4R⌉` rounds.
///
/// Round `t` carries the loss `(z − c_t)²` on `[−1, 1]`; the horizon is truncated to the
/// `⌊T/k⌋` whole blocks.
pub fn lower_bound_adversary(horizon: usize, target_regret: f64) -> Result<Vec<f64>> {
    let k = (4.0 * target_regret).ceil();
    if !(k >= 1.0) || k > horizon as f64 {
        return Err(contract(format!(
            "block length {k} must be in [1, T] for T = {horizon}"
        )));
    }
    let k = k as usize;
    let blocks = horizon / k;
    Ok((0..blocks * k)
        .map(|t| if (t / k) % 2 == 0 { 1.0 } else { -1.0 })
        .collect())
}
