use nalgebra::{DMatrix, DVector};

use super::cost::StageCost;
use crate::error::{contract, Result};

/// Closed-loop state under `u = K x` after replaying rounds `from..to` from zero.
pub fn proxy_rollout(
    a: &[DMatrix<f64>],
    b: &[DMatrix<f64>],
    k: &[DMatrix<f64>],
    w: &[DVector<f64>],
    from: usize,
    to: usize,
) -> DVector<f64> {
    let mut x = DVector::zeros(w[0].len());
    for tau in from..to {
        x = (&a[tau] + &b[tau] * &k[tau]) * x + &w[tau];
    }
    x
}

/// Largest cost gap `|c(x_t, K_t x_t) − c(x̂_t, K_t x̂_t)|` along the probe
/// trajectory, where `x̂_t` restarts the closed loop from zero `H+1` rounds earlier.
///
/// All slices are indexed by round, zero-based.
pub fn memory_epsilon(
    a: &[DMatrix<f64>],
    b: &[DMatrix<f64>],
    k: &[DMatrix<f64>],
    w: &[DVector<f64>],
    memory: usize,
    cost: &dyn StageCost,
) -> Result<f64> {
    let n = w.len();
    if n == 0 || a.len() != n || b.len() != n || k.len() != n {
        return Err(contract("memory probe needs equally long, nonempty sequences"));
    }
    let mut x = DVector::zeros(w[0].len());
    let mut eps: f64 = 0.0;
    for t in 0..n {
        // x is the state at round t (zero-based), built from w[0..t]
        let proxy = proxy_rollout(a, b, k, w, t.saturating_sub(memory + 1), t);
        let c_true = cost.value(&x, &(&k[t] * &x));
        let c_proxy = cost.value(&proxy, &(&k[t] * &proxy));
        eps = eps.max((c_true - c_proxy).abs());
        x = (&a[t] + &b[t] * &k[t]) * x + &w[t];
    }
    Ok(eps)
}
