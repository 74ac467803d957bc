use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const RICCATI_TOL: f64 = 1e-10;
pub const RICCATI_MAX_ITER: usize = 10_000;

/// Solution of the discrete algebraic Riccati equation; the feedback is `u = K x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riccati {
    pub gain: DMatrix<f64>,
    pub cost_to_go: DMatrix<f64>,
    pub iterations: usize,
}

fn gain_from(a: &DMatrix<f64>, b: &DMatrix<f64>, p: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let btp = b.transpose() * p;
    let s = r + &btp * b;
    let inv = s
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| s.try_inverse())
        .ok_or_else(|| Error::Numerical("R + BᵀPB is singular".into()))?;
    Ok(-(inv * btp * a))
}

fn iterate(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    start: DMatrix<f64>,
) -> Result<Riccati> {
    let mut p = start;
    for it in 1..=RICCATI_MAX_ITER {
        let k = gain_from(a, b, &p, r)?;
        // P ← Q + AᵀPA + AᵀPBK  (the K term equals −AᵀPB(R+BᵀPB)⁻¹BᵀPA)
        let next = q + a.transpose() * &p * a + a.transpose() * &p * b * &k;
        let next = 0.5 * (&next + next.transpose());
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!(
                "Riccati iteration diverged after {it} iterations"
            )));
        }
        let change = (&next - &p).norm();
        p = next;
        if change <= RICCATI_TOL {
            let gain = gain_from(a, b, &p, r)?;
            return Ok(Riccati {
                gain,
                cost_to_go: p,
                iterations: it,
            });
        }
    }
    Err(Error::Numerical(format!(
        "Riccati iteration did not converge in {RICCATI_MAX_ITER} iterations"
    )))
}

/// Infinite-horizon LQR gain by fixed-point iteration from `P = Q`.
pub fn lqr_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<Riccati> {
    iterate(a, b, q, r, q.clone())
}

/// Caches the LQR gain of the most recent `(A, B)` and recomputes it when they change,
/// warm-starting from the previous cost-to-go.
#[derive(Debug, Clone)]
pub struct Stabilizer {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    last: Option<(DMatrix<f64>, DMatrix<f64>, Riccati)>,
}

impl Stabilizer {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Self {
        Stabilizer { q, r, last: None }
    }

    pub fn identity(dx: usize, du: usize) -> Self {
        Self::new(DMatrix::identity(dx, dx), DMatrix::identity(du, du))
    }

    pub fn gain(&mut self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if let Some((la, lb, sol)) = &self.last {
            if la == a && lb == b {
                return Ok(sol.gain.clone());
            }
        }
        let start = self
            .last
            .as_ref()
            .map(|(_, _, s)| s.cost_to_go.clone())
            .unwrap_or_else(|| self.q.clone());
        let sol = match iterate(a, b, &self.q, &self.r, start) {
            Ok(sol) => sol,
            Err(_) => lqr_gain(a, b, &self.q, &self.r)?,
        };
        let gain = sol.gain.clone();
        self.last = Some((a.clone(), b.clone(), sol));
        Ok(gain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_radius;

    #[test]
    fn zero_dynamics_give_zero_gain() {
        let a = DMatrix::zeros(2, 2);
        let b = DMatrix::from_column_slice(2, 1, &[0.3, 1.0]);
        let q = DMatrix::identity(2, 2);
        let sol = lqr_gain(&a, &b, &q, &DMatrix::identity(1, 1)).unwrap();
        assert!((sol.cost_to_go - q).norm() < 1e-12);
        assert!(sol.gain.norm() < 1e-12);
    }

    #[test]
    fn scalar_fixed_point() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let sol = lqr_gain(&one, &one, &one, &one).unwrap();
        // oracle: iterate P = 1 + P − P²/(P+1) in plain floats
        let mut p = 1.0f64;
        for _ in 0..200 {
            p = 1.0 + p - p * p / (p + 1.0);
        }
        assert!((sol.cost_to_go[(0, 0)] - p).abs() < 1e-9);
        assert!((p - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((sol.gain[(0, 0)] + p / (p + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn double_integrator_is_stabilized() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let sol = lqr_gain(&a, &b, &DMatrix::identity(2, 2), &DMatrix::identity(1, 1)).unwrap();
        assert!(spectral_radius(&(&a + &b * &sol.gain)) < 1.0);
    }

    #[test]
    fn uncontrollable_unstable_mode_fails() {
        let a = DMatrix::from_element(1, 1, 2.0);
        let b = DMatrix::zeros(1, 1);
        let err = lqr_gain(&a, &b, &DMatrix::identity(1, 1), &DMatrix::identity(1, 1)).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn stabilizer_reuses_and_recomputes() {
        let mut s = Stabilizer::identity(2, 1);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let b1 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let b2 = DMatrix::from_column_slice(2, 1, &[0.0, 2.0]);
        let k1 = s.gain(&a, &b1).unwrap();
        assert_eq!(s.gain(&a, &b1).unwrap(), k1);
        let k2 = s.gain(&a, &b2).unwrap();
        let fresh = lqr_gain(&a, &b2, &DMatrix::identity(2, 2), &DMatrix::identity(1, 1))
            .unwrap()
            .gain;
        assert!((k2 - fresh).norm() < 1e-8);
    }
}
