//! Small dense linear-algebra helpers shared by the simulators and controllers.

use nalgebra::{DMatrix, DVector};

pub const POWER_ITERATIONS: usize = 50;
pub const POWER_TOL: f64 = 1e-10;

/// Largest singular value by power iteration on `MᵀM`.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    spectral_norm_with(m, POWER_ITERATIONS, POWER_TOL)
}

pub fn spectral_norm_with(m: &DMatrix<f64>, iterations: usize, tol: f64) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let gram = m.transpose() * m;
    // deterministic start with unequal entries so no singular direction is missed by symmetry
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let next = &gram * &v;
        let norm = next.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let new_lambda = v.dot(&next);
        v = next / norm;
        if (new_lambda - lambda).abs() <= tol * new_lambda.abs().max(1.0) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    lambda.max(0.0).sqrt()
}

/// Spectral radius from the eigenvalues of a real square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_matches_svd() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 0.3, 4.0, 1.0]);
        let svd = m.clone().svd(false, false);
        let top = svd.singular_values.max();
        assert!((spectral_norm(&m) - top).abs() < 1e-8);
    }

    #[test]
    fn zero_matrix_has_zero_norm() {
        assert_eq!(spectral_norm(&DMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn radius_of_jordan_block() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        assert!((spectral_radius(&m) - 0.5).abs() < 1e-12);
        assert!(spectral_norm(&m) > 1.0);
    }
}
