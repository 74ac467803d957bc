use nalgebra::DMatrix;

use crate::linalg::spectral_norm;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub pass: bool,
    /// 1-based inclusive interval with the largest `‖Π‖ / (κ(1−δ)^{|I|})`.
    pub worst_interval: (usize, usize),
    pub worst_ratio: f64,
}

/// Checks `‖Π_{t∈I} Ã_t‖ < κ(1−δ)^{|I|}` for every interval of length at most `cap`, with
/// `closed_loop[t−1] = A_t + B_t K_t`.
pub fn check_sequential_stability(closed_loop: &[DMatrix<f64>], kappa: f64, delta: f64, cap: usize) -> StabilityReport {
    let mut worst = StabilityReport {
        pass: true,
        worst_interval: (1, 1),
        worst_ratio: 0.0,
    };
    for start in 1..=closed_loop.len() {
        let mut product = DMatrix::identity(closed_loop[0].nrows(), closed_loop[0].ncols());
        for end in start..closed_loop.len().min(start + cap - 1) + 1 {
            product = &closed_loop[end - 1] * &product;
            let len = (end - start + 1) as i32;
            let ratio = spectral_norm(&product) / (kappa * (1.0 - delta).powi(len));
            if ratio > worst.worst_ratio {
                worst.worst_ratio = ratio;
                worst.worst_interval = (start, end);
            }
        }
    }
    worst.pass = worst.worst_ratio < 1.0;
    worst
}

/// Fits `(κ, δ)` for a closed-loop sequence: `1−δ` halfway between the measured per-step
/// contraction over `cap`-length windows and 1, `κ` the smallest constant that then passes
/// (with 1% slack). Returns `None` when no contraction is observed.
pub fn measure_stability(closed_loop: &[DMatrix<f64>], cap: usize) -> Option<(f64, f64)> {
    let len = cap.min(closed_loop.len());
    let mut rate: f64 = 0.0;
    for start in 0..=closed_loop.len() - len {
        let mut product = DMatrix::identity(closed_loop[0].nrows(), closed_loop[0].ncols());
        for m in &closed_loop[start..start + len] {
            product = m * &product;
        }
        rate = rate.max(spectral_norm(&product).powf(1.0 / len as f64));
    }
    if rate >= 1.0 {
        return None;
    }
    let delta = 1.0 - 0.5 * (1.0 + rate);
    let report = check_sequential_stability(closed_loop, 1.0, delta, cap);
    Some((1.01 * report.worst_ratio.max(1e-12), delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contracting_sequence_passes() {
        let seq = vec![DMatrix::identity(2, 2) * 0.5; 20];
        assert!(check_sequential_stability(&seq, 1.0, 0.4, 64).pass);
    }

    #[test]
    fn identity_fails() {
        let seq = vec![DMatrix::identity(2, 2); 100];
        let report = check_sequential_stability(&seq, 2.0, 0.05, 64);
        assert!(!report.pass);
        assert_eq!(report.worst_interval.1 - report.worst_interval.0 + 1, 64);
        assert!(measure_stability(&seq, 64).is_none());
    }

    #[test]
    fn scalar_closed_loop() {
        // A = 1, B = 1, K = −0.5
        let seq = vec![DMatrix::from_element(1, 1, 1.0 - 0.5); 30];
        assert!(check_sequential_stability(&seq, 1.0, 0.4, 64).pass);
        let (kappa, delta) = measure_stability(&seq, 64).unwrap();
        assert!(delta > 0.2);
        assert!(check_sequential_stability(&seq, kappa, delta, 64).pass);
    }
}
