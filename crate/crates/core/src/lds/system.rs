use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Generator `t ↦ (A_t, B_t)` over a horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum LtvSystem {
    /// Double integrator.
    Fixed,
    /// Two double-integrator variants switching after `T/2`.
    Switching,
    /// Double integrator with input gain `2 + sin(2πt/T)`.
    TimeVariant,
    Constant {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
    },
}

impl std::str::FromStr for LtvSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" | "a" => Ok(LtvSystem::Fixed),
            "switching" | "b" => Ok(LtvSystem::Switching),
            "time-variant" | "c" => Ok(LtvSystem::TimeVariant),
            other => Err(Error::Config(format!("unknown system kind `{other}`"))),
        }
    }
}

fn integrator(coupling: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, coupling, 0.0, 1.0])
}

fn input(gain: f64) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 1, &[0.0, gain])
}

impl LtvSystem {
    pub fn state_dim(&self) -> usize {
        match self {
            LtvSystem::Constant { a, .. } => a.nrows(),
            _ => 2,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            LtvSystem::Constant { b, .. } => b.ncols(),
            _ => 1,
        }
    }

    pub fn matrices(&self, t: usize, horizon: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if t == 0 || t > horizon {
            return Err(Error::Contract(format!("round {t} outside [1, {horizon}]")));
        }
        Ok(match self {
            LtvSystem::Fixed => (integrator(1.0), input(1.0)),
            LtvSystem::Switching => {
                if t <= horizon / 2 {
                    (integrator(0.5), input(1.2))
                } else {
                    (integrator(1.5), input(0.9))
                }
            }
            LtvSystem::TimeVariant => {
                let phase = 2.0 * std::f64::consts::PI * t as f64 / horizon as f64;
                (integrator(1.0), input(2.0 + phase.sin()))
            }
            LtvSystem::Constant { a, b } => (a.clone(), b.clone()),
        })
    }
}

pub fn step(a: &DMatrix<f64>, b: &DMatrix<f64>, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    a * x + b * u + w
}

pub fn recover_disturbance(
    x_next: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> DVector<f64> {
    x_next - a * x - b * u
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn double_integrator_step() {
        let (a, b) = LtvSystem::Fixed.matrices(1, 10).unwrap();
        assert_eq!(
            step(&a, &b, &v(&[0.0, 0.0]), &v(&[1.0]), &v(&[0.0, 0.0])),
            v(&[0.0, 1.0])
        );
        let w = v(&[0.3, -0.2]);
        assert_eq!(step(&a, &b, &v(&[0.0, 0.0]), &v(&[0.0]), &w), w);
    }

    #[test]
    fn switching_system_switches_after_half() {
        let (a1, b1) = LtvSystem::Switching.matrices(50, 100).unwrap();
        let (a2, b2) = LtvSystem::Switching.matrices(51, 100).unwrap();
        assert_eq!(a1[(0, 1)], 0.5);
        assert_eq!(b1[(1, 0)], 1.2);
        assert_eq!(a2[(0, 1)], 1.5);
        assert_eq!(b2[(1, 0)], 0.9);
        assert_eq!(
            step(&a2, &b2, &v(&[1.0, 0.0]), &v(&[0.0]), &v(&[0.0, 0.0])),
            v(&[1.0, 0.0])
        );
    }

    #[test]
    fn time_variant_gain() {
        let (_, b) = LtvSystem::TimeVariant.matrices(25, 100).unwrap();
        assert!((b[(1, 0)] - 3.0).abs() < 1e-15);
        let (_, b) = LtvSystem::TimeVariant.matrices(100, 100).unwrap();
        assert!((b[(1, 0)] - 2.0).abs() < 1e-14);
        assert!(LtvSystem::TimeVariant.matrices(101, 100).is_err());
        assert!("z".parse::<LtvSystem>().unwrap_err().is_config());
    }

    #[test]
    fn recover_examples() {
        let a = DMatrix::from_element(1, 1, 0.5);
        let b = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(
            recover_disturbance(&v(&[3.0]), &a, &b, &v(&[2.0]), &v(&[1.0])),
            v(&[1.0])
        );
    }

    #[test]
    fn step_recover_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-2.0..2.0));
            let b = DMatrix::from_fn(3, 2, |_, _| rng.gen_range(-2.0..2.0));
            let x = DVector::from_fn(3, |_, _| rng.gen_range(-5.0..5.0));
            let u = DVector::from_fn(2, |_, _| rng.gen_range(-5.0..5.0));
            let w = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            let rec = recover_disturbance(&step(&a, &b, &x, &u, &w), &a, &b, &x, &u);
            assert!((rec - w).norm() <= 1e-12);
        }
    }
}
