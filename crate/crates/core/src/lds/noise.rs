use std::f64::consts::PI;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    Zero,
    /// i.i.d. `N(0, std²)` entries.
    Gaussian {
        std: f64,
    },
    /// Entry `i` equals `sin((n·t + i)/(8π))`, `n` the dimension.
    Sinusoidal,
    /// Equal-length segments over the horizon, Gaussian first, then sinusoidal, alternating.
    Alternating {
        segments: usize,
        std: f64,
    },
    /// `base` plus `amplitude·sin(πt/2)` on every entry for `t ∈ [start, end]`.
    Shock {
        base: Box<NoiseKind>,
        start: usize,
        end: usize,
        amplitude: f64,
    },
}

/// Seeded disturbance stream. Draws are taken in round order and every emitted vector is
/// radially clipped to norm `bound`.
#[derive(Debug, Clone)]
pub struct DisturbanceSource {
    kind: NoiseKind,
    dim: usize,
    horizon: usize,
    bound: f64,
    rng: ChaCha8Rng,
    truncations: usize,
}

impl DisturbanceSource {
    pub fn new(kind: NoiseKind, dim: usize, horizon: usize, bound: f64, seed: u64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::Config(format!(
                "disturbance bound must be positive, got {bound}"
            )));
        }
        validate(&kind)?;
        Ok(DisturbanceSource {
            kind,
            dim,
            horizon,
            bound,
            rng: ChaCha8Rng::seed_from_u64(seed),
            truncations: 0,
        })
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of emitted vectors that had to be clipped.
    pub fn truncations(&self) -> usize {
        self.truncations
    }

    pub fn next(&mut self, t: usize) -> DVector<f64> {
        let kind = self.kind.clone();
        let raw = self.draw(&kind, t);
        let norm = raw.norm();
        if norm > self.bound {
            self.truncations += 1;
            log::debug!("disturbance at t={t} clipped from norm {norm:.3}");
            raw * (self.bound / norm)
        } else {
            raw
        }
    }

    /// The whole sequence for rounds `1..=horizon`.
    pub fn sequence(&mut self) -> Vec<DVector<f64>> {
        (1..=self.horizon).map(|t| self.next(t)).collect()
    }

    fn draw(&mut self, kind: &NoiseKind, t: usize) -> DVector<f64> {
        match kind {
            NoiseKind::Zero => DVector::zeros(self.dim),
            NoiseKind::Gaussian { std } => {
                let normal = Normal::new(0.0, *std).expect("validated std");
                DVector::from_fn(self.dim, |_, _| normal.sample(&mut self.rng))
            }
            NoiseKind::Sinusoidal => {
                let n = self.dim as f64;
                DVector::from_fn(self.dim, |i, _| ((n * t as f64 + i as f64) / (8.0 * PI)).sin())
            }
            NoiseKind::Alternating { segments, std } => {
                let segment = ((t.max(1) - 1) * segments) / self.horizon.max(1);
                if segment % 2 == 0 {
                    self.draw(&NoiseKind::Gaussian { std: *std }, t)
                } else {
                    self.draw(&NoiseKind::Sinusoidal, t)
                }
            }
            NoiseKind::Shock {
                base,
                start,
                end,
                amplitude,
            } => {
                let mut w = self.draw(base, t);
                if (*start..=*end).contains(&t) {
                    w.add_scalar_mut(amplitude * (PI * t as f64 / 2.0).sin());
                }
                w
            }
        }
    }
}

fn validate(kind: &NoiseKind) -> Result<()> {
    match kind {
        NoiseKind::Gaussian { std } | NoiseKind::Alternating { std, .. } if !(*std >= 0.0 && std.is_finite()) => {
            Err(Error::Config(format!("noise std must be nonnegative, got {std}")))
        }
        NoiseKind::Alternating { segments: 0, .. } => Err(Error::Config("alternating noise needs segments ≥ 1".into())),
        NoiseKind::Shock { base, start, end, .. } => {
            if start > end {
                return Err(Error::Config(format!("shock window [{start}, {end}] is empty")));
            }
            validate(base)
        }
        _ => Ok(()),
    }
}
