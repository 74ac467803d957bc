use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::ilqr::Dynamics;
use crate::control::StageCost;

/// Maps an angle into `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Torque-driven pendulum with `θ = 0` upright, integrated by semi-implicit Euler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pendulum {
    pub dt: f64,
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub max_torque: f64,
    pub max_speed: f64,
}

impl Default for Pendulum {
    fn default() -> Self {
        Pendulum {
            dt: 0.05,
            gravity: 10.0,
            mass: 1.0,
            length: 1.0,
            max_torque: 2.0,
            max_speed: 8.0,
        }
    }
}

impl Pendulum {
    fn gravity_gain(&self) -> f64 {
        3.0 * self.gravity / (2.0 * self.length)
    }

    fn torque_gain(&self) -> f64 {
        3.0 / (self.mass * self.length * self.length)
    }

    pub fn clamp_torque(&self, u: f64) -> f64 {
        u.clamp(-self.max_torque, self.max_torque)
    }

    fn raw_speed(&self, theta: f64, speed: f64, torque: f64) -> f64 {
        speed + (self.gravity_gain() * theta.sin() + self.torque_gain() * self.clamp_torque(torque)) * self.dt
    }

    /// Mechanical energy per unit inertia, `θ̇²/2 + (3g/2l)·cos θ`.
    pub fn energy(&self, theta: f64, speed: f64) -> f64 {
        0.5 * speed * speed + self.gravity_gain() * theta.cos()
    }
}

/// One step from `(θ, θ̇)` under a torque clamped to the limit.
pub fn pendulum_step(p: &Pendulum, theta: f64, speed: f64, torque: f64) -> (f64, f64) {
    let next_speed = p.raw_speed(theta, speed, torque).clamp(-p.max_speed, p.max_speed);
    (wrap_angle(theta + next_speed * p.dt), next_speed)
}

/// `θ² + 0.1·θ̇² + 0.001·u²` with `θ` normalized.
pub fn pendulum_cost(theta: f64, speed: f64, torque: f64) -> f64 {
    let th = wrap_angle(theta);
    th * th + 0.1 * speed * speed + 0.001 * torque * torque
}

/// Jacobians `(A, B)` of [`pendulum_step`] in `(θ, θ̇)` and torque.
pub fn linearize(p: &Pendulum, theta: f64, speed: f64, torque: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let dt = p.dt;
    let free = p.raw_speed(theta, speed, torque).abs() < p.max_speed;
    let (ds_dth, ds_dsp) = if free {
        (p.gravity_gain() * theta.cos() * dt, 1.0)
    } else {
        (0.0, 0.0)
    };
    let ds_du = if free && torque.abs() <= p.max_torque {
        p.torque_gain() * dt
    } else {
        0.0
    };
    let a = DMatrix::from_row_slice(2, 2, &[1.0 + ds_dth * dt, ds_dsp * dt, ds_dth, ds_dsp]);
    let b = DMatrix::from_column_slice(2, 1, &[ds_du * dt, ds_du]);
    (a, b)
}

impl Dynamics for Pendulum {
    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (th, sp) = pendulum_step(self, x[0], x[1], u[0]);
        DVector::from_column_slice(&[th, sp])
    }

    fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        linearize(self, x[0], x[1], u[0])
    }

    fn input_bounds(&self) -> Option<(f64, f64)> {
        Some((-self.max_torque, self.max_torque))
    }

    fn state_diff(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_column_slice(&[wrap_angle(x[0] - y[0]), x[1] - y[1]])
    }
}

/// [`pendulum_cost`] as a stage cost on `x = (θ, θ̇)`, `u = (torque)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PendulumCost;

impl StageCost for PendulumCost {
    fn value(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        pendulum_cost(x[0], x[1], u[0])
    }

    fn gradient(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (
            DVector::from_column_slice(&[2.0 * wrap_angle(x[0]), 0.2 * x[1]]),
            DVector::from_element(1, 0.002 * u[0]),
        )
    }

    fn hessian(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (
            DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 0.2])),
            DMatrix::from_element(1, 1, 0.002),
            DMatrix::zeros(1, 2),
        )
    }
}
