use nalgebra::DVector;

use super::set::DecisionSet;

/// A loss over the last `H + 1` decisions together with its surrogate.
///
/// `evaluate` receives the window `z_{t-H}, …, z_t`, oldest first.
pub trait MemoryLoss {
    fn memory(&self) -> usize;

    fn evaluate(&self, window: &[DVector<f64>]) -> f64;

    fn surrogate(&self, z: &DVector<f64>) -> f64 {
        let window = vec![z.clone(); self.memory() + 1];
        self.evaluate(&window)
    }

    fn surrogate_grad(&self, z: &DVector<f64>) -> DVector<f64>;

    /// Coordinate-wise Lipschitz constant of `evaluate`.
    fn lipschitz(&self) -> f64;

    /// Bound on the surrogate gradient norm over the decision set.
    fn grad_bound(&self) -> f64;

    /// Strong convexity of the surrogate, 0 when merely convex.
    fn strong_convexity(&self) -> f64;
}

fn max_distance(set: &DecisionSet, target: &DVector<f64>) -> f64 {
    match set {
        DecisionSet::Interval { lo, hi } => (lo - target[0]).abs().max((hi - target[0]).abs()),
        _ => (set.center() - target).norm() + 0.5 * set.diameter(),
    }
}

/// `scale·‖z − target‖²`, memoryless.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    pub target: DVector<f64>,
    pub scale: f64,
    grad_bound: f64,
}

impl QuadraticLoss {
    /// Builds the loss with its gradient bound taken over `set`.
    pub fn on(set: &DecisionSet, target: DVector<f64>, scale: f64) -> Self {
        let grad_bound = 2.0 * scale * max_distance(set, &target);
        QuadraticLoss {
            target,
            scale,
            grad_bound,
        }
    }

    /// Scale that maps the largest value over `set` to one.
    pub fn unit_scale(set: &DecisionSet, target: &DVector<f64>) -> f64 {
        let d = max_distance(set, target);
        1.0 / (d * d)
    }
}

impl MemoryLoss for QuadraticLoss {
    fn memory(&self) -> usize {
        0
    }

    fn evaluate(&self, window: &[DVector<f64>]) -> f64 {
        let z = window.last().expect("empty window");
        self.scale * (z - &self.target).norm_squared()
    }

    fn surrogate_grad(&self, z: &DVector<f64>) -> DVector<f64> {
        (z - &self.target) * (2.0 * self.scale)
    }

    fn lipschitz(&self) -> f64 {
        self.grad_bound
    }

    fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    fn strong_convexity(&self) -> f64 {
        2.0 * self.scale
    }
}

/// `offset + gᵀz`, memoryless.
#[derive(Debug, Clone)]
pub struct LinearLoss {
    pub gradient: DVector<f64>,
    pub offset: f64,
}

impl MemoryLoss for LinearLoss {
    fn memory(&self) -> usize {
        0
    }

    fn evaluate(&self, window: &[DVector<f64>]) -> f64 {
        self.offset + self.gradient.dot(window.last().expect("empty window"))
    }

    fn surrogate_grad(&self, _z: &DVector<f64>) -> DVector<f64> {
        self.gradient.clone()
    }

    fn lipschitz(&self) -> f64 {
        self.gradient.norm()
    }

    fn grad_bound(&self) -> f64 {
        self.gradient.norm()
    }

    fn strong_convexity(&self) -> f64 {
        0.0
    }
}

/// `inner(z_t) + weight·‖z_t − z_{t−1}‖`: a one-step memory loss whose stability gap is
/// exactly the weighted action shift.
#[derive(Debug, Clone)]
pub struct ShiftPenalized<L> {
    pub inner: L,
    pub weight: f64,
}

impl<L: MemoryLoss> MemoryLoss for ShiftPenalized<L> {
    fn memory(&self) -> usize {
        1
    }

    fn evaluate(&self, window: &[DVector<f64>]) -> f64 {
        let n = window.len();
        self.inner.evaluate(&window[n - 1..]) + self.weight * (&window[n - 1] - &window[n - 2]).norm()
    }

    fn surrogate_grad(&self, z: &DVector<f64>) -> DVector<f64> {
        self.inner.surrogate_grad(z)
    }

    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz() + self.weight
    }

    fn grad_bound(&self) -> f64 {
        self.inner.grad_bound()
    }

    fn strong_convexity(&self) -> f64 {
        self.inner.strong_convexity()
    }
}

/// `inner(mean(z_{t−H}, …, z_t))`.
#[derive(Debug, Clone)]
pub struct WindowMean<L> {
    pub inner: L,
    pub memory: usize,
}

impl<L: MemoryLoss> MemoryLoss for WindowMean<L> {
    fn memory(&self) -> usize {
        self.memory
    }

    fn evaluate(&self, window: &[DVector<f64>]) -> f64 {
        let mut mean = window[0].clone();
        for z in &window[1..] {
            mean += z;
        }
        mean /= window.len() as f64;
        self.inner.evaluate(std::slice::from_ref(&mean))
    }

    fn surrogate_grad(&self, z: &DVector<f64>) -> DVector<f64> {
        self.inner.surrogate_grad(z)
    }

    fn lipschitz(&self) -> f64 {
        self.inner.grad_bound() / (self.memory + 1) as f64
    }

    fn grad_bound(&self) -> f64 {
        self.inner.grad_bound()
    }

    fn strong_convexity(&self) -> f64 {
        self.inner.strong_convexity()
    }
}
