use nalgebra::{DMatrix, DVector};

/// Convex stage cost `c(x, u)` with derivatives.
pub trait StageCost {
    fn value(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64;

    /// `(∇_x c, ∇_u c)`.
    fn gradient(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>);

    /// `(∇²_xx c, ∇²_uu c, ∇²_ux c)`.
    fn hessian(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>);
}

/// Maps a nonnegative cost into `[0, 1)`.
pub fn normalize_cost(c: f64) -> f64 {
    c / (1.0 + c)
}

/// `xᵀQx + uᵀRu`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl QuadraticCost {
    pub fn identity(dx: usize, du: usize) -> Self {
        QuadraticCost {
            q: DMatrix::identity(dx, dx),
            r: DMatrix::identity(du, du),
        }
    }
}

impl StageCost for QuadraticCost {
    fn value(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        x.dot(&(&self.q * x)) + u.dot(&(&self.r * u))
    }

    fn gradient(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        ((&self.q + self.q.transpose()) * x, (&self.r + self.r.transpose()) * u)
    }

    fn hessian(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (
            &self.q + self.q.transpose(),
            &self.r + self.r.transpose(),
            DMatrix::zeros(u.len(), x.len()),
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroCost;

impl StageCost for ZeroCost {
    fn value(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> f64 {
        0.0
    }

    fn gradient(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (DVector::zeros(x.len()), DVector::zeros(u.len()))
    }

    fn hessian(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (
            DMatrix::zeros(x.len(), x.len()),
            DMatrix::zeros(u.len(), u.len()),
            DMatrix::zeros(u.len(), x.len()),
        )
    }
}
