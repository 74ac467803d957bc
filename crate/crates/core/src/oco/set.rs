use nalgebra::{DMatrix, DVector};

use crate::error::{contract, Result};

/// Convex decision set with Euclidean projection.
///
/// `DacBudget` holds `blocks` matrices of shape `rows × cols`, flattened block after block in
/// column-major order, constrained by `Σ‖M_i‖_F ≤ budget`.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionSet {
    Interval {
        lo: f64,
        hi: f64,
    },
    Ball {
        center: DVector<f64>,
        radius: f64,
    },
    DacBudget {
        blocks: usize,
        rows: usize,
        cols: usize,
        budget: f64,
    },
}

impl DecisionSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(contract(format!("interval [{lo}, {hi}] must have lo < hi")));
        }
        Ok(DecisionSet::Interval { lo, hi })
    }

    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || center.is_empty() {
            return Err(contract("ball needs a positive radius and nonzero dimension"));
        }
        Ok(DecisionSet::Ball { center, radius })
    }

    pub fn dac_budget(blocks: usize, rows: usize, cols: usize, budget: f64) -> Result<Self> {
        if blocks == 0 || rows == 0 || cols == 0 || !(budget > 0.0) {
            return Err(contract("dac budget needs positive shape and budget"));
        }
        Ok(DecisionSet::DacBudget {
            blocks,
            rows,
            cols,
            budget,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            DecisionSet::Interval { .. } => 1,
            DecisionSet::Ball { center, .. } => center.len(),
            DecisionSet::DacBudget { blocks, rows, cols, .. } => blocks * rows * cols,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            DecisionSet::Interval { lo, hi } => hi - lo,
            DecisionSet::Ball { radius, .. } => 2.0 * radius,
            DecisionSet::DacBudget { budget, .. } => 2.0 * budget,
        }
    }

    pub fn center(&self) -> DVector<f64> {
        match self {
            DecisionSet::Interval { lo, hi } => DVector::from_element(1, 0.5 * (lo + hi)),
            DecisionSet::Ball { center, .. } => center.clone(),
            DecisionSet::DacBudget { .. } => DVector::zeros(self.dim()),
        }
    }

    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        match self {
            DecisionSet::Interval { lo, hi } => p[0] >= lo - tol && p[0] <= hi + tol,
            DecisionSet::Ball { center, radius } => (p - center).norm() <= radius + tol,
            DecisionSet::DacBudget { budget, .. } => self.block_norms(p).iter().sum::<f64>() <= budget + tol,
        }
    }

    pub fn project(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        if p.len() != self.dim() {
            return Err(contract(format!(
                "projection dimension mismatch: point has {}, set has {}",
                p.len(),
                self.dim()
            )));
        }
        Ok(match self {
            DecisionSet::Interval { lo, hi } => DVector::from_element(1, p[0].clamp(*lo, *hi)),
            DecisionSet::Ball { center, radius } => {
                let offset = p - center;
                let norm = offset.norm();
                if norm <= *radius {
                    p.clone()
                } else {
                    center + offset * (radius / norm)
                }
            }
            DecisionSet::DacBudget { rows, cols, budget, .. } => {
                let norms = self.block_norms(p);
                if norms.iter().sum::<f64>() <= *budget {
                    return Ok(p.clone());
                }
                let shrunk = project_l1_ball(&norms, *budget);
                let size = rows * cols;
                let mut out = p.clone();
                for (b, (old, new)) in norms.iter().zip(&shrunk).enumerate() {
                    let factor = if *old > 0.0 { new / old } else { 0.0 };
                    out.rows_mut(b * size, size).scale_mut(factor);
                }
                out
            }
        })
    }

    /// Frobenius norms of the blocks of a flattened DAC parameter.
    pub fn block_norms(&self, p: &DVector<f64>) -> Vec<f64> {
        match self {
            DecisionSet::DacBudget { blocks, rows, cols, .. } => {
                let size = rows * cols;
                (0..*blocks).map(|b| p.rows(b * size, size).norm()).collect()
            }
            _ => vec![p.norm()],
        }
    }

    /// Block `i` of a flattened DAC parameter as a matrix.
    pub fn block(&self, p: &DVector<f64>, i: usize) -> DMatrix<f64> {
        match self {
            DecisionSet::DacBudget { rows, cols, .. } => {
                let size = rows * cols;
                DMatrix::from_column_slice(*rows, *cols, p.rows(i * size, size).as_slice())
            }
            _ => DMatrix::from_column_slice(p.len(), 1, p.as_slice()),
        }
    }
}

/// Euclidean projection of a nonnegative vector onto `{v ≥ 0 : Σv ≤ radius}`.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    if v.iter().sum::<f64>() <= radius {
        return v.to_vec();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - radius) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
