use nalgebra::DVector;
use serde::Serialize;

use super::env::Environment;
use super::hindsight::{best_dac, TraceContext};
use super::run::RunTrace;
use crate::control::StageCost;
use crate::error::{contract, Result};
use crate::oco::{best_fixed_point, DecisionSet, IntervalGrid, MemoryLoss};

/// Cost of the best policy of some class on an interval `[r, s]`.
pub trait Comparator {
    fn best(&self, r: usize, s: usize) -> Result<f64>;
}

/// Best fixed DAC policy replayed on the trace's disturbances.
pub struct DacComparator<'a> {
    pub env: &'a Environment,
    pub trace: &'a RunTrace,
    pub cost: &'a dyn StageCost,
    pub memory: usize,
    pub budget: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Comparator for DacComparator<'_> {
    fn best(&self, r: usize, s: usize) -> Result<f64> {
        let ctx = TraceContext::from_trace(self.env, self.trace, r, s, self.memory)?;
        Ok(best_dac(&ctx, self.memory, self.budget, self.cost, self.restarts, self.seed)?.cost)
    }
}

/// Pointwise best among several recorded cost sequences, interval by interval.
pub struct BestOfComparator {
    prefix: Vec<Vec<f64>>,
}

impl BestOfComparator {
    pub fn new(costs: &[Vec<f64>]) -> Self {
        let prefix = costs
            .iter()
            .map(|c| {
                std::iter::once(0.0)
                    .chain(c.iter().scan(0.0, |acc, v| {
                        *acc += v;
                        Some(*acc)
                    }))
                    .collect()
            })
            .collect();
        BestOfComparator { prefix }
    }
}

impl Comparator for BestOfComparator {
    fn best(&self, r: usize, s: usize) -> Result<f64> {
        self.prefix
            .iter()
            .filter(|p| s < p.len())
            .map(|p| p[s] - p[r - 1])
            .min_by(f64::total_cmp)
            .ok_or_else(|| contract(format!("no recorded sequence covers [{r}, {s}]")))
    }
}

/// Best fixed point of the surrogate losses on each interval.
pub struct FixedPointComparator<'a> {
    pub losses: &'a [&'a dyn MemoryLoss],
    pub set: &'a DecisionSet,
}

impl Comparator for FixedPointComparator<'_> {
    fn best(&self, r: usize, s: usize) -> Result<f64> {
        if r == 0 || s > self.losses.len() || r > s {
            return Err(contract(format!("interval [{r}, {s}] outside the loss sequence")));
        }
        Ok(best_fixed_point(&self.losses[r - 1..s], self.set, 500, 1e-10).cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRegret {
    pub start: usize,
    pub end: usize,
    pub incurred: f64,
    pub comparator: f64,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub intervals: Vec<IntervalRegret>,
    pub worst: IntervalRegret,
    /// `Σ_t ‖u_{t+1} − u_t‖` over the whole trace.
    pub action_shift: f64,
    /// Rounds at which the followed expert changed.
    pub switches: usize,
    /// Filled in by callers that track memory losses.
    pub stability_gap: Option<f64>,
}

/// Regret against the comparator on every interval of the grid, with the supremum.
pub fn adaptive_regret_report(
    trace: &RunTrace,
    comparator: &dyn Comparator,
    grid: IntervalGrid,
) -> Result<RegretReport> {
    let n = trace.records.len();
    if n == 0 {
        return Err(contract("cannot report on an empty trace"));
    }
    let mut prefix = vec![0.0];
    for r in &trace.records {
        prefix.push(prefix.last().expect("nonempty") + r.cost);
    }
    let mut intervals = Vec::new();
    for (r, s) in grid.intervals(n) {
        let incurred = prefix[s] - prefix[r - 1];
        let best = comparator.best(r, s)?;
        intervals.push(IntervalRegret {
            start: r,
            end: s,
            incurred,
            comparator: best,
            regret: incurred - best,
        });
    }
    let worst = intervals
        .iter()
        .max_by(|a, b| a.regret.total_cmp(&b.regret))
        .cloned()
        .expect("grid contains [1, T]");
    let actions: Vec<DVector<f64>> = trace
        .records
        .iter()
        .map(|r| DVector::from_column_slice(&r.action))
        .collect();
    let action_shift = actions.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum();
    let switches = trace.records.windows(2).filter(|w| w[0].expert != w[1].expert).count();
    Ok(RegretReport {
        intervals,
        worst,
        action_shift,
        switches,
        stability_gap: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run::StepRecord;

    fn trace(costs: &[f64]) -> RunTrace {
        RunTrace {
            controller: "c".into(),
            seed: 0,
            noise_hash: String::new(),
            records: costs
                .iter()
                .enumerate()
                .map(|(i, c)| StepRecord {
                    t: i + 1,
                    state: vec![0.0],
                    action: vec![*c],
                    disturbance: vec![0.0],
                    cost: *c,
                    normalized: c / (1.0 + c),
                    expert: Some(i / 3),
                })
                .collect(),
        }
    }

    #[test]
    fn matching_the_comparator_gives_zero_regret() {
        let costs = vec![1.0, 2.0, 0.5, 0.0, 3.0, 1.0, 1.0, 2.0];
        let report = adaptive_regret_report(
            &trace(&costs),
            &BestOfComparator::new(&[costs.clone()]),
            IntervalGrid::Dyadic,
        )
        .unwrap();
        assert!(report.intervals.iter().all(|i| i.regret == 0.0));
        assert_eq!(report.switches, 2);
    }

    #[test]
    fn supremum_dominates_full_horizon_and_coarser_grids() {
        let costs: Vec<f64> = (0..16).map(|t| if t < 8 { 0.0 } else { 1.0 }).collect();
        let other: Vec<f64> = (0..16).map(|t| if t < 8 { 1.0 } else { 0.0 }).collect();
        let cmp = BestOfComparator::new(&[costs.clone(), other]);
        let dyadic = adaptive_regret_report(&trace(&costs), &cmp, IntervalGrid::Dyadic).unwrap();
        let full = adaptive_regret_report(&trace(&costs), &cmp, IntervalGrid::Full).unwrap();
        let whole = dyadic.intervals.iter().find(|i| i.start == 1 && i.end == 16).unwrap();
        assert!(dyadic.worst.regret >= whole.regret);
        assert!(full.worst.regret >= dyadic.worst.regret);
        assert_eq!((dyadic.worst.start, dyadic.worst.end), (9, 16));
    }
}
