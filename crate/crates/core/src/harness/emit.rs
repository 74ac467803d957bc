use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::{windowed_average, RunTrace, StepRecord};
use crate::error::{Error, Result};

fn io(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let kind = std::io::ErrorKind::InvalidData;
    io(path, std::io::Error::new(kind, e.to_string()))
}

/// Writes `t,cost,cum_cost,expert,theta0..,u0..,w0..,normalized,windowed`, where `thetaI`
/// is state entry `I`. An empty trace yields the header only.
pub fn write_trace_csv(trace: &RunTrace, state_dim: usize, input_dim: usize, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io(path, e))?;
    let mut out = csv::Writer::from_writer(file);
    let mut header = vec!["t".to_string(), "cost".into(), "cum_cost".into(), "expert".into()];
    header.extend((0..state_dim).map(|i| format!("theta{i}")));
    header.extend((0..input_dim).map(|i| format!("u{i}")));
    header.extend((0..state_dim).map(|i| format!("w{i}")));
    header.extend(["normalized".into(), "windowed".into()]);
    out.write_record(&header).map_err(|e| csv_err(path, e))?;
    let windowed = trace.windowed();
    let mut cum = 0.0;
    for (rec, win) in trace.records.iter().zip(windowed) {
        cum += rec.cost;
        let mut row = vec![
            rec.t.to_string(),
            format!("{:e}", rec.cost),
            format!("{cum:e}"),
            rec.expert.map(|e| e.to_string()).unwrap_or_default(),
        ];
        row.extend(
            rec.state
                .iter()
                .chain(&rec.action)
                .chain(&rec.disturbance)
                .map(|v| format!("{v:e}")),
        );
        row.push(format!("{:e}", rec.normalized));
        row.push(format!("{win:e}"));
        out.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    out.flush().map_err(|e| io(path, e))
}

/// A trace read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTrace {
    pub records: Vec<StepRecord>,
    pub cum_cost: Vec<f64>,
    pub windowed: Vec<f64>,
}

impl CsvTrace {
    pub fn into_trace(self, controller: &str, seed: u64) -> RunTrace {
        RunTrace {
            controller: controller.into(),
            seed,
            noise_hash: String::new(),
            records: self.records,
        }
    }
}

pub fn read_trace_csv(path: &Path) -> Result<CsvTrace> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let count = |prefix: &str| {
        header
            .iter()
            .filter(|h| h.strip_prefix(prefix).is_some_and(|rest| rest.parse::<usize>().is_ok()))
            .count()
    };
    let (dx, du) = (count("theta"), count("u"));
    let expected = 4 + 2 * dx + du + 2;
    if header.len() != expected || &header[0] != "t" || &header[1] != "cost" || &header[2] != "cum_cost" {
        return Err(Error::Config(format!(
            "{} does not have the trace header layout",
            path.display()
        )));
    }
    let bad = |row: usize, what: &str| Error::Config(format!("{}: row {row} has an invalid {what}", path.display()));
    let mut parsed = CsvTrace {
        records: Vec::new(),
        cum_cost: Vec::new(),
        windowed: Vec::new(),
    };
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let num = |k: usize| row[k].parse::<f64>().map_err(|_| bad(i + 1, &header[k]));
        let t = row[0].parse::<usize>().map_err(|_| bad(i + 1, "t"))?;
        let expert = if row[3].is_empty() {
            None
        } else {
            Some(row[3].parse::<usize>().map_err(|_| bad(i + 1, "expert"))?)
        };
        let state = (4..4 + dx).map(num).collect::<Result<Vec<_>>>()?;
        let action = (4 + dx..4 + dx + du).map(num).collect::<Result<Vec<_>>>()?;
        let disturbance = (4 + dx + du..4 + 2 * dx + du).map(num).collect::<Result<Vec<_>>>()?;
        let cost = num(1)?;
        parsed.cum_cost.push(num(2)?);
        parsed.windowed.push(num(expected - 1)?);
        parsed.records.push(StepRecord {
            t,
            state,
            action,
            disturbance,
            cost,
            normalized: num(expected - 2)?,
            expert,
        });
    }
    Ok(parsed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n.max(1) as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        MeanStd {
            mean,
            std: var.sqrt(),
            n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub total_cost: f64,
    /// Trailing-window average at the last round.
    pub final_windowed: f64,
    /// Mean cost over rounds `(T/2, T]`.
    pub second_half_mean: f64,
}

impl SeedMetrics {
    pub fn of(trace: &RunTrace) -> Self {
        let costs = trace.costs();
        let tail = &costs[costs.len() / 2..];
        SeedMetrics {
            total_cost: trace.total(),
            final_windowed: windowed_average(&costs).last().copied().unwrap_or(0.0),
            second_half_mean: tail.iter().sum::<f64>() / tail.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub noise_hash: String,
    pub controllers: BTreeMap<String, SeedMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSummary {
    pub total_cost: MeanStd,
    pub final_windowed: MeanStd,
    pub second_half_mean: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    /// How the aggregate bands are formed.
    pub band: String,
    pub per_seed: Vec<SeedSummary>,
    pub controllers: BTreeMap<String, ControllerSummary>,
}

pub fn summarize(config: &ExperimentConfig, runs: &[(u64, Vec<RunTrace>)]) -> Summary {
    let per_seed: Vec<SeedSummary> = runs
        .iter()
        .map(|(seed, traces)| SeedSummary {
            seed: *seed,
            noise_hash: traces.first().map(|t| t.noise_hash.clone()).unwrap_or_default(),
            controllers: traces
                .iter()
                .map(|t| (t.controller.clone(), SeedMetrics::of(t)))
                .collect(),
        })
        .collect();
    let mut controllers = BTreeMap::new();
    let labels: Vec<String> = per_seed
        .first()
        .map(|s| s.controllers.keys().cloned().collect())
        .unwrap_or_default();
    for label in labels {
        let pick = |f: fn(&SeedMetrics) -> f64| {
            MeanStd::of(
                &per_seed
                    .iter()
                    .filter_map(|s| s.controllers.get(&label).map(f))
                    .collect::<Vec<_>>(),
            )
        };
        controllers.insert(
            label.clone(),
            ControllerSummary {
                total_cost: pick(|m| m.total_cost),
                final_windowed: pick(|m| m.final_windowed),
                second_half_mean: pick(|m| m.second_half_mean),
            },
        );
    }
    Summary {
        config: config.clone(),
        band: "mean ± 1 sample std over seeds".into(),
        per_seed,
        controllers,
    }
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io(path, e))?;
    serde_json::to_writer_pretty(file, summary).map_err(|e| io(path, std::io::Error::other(e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunTrace {
        RunTrace {
            controller: "gpc".into(),
            seed: 1,
            noise_hash: "ab".into(),
            records: (1..=7)
                .map(|t| StepRecord {
                    t,
                    state: vec![t as f64, -0.5],
                    action: vec![0.25 * t as f64],
                    disturbance: vec![0.1, 1.0 / 3.0],
                    cost: 1.0 / t as f64,
                    normalized: 1.0 / (1.0 + t as f64),
                    expert: if t % 2 == 0 { Some(t) } else { None },
                })
                .collect(),
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = sample();
        write_trace_csv(&trace, 2, 1, &path).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back.records, trace.records);
        assert!((back.cum_cost.last().unwrap() - trace.total()).abs() < 1e-12);
        let header = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert_eq!(
            header,
            "t,cost,cum_cost,expert,theta0,theta1,u0,w0,w1,normalized,windowed"
        );
    }

    #[test]
    fn empty_trace_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let trace = RunTrace {
            records: Vec::new(),
            ..sample()
        };
        write_trace_csv(&trace, 2, 1, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1);
        assert!(read_trace_csv(&path).unwrap().records.is_empty());
    }

    #[test]
    fn unwritable_path_reports_it() {
        let err = write_trace_csv(&sample(), 2, 1, Path::new("/nonexistent/dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/x.csv"));
    }

    #[test]
    fn mean_and_sample_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.std - 1.0).abs() < 1e-15);
        assert_eq!(MeanStd::of(&[5.0]).std, 0.0);
    }
}
