//! Experiment orchestration: TOML configs, seeded runs over a shared disturbance stream,
//! best-in-hindsight comparators, adaptive-regret reports and CSV/JSON output.

mod config;
mod emit;
mod env;
mod hindsight;
mod report;
mod run;

pub use config::{
    ControllerConfig, CostChoice, EnvironmentConfig, ExperimentConfig, GpcSettings, IlqrSettings, LrSchedule,
    MarcSettings, MarcVariant, NoiseChoice, NoiseConfig, PendulumSettings, ShockConfig, StabilizerChoice, SystemChoice,
};
pub use emit::{
    read_trace_csv, summarize, write_summary, write_trace_csv, ControllerSummary, CsvTrace, MeanStd, SeedMetrics,
    SeedSummary, Summary,
};
pub use env::Environment;
pub use hindsight::{best_dac, dac_rollout, DacFit, TraceContext};
pub use report::{
    adaptive_regret_report, BestOfComparator, Comparator, DacComparator, FixedPointComparator, IntervalRegret,
    RegretReport,
};
pub use run::{build_controller, drive, noise_hash, run_experiment, windowed_average, RunTrace, StepRecord};
