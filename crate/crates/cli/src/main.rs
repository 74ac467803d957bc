use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adactl::harness::{
    adaptive_regret_report, read_trace_csv, run_experiment, summarize, write_summary, write_trace_csv,
    BestOfComparator, Comparator, ControllerConfig, DacComparator, Environment, ExperimentConfig, RegretReport,
    RunTrace,
};
use adactl::oco::IntervalGrid;
use adactl::{Error, Result};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adactl", version, about = "Adaptive online control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every controller of a config on each seed and write traces plus a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run a single seed instead of the config's list.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's `output` or `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Adaptive-regret report for recorded traces.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        trace: Vec<PathBuf>,
        #[arg(long, default_value = "dyadic")]
        intervals: IntervalGrid,
        /// Compare against the best fixed DAC policy of this config's environment. Without it
        /// each interval is scored against the best of the supplied traces.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the full reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Short end-to-end run of every controller kind.
    Selftest,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, seed, out } => run(&config, seed, out),
        Command::Report {
            trace,
            intervals,
            config,
            restarts,
            seed,
            json,
        } => report(&trace, intervals, config.as_deref(), restarts, seed, json.as_deref()),
        Command::Selftest => selftest(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn run(config_path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    let out = out
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(io_err(&out))?;
    let seeds = seed.map(|s| vec![s]).unwrap_or_else(|| config.seeds.clone());
    let env = Environment::from_config(&config.environment, config.horizon);
    let mut runs = Vec::new();
    for seed in seeds {
        let traces = run_experiment(&config, seed)?;
        for trace in &traces {
            let path = out.join(format!("{}_seed{seed}.csv", trace.controller));
            write_trace_csv(trace, env.state_dim(), env.input_dim(), &path)?;
            println!(
                "{:<16} seed {seed:<4} total {:>12.4}  -> {}",
                trace.controller,
                trace.total(),
                path.display()
            );
        }
        runs.push((seed, traces));
    }
    let summary = summarize(&config, &runs);
    let path = out.join("summary.json");
    write_summary(&summary, &path)?;
    for (label, s) in &summary.controllers {
        println!(
            "{label:<16} total {:.4} ± {:.4}  second half {:.4} ± {:.4}",
            s.total_cost.mean, s.total_cost.std, s.second_half_mean.mean, s.second_half_mean.std
        );
    }
    println!("summary -> {}", path.display());
    Ok(())
}

fn load_traces(paths: &[PathBuf]) -> Result<Vec<RunTrace>> {
    paths
        .iter()
        .map(|p| {
            let label = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(read_trace_csv(p)?.into_trace(&label, 0))
        })
        .collect()
}

fn report(
    paths: &[PathBuf],
    grid: IntervalGrid,
    config: Option<&Path>,
    restarts: usize,
    seed: u64,
    json: Option<&Path>,
) -> Result<()> {
    let traces = load_traces(paths)?;
    let mut reports: Vec<(String, RegretReport)> = Vec::new();
    match config {
        Some(path) => {
            let config = ExperimentConfig::load(path)?;
            let env = Environment::from_config(&config.environment, config.horizon);
            let cost = env.cost();
            let (memory, budget) = config
                .controllers
                .iter()
                .find_map(|c| match c {
                    ControllerConfig::Gpc(s) => Some((s.memory, s.budget)),
                    ControllerConfig::Marc(s) => Some((s.base.memory, s.base.budget)),
                    _ => None,
                })
                .unwrap_or((10, 5.0));
            for trace in &traces {
                if trace.records.len() != config.horizon {
                    return Err(Error::Config(format!(
                        "trace `{}` has {} rounds but the config horizon is {}",
                        trace.controller,
                        trace.records.len(),
                        config.horizon
                    )));
                }
                let comparator = DacComparator {
                    env: &env,
                    trace,
                    cost: cost.as_ref(),
                    memory,
                    budget,
                    restarts,
                    seed,
                };
                reports.push((
                    trace.controller.clone(),
                    adaptive_regret_report(trace, &comparator, grid)?,
                ));
            }
        }
        None => {
            let costs: Vec<Vec<f64>> = traces.iter().map(|t| t.costs()).collect();
            let comparator = BestOfComparator::new(&costs);
            for trace in &traces {
                reports.push((
                    trace.controller.clone(),
                    adaptive_regret_report(trace, &comparator, grid)?,
                ));
            }
        }
    }
    println!(
        "{:<20} {:>12} {:>14} {:>12} {:>9}",
        "trace", "sup regret", "interval", "shift", "switches"
    );
    for (label, r) in &reports {
        println!(
            "{label:<20} {:>12.4} {:>14} {:>12.4} {:>9}",
            r.worst.regret,
            format!("[{}, {}]", r.worst.start, r.worst.end),
            r.action_shift,
            r.switches
        );
    }
    if let Some(path) = json {
        let file = std::fs::File::create(path).map_err(io_err(path))?;
        let body: Vec<_> = reports
            .iter()
            .map(|(l, r)| serde_json::json!({ "trace": l, "report": r }))
            .collect();
        serde_json::to_writer_pretty(file, &body).map_err(|e| Error::Io {
            path: path.into(),
            source: e.into(),
        })?;
    }
    Ok(())
}

const SELFTEST_LDS: &str = r#"
horizon = 120
seeds = [0]

[environment]
kind = "lds"
system = "switching"

[noise]
kind = "alternating"

[[controllers]]
kind = "zero"

[[controllers]]
kind = "lqr"

[[controllers]]
kind = "fixed-lqr"

[[controllers]]
kind = "gpc"

[[controllers]]
kind = "marc"
variant = "theory"

[[controllers]]
kind = "marc"
label = "marc-experimental"
variant = "experimental"
"#;

const SELFTEST_PENDULUM: &str = r#"
horizon = 90
seeds = [0]

[environment]
kind = "pendulum"

[noise]
kind = "zero"

[noise.shock]

[[controllers]]
kind = "ilqr"
iterations = 2

[[controllers]]
kind = "marc"
variant = "experimental"
"#;

fn selftest() -> Result<()> {
    for text in [SELFTEST_LDS, SELFTEST_PENDULUM] {
        let config = ExperimentConfig::from_toml(text)?;
        let traces = run_experiment(&config, 0)?;
        let costs: Vec<Vec<f64>> = traces.iter().map(|t| t.costs()).collect();
        let comparator = BestOfComparator::new(&costs);
        for trace in &traces {
            let report = adaptive_regret_report(trace, &comparator, IntervalGrid::Dyadic)?;
            if report.worst.regret < 0.0 || !trace.total().is_finite() {
                return Err(Error::Numerical(format!(
                    "selftest: `{}` produced an invalid report",
                    trace.controller
                )));
            }
            println!("ok  {:<20} total {:>10.4}", trace.controller, trace.total());
        }
    }
    let env = Environment::from_config(&ExperimentConfig::from_toml(SELFTEST_LDS)?.environment, 120);
    let trace = &run_experiment(&ExperimentConfig::from_toml(SELFTEST_LDS)?, 1)?[3];
    let cost = env.cost();
    let comparator = DacComparator {
        env: &env,
        trace,
        cost: cost.as_ref(),
        memory: 10,
        budget: 5.0,
        restarts: 1,
        seed: 0,
    };
    let best = comparator.best(1, 40)?;
    let incurred: f64 = trace.costs()[..40].iter().sum();
    if !best.is_finite() {
        return Err(Error::Numerical("selftest: hindsight comparator diverged".into()));
    }
    println!("ok  hindsight comparator {best:.4} vs gpc {incurred:.4} on [1, 40]");
    println!("selftest passed");
    Ok(())
}
