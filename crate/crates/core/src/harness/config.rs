use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::GainMode;
use crate::error::{Error, Result};
use crate::lds::{LtvSystem, NoiseKind};
use crate::nonlinear::Pendulum;
use crate::oco::{IntervalGrid, StepSchedule};

/// One experiment: an environment, a disturbance stream, and the controllers to compare.
///
/// Unknown keys anywhere in the file are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_grid")]
    pub intervals: String,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub controllers: Vec<ControllerConfig>,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

fn default_grid() -> String {
    "dyadic".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemChoice {
    Fixed,
    Switching,
    TimeVariant,
}

impl From<SystemChoice> for LtvSystem {
    fn from(s: SystemChoice) -> Self {
        match s {
            SystemChoice::Fixed => LtvSystem::Fixed,
            SystemChoice::Switching => LtvSystem::Switching,
            SystemChoice::TimeVariant => LtvSystem::TimeVariant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostChoice {
    /// `‖x‖² + ‖u‖²`.
    #[default]
    Quadratic,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PendulumSettings {
    pub dt: f64,
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub max_torque: f64,
    pub max_speed: f64,
    /// Initial angle drawn uniformly from `[−a, a]` per seed.
    pub initial_angle: f64,
    /// Initial speed drawn uniformly from `[−s, s]` per seed.
    pub initial_speed: f64,
}

impl Default for PendulumSettings {
    fn default() -> Self {
        let p = Pendulum::default();
        PendulumSettings {
            dt: p.dt,
            gravity: p.gravity,
            mass: p.mass,
            length: p.length,
            max_torque: p.max_torque,
            max_speed: p.max_speed,
            initial_angle: 0.3,
            initial_speed: 0.3,
        }
    }
}

impl PendulumSettings {
    pub fn model(&self) -> Pendulum {
        Pendulum {
            dt: self.dt,
            gravity: self.gravity,
            mass: self.mass,
            length: self.length,
            max_torque: self.max_torque,
            max_speed: self.max_speed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    Lds {
        system: SystemChoice,
        #[serde(default)]
        cost: CostChoice,
    },
    Pendulum {
        #[serde(default)]
        settings: PendulumSettings,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseChoice {
    Zero,
    #[default]
    Gaussian,
    Sinusoidal,
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockConfig {
    /// Defaults to `T/3`.
    #[serde(default)]
    pub start: Option<usize>,
    /// Defaults to `2T/3`.
    #[serde(default)]
    pub end: Option<usize>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    0.3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub kind: NoiseChoice,
    pub std: f64,
    pub segments: usize,
    pub bound: f64,
    pub shock: Option<ShockConfig>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            kind: NoiseChoice::Gaussian,
            std: 0.3,
            segments: 5,
            bound: 1.0,
            shock: None,
        }
    }
}

impl NoiseConfig {
    pub fn kind(&self, horizon: usize) -> NoiseKind {
        let base = match self.kind {
            NoiseChoice::Zero => NoiseKind::Zero,
            NoiseChoice::Gaussian => NoiseKind::Gaussian { std: self.std },
            NoiseChoice::Sinusoidal => NoiseKind::Sinusoidal,
            NoiseChoice::Alternating => NoiseKind::Alternating {
                segments: self.segments,
                std: self.std,
            },
        };
        match self.shock {
            Some(s) => NoiseKind::Shock {
                base: Box::new(base),
                start: s.start.unwrap_or(horizon / 3),
                end: s.end.unwrap_or(2 * horizon / 3),
                amplitude: s.amplitude,
            },
            None => base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LrSchedule {
    #[default]
    Constant,
    InvSqrt,
}

/// Serialized form of [`GainMode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilizerChoice {
    #[default]
    Tracking,
    /// Gain of the `start` round, held afterwards.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpcSettings {
    pub label: Option<String>,
    pub memory: usize,
    pub lr: f64,
    pub lr_schedule: LrSchedule,
    pub budget: f64,
    /// First learning round; earlier rounds play the stabilizer only.
    pub start: usize,
    pub stabilizer: StabilizerChoice,
}

impl Default for GpcSettings {
    fn default() -> Self {
        GpcSettings {
            label: None,
            memory: 10,
            lr: 0.01,
            lr_schedule: LrSchedule::Constant,
            budget: 5.0,
            start: 1,
            stabilizer: StabilizerChoice::Tracking,
        }
    }
}

impl GpcSettings {
    pub fn gpc_config(&self) -> crate::control::GpcConfig {
        let lr = match self.lr_schedule {
            LrSchedule::Constant => StepSchedule::Constant { eta: self.lr },
            LrSchedule::InvSqrt => StepSchedule::InvSqrt { eta0: self.lr },
        };
        let gain = match self.stabilizer {
            StabilizerChoice::Tracking => GainMode::Tracking,
            StabilizerChoice::Frozen => GainMode::Frozen,
        };
        crate::control::GpcConfig {
            memory: self.memory,
            budget: self.budget,
            lr,
            start: self.start.max(1),
            gain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarcVariant {
    /// Sampling with per-round births on working sets.
    #[default]
    Theory,
    /// Argmax selection, sparse births, padded lifetimes.
    Experimental,
    /// One expert per round, none retired.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarcSettings {
    pub label: Option<String>,
    pub variant: MarcVariant,
    pub eta: f64,
    /// Replace the fixed `eta` by doubling epochs.
    pub epochs: bool,
    pub sigma: f64,
    pub birth_every: Option<usize>,
    pub min_lifetime: Option<usize>,
    pub base: GpcSettings,
}

impl Default for MarcSettings {
    fn default() -> Self {
        MarcSettings {
            label: None,
            variant: MarcVariant::Theory,
            eta: 0.05,
            epochs: false,
            sigma: 1e-2,
            birth_every: None,
            min_lifetime: None,
            base: GpcSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IlqrSettings {
    pub label: Option<String>,
    pub iterations: usize,
    pub tolerance: f64,
    pub mu_sweep: u32,
}

impl Default for IlqrSettings {
    fn default() -> Self {
        IlqrSettings {
            label: None,
            iterations: 10,
            tolerance: 1e-16,
            mu_sweep: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControllerConfig {
    Zero {},
    /// LQR gain of the current `(A_t, B_t)`.
    Lqr {},
    /// LQR gain computed once at the start.
    FixedLqr {},
    Gpc(GpcSettings),
    Marc(MarcSettings),
    /// Plan once from the initial state and execute open loop.
    Ilqr(IlqrSettings),
}

impl ControllerConfig {
    pub fn label(&self) -> String {
        let custom = match self {
            ControllerConfig::Gpc(s) => s.label.clone(),
            ControllerConfig::Marc(s) => s.label.clone(),
            ControllerConfig::Ilqr(s) => s.label.clone(),
            _ => None,
        };
        custom.unwrap_or_else(|| {
            match self {
                ControllerConfig::Zero {} => "zero",
                ControllerConfig::Lqr {} => "lqr",
                ControllerConfig::FixedLqr {} => "fixed-lqr",
                ControllerConfig::Gpc(_) => "gpc",
                ControllerConfig::Marc(_) => "marc",
                ControllerConfig::Ilqr(_) => "ilqr",
            }
            .into()
        })
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<IntervalGrid> {
        self.intervals.parse().map_err(Error::Config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.controllers.is_empty() {
            return Err(Error::Config("at least one controller is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        self.grid()?;
        let mut labels: Vec<String> = self.controllers.iter().map(|c| c.label()).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate controller label `{}`", w[0])));
        }
        for c in &self.controllers {
            match c {
                ControllerConfig::Ilqr(_) if !matches!(self.environment, EnvironmentConfig::Pendulum { .. }) => {
                    return Err(Error::Config("ilqr needs the pendulum environment".into()));
                }
                ControllerConfig::Gpc(s) if s.memory == 0 || !(s.lr > 0.0) || !(s.budget > 0.0) => {
                    return Err(Error::Config(format!("invalid gpc settings for `{}`", c.label())));
                }
                ControllerConfig::Marc(s)
                    if s.base.memory == 0 || !(s.eta > 0.0) || !(0.0..1.0).contains(&s.sigma) || !(s.base.lr > 0.0) =>
                {
                    return Err(Error::Config(format!("invalid marc settings for `{}`", c.label())));
                }
                ControllerConfig::Marc(s) if s.base.stabilizer == StabilizerChoice::Frozen => {
                    return Err(Error::Config(format!(
                        "marc experts share a tracking stabilizer (`{}`)",
                        c.label()
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
horizon = 1000
seeds = [0, 1, 2]

[environment]
kind = "lds"
system = "switching"

[noise]
kind = "alternating"
std = 0.3
segments = 5

[[controllers]]
kind = "lqr"

[[controllers]]
kind = "gpc"
lr = 0.01

[[controllers]]
kind = "gpc"
label = "gpc-fresh"
start = 501

[[controllers]]
kind = "marc"
variant = "experimental"
eta = 0.05

[controllers.base]
memory = 10
"#;

    #[test]
    fn parses_a_full_config() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.horizon, 1000);
        assert_eq!(c.controllers.len(), 4);
        assert_eq!(c.controllers[2].label(), "gpc-fresh");
        assert!(matches!(
            c.environment,
            EnvironmentConfig::Lds {
                system: SystemChoice::Switching,
                cost: CostChoice::Quadratic
            }
        ));
        assert_eq!(c.noise.kind(1000), NoiseKind::Alternating { segments: 5, std: 0.3 });
        let round = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn rejects_unknown_keys() {
        for bad in [
            SAMPLE.replace("horizon = 1000", "horizon = 1000\nhorizn = 3"),
            SAMPLE.replace("kind = \"lqr\"", "kind = \"lqr\"\nextra = 1"),
            SAMPLE.replace("lr = 0.01", "lr = 0.01\nrate = 2"),
            SAMPLE.replace("segments = 5", "segments = 5\nperiod = 4"),
            SAMPLE.replace("system = \"switching\"", "system = \"switching\"\nmass = 2"),
            SAMPLE.replace("memory = 10", "memory = 10\nwidth = 3"),
        ] {
            let Err(err) = ExperimentConfig::from_toml(&bad) else {
                panic!("accepted:\n{bad}")
            };
            assert!(err.is_config(), "{err}");
        }
    }

    #[test]
    fn rejects_invalid_values() {
        assert!(
            ExperimentConfig::from_toml(&SAMPLE.replace("horizon = 1000", "horizon = 0"))
                .unwrap_err()
                .is_config()
        );
        assert!(
            ExperimentConfig::from_toml(&SAMPLE.replace("\"switching\"", "\"spinning\""))
                .unwrap_err()
                .is_config()
        );
        let dup = SAMPLE.replace("label = \"gpc-fresh\"", "label = \"gpc\"");
        assert!(ExperimentConfig::from_toml(&dup).unwrap_err().is_config());
        let frozen = SAMPLE.replace(
            "[controllers.base]\nmemory = 10",
            "[controllers.base]\nmemory = 10\nstabilizer = \"frozen\"",
        );
        assert_ne!(frozen, SAMPLE);
        assert!(ExperimentConfig::from_toml(&frozen).unwrap_err().is_config());
        let ilqr = format!("{SAMPLE}\n[[controllers]]\nkind = \"ilqr\"\n");
        assert!(ExperimentConfig::from_toml(&ilqr).unwrap_err().is_config());
    }

    #[test]
    fn pendulum_with_shock() {
        let text = r#"
horizon = 900
[environment]
kind = "pendulum"
[environment.settings]
initial_angle = 0.2
max_torque = 2.0
[noise]
kind = "zero"
[noise.shock]
amplitude = 0.3
[[controllers]]
kind = "ilqr"
"#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        match &c.environment {
            EnvironmentConfig::Pendulum { settings } => {
                assert_eq!(settings.initial_angle, 0.2);
                assert_eq!(settings.model().dt, 0.05);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            c.noise.kind(900),
            NoiseKind::Shock {
                base: Box::new(NoiseKind::Zero),
                start: 300,
                end: 600,
                amplitude: 0.3
            }
        );
        let bad = text.replace("initial_angle = 0.2", "initial_angle = 0.2\nfriction = 1");
        assert!(ExperimentConfig::from_toml(&bad).unwrap_err().is_config());
    }
}
