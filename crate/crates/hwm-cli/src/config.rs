//! Input documents. Every struct rejects unknown keys.

use std::fmt;
use std::path::{Path, PathBuf};

use hwm_core::constructor::Targets;
use hwm_core::dynamics::TrajectoryOptions;
use hwm_core::{Configuration, Spin, C64};
use serde::{Deserialize, Serialize};

/// `[re, im]`.
pub type Complex = [f64; 2];

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configuration: Option<ConfigurationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<TargetsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construct: Option<ConstructDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigurationDoc {
    pub m0: [f64; 3],
    pub spins: Vec<[Complex; 3]>,
    pub poles: Vec<Complex>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsDoc {
    pub w: Vec<f64>,
    pub epsilon: f64,
    #[serde(default)]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDoc {
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDoc {
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub stride: Option<f64>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub abs_tol: Option<f64>,
    #[serde(default)]
    pub max_step: Option<f64>,
    #[serde(default)]
    pub collision_floor: Option<f64>,
    #[serde(default)]
    pub im_floor: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisDoc {
    #[serde(default = "yes")]
    pub asymptotics: bool,
    #[serde(default = "yes")]
    pub traveling: bool,
    #[serde(default = "yes")]
    pub bounds: bool,
    #[serde(default = "yes")]
    pub convergence: bool,
    #[serde(default)]
    pub gap_tol: Option<f64>,
}

impl Default for AnalysisDoc {
    fn default() -> Self {
        AnalysisDoc { asymptotics: true, traveling: true, bounds: true, convergence: true, gap_tol: None }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructDoc {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyDoc {
    #[serde(default)]
    pub suites: Option<Vec<String>>,
    #[serde(default)]
    pub seeds: Option<usize>,
    /// Deliberately broken build used as a negative control.
    #[serde(default)]
    pub inject_fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    SpinSignFlip,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDoc {
    pub dir: PathBuf,
}

/// Input problems, all mapped to exit code 1.
#[derive(Debug)]
pub enum InputError {
    Read { path: PathBuf, source: std::io::Error },
    Parse(serde_json::Error),
    Invalid(String),
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Read { path, source } => write!(f, "cannot read {}: {source}", path.display()),
            Self::Parse(e) => write!(f, "invalid config: {e}"),
            Self::Invalid(why) => write!(f, "invalid config: {why}"),
        }
    }
}

impl std::error::Error for InputError {}

pub fn load(path: &Path) -> Result<ScenarioConfig, InputError> {
    let text = std::fs::read_to_string(path).map_err(|source| InputError::Read { path: path.to_owned(), source })?;
    let cfg: ScenarioConfig = serde_json::from_str(&text).map_err(InputError::Parse)?;
    cfg.check()?;
    Ok(cfg)
}

fn finite(name: &str, x: f64) -> Result<(), InputError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(InputError::Invalid(format!("{name} must be finite")))
    }
}

fn positive(name: &str, x: Option<f64>) -> Result<(), InputError> {
    match x {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(InputError::Invalid(format!("{name} must be positive"))),
        _ => Ok(()),
    }
}

impl ScenarioConfig {
    /// Checks that do not need the numerical layer.
    pub fn check(&self) -> Result<(), InputError> {
        if self.configuration.is_some() && self.targets.is_some() {
            return Err(InputError::Invalid("give either configuration or targets, not both".into()));
        }
        if let Some(r) = &self.random {
            if r.n == 0 {
                return Err(InputError::Invalid("random.n must be at least 1".into()));
            }
        }
        if let Some(t) = &self.trajectory {
            for (name, v) in [("t_start", t.t_start), ("t_end", t.t_end)] {
                if let Some(v) = v {
                    finite(name, v)?;
                }
            }
            for (name, v) in [
                ("stride", t.stride),
                ("rel_tol", t.rel_tol),
                ("abs_tol", t.abs_tol),
                ("max_step", t.max_step),
                ("collision_floor", t.collision_floor),
                ("im_floor", t.im_floor),
            ] {
                positive(name, v)?;
            }
        }
        if let Some(a) = &self.analysis {
            positive("gap_tol", a.gap_tol)?;
        }
        if let Some(c) = &self.construct {
            positive("construct.tol", c.tol)?;
        }
        if let Some(v) = &self.verify {
            if v.seeds == Some(0) {
                return Err(InputError::Invalid("verify.seeds must be at least 1".into()));
            }
        }
        Ok(())
    }
}

pub fn complex(z: Complex) -> C64 {
    C64::new(z[0], z[1])
}

pub fn pair(z: C64) -> Complex {
    [z.re, z.im]
}

impl ConfigurationDoc {
    pub fn to_configuration(&self) -> Result<Configuration, InputError> {
        if self.spins.len() != self.poles.len() {
            return Err(InputError::Invalid("spins and poles differ in length".into()));
        }
        let spins = self.spins.iter().map(|s| Spin(s.map(complex))).collect();
        let poles = self.poles.iter().copied().map(complex).collect();
        Configuration::new(self.m0, spins, poles).map_err(|e| InputError::Invalid(e.to_string()))
    }

    pub fn from_configuration(cfg: &Configuration) -> Self {
        ConfigurationDoc {
            m0: cfg.m0,
            spins: cfg.spins.iter().map(|s| s.0.map(pair)).collect(),
            poles: cfg.poles.iter().copied().map(pair).collect(),
        }
    }
}

impl TargetsDoc {
    pub fn to_targets(&self) -> Targets {
        Targets::new(self.w.clone(), self.epsilon, self.d)
    }
}

impl TrajectoryDoc {
    pub fn options(&self) -> TrajectoryOptions {
        let d = TrajectoryOptions::default();
        TrajectoryOptions {
            t_span: (self.t_start.unwrap_or(d.t_span.0), self.t_end.unwrap_or(d.t_span.1)),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            max_step: self.max_step.unwrap_or(d.max_step),
            sample_stride: self.stride.unwrap_or(d.sample_stride),
            collision_floor: self.collision_floor.unwrap_or(d.collision_floor),
            im_floor: self.im_floor.unwrap_or(d.im_floor),
        }
    }
}
