use std::fmt;
use std::path::{Path, PathBuf};

use hwm_core::constructor::{self, ConstructorError};
use hwm_core::dynamics::{self, State, Status, Trajectory, TrajectoryOptions};
use hwm_core::scattering::{self, ScatterError};
use hwm_core::{model, scenarios, spectral, Configuration};
use serde_json::{json, Value};

use crate::config::{self, ConfigurationDoc, InputError, ScenarioConfig};
use crate::output::{cnums, num, nums, write_atomic, write_json};

pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_EVENT: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// A command failure together with its exit code.
#[derive(Debug)]
pub enum CliError {
    Input(InputError),
    Io { path: PathBuf, source: std::io::Error },
    NoConvergence(String),
    Event(Status),
    Verify(usize),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            Self::Input(_) | Self::Io { .. } => EXIT_INPUT,
            Self::NoConvergence(_) => EXIT_NO_CONVERGENCE,
            Self::Event(_) => EXIT_EVENT,
            Self::Verify(_) => EXIT_VERIFY,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(e) => write!(f, "{e}"),
            Self::Io { path, source } => write!(f, "cannot write {}: {source}", path.display()),
            Self::NoConvergence(why) => write!(f, "no convergence: {why}"),
            Self::Event(s) => write!(f, "integration stopped early: {}", s.as_str()),
            Self::Verify(n) => write!(f, "{n} verification suite(s) failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        Self::Input(e)
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Input(InputError::Invalid(msg.into()))
}

fn save_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    write_json(&path, value).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Resolved command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub tol: Option<f64>,
}

impl Overrides {
    pub fn out_dir(&self, cfg: &ScenarioConfig) -> PathBuf {
        self.out.clone().or_else(|| cfg.output.as_ref().map(|o| o.dir.clone())).unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn seed(&self, cfg: &ScenarioConfig) -> u64 {
        self.seed.or(cfg.seed).unwrap_or(0)
    }

    pub fn check(&self) -> Result<(), CliError> {
        if let Some(t) = self.t_end {
            if !t.is_finite() {
                return Err(invalid("--t-end must be finite"));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("--tol must be positive"));
            }
        }
        Ok(())
    }

    /// Trajectory options, or `None` when no trajectory was requested.
    fn trajectory(&self, cfg: &ScenarioConfig) -> Option<TrajectoryOptions> {
        if cfg.trajectory.is_none() && self.t_end.is_none() {
            return None;
        }
        let mut opts = cfg.trajectory.as_ref().map(|t| t.options()).unwrap_or_default();
        if let Some(t) = self.t_end {
            opts.t_span.1 = t;
        }
        if let Some(tol) = self.tol {
            opts.rel_tol = tol;
        }
        Some(opts)
    }
}

fn construct_error(e: ConstructorError) -> CliError {
    match e {
        ConstructorError::Empty
        | ConstructorError::NonDistinctSpeeds
        | ConstructorError::SpeedUnit { .. }
        | ConstructorError::InvalidEpsilon
        | ConstructorError::InvalidSpacing => invalid(e.to_string()),
        other => CliError::NoConvergence(other.to_string()),
    }
}

fn construct_tol(cfg: &ScenarioConfig, ov: &Overrides) -> (f64, usize) {
    let c = cfg.construct.as_ref();
    (ov.tol.or(c.and_then(|c| c.tol)).unwrap_or(1e-12), c.and_then(|c| c.max_iter).unwrap_or(200))
}

/// The configuration a command works on: given explicitly, built from
/// targets, or drawn from the seed.
fn resolve_configuration(cfg: &ScenarioConfig, ov: &Overrides) -> Result<Configuration, CliError> {
    if let Some(doc) = &cfg.configuration {
        return Ok(doc.to_configuration()?);
    }
    if let Some(t) = &cfg.targets {
        let (tol, max_iter) = construct_tol(cfg, ov);
        let (c, _) = constructor::fixpoint(&t.to_targets(), tol, max_iter).map_err(construct_error)?;
        return Ok(c);
    }
    let n = cfg.random.as_ref().map_or(2, |r| r.n);
    Ok(scenarios::random_configuration(ov.seed(cfg), n))
}

pub fn construct(cfg: &ScenarioConfig, ov: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    let targets = cfg.targets.as_ref().ok_or_else(|| invalid("construct needs a targets block"))?.to_targets();
    targets.validate().map_err(construct_error)?;
    let (tol, max_iter) = construct_tol(cfg, ov);
    let (c, report) = constructor::fixpoint(&targets, tol, max_iter).map_err(construct_error)?;
    let vel = model::velocity_from_constraints(&c).map_err(|e| CliError::NoConvergence(e.to_string()))?;
    let dir = ov.out_dir(cfg);
    let doc = ScenarioConfig { configuration: Some(ConfigurationDoc::from_configuration(&c)), ..Default::default() };
    let config_json = serde_json::to_value(&doc).expect("serialisable");
    let report_json = json!({
        "n": c.len(),
        "targets": { "w": nums(&targets.w), "epsilon": num(targets.epsilon), "d": targets.d.map(num) },
        "tol": num(tol),
        "residual_history": nums(&report.residual_history),
        "final_residual": num(*report.residual_history.last().expect("history nonempty")),
        "geometric_ratio": num(report.geometric_ratio),
        "velocities": cnums(&vel),
        "final_speed_errors": nums(&report.final_speed_errors),
        "spectrum_error": num(report.spectrum_error),
        "spin_deviation": num(report.spin_deviation),
        "d_used": num(report.d_used),
        "doublings": report.doublings,
    });
    Ok(vec![save_json(&dir, "configuration.json", &config_json)?, save_json(&dir, "build_report.json", &report_json)?])
}

fn run(c: &Configuration, opts: &TrajectoryOptions) -> Result<Trajectory, CliError> {
    dynamics::integrate_configuration(c, opts).map_err(|e| invalid(e.to_string()))
}

fn monitor_json(traj: &Trajectory, opts: &TrajectoryOptions) -> Value {
    let rep = dynamics::monitor_report(traj);
    json!({
        "status": rep.status.as_str(),
        "t_start": num(opts.t_span.0),
        "t_end": num(opts.t_span.1),
        "t_reached": num(traj.last().0),
        "samples": traj.samples.len(),
        "min_pair_distance": num(rep.min_pair_distance),
        "min_im": num(rep.min_im),
        "max_spin_norm": num(rep.max_spin_norm),
        "max_constraint_residual": num(rep.max_constraint_residual),
        "velocity_sum_drift": num(rep.velocity_sum_drift),
        "separation_rates": rep.separation_rates.iter().map(|(i, j, r)| json!({"i": i, "j": j, "rate": num(*r)})).collect::<Vec<_>>(),
    })
}

fn event_result(status: Status) -> Result<(), CliError> {
    match status {
        Status::Completed => Ok(()),
        Status::StepFailure => Err(CliError::NoConvergence("step size underflow".into())),
        s => Err(CliError::Event(s)),
    }
}

/// Outputs are written before the exit status is decided, so partial runs
/// keep their files.
pub fn simulate(cfg: &ScenarioConfig, ov: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    let c = resolve_configuration(cfg, ov)?;
    let opts = ov.trajectory(cfg).unwrap_or_else(|| {
        let mut o = TrajectoryOptions::default();
        if let Some(tol) = ov.tol {
            o.rel_tol = tol;
        }
        o
    });
    let traj = run(&c, &opts)?;
    let dir = ov.out_dir(cfg);
    let csv_path = dir.join("trajectory.csv");
    write_atomic(&csv_path, &crate::output::trajectory_csv(&traj)).map_err(|source| CliError::Io { path: csv_path.clone(), source })?;
    let mon = save_json(&dir, "monitor.json", &monitor_json(&traj, &opts))?;
    event_result(traj.status)?;
    Ok(vec![csv_path, mon])
}

fn check_json(b: &scattering::BoundCheck) -> Value {
    json!({ "pass": b.pass, "margin": num(b.margin), "t": num(b.t), "index": [b.index.0, b.index.1] })
}

fn traveling_json(r: &scattering::TravelingReport) -> Value {
    json!({
        "verdict": r.verdict.as_str(),
        "v": num(r.v),
        "tol": num(r.tol),
        "pt_residual": num(r.pt_residual),
        "ct_residuals": nums(&[r.ct_residuals.0, r.ct_residuals.1, r.ct_residuals.2]),
        "l_diag_residual": num(r.l_diag_residual),
        "h1_residual": num(r.h1_residual),
        "h2_residual": num(r.h2_residual),
        "h1_ok": r.h1_ok,
        "h2_ok": r.h2_ok,
    })
}

pub fn analyze(cfg: &ScenarioConfig, ov: &Overrides) -> Result<Vec<PathBuf>, CliError> {
    let c = resolve_configuration(cfg, ov)?;
    let toggles = cfg.analysis.clone().unwrap_or_default();
    let gap_tol = toggles.gap_tol.unwrap_or(1e-9);
    let state = State::from_configuration(&c).map_err(|e| invalid(e.to_string()))?;
    let mut notes: Vec<String> = Vec::new();

    let stats = scattering::alpha_stats(&state);
    let witness = match scattering::witness_from_alpha(&stats) {
        Ok(w) => w,
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };

    let lax = spectral::lax_data(&c, &state.velocities).map_err(|e| invalid(e.to_string()))?;
    let (values, separated) = spectral::spectrum(&lax.l, gap_tol).map_err(|e| invalid(e.to_string()))?;

    let mut asym = None;
    if toggles.asymptotics {
        let built = spectral::explicit_data(&c, &state.velocities)
            .map_err(ScatterError::from)
            .and_then(|d| scattering::asymptotic_data(&d, gap_tol));
        match built {
            Ok(a) => asym = Some(a),
            Err(e) => notes.push(e.to_string()),
        }
    }

    let traj = match ov.trajectory(cfg) {
        Some(opts) => Some(run(&c, &opts)?),
        None => None,
    };

    let traveling = if toggles.traveling {
        let series = match &traj {
            Some(t) => spectral::lax_series(t).map_err(|e| invalid(e.to_string()))?,
            None => vec![(0.0, lax.clone())],
        };
        match scattering::traveling_report(&series, scattering::default_traveling_tolerance(&series)) {
            Ok(r) => Some(traveling_json(&r)),
            Err(e) => {
                notes.push(e.to_string());
                None
            }
        }
    } else {
        None
    };

    let bounds = match (&traj, &witness, toggles.bounds) {
        (Some(t), Some(w), true) => {
            let r = scattering::bounds_check(t, w, &state);
            Some(json!({
                "all_pass": r.all_pass(),
                "separation": check_json(&r.separation),
                "speed": check_json(&r.speed),
                "spin": check_json(&r.spin),
                "imaginary": check_json(&r.imaginary),
            }))
        }
        _ => None,
    };

    let convergence = match (&traj, &asym, toggles.convergence) {
        (Some(t), Some(a), true) => match scattering::convergence_metrics(t, a) {
            Ok(m) => Some(Value::Array(
                m.samples
                    .iter()
                    .map(|s| {
                        json!({
                            "t": num(s.t),
                            "hhalf_diff": num(s.hhalf_diff),
                            "spin_gaps": nums(&s.spin_gaps),
                            "pole_gaps": nums(&s.pole_gaps),
                            "speed_gaps": nums(&s.speed_gaps),
                        })
                    })
                    .collect(),
            )),
            Err(e) => {
                notes.push(e.to_string());
                None
            }
        },
        _ => None,
    };

    let report = json!({
        "n": c.len(),
        "alpha": {
            "s": num(stats.s),
            "nu": num(stats.nu),
            "d": num(stats.d),
            "alpha": num(stats.alpha),
        },
        "witness": witness.map(|w| json!({"kappa": num(w.kappa), "s_prime": num(w.s_prime), "eta": num(w.eta)})),
        "spectrum": { "values": cnums(&values), "min_gap": num(spectral::min_gap(&values)), "singular": !separated },
        "asymptotics": asym.as_ref().map(|a| json!({
            "v": nums(&a.v),
            "a": cnums(&a.a),
            "b": a.b.iter().map(|s| cnums(&s.0)).collect::<Vec<_>>(),
            "v_imag": num(a.v_imag),
            "interaction_time": num(scattering::interaction_time(a)),
        })),
        "traveling": traveling,
        "bounds": bounds,
        "convergence": convergence,
        "trajectory_status": traj.as_ref().map(|t| t.status.as_str()),
        "notes": notes,
    });
    let path = save_json(&ov.out_dir(cfg), "report.json", &report)?;
    if let Some(t) = &traj {
        event_result(t.status)?;
    }
    Ok(vec![path])
}

pub fn load(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    match path {
        Some(p) => Ok(config::load(p)?),
        None => Ok(ScenarioConfig::default()),
    }
}
