//! Reproducible test configurations.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constructor::{self, ConstructorError, M0};
use crate::dynamics::{self, DynamicsError, State, Status};
use crate::linalg::C64;
use crate::model::{self, Configuration, Spin};
use crate::scattering::{self, AsymptoticData};
use crate::spectral;

/// A valid configuration with `n` solitons drawn from `seed`.
///
/// Speeds are uniform in `(-0.8, 0.8)` with gaps of at least `0.2`, the
/// spacing is uniform in `[12, 25]`, and the constraints are solved by the
/// fixed-point iteration to `1e-13`. Draws that do not converge are skipped.
pub fn random_configuration(seed: u64, n: usize) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(-0.8..0.8)).collect();
        w.sort_by(f64::total_cmp);
        if w.windows(2).any(|p| p[1] - p[0] < 0.2) {
            continue;
        }
        let d = rng.random_range(12.0..25.0);
        if let Ok(it) = constructor::iterate(&w, d, 1e-13, 200) {
            if it.converged {
                return Configuration { m0: M0, spins: it.last.spins, poles: it.initial.poles };
            }
        }
    }
}

/// Two solitons moving together at speed `w`: `s₂ = -r s₁` with `0 < r < 1`.
///
/// Both constraints close exactly when `Im x₁ = |s₁|²(1 - r)/(2γ(1 + r))`
/// and `Im x₂ = r Im x₁`, where `γ = s₁[3]`. The spins are orthogonal, so
/// `S = B = 0` and `L = wI`.
pub fn traveling_configuration(w: f64, r: f64, centre: f64) -> Configuration {
    let (s1, gamma) = constructor::soliton_spin(w);
    let s2 = Spin(model::scale(C64::new(-r, 0.0), &s1.0));
    let im1 = s1.norm().powi(2) * (1.0 - r) / (2.0 * gamma * (1.0 + r));
    Configuration { m0: M0, spins: vec![s1, s2], poles: vec![C64::new(centre, im1), C64::new(centre, r * im1)] }
}

/// Two-soliton scattering run used for the convergence checks.
pub struct ScatteringScenario {
    /// State at the interaction time, used as `t = 0`.
    pub state: State,
    pub m0: [f64; 3],
    pub asym: AsymptoticData,
}

/// Build `w = (-0.5, 0.5)` at spacing 20, then move to the time where the
/// free asymptotic trajectories pass closest to each other, so that
/// forward and backward runs see a symmetric interaction.
pub fn scattering_scenario() -> Result<ScatteringScenario, ScenarioError> {
    let it = constructor::iterate(&[-0.5, 0.5], 20.0, 1e-13, 200)?;
    let cfg = Configuration { m0: M0, spins: it.last.spins, poles: it.initial.poles };
    let start = State::from_configuration(&cfg)?;
    let asym0 = asymptotics_of(&start, M0)?;
    let tc = scattering::interaction_time(&asym0);
    let (state, status) = dynamics::propagate(&start, M0, tc, 1e-12)?;
    if status != Status::Completed {
        return Err(ScenarioError::Event(status));
    }
    let asym = asymptotics_of(&state, M0)?;
    Ok(ScatteringScenario { state, m0: M0, asym })
}

/// Asymptotic data of a state.
pub fn asymptotics_of(state: &State, m0: [f64; 3]) -> Result<AsymptoticData, ScenarioError> {
    let data = spectral::explicit_data(&state.configuration(m0), &state.velocities)?;
    Ok(scattering::asymptotic_data(&data, 1e-9)?)
}

#[derive(Debug)]
pub enum ScenarioError {
    Constructor(ConstructorError),
    Dynamics(DynamicsError),
    Spectral(spectral::SpectralError),
    Scatter(scattering::ScatterError),
    Model(model::ModelError),
    Event(Status),
}

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Constructor(e) => write!(f, "{e}"),
            Self::Dynamics(e) => write!(f, "{e}"),
            Self::Spectral(e) => write!(f, "{e}"),
            Self::Scatter(e) => write!(f, "{e}"),
            Self::Model(e) => write!(f, "{e}"),
            Self::Event(s) => write!(f, "integration stopped: {}", s.as_str()),
        }
    }
}

impl std::error::Error for ScenarioError {}

macro_rules! from_err {
    ($($t:ty => $v:ident),*) => {
        $(impl From<$t> for ScenarioError {
            fn from(e: $t) -> Self {
                Self::$v(e)
            }
        })*
    };
}

from_err!(ConstructorError => Constructor, DynamicsError => Dynamics, spectral::SpectralError => Spectral,
    scattering::ScatterError => Scatter, model::ModelError => Model);
