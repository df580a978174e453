//! Construction of N-soliton initial data with prescribed approximate
//! asymptotic speeds.
//!
//! Each soliton starts from the closed-form single-soliton data for its
//! target speed, placed at `Re x_j = D·w_j`. The spins are then corrected by
//! a fixed-point iteration `S ← S + T + H` until `s_j · F_j(S) = 0` for all
//! `j`: the T-step removes the linearised constraint residual, the H-step
//! restores `s_j² = 0` along a direction orthogonal to `F_j`. The background
//! is fixed to `m₀ = e₃`.

use std::fmt;

use nalgebra::DMatrix;

use crate::linalg::{self, C64};
use crate::model::{self, Configuration, ModelError, Spin, Vec3};
use crate::spectral;

/// Background used by the constructor.
pub const M0: [f64; 3] = [0.0, 0.0, 1.0];

/// Bound constant for the T-step size; diagnostics only.
pub const K_BOUND: f64 = 2.0;

/// Maximum number of D doublings in [`fixpoint`].
pub const MAX_DOUBLINGS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum ConstructorError {
    Empty,
    /// Two target speeds coincide.
    NonDistinctSpeeds,
    /// `|w_j| >= 1`.
    SpeedUnit { index: usize },
    InvalidEpsilon,
    InvalidSpacing,
    /// `|Re s_j[3] - 1|` too small for the axial T-step.
    DegeneratePivot { index: usize },
    /// `F_j` has vanishing first two components.
    NoOrthogonalDirection { index: usize },
    /// `k_j · k_j = 0`.
    BranchDegenerate { index: usize },
    NoConvergence { residual: f64, d: f64 },
    Model(ModelError),
}

impl fmt::Display for ConstructorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "no target speeds"),
            Self::NonDistinctSpeeds => write!(f, "target speeds must be pairwise distinct"),
            Self::SpeedUnit { index } => write!(f, "SpeedUnit: target speed {index} has |w| >= 1"),
            Self::InvalidEpsilon => write!(f, "epsilon must be positive and finite"),
            Self::InvalidSpacing => write!(f, "spacing D must be positive and finite"),
            Self::DegeneratePivot { index } => write!(f, "degenerate T-step pivot for soliton {index}"),
            Self::NoOrthogonalDirection { index } => write!(f, "no H-step direction for soliton {index}"),
            Self::BranchDegenerate { index } => write!(f, "degenerate H-step quadratic for soliton {index}"),
            Self::NoConvergence { residual, d } => {
                write!(f, "fixed point did not converge (residual {residual:e}, D = {d})")
            }
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ConstructorError {}

impl From<ModelError> for ConstructorError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}

/// Target speeds, accuracy and optional initial spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    pub w: Vec<f64>,
    pub epsilon: f64,
    pub d: Option<f64>,
}

impl Targets {
    pub fn new(w: Vec<f64>, epsilon: f64, d: Option<f64>) -> Self {
        Targets { w, epsilon, d }
    }

    pub fn validate(&self) -> Result<(), ConstructorError> {
        if self.w.is_empty() {
            return Err(ConstructorError::Empty);
        }
        if let Some(index) = self.w.iter().position(|w| !w.is_finite() || w.abs() >= 1.0) {
            return Err(ConstructorError::SpeedUnit { index });
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ConstructorError::InvalidEpsilon);
        }
        if let Some(d) = self.d {
            if !(d > 0.0 && d.is_finite()) {
                return Err(ConstructorError::InvalidSpacing);
            }
        }
        if self.nu() == 0.0 {
            return Err(ConstructorError::NonDistinctSpeeds);
        }
        Ok(())
    }

    /// Minimum pairwise speed gap, `+∞` for one target.
    pub fn nu(&self) -> f64 {
        let mut nu = f64::INFINITY;
        for i in 0..self.w.len() {
            for j in (i + 1)..self.w.len() {
                nu = nu.min((self.w[i] - self.w[j]).abs());
            }
        }
        nu
    }

    /// Starting spacing: `max(1000·N/(ν·ε), 1000)` unless given.
    pub fn initial_spacing(&self) -> f64 {
        self.d.unwrap_or_else(|| {
            let n = self.w.len() as f64;
            let nu = self.nu();
            if nu.is_finite() {
                (1000.0 * n / (nu * self.epsilon)).max(1e3)
            } else {
                1e3
            }
        })
    }
}

/// Closed-form single-soliton spin for speed `w`, and `γ = s₃`.
pub fn soliton_spin(w: f64) -> (Spin, f64) {
    let cos2 = -(1.0 - w * w) / (1.0 + w * w);
    let sign = if w < 0.0 { -1.0 } else { 1.0 };
    let theta = sign * 0.5 * cos2.acos();
    let gamma = 2.0 * (2.0 * cos2.abs()).sqrt();
    let s = Spin::new(C64::from_polar(2.0, theta), C64::from_polar(2.0, -theta), C64::new(gamma, 0.0));
    (s, gamma)
}

/// Approximate initial condition at spacing `targets.initial_spacing()`.
pub fn approximate_ic(targets: &Targets) -> Result<Configuration, ConstructorError> {
    targets.validate()?;
    Ok(approximate_ic_at(&targets.w, targets.initial_spacing()))
}

fn approximate_ic_at(w: &[f64], d: f64) -> Configuration {
    let mut spins = Vec::with_capacity(w.len());
    let mut poles = Vec::with_capacity(w.len());
    for &wj in w {
        let (s, gamma) = soliton_spin(wj);
        let im = s.norm().powi(2) / (2.0 * gamma);
        poles.push(C64::new(d * wj, im));
        spins.push(s);
    }
    Configuration { m0: M0, spins, poles }
}

/// `F_j(H) = i m₀ - Σ_{k≠j} h_k/(x_j - x_k) + Σ_k h̄_k/(x_j - x̄_k)`.
pub fn functional_f(poles: &[C64], h: &[Spin]) -> Vec<Vec3> {
    (0..poles.len()).map(|j| model::field_from(&M0, h, poles, j)).collect()
}

/// `F̃ = F - i m₀`.
pub fn functional_f_tilde(poles: &[C64], h: &[Spin]) -> Vec<Vec3> {
    functional_f(poles, h)
        .into_iter()
        .map(|mut f| {
            for (c, m) in f.iter_mut().zip(M0) {
                *c -= C64::new(0.0, m);
            }
            f
        })
        .collect()
}

/// Constraint residuals `s_j · F_j(S)`.
pub fn constraint_vector(poles: &[C64], spins: &[Spin]) -> Vec<C64> {
    functional_f(poles, spins).iter().zip(spins).map(|(f, s)| model::dot(&s.0, f)).collect()
}

/// `max_j |s_j · F_j(S)|`.
pub fn residual(poles: &[C64], spins: &[Spin]) -> f64 {
    constraint_vector(poles, spins).iter().fold(0.0, |m, r| m.max(r.norm()))
}

/// T-step: per soliton, the minimum-norm correction `t` solving the
/// linearised system `t·F_j + s_j·t̄/(2i Im x_j) = -s_j·F_j`, `s_j·t = 0`.
pub fn t_step(spins: &[Spin], poles: &[C64]) -> Vec<Spin> {
    let f = functional_f(poles, spins);
    let i2 = C64::new(0.0, 2.0);
    (0..poles.len())
        .map(|j| {
            let s = &spins[j].0;
            let r = model::dot(s, &f[j]);
            let mut m = DMatrix::<f64>::zeros(4, 6);
            for c in 0..6 {
                let mut t = [C64::new(0.0, 0.0); 3];
                t[c % 3] = if c < 3 { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
                let v = model::dot(&t, &f[j]) + model::dot(s, &model::conj(&t)) / (i2 * poles[j].im);
                let u = model::dot(s, &t);
                m[(0, c)] = v.re;
                m[(1, c)] = v.im;
                m[(2, c)] = u.re;
                m[(3, c)] = u.im;
            }
            let rhs = nalgebra::DVector::from_vec(vec![-r.re, -r.im, 0.0, 0.0]);
            let pinv = m.pseudo_inverse(1e-14).expect("pseudo-inverse with nonnegative eps");
            let sol = pinv * rhs;
            Spin([C64::new(sol[0], sol[3]), C64::new(sol[1], sol[4]), C64::new(sol[2], sol[5])])
        })
        .collect()
}

/// Axial T-step `t_j = (0, 0, κ_j)` with
/// `Re κ = Im r`, `Im κ = Im x·Re r/(Re s₃ - 1) - Re κ·Im s₃`, `r = s_j·F_j(S)`.
/// Kept for comparison; it does not drive [`fixpoint`].
pub fn t_step_axial(spins: &[Spin], poles: &[C64]) -> Result<Vec<Spin>, ConstructorError> {
    let r = constraint_vector(poles, spins);
    let mut out = Vec::with_capacity(spins.len());
    for j in 0..spins.len() {
        let s3 = spins[j].0[2];
        let pivot = s3.re - 1.0;
        if pivot.abs() < 1e-10 {
            return Err(ConstructorError::DegeneratePivot { index: j });
        }
        let re = r[j].im;
        let im = poles[j].im * r[j].re / pivot - re * s3.im;
        out.push(Spin::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(re, im)));
    }
    Ok(out)
}

/// H-step: `h_j = p_j k_j` with `k_j ∝ (F₂, -F₁, 0)` for `F = F_j(S + T)`
/// and `p_j` the small root of `(s_j + t_j + p k_j)² = 0`.
pub fn h_step(spins: &[Spin], t: &[Spin], poles: &[C64]) -> Result<Vec<Spin>, ConstructorError> {
    let st: Vec<Spin> = spins.iter().zip(t).map(|(s, t)| Spin(model::add(&s.0, &t.0))).collect();
    let f = functional_f(poles, &st);
    let mut out = Vec::with_capacity(spins.len());
    for j in 0..spins.len() {
        let raw = [f[j][1], -f[j][0], C64::new(0.0, 0.0)];
        let nk = model::norm(&raw);
        if nk == 0.0 || !nk.is_finite() {
            return Err(ConstructorError::NoOrthogonalDirection { index: j });
        }
        let k = model::scale(C64::new(1.0 / nk, 0.0), &raw);
        let a = model::dot(&k, &k);
        if a.norm() < 1e-14 {
            return Err(ConstructorError::BranchDegenerate { index: j });
        }
        let b = 2.0 * model::dot(&k, &st[j].0);
        let c = model::dot(&t[j].0, &t[j].0) + 2.0 * model::dot(&spins[j].0, &t[j].0);
        let mut d = (b * b - 4.0 * a * c).sqrt();
        if (b.conj() * d).re < 0.0 {
            d = -d;
        }
        let p = (-b + d) / (2.0 * a);
        out.push(Spin(model::scale(p, &k)));
    }
    Ok(out)
}

/// One fixed-point round `S + T + H`.
pub fn iterate_once(spins: &[Spin], poles: &[C64]) -> Result<Vec<Spin>, ConstructorError> {
    let t = t_step(spins, poles);
    let h = h_step(spins, &t, poles)?;
    Ok(spins
        .iter()
        .zip(t.iter().zip(&h))
        .map(|(s, (t, h))| Spin(model::add(&model::add(&s.0, &t.0), &h.0)))
        .collect())
}

/// Iteration snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct IterState {
    pub spins: Vec<Spin>,
    pub residual: f64,
    pub l: usize,
}

/// Outcome of the fixed-point iteration at a fixed spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Iteration {
    pub initial: Configuration,
    pub last: IterState,
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Run the iteration at spacing `d` without a-posteriori checks.
pub fn iterate(w: &[f64], d: f64, tol: f64, max_iter: usize) -> Result<Iteration, ConstructorError> {
    let initial = approximate_ic_at(w, d);
    let poles = initial.poles.clone();
    let mut spins = initial.spins.clone();
    let mut history = Vec::new();
    let mut l = 0;
    loop {
        let r = residual(&poles, &spins);
        history.push(r);
        if !r.is_finite() {
            break;
        }
        if r <= tol {
            return Ok(Iteration { initial, last: IterState { spins, residual: r, l }, residual_history: history, converged: true });
        }
        if l >= max_iter {
            break;
        }
        spins = iterate_once(&spins, &poles)?;
        l += 1;
    }
    let r = *history.last().expect("history nonempty");
    Ok(Iteration { initial, last: IterState { spins, residual: r, l }, residual_history: history, converged: false })
}

/// Diagnostics of a successful build.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub residual_history: Vec<f64>,
    /// Largest ratio of consecutive residuals; 0 when no step was needed.
    pub geometric_ratio: f64,
    /// `|ẋ_j(0) - w_j|`.
    pub final_speed_errors: Vec<f64>,
    /// `max_j |v_j - w_j|` for the sorted spectrum of `L(0)`.
    pub spectrum_error: f64,
    /// `max_j max_c |s_j[c] - s_j⁰[c]| / max_j |s_j⁰|`.
    pub spin_deviation: f64,
    pub d_used: f64,
    pub doublings: usize,
}

fn geometric_ratio(history: &[f64]) -> f64 {
    history.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).fold(0.0, f64::max)
}

/// Build a configuration whose constraint residual is at most `tol`.
///
/// After convergence the build is accepted when `|ẋ_j - w_j| ≤ 12ε`, every
/// spin stays within `ε·max|S₀|` of its starting value and the spectrum of
/// `L(0)` lies within `ε` of the targets. Otherwise D is doubled, up to
/// [`MAX_DOUBLINGS`] times.
pub fn fixpoint(targets: &Targets, tol: f64, max_iter: usize) -> Result<(Configuration, BuildReport), ConstructorError> {
    targets.validate()?;
    let eps = targets.epsilon;
    let mut d = targets.initial_spacing();
    let mut last_residual = f64::INFINITY;
    for doublings in 0..=MAX_DOUBLINGS {
        let it = match iterate(&targets.w, d, tol, max_iter) {
            Ok(it) => it,
            Err(ConstructorError::NoOrthogonalDirection { .. } | ConstructorError::BranchDegenerate { .. }) => {
                d *= 2.0;
                continue;
            }
            Err(e) => return Err(e),
        };
        last_residual = it.last.residual;
        if !it.converged {
            d *= 2.0;
            continue;
        }
        let cfg = Configuration { m0: M0, spins: it.last.spins.clone(), poles: it.initial.poles.clone() };
        let vel = model::velocity_from_constraints(&cfg)?;
        let final_speed_errors: Vec<f64> = vel.iter().zip(&targets.w).map(|(v, w)| (v - w).norm()).collect();
        let s0max = it.initial.spins.iter().fold(0.0_f64, |m, s| m.max(s.norm()));
        let spin_deviation = cfg
            .spins
            .iter()
            .zip(&it.initial.spins)
            .flat_map(|(a, b)| (0..3).map(move |c| (a.0[c] - b.0[c]).norm()))
            .fold(0.0, f64::max)
            / s0max;
        let spectrum_error = match spectral::lax_data(&cfg, &vel).and_then(|lax| Ok(linalg::eigenvalues(&lax.l)?)) {
            Ok(vals) => {
                let mut w = targets.w.clone();
                w.sort_by(f64::total_cmp);
                vals.iter().zip(&w).map(|(v, w)| (v - w).norm()).fold(0.0, f64::max)
            }
            Err(_) => f64::INFINITY,
        };
        let ok = final_speed_errors.iter().all(|e| *e <= 12.0 * eps) && spin_deviation <= eps && spectrum_error <= eps;
        if ok {
            let report = BuildReport {
                geometric_ratio: geometric_ratio(&it.residual_history),
                residual_history: it.residual_history,
                final_speed_errors,
                spectrum_error,
                spin_deviation,
                d_used: d,
                doublings,
            };
            return Ok((cfg, report));
        }
        d *= 2.0;
    }
    Err(ConstructorError::NoConvergence { residual: last_residual, d: d / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn resting_soliton_spin() {
        let (s, gamma) = soliton_spin(0.0);
        let r2 = 2.0_f64.sqrt();
        assert!(close(s.0[0], C64::new(0.0, 2.0), 1e-15));
        assert!(close(s.0[1], C64::new(0.0, -2.0), 1e-15));
        assert!((gamma - 2.0 * r2).abs() < 1e-15);
        let cfg = approximate_ic(&Targets::new(vec![0.0], 0.01, Some(1.0))).unwrap();
        assert!((cfg.poles[0].im - 2.0 * r2).abs() < 1e-14);
        assert!(cfg.spins[0].square().norm() < 1e-14);
    }

    #[test]
    fn third_root_speed_soliton() {
        let w = 1.0 / 3.0_f64.sqrt();
        let (s, _) = soliton_spin(w);
        let r3 = 3.0_f64.sqrt();
        assert!(close(s.0[0], C64::new(1.0, r3), 1e-14));
        assert!(close(s.0[1], C64::new(1.0, -r3), 1e-14));
        assert!(close(s.0[2], C64::new(2.0, 0.0), 1e-14));
        let cfg = approximate_ic(&Targets::new(vec![w], 0.01, Some(1.0))).unwrap();
        assert!((cfg.poles[0].im - 3.0).abs() < 1e-14);
        assert!(residual(&cfg.poles, &cfg.spins) < 1e-14);
    }

    #[test]
    fn gamma_matches_speed_relation() {
        for w in [-0.9, -0.5, -0.1, 0.0, 0.2, 0.7, 0.95] {
            let (_, gamma) = soliton_spin(w);
            let expected = 8.0 * (1.0 - w * w) / (1.0 + w * w);
            assert!((gamma * gamma - expected).abs() < 1e-12, "w = {w}");
        }
    }

    #[test]
    fn single_soliton_moves_at_target_speed() {
        for w in [-0.8, -0.3, 0.0, 0.4, 0.9] {
            let cfg = approximate_ic(&Targets::new(vec![w], 0.01, Some(5.0))).unwrap();
            let v = model::velocity_from_constraints(&cfg).unwrap();
            assert!(close(v[0], C64::new(w, 0.0), 1e-13), "w = {w}");
        }
    }

    #[test]
    fn unit_speed_rejected() {
        for w in [1.0, -1.0, 1.5] {
            let err = approximate_ic(&Targets::new(vec![0.0, w], 0.01, None)).unwrap_err();
            assert_eq!(err, ConstructorError::SpeedUnit { index: 1 });
        }
        assert_eq!(approximate_ic(&Targets::new(vec![0.2, 0.2], 0.01, None)).unwrap_err(), ConstructorError::NonDistinctSpeeds);
    }

    #[test]
    fn functional_of_zero_is_background() {
        let poles = [C64::new(0.0, 1.0), C64::new(3.0, 2.0)];
        let zero = vec![Spin::default(); 2];
        for f in functional_f(&poles, &zero) {
            assert_eq!(f, [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0)]);
        }
        for f in functional_f_tilde(&poles, &zero) {
            assert_eq!(f, [C64::new(0.0, 0.0); 3]);
        }
    }

    #[test]
    fn t_step_vanishes_at_fixed_point() {
        let cfg = approximate_ic(&Targets::new(vec![0.3], 0.01, Some(1.0))).unwrap();
        let t = t_step(&cfg.spins, &cfg.poles);
        assert!(t[0].norm() < 1e-14);
        let h = h_step(&cfg.spins, &t, &cfg.poles).unwrap();
        assert!(h[0].norm() < 1e-14);
    }

    #[test]
    fn h_step_restores_nilpotency() {
        let cfg = approximate_ic(&Targets::new(vec![-0.5, 0.5], 0.01, Some(30.0))).unwrap();
        let t = t_step(&cfg.spins, &cfg.poles);
        let h = h_step(&cfg.spins, &t, &cfg.poles).unwrap();
        let st: Vec<Spin> = cfg.spins.iter().zip(&t).map(|(s, t)| Spin(model::add(&s.0, &t.0))).collect();
        let f = functional_f(&cfg.poles, &st);
        for j in 0..2 {
            let s = model::add(&st[j].0, &h[j].0);
            assert!(model::dot(&s, &s).norm() < 1e-13);
            assert!(model::dot(&h[j].0, &f[j]).norm() < 1e-13);
        }
    }

    #[test]
    fn single_target_builds_immediately() {
        let (cfg, rep) = fixpoint(&Targets::new(vec![0.25], 0.01, None), 1e-12, 50).unwrap();
        assert_eq!(rep.residual_history.len(), 1);
        assert_eq!(rep.geometric_ratio, 0.0);
        assert!(rep.final_speed_errors[0] < 1e-13);
        assert_eq!(cfg.len(), 1);
    }

    #[test]
    fn two_soliton_build() {
        let (cfg, rep) = fixpoint(&Targets::new(vec![-0.5, 0.5], 0.01, None), 1e-12, 50).unwrap();
        assert!(model::constraint_residuals(&cfg).max_residual < 1e-10);
        assert!(rep.geometric_ratio < 0.5);
        assert!(rep.spectrum_error < 0.01);
        for w in rep.residual_history.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn axial_step_reports_degenerate_pivot() {
        let spins = vec![Spin::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0))];
        let poles = vec![C64::new(0.0, 1.0)];
        assert_eq!(t_step_axial(&spins, &poles).unwrap_err(), ConstructorError::DegeneratePivot { index: 0 });
    }
}
