//! Time integration of the spin Calogero–Moser system.
//!
//! In the stored spin convention (see [`crate::model`]) the flow reads
//!
//! ```text
//! ṡ_j = 2 Σ_{k≠j} s_j × s_k / (x_j - x_k)²
//! ẍ_j = 4 Σ_{k≠j} (s_j · s_k) / (x_j - x_k)³
//! ```
//!
//! which is the matrix system `Ȧ_j = Σ [A_j, A_k]/(x_j - x_k)²`,
//! `ẍ_j = -2 Σ tr(A_j A_k)/(x_j - x_k)³` for `A_j = to_pauli(-i s_j)`.
//! The second-order pole equation is integrated as a first-order system in
//! `(s, x, ẋ)` with an embedded Dormand–Prince 5(4) pair and a PI step
//! controller. Samples are taken at exact multiples of the stride.

use std::fmt;

use crate::linalg::C64;
use crate::model::{self, ConstraintReport, Configuration, ModelError, Spin};

/// Errors from the dynamics layer.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsError {
    /// Two poles closer than the collision floor.
    PoleCollision { i: usize, j: usize, distance: f64 },
    /// Inconsistent state lengths.
    LengthMismatch,
    /// Options out of range.
    InvalidOptions(&'static str),
    /// The initial configuration is invalid.
    Model(ModelError),
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PoleCollision { i, j, distance } => {
                write!(f, "poles {i} and {j} collide (distance {distance:e})")
            }
            Self::LengthMismatch => write!(f, "state vectors differ in length"),
            Self::InvalidOptions(why) => write!(f, "invalid trajectory options: {why}"),
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for DynamicsError {}

impl From<ModelError> for DynamicsError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}

/// Spins, poles and pole velocities at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub spins: Vec<Spin>,
    pub poles: Vec<C64>,
    pub velocities: Vec<C64>,
}

/// Time derivative of a [`State`]: `(ṡ, ẋ, ẍ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub spins: Vec<Spin>,
    pub poles: Vec<C64>,
    pub velocities: Vec<C64>,
}

impl State {
    /// State whose velocities are fixed by the constraint.
    pub fn from_configuration(cfg: &Configuration) -> Result<Self, ModelError> {
        Ok(State {
            spins: cfg.spins.clone(),
            poles: cfg.poles.clone(),
            velocities: model::velocity_from_constraints(cfg)?,
        })
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// Configuration view with the given background.
    pub fn configuration(&self, m0: [f64; 3]) -> Configuration {
        Configuration { m0, spins: self.spins.clone(), poles: self.poles.clone() }
    }

    /// Smallest `|x_i - x_j|`, `+∞` for a single soliton.
    pub fn min_pair_distance(&self) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let d = (self.poles[i] - self.poles[j]).norm();
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        best
    }

    fn pack(&self) -> Vec<C64> {
        let mut y = Vec::with_capacity(5 * self.len());
        for s in &self.spins {
            y.extend_from_slice(&s.0);
        }
        y.extend_from_slice(&self.poles);
        y.extend_from_slice(&self.velocities);
        y
    }

    fn unpack(y: &[C64]) -> State {
        let n = y.len() / 5;
        State {
            spins: (0..n).map(|j| Spin([y[3 * j], y[3 * j + 1], y[3 * j + 2]])).collect(),
            poles: y[3 * n..4 * n].to_vec(),
            velocities: y[4 * n..].to_vec(),
        }
    }
}

/// Right-hand side of the spin Calogero–Moser system. The background
/// vector does not enter the flow.
pub fn rhs(state: &State, collision_floor: f64) -> Result<StateDerivative, DynamicsError> {
    let n = state.len();
    if state.spins.len() != n || state.velocities.len() != n {
        return Err(DynamicsError::LengthMismatch);
    }
    let mut sd = vec![Spin::default(); n];
    let mut acc = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        for k in 0..n {
            if k == j {
                continue;
            }
            let d = state.poles[j] - state.poles[k];
            if d.norm() <= collision_floor {
                return Err(DynamicsError::PoleCollision { i: j.min(k), j: j.max(k), distance: d.norm() });
            }
            let d2 = d * d;
            let c = model::cross(&state.spins[j].0, &state.spins[k].0);
            for m in 0..3 {
                sd[j].0[m] += 2.0 * c[m] / d2;
            }
            acc[j] += 4.0 * model::dot(&state.spins[j].0, &state.spins[k].0) / (d2 * d);
        }
    }
    Ok(StateDerivative { spins: sd, poles: state.velocities.clone(), velocities: acc })
}

fn rhs_packed(y: &[C64], floor: f64, out: &mut [C64]) -> Result<(), DynamicsError> {
    let d = rhs(&State::unpack(y), floor)?;
    let n = d.poles.len();
    for j in 0..n {
        out[3 * j..3 * j + 3].copy_from_slice(&d.spins[j].0);
    }
    out[3 * n..4 * n].copy_from_slice(&d.poles);
    out[4 * n..].copy_from_slice(&d.velocities);
    Ok(())
}

/// Integration controls.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOptions {
    /// Start and end time; `t_span.1 < t_span.0` integrates backward.
    pub t_span: (f64, f64),
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Distance between stored samples.
    pub sample_stride: f64,
    pub collision_floor: f64,
    pub im_floor: f64,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            t_span: (0.0, 20.0),
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1.0,
            sample_stride: 0.5,
            collision_floor: 1e-6,
            im_floor: 1e-9,
        }
    }
}

impl TrajectoryOptions {
    /// Options for `[t0, t1]` with the given stride, defaults elsewhere.
    pub fn span(t0: f64, t1: f64, stride: f64) -> Self {
        TrajectoryOptions { t_span: (t0, t1), sample_stride: stride, ..Default::default() }
    }

    fn check(&self) -> Result<(), DynamicsError> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(DynamicsError::InvalidOptions("tolerances must be positive"));
        }
        if !(self.max_step > 0.0 && self.sample_stride > 0.0) {
            return Err(DynamicsError::InvalidOptions("step and stride must be positive"));
        }
        if !(self.t_span.0.is_finite() && self.t_span.1.is_finite()) {
            return Err(DynamicsError::InvalidOptions("time span must be finite"));
        }
        Ok(())
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Completed,
    PoleCollision,
    ImaginaryFloor,
    StepFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Completed => "Completed",
            Status::PoleCollision => "PoleCollision",
            Status::ImaginaryFloor => "ImaginaryFloor",
            Status::StepFailure => "StepFailure",
        }
    }
}

/// Sampled solution with per-sample constraint monitors.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub m0: [f64; 3],
    /// Samples in integration order (increasing `|t - t0|`).
    pub samples: Vec<(f64, State)>,
    pub monitors: Vec<ConstraintReport>,
    pub min_pair_distance: f64,
    pub min_im: f64,
    pub status: Status,
}

impl Trajectory {
    /// Samples sorted by increasing time.
    pub fn sorted_samples(&self) -> Vec<&(f64, State)> {
        let mut v: Vec<_> = self.samples.iter().collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    pub fn last(&self) -> &(f64, State) {
        self.samples.last().expect("trajectory has at least the initial sample")
    }
}

// Dormand–Prince 5(4) tableau; the flow is autonomous so the nodes are unused.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// PI controller constants.
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_STEPS: usize = 5_000_000;

struct Stepper {
    n: usize,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    floor: f64,
}

impl Stepper {
    fn new(n: usize, floor: f64) -> Self {
        Stepper { n, k: std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]), tmp: vec![C64::new(0.0, 0.0); n], floor }
    }

    fn stage(&mut self, y: &[C64], h: f64, coeffs: &[(usize, f64)], out: usize) -> Result<(), DynamicsError> {
        for i in 0..self.n {
            let mut acc = y[i];
            for &(s, a) in coeffs {
                acc += self.k[s][i] * (h * a);
            }
            self.tmp[i] = acc;
        }
        let (tmp, k) = (&self.tmp, &mut self.k);
        rhs_packed(tmp, self.floor, &mut k[out])
    }

    /// One trial step from `y` (with `k[0] = f(y)` already set). Writes the
    /// fifth-order solution into `y_new` and returns the scaled error norm.
    fn step(&mut self, y: &[C64], h: f64, rtol: f64, atol: f64, y_new: &mut [C64]) -> Result<f64, DynamicsError> {
        self.stage(y, h, &[(0, A21)], 1)?;
        self.stage(y, h, &[(0, A31), (1, A32)], 2)?;
        self.stage(y, h, &[(0, A41), (1, A42), (2, A43)], 3)?;
        self.stage(y, h, &[(0, A51), (1, A52), (2, A53), (3, A54)], 4)?;
        self.stage(y, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 5)?;
        for i in 0..self.n {
            y_new[i] = y[i]
                + (self.k[0][i] * A71 + self.k[2][i] * A73 + self.k[3][i] * A74 + self.k[4][i] * A75 + self.k[5][i] * A76) * h;
        }
        rhs_packed(y_new, self.floor, &mut self.k[6])?;
        let mut err = 0.0;
        for i in 0..self.n {
            let e = (self.k[0][i] * E1 + self.k[2][i] * E3 + self.k[3][i] * E4 + self.k[4][i] * E5 + self.k[5][i] * E6 + self.k[6][i] * E7) * h;
            let sre = atol + rtol * y[i].re.abs().max(y_new[i].re.abs());
            let sim = atol + rtol * y[i].im.abs().max(y_new[i].im.abs());
            err += (e.re / sre).powi(2) + (e.im / sim).powi(2);
        }
        Ok((err / (2 * self.n) as f64).sqrt())
    }
}

/// Integrate the flow from `initial`, sampling every `sample_stride`.
///
/// Integration stops early, with a non-`Completed` status, when two poles
/// come within `collision_floor`, a pole drops below `im_floor`, or the step
/// size underflows `max_step · 1e-9`.
pub fn integrate(initial: &State, m0: [f64; 3], opts: &TrajectoryOptions) -> Result<Trajectory, DynamicsError> {
    opts.check()?;
    let n = initial.len();
    if n == 0 || initial.spins.len() != n || initial.velocities.len() != n {
        return Err(DynamicsError::LengthMismatch);
    }
    let (t0, t1) = opts.t_span;
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let total = (t1 - t0).abs();

    let mut traj = Trajectory {
        m0,
        samples: vec![(t0, initial.clone())],
        monitors: vec![model::constraint_residuals(&initial.configuration(m0))],
        min_pair_distance: initial.min_pair_distance().0,
        min_im: initial.poles.iter().fold(f64::INFINITY, |m, p| m.min(p.im)),
        status: Status::Completed,
    };
    if traj.min_pair_distance <= opts.collision_floor {
        traj.status = Status::PoleCollision;
        return Ok(traj);
    }
    if total == 0.0 {
        return Ok(traj);
    }

    let dim = 5 * n;
    let mut y = initial.pack();
    let mut y_new = vec![C64::new(0.0, 0.0); dim];
    // stages only fail on exact coincidence; the floor is checked on accepted steps
    let mut st = Stepper::new(dim, 0.0);
    if rhs_packed(&y, opts.collision_floor, &mut st.k[0]).is_err() {
        traj.status = Status::PoleCollision;
        return Ok(traj);
    }

    let n_samples = (total / opts.sample_stride + 1e-9).floor() as usize;
    let mut next_sample = 1usize;
    let sample_time = |k: usize| -> f64 { if k > n_samples { t1 } else { t0 + dir * opts.sample_stride * k as f64 } };
    let h_floor = opts.max_step * 1e-9;

    let mut t = t0;
    let mut h = (opts.max_step.min(total)).min(0.01 * (1.0 + total));
    let mut err_old: f64 = 1e-4;
    let mut rejected = false;
    let mut steps = 0usize;
    let mut stage_collision = false;
    let mut target = sample_time(next_sample);

    loop {
        steps += 1;
        if steps > MAX_STEPS || h < h_floor {
            traj.status = if stage_collision { Status::PoleCollision } else { Status::StepFailure };
            return Ok(traj);
        }
        let remaining = (target - t).abs();
        let hh = h.min(remaining);
        let landing = hh >= remaining;
        let err = match st.step(&y, dir * hh, opts.rel_tol, opts.abs_tol, &mut y_new) {
            Ok(e) => {
                stage_collision = false;
                e
            }
            Err(e) => {
                stage_collision = matches!(e, DynamicsError::PoleCollision { .. });
                f64::INFINITY
            }
        };
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() { (SAFETY * err.powf(-ALPHA)).max(FAC_MIN) } else { FAC_MIN };
            h = hh * fac.min(1.0);
            rejected = true;
            continue;
        }
        // accept
        t = if landing { target } else { t + dir * hh };
        std::mem::swap(&mut y, &mut y_new);
        let last = st.k[6].clone();
        st.k[0] = last;
        let mut fac = SAFETY * err.max(1e-10).powf(-ALPHA) * err_old.powf(BETA);
        fac = fac.clamp(FAC_MIN, FAC_MAX);
        if rejected {
            fac = fac.min(1.0);
        }
        err_old = err.max(1e-4);
        rejected = false;
        h = (hh * fac).min(opts.max_step);
        if landing && hh < h {
            // keep the natural step size after a clamped landing
            h = h.max(hh);
        }

        let state = State::unpack(&y);
        let dmin = swept_min_distance(&y_new[3 * n..4 * n], &state.poles);
        let imin = state.poles.iter().fold(f64::INFINITY, |m, p| m.min(p.im));
        traj.min_pair_distance = traj.min_pair_distance.min(dmin);
        traj.min_im = traj.min_im.min(imin);
        let event = if dmin <= opts.collision_floor {
            Some(Status::PoleCollision)
        } else if imin <= opts.im_floor {
            Some(Status::ImaginaryFloor)
        } else {
            None
        };
        if landing || event.is_some() {
            traj.monitors.push(model::constraint_residuals(&state.configuration(m0)));
            traj.samples.push((t, state));
        }
        if let Some(ev) = event {
            traj.status = ev;
            return Ok(traj);
        }
        if landing {
            if next_sample > n_samples || (t - t1).abs() == 0.0 {
                break;
            }
            next_sample += 1;
            target = sample_time(next_sample);
            if (target - t).abs() < 1e-12 * (1.0 + t.abs()) {
                // final partial stride collapsed onto the last sample
                break;
            }
        }
    }
    Ok(traj)
}

/// Smallest pair distance along straight segments from `before` to `after`,
/// so that poles crossing inside one step are still caught.
fn swept_min_distance(before: &[C64], after: &[C64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..after.len() {
        for j in (i + 1)..after.len() {
            let d0 = before[i] - before[j];
            let dd = (after[i] - after[j]) - d0;
            let tau = if dd.norm_sqr() > 0.0 { (-(d0.re * dd.re + d0.im * dd.im) / dd.norm_sqr()).clamp(0.0, 1.0) } else { 0.0 };
            best = best.min((d0 + dd * tau).norm()).min((d0 + dd).norm());
        }
    }
    best
}

/// Integrate from a configuration, velocities from the constraint.
pub fn integrate_configuration(cfg: &Configuration, opts: &TrajectoryOptions) -> Result<Trajectory, DynamicsError> {
    cfg.validate()?;
    let st = State::from_configuration(cfg)?;
    integrate(&st, cfg.m0, opts)
}

/// State at a single time (no intermediate samples kept).
pub fn propagate(initial: &State, m0: [f64; 3], t: f64, rel_tol: f64) -> Result<(State, Status), DynamicsError> {
    let opts = TrajectoryOptions {
        t_span: (0.0, t),
        rel_tol,
        abs_tol: rel_tol * 1e-2,
        max_step: 1.0_f64.max(t.abs() / 50.0),
        sample_stride: t.abs().max(1e-300),
        ..Default::default()
    };
    let traj = integrate(initial, m0, &opts)?;
    let status = traj.status;
    Ok((traj.samples.last().expect("nonempty").1.clone(), status))
}

/// Aggregated diagnostics of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSummary {
    /// `+∞` for a single soliton.
    pub min_pair_distance: f64,
    pub min_im: f64,
    pub max_spin_norm: f64,
    pub max_constraint_residual: f64,
    /// Drift of `Σ ẋ_j` from its initial value.
    pub velocity_sum_drift: f64,
    /// `(i, j, rate)`: smallest finite-difference rate of `|Re x_i - Re x_j|`
    /// over the samples, sign taken along increasing time.
    pub separation_rates: Vec<(usize, usize, f64)>,
    pub status: Status,
}

/// Summarise a trajectory.
pub fn monitor_report(traj: &Trajectory) -> MonitorSummary {
    let samples = traj.sorted_samples();
    let n = samples[0].1.len();
    let v0: C64 = traj.samples[0].1.velocities.iter().sum();
    let mut max_spin_norm: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for (_, s) in &samples {
        for sp in &s.spins {
            max_spin_norm = max_spin_norm.max(sp.norm());
        }
        drift = drift.max((s.velocities.iter().sum::<C64>() - v0).norm());
    }
    let max_constraint_residual = traj.monitors.iter().fold(0.0_f64, |m, r| m.max(r.max_residual));
    let mut separation_rates = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut rate = f64::INFINITY;
            for w in samples.windows(2) {
                let dt = w[1].0 - w[0].0;
                if dt <= 0.0 {
                    continue;
                }
                let s0 = (w[0].1.poles[i].re - w[0].1.poles[j].re).abs();
                let s1 = (w[1].1.poles[i].re - w[1].1.poles[j].re).abs();
                rate = rate.min((s1 - s0) / dt);
            }
            separation_rates.push((i, j, rate));
        }
    }
    MonitorSummary {
        min_pair_distance: traj.min_pair_distance,
        min_im: traj.min_im,
        max_spin_norm,
        max_constraint_residual,
        velocity_sum_drift: drift,
        separation_rates,
        status: traj.status,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn moving_soliton() -> State {
        // w = 0.3 single soliton from the closed-form initial data
        let cfg = crate::constructor::approximate_ic(&crate::constructor::Targets::new(vec![0.3], 0.1, Some(1.0))).unwrap();
        State::from_configuration(&cfg).unwrap()
    }

    #[test]
    fn free_soliton_moves_linearly() {
        let st = moving_soliton();
        assert!((st.velocities[0] - c(0.3, 0.0)).norm() < 1e-14);
        let traj = integrate(&st, [0.0, 0.0, 1.0], &TrajectoryOptions::span(0.0, 20.0, 1.0)).unwrap();
        assert_eq!(traj.status, Status::Completed);
        assert_eq!(traj.samples.len(), 21);
        for (t, s) in &traj.samples {
            assert!((s.poles[0] - st.poles[0] - st.velocities[0] * *t).norm() < 1e-12);
            assert_eq!(s.spins, st.spins);
        }
        let rep = monitor_report(&traj);
        assert!(rep.min_pair_distance.is_infinite());
        assert!(rep.separation_rates.is_empty());
    }

    #[test]
    fn single_soliton_rhs_is_free() {
        let st = moving_soliton();
        let d = rhs(&st, 1e-6).unwrap();
        assert_eq!(d.spins[0], Spin::default());
        assert_eq!(d.velocities[0], c(0.0, 0.0));
    }

    #[test]
    fn orthogonal_spins_have_no_acceleration() {
        let s = Spin::new(c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0));
        let st = State {
            spins: vec![s, Spin::new(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0))],
            poles: vec![c(0.0, 1.0), c(3.0, 1.0)],
            velocities: vec![c(0.0, 0.0); 2],
        };
        // s1 · s2 = 0 but s1 × s2 ≠ 0
        let d = rhs(&st, 1e-6).unwrap();
        assert_eq!(d.velocities, vec![c(0.0, 0.0); 2]);
        assert!(d.spins[0].norm() > 0.0);
    }

    #[test]
    fn collision_is_reported() {
        let st = State {
            spins: vec![Spin::default(); 2],
            poles: vec![c(0.0, 1.0), c(0.0, 1.0 + 1e-8)],
            velocities: vec![c(0.0, 0.0); 2],
        };
        assert!(matches!(rhs(&st, 1e-6), Err(DynamicsError::PoleCollision { i: 0, j: 1, .. })));
        let traj = integrate(&st, [0.0, 0.0, 1.0], &TrajectoryOptions::default()).unwrap();
        assert_eq!(traj.status, Status::PoleCollision);
    }

    #[test]
    fn backward_integration_samples_in_order() {
        let st = moving_soliton();
        let traj = integrate(&st, [0.0, 0.0, 1.0], &TrajectoryOptions::span(0.0, -2.0, 0.5)).unwrap();
        let ts: Vec<f64> = traj.samples.iter().map(|s| s.0).collect();
        assert_eq!(ts, vec![0.0, -0.5, -1.0, -1.5, -2.0]);
    }

    #[test]
    fn rejects_bad_options() {
        let st = moving_soliton();
        let opts = TrajectoryOptions { rel_tol: 0.0, ..Default::default() };
        assert!(matches!(integrate(&st, [0.0, 0.0, 1.0], &opts), Err(DynamicsError::InvalidOptions(_))));
    }
}
