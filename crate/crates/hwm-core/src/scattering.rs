//! Scattering criterion, asymptotic data and traveling-wave predicates.

use std::fmt;

use nalgebra::Matrix2;

use crate::dynamics::{State, Trajectory};
use crate::linalg::{self, CMatrix, LinalgError, C64};
use crate::model::{self, Configuration, ModelError, Spin};
use crate::sobolev::{self, RationalProfile};
use crate::spectral::{self, ExplicitData, LaxData, SpectralError};

#[derive(Debug, Clone, PartialEq)]
pub enum ScatterError {
    SingularSpectrum { gap: f64 },
    OffsetNotUpperHalf { index: usize },
    MatchingAmbiguous { t: f64, index: usize },
    LengthMismatch,
    /// The witness inequalities failed although `α > 0`.
    WitnessInvalid,
    Linalg(LinalgError),
    Spectral(SpectralError),
    Model(ModelError),
}

impl fmt::Display for ScatterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SingularSpectrum { gap } => write!(f, "singular spectrum (min gap {gap:e})"),
            Self::OffsetNotUpperHalf { index } => write!(f, "asymptotic offset {index} is not in the upper half-plane"),
            Self::MatchingAmbiguous { t, index } => write!(f, "ambiguous pole matching for index {index} at t = {t}"),
            Self::LengthMismatch => write!(f, "soliton counts differ"),
            Self::WitnessInvalid => write!(f, "witness inequalities fail for positive alpha"),
            Self::Linalg(e) => write!(f, "{e}"),
            Self::Spectral(e) => write!(f, "{e}"),
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ScatterError {}

impl From<LinalgError> for ScatterError {
    fn from(e: LinalgError) -> Self {
        Self::Linalg(e)
    }
}

impl From<SpectralError> for ScatterError {
    fn from(e: SpectralError) -> Self {
        Self::Spectral(e)
    }
}

impl From<ModelError> for ScatterError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}

/// Quantities entering the local scattering criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterStats {
    /// Largest spin norm.
    pub s: f64,
    /// Smallest pairwise gap of `Re ẋ`.
    pub nu: f64,
    /// Smallest pairwise gap of `Re x`.
    pub d: f64,
    /// `D - 16 N S/ν`; `+∞` for one soliton, `-∞` when `ν = 0`.
    pub alpha: f64,
    pub n: usize,
}

/// Compute `S`, `ν`, `D` and `α` for a state.
pub fn alpha_stats(state: &State) -> ScatterStats {
    let n = state.len();
    let s = state.spins.iter().fold(0.0_f64, |m, s| m.max(s.norm()));
    let (mut nu, mut d) = (f64::INFINITY, f64::INFINITY);
    for i in 0..n {
        for j in (i + 1)..n {
            nu = nu.min((state.velocities[i].re - state.velocities[j].re).abs());
            d = d.min((state.poles[i].re - state.poles[j].re).abs());
        }
    }
    ScatterStats { s, nu, d, alpha: alpha_value(n, s, nu, d), n }
}

fn alpha_value(n: usize, s: f64, nu: f64, d: f64) -> f64 {
    if n < 2 {
        f64::INFINITY
    } else if nu == 0.0 {
        f64::NEG_INFINITY
    } else {
        d - 16.0 * n as f64 * s / nu
    }
}

impl ScatterStats {
    pub fn from_values(n: usize, s: f64, nu: f64, d: f64) -> Self {
        ScatterStats { s, nu, d, alpha: alpha_value(n, s, nu, d), n }
    }
}

/// Constants certifying global existence and scattering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub kappa: f64,
    pub s_prime: f64,
    pub eta: f64,
}

impl Witness {
    /// Check `ν ≥ 4/κ + η`, `S' > S + 2NS'²/(ηD)` and `D² ≥ 2NS'²κ/η`,
    /// with a relative slack of `1e-12` on the first (an equality for the
    /// canonical choice).
    pub fn holds(&self, stats: &ScatterStats) -> bool {
        let n = stats.n as f64;
        let (s, nu, d) = (stats.s, stats.nu, stats.d);
        let first = nu >= (4.0 / self.kappa + self.eta) * (1.0 - 1e-12);
        let second = self.s_prime > s + 2.0 * n * self.s_prime.powi(2) / (self.eta * d);
        let third = d * d >= 2.0 * n * self.s_prime.powi(2) * self.kappa / self.eta;
        first && second && third
    }
}

/// `κ = 8/ν`, `S' = 2S`, `η = ν/2` when `α > 0`.
///
/// A single soliton gets the vacuous witness `κ = ∞`, `η = ∞`.
pub fn witness_from_alpha(stats: &ScatterStats) -> Result<Option<Witness>, ScatterError> {
    if stats.n < 2 {
        return Ok(Some(Witness { kappa: f64::INFINITY, s_prime: 2.0 * stats.s, eta: f64::INFINITY }));
    }
    if !(stats.alpha > 0.0) {
        return Ok(None);
    }
    let w = Witness { kappa: 8.0 / stats.nu, s_prime: 2.0 * stats.s, eta: stats.nu / 2.0 };
    if w.holds(stats) {
        Ok(Some(w))
    } else {
        Err(ScatterError::WitnessInvalid)
    }
}

/// Result of one bound along a trajectory. `margin` is the smallest slack
/// (negative when violated); `index` locates it (soliton or pair).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub pass: bool,
    pub margin: f64,
    pub t: f64,
    pub index: (usize, usize),
}

impl BoundCheck {
    fn new() -> Self {
        BoundCheck { pass: true, margin: f64::INFINITY, t: 0.0, index: (0, 0) }
    }

    fn record(&mut self, margin: f64, t: f64, index: (usize, usize)) {
        if margin < self.margin {
            self.margin = margin;
            self.t = t;
            self.index = index;
        }
        self.pass = self.margin >= 0.0;
    }
}

/// The four trajectory bounds implied by a witness.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    /// `∂ₜ|Re x_j - Re x_k| ≥ η`.
    pub separation: BoundCheck,
    /// `|Re ẋ_j(t) - Re ẋ_j(0)| ≤ 2/κ`.
    pub speed: BoundCheck,
    /// `|s_j(t)| ≤ S'`.
    pub spin: BoundCheck,
    /// `Im x_j(t) ≥ |s_j(0)|/√2 · e^{-4NS'/(ηD)} / (1 + NS'/D)`.
    pub imaginary: BoundCheck,
}

impl BoundsReport {
    pub fn all_pass(&self) -> bool {
        self.separation.pass && self.speed.pass && self.spin.pass && self.imaginary.pass
    }
}

/// Check the witness bounds at every sample with `t ≥ t₀`.
///
/// The separation rate uses the sampled pole velocities. The imaginary-part
/// bound is compared with a relative slack of `1e-12`: the resting soliton
/// attains it with equality.
pub fn bounds_check(traj: &Trajectory, w: &Witness, initial: &State) -> BoundsReport {
    let stats = alpha_stats(initial);
    let n = initial.len();
    let nf = n as f64;
    let t0 = traj.samples[0].0;
    let mut rep = BoundsReport { separation: BoundCheck::new(), speed: BoundCheck::new(), spin: BoundCheck::new(), imaginary: BoundCheck::new() };
    let decay = if n < 2 { 1.0 } else { (-4.0 * nf * w.s_prime / (w.eta * stats.d)).exp() / (1.0 + nf * w.s_prime / stats.d) };
    for (t, st) in traj.samples.iter().filter(|(t, _)| *t >= t0) {
        for i in 0..n {
            for j in (i + 1)..n {
                let sep = st.poles[i].re - st.poles[j].re;
                let rate = sep.signum() * (st.velocities[i].re - st.velocities[j].re);
                rep.separation.record(rate - w.eta, *t, (i, j));
            }
            let dv = (st.velocities[i].re - initial.velocities[i].re).abs();
            let allowed = if w.kappa.is_infinite() { 0.0 } else { 2.0 / w.kappa };
            rep.speed.record(allowed - dv + 1e-12 * (1.0 + dv), *t, (i, i));
            rep.spin.record(w.s_prime - st.spins[i].norm(), *t, (i, i));
            let floor = initial.spins[i].norm() / 2f64.sqrt() * decay;
            rep.imaginary.record(st.poles[i].im - floor * (1.0 - 1e-12), *t, (i, i));
        }
    }
    rep
}

/// Limits `x_j(t) - v_j t → a_j`, `s_j(t) → b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticData {
    pub v: Vec<f64>,
    pub a: Vec<C64>,
    pub b: Vec<Spin>,
    /// Largest `|Im v_j|` discarded when taking real speeds.
    pub v_imag: f64,
    pub sign: f64,
}

/// Asymptotic speeds, offsets and spins from the eigen-decomposition of
/// `L(0) = P diag(v) P⁻¹`: `a_j = (P⁻¹ X(0) P)_jj` and
/// `R_j = (Σ_k e_k P_kj)(Σ_l (P⁻¹)_jl ξ_l)ᵀ`.
pub fn asymptotic_data(data: &ExplicitData, gap_tol: f64) -> Result<AsymptoticData, ScatterError> {
    let eig = linalg::eig_dense(&data.l0, 1e-8)?;
    let gap = spectral::min_gap(&eig.values);
    if !(gap > gap_tol) {
        return Err(ScatterError::SingularSpectrum { gap });
    }
    let p = &eig.vectors;
    let pinv = linalg::inverse(p)?;
    let g: CMatrix = &pinv * &data.x0 * p;
    let n = data.l0.nrows();
    let mut b = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = [C64::new(0.0, 0.0); 2];
        let mut xi = [C64::new(0.0, 0.0); 2];
        for k in 0..n {
            for c in 0..2 {
                e[c] += data.e0[k][c] * p[(k, j)];
                xi[c] += pinv[(j, k)] * data.f0[k][c];
            }
        }
        let r = Matrix2::new(e[0] * xi[0], e[0] * xi[1], e[1] * xi[0], e[1] * xi[1]) * C64::new(data.sign, 0.0);
        b.push(model::spin_from_matrix(&r)?);
    }
    Ok(AsymptoticData {
        v: eig.values.iter().map(|z| z.re).collect(),
        a: (0..n).map(|j| g[(j, j)]).collect(),
        b,
        v_imag: eig.values.iter().fold(0.0, |m, z| m.max(z.im.abs())),
        sign: data.sign,
    })
}

/// The free-soliton superposition `g(t)`: poles `a_j + v_j t`, spins `b_j`.
pub fn asymptotic_profile(asym: &AsymptoticData, m0: [f64; 3], t: f64) -> Result<Configuration, ScatterError> {
    if let Some(index) = asym.a.iter().position(|a| !(a.im > 0.0)) {
        return Err(ScatterError::OffsetNotUpperHalf { index });
    }
    Ok(Configuration { m0, spins: asym.b.clone(), poles: asym.a.iter().zip(&asym.v).map(|(a, v)| a + v * t).collect() })
}

/// Distances to the asymptotic profile at one sample, indexed like `asym`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSample {
    pub t: f64,
    /// Squared Ḣ^{1/2} norm of `m(t) - g(t)`.
    pub hhalf_diff: f64,
    pub spin_gaps: Vec<f64>,
    pub pole_gaps: Vec<f64>,
    pub speed_gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceMetrics {
    pub samples: Vec<ConvergenceSample>,
}

impl ConvergenceMetrics {
    /// Sample closest to time `t`.
    pub fn at(&self, t: f64) -> &ConvergenceSample {
        self.samples
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("metrics are nonempty")
    }

    /// Log-log decay exponent of a per-index gap over `t_min ≤ |t| ≤ t_max`.
    pub fn slope<F: Fn(&ConvergenceSample) -> f64>(&self, t_min: f64, t_max: f64, pick: F) -> f64 {
        let (ts, ys): (Vec<f64>, Vec<f64>) = self
            .samples
            .iter()
            .filter(|s| s.t.abs() >= t_min && s.t.abs() <= t_max)
            .map(|s| (s.t.abs(), pick(s)))
            .unzip();
        loglog_slope(&ts, &ys)
    }
}

/// Least-squares slope of `ln y` against `ln t`; NaN with fewer than two
/// positive points.
pub fn loglog_slope(t: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(t, y)| **t > 0.0 && **y > 0.0).map(|(t, y)| (t.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Compare every sample of a trajectory with `g(t)`.
///
/// Poles are matched to the targets `v_j t + a_j` by proximity at each sample.
pub fn convergence_metrics(traj: &Trajectory, asym: &AsymptoticData) -> Result<ConvergenceMetrics, ScatterError> {
    let n = asym.v.len();
    let mut samples = Vec::with_capacity(traj.samples.len());
    for (t, st) in traj.sorted_samples() {
        if st.len() != n {
            return Err(ScatterError::LengthMismatch);
        }
        let g = asymptotic_profile(asym, traj.m0, *t)?;
        for (index, target) in g.poles.iter().enumerate() {
            let mut d: Vec<f64> = st.poles.iter().map(|p| (p - target).norm()).collect();
            d.sort_by(f64::total_cmp);
            if n > 1 && (d[1] - d[0]).abs() <= 1e-12 {
                return Err(ScatterError::MatchingAmbiguous { t: *t, index });
            }
        }
        let perm = spectral::match_by_proximity(&g.poles, &st.poles);
        let hhalf_diff = sobolev::norm_diff_half(&RationalProfile::from_configuration(&st.configuration(traj.m0)), &RationalProfile::from_configuration(&g));
        samples.push(ConvergenceSample {
            t: *t,
            hhalf_diff,
            spin_gaps: (0..n).map(|j| model::norm(&model::sub(&st.spins[perm[j]].0, &asym.b[j].0))).collect(),
            pole_gaps: (0..n).map(|j| (st.poles[perm[j]] - g.poles[j]).norm()).collect(),
            speed_gaps: (0..n).map(|j| (st.velocities[perm[j]] - asym.v[j]).norm()).collect(),
        });
    }
    Ok(ConvergenceMetrics { samples })
}

/// Time at which the asymptotic trajectories are closest to the origin in
/// the least-squares sense, `-Σ Re(a_j) v_j / Σ v_j²`.
pub fn interaction_time(asym: &AsymptoticData) -> f64 {
    let num: f64 = asym.a.iter().zip(&asym.v).map(|(a, v)| a.re * v).sum();
    let den: f64 = asym.v.iter().map(|v| v * v).sum();
    if den == 0.0 {
        0.0
    } else {
        -num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Traveling,
    NotTraveling,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Traveling => "Traveling",
            Verdict::NotTraveling => "NotTraveling",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TravelingReport {
    pub v: f64,
    pub tol: f64,
    /// `max |x_j(t) - x_j(t₀) - v(t - t₀)|`.
    pub pt_residual: f64,
    /// `max_t (‖L - vI‖, ‖B‖, ‖S‖)`.
    pub ct_residuals: (f64, f64, f64),
    /// `‖L(t₀) - vI‖`.
    pub l_diag_residual: f64,
    /// Largest scaled difference of characteristic coefficients of `X` and
    /// `X + α[B, X]`, `α = 1..N+1`, at `t₀`.
    pub h1_residual: f64,
    /// `‖Ẋ(t₀) - vI‖` by a forward difference.
    pub h2_residual: f64,
    pub h1_ok: bool,
    pub h2_ok: bool,
    pub verdict: Verdict,
}

/// `1e-8 (1 + ‖X‖_max)` at the first sample.
pub fn default_traveling_tolerance(series: &[(f64, LaxData)]) -> f64 {
    1e-8 * (1.0 + linalg::max_abs(&series[0].1.x))
}

/// Evaluate the traveling predicates on a Lax series (at least one sample).
pub fn traveling_report(series: &[(f64, LaxData)], tol: f64) -> Result<TravelingReport, ScatterError> {
    let (t0, first) = &series[0];
    let n = first.l.nrows();
    let v = (0..n).map(|j| first.l[(j, j)].re).sum::<f64>() / n as f64;
    let vi = CMatrix::identity(n, n) * C64::new(v, 0.0);

    let mut pt: f64 = 0.0;
    let mut ct = (0.0_f64, 0.0_f64, 0.0_f64);
    for (t, lax) in series {
        for j in 0..n {
            pt = pt.max((lax.x[(j, j)] - first.x[(j, j)] - v * (t - t0)).norm());
        }
        ct.0 = ct.0.max(linalg::max_abs(&(&lax.l - &vi)));
        ct.1 = ct.1.max(linalg::max_abs(&lax.b));
        ct.2 = ct.2.max(linalg::max_abs(&lax.s));
    }
    let l_diag = linalg::max_abs(&(&first.l - &vi));

    let x = &first.x;
    let bx = &first.b * x - x * &first.b;
    let base = linalg::char_poly(x)?;
    let scale = 1.0 + linalg::max_abs(x);
    let mut h1: f64 = 0.0;
    for alpha in 1..=(n + 1) {
        let y = x + &bx * C64::new(alpha as f64, 0.0);
        let cp = linalg::char_poly(&y)?;
        for (k, (a, b)) in base.iter().zip(&cp).enumerate() {
            h1 = h1.max((a - b).norm() / scale.powi(k as i32 + 1));
        }
    }
    let h2 = if series.len() >= 2 {
        let (t1, second) = &series[1];
        let dt = t1 - t0;
        (0..n).map(|j| ((second.x[(j, j)] - first.x[(j, j)]) / dt - v).norm()).fold(0.0, f64::max)
    } else {
        (0..n).map(|j| (first.l[(j, j)] - v).norm()).fold(0.0, f64::max)
    };

    let h1_ok = h1 <= tol;
    let h2_ok = h2 <= tol;
    let checks = [pt <= tol, ct.0 <= tol && ct.1 <= tol && ct.2 <= tol, l_diag <= tol, h1_ok && h2_ok];
    let verdict = if checks.iter().all(|c| *c) {
        Verdict::Traveling
    } else if checks.iter().all(|c| !*c) {
        Verdict::NotTraveling
    } else {
        Verdict::Inconclusive
    };
    Ok(TravelingReport { v, tol, pt_residual: pt, ct_residuals: ct, l_diag_residual: l_diag, h1_residual: h1, h2_residual: h2, h1_ok, h2_ok, verdict })
}
