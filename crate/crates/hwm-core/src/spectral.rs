//! Half-spin factorisation, Lax matrices and the explicit resolvent formula.
//!
//! Every spin matrix `A_j = to_pauli(-i s_j)` has rank one and squares to
//! zero, so it factors as `A_j = e_j ξ_jᵀ`. With these factors
//!
//! ```text
//! L_jk = δ_jk ẋ_j + (ξ_j · e_k)/(x_j - x_k)
//! ```
//!
//! and the poles at time `t` are the eigenvalues of `X(0) + t L(0)`.

use std::fmt;

use nalgebra::Matrix2;

use crate::dynamics::Trajectory;
use crate::linalg::{self, CMatrix, LinalgError, C64};
use crate::model::{self, Configuration, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralError {
    ZeroMatrix,
    NotNilpotent { residual: f64 },
    InsufficientSamples,
    NonUniformStride,
    ResolventSingular { distance: f64 },
    Linalg(LinalgError),
    Model(ModelError),
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroMatrix => write!(f, "cannot factor the zero matrix"),
            Self::NotNilpotent { residual } => write!(f, "matrix is not nilpotent (|A²| = {residual:e})"),
            Self::InsufficientSamples => write!(f, "need at least three samples"),
            Self::NonUniformStride => write!(f, "samples are not uniformly spaced"),
            Self::ResolventSingular { distance } => {
                write!(f, "evaluation point within {distance:e} of a pole")
            }
            Self::Linalg(e) => write!(f, "{e}"),
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SpectralError {}

impl From<LinalgError> for SpectralError {
    fn from(e: LinalgError) -> Self {
        Self::Linalg(e)
    }
}

impl From<ModelError> for SpectralError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}

/// Rank-one factors `A = e ξᵀ`, normalised so that `|e| = |ξ|` and the first
/// nonzero entry of `e` is real positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpin {
    pub e: [C64; 2],
    pub xi: [C64; 2],
}

impl HalfSpin {
    pub fn outer(&self) -> Matrix2<C64> {
        Matrix2::new(self.e[0] * self.xi[0], self.e[0] * self.xi[1], self.e[1] * self.xi[0], self.e[1] * self.xi[1])
    }
}

fn dot2(a: &[C64; 2], b: &[C64; 2]) -> C64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm2(a: &[C64; 2]) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr()).sqrt()
}

/// Factor a nonzero nilpotent 2×2 matrix.
pub fn halfspin_decompose(a: &Matrix2<C64>) -> Result<HalfSpin, SpectralError> {
    let scale = a.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(SpectralError::ZeroMatrix);
    }
    let sq = a * a;
    let residual = sq.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if residual > 1e-10 * scale * scale {
        return Err(SpectralError::NotNilpotent { residual });
    }
    let (mut bi, mut bj) = (0, 0);
    for i in 0..2 {
        for j in 0..2 {
            if a[(i, j)].norm() > a[(bi, bj)].norm() {
                bi = i;
                bj = j;
            }
        }
    }
    let mut e = [a[(0, bj)], a[(1, bj)]];
    let piv = a[(bi, bj)];
    let mut xi = [a[(bi, 0)] / piv, a[(bi, 1)] / piv];
    let c = (norm2(&xi) / norm2(&e)).sqrt();
    let first = if e[0].norm() > 1e-14 * norm2(&e) { e[0] } else { e[1] };
    let phase = first.conj() / first.norm();
    for z in &mut e {
        *z *= phase * c;
    }
    for z in &mut xi {
        *z /= phase * c;
    }
    Ok(HalfSpin { e, xi })
}

/// Half-spins of all solitons in a configuration.
pub fn halfspins(cfg: &Configuration) -> Result<Vec<HalfSpin>, SpectralError> {
    cfg.spins.iter().map(|s| halfspin_decompose(&model::matrix_spin(s))).collect()
}

/// `L_jk = δ_jk ẋ_j + (ξ_j · e_k)/(x_j - x_k)`.
pub fn build_l(poles: &[C64], velocities: &[C64], hs: &[HalfSpin]) -> CMatrix {
    let n = poles.len();
    CMatrix::from_fn(n, n, |j, k| {
        if j == k {
            velocities[j]
        } else {
            dot2(&hs[j].xi, &hs[k].e) / (poles[j] - poles[k])
        }
    })
}

/// Lax matrices at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LaxData {
    pub l: CMatrix,
    pub b: CMatrix,
    pub s: CMatrix,
    pub x: CMatrix,
}

fn lax_from_s(poles: &[C64], velocities: &[C64], s: CMatrix) -> LaxData {
    let n = poles.len();
    let l = CMatrix::from_fn(n, n, |j, k| if j == k { velocities[j] } else { s[(j, k)] / (poles[j] - poles[k]) });
    let b = CMatrix::from_fn(n, n, |j, k| if j == k { C64::new(0.0, 0.0) } else { l[(j, k)] / (poles[j] - poles[k]) });
    let x = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(poles));
    LaxData { l, b, s, x }
}

/// Lax data from the half-spin factorisation, `S_jk = ξ_j · e_k` off the
/// diagonal. Used for every spectral invariant.
pub fn lax_data(cfg: &Configuration, velocities: &[C64]) -> Result<LaxData, SpectralError> {
    let hs = halfspins(cfg)?;
    let n = cfg.len();
    let s = CMatrix::from_fn(n, n, |j, k| if j == k { C64::new(0.0, 0.0) } else { dot2(&hs[j].xi, &hs[k].e) });
    Ok(lax_from_s(&cfg.poles, velocities, s))
}

/// Symmetric Lax data with `S_ij = √(-2 s_i · s_j)` on the principal branch.
///
/// Agrees spectrally with [`lax_data`] for two solitons only.
pub fn build_matsuno(cfg: &Configuration, velocities: &[C64]) -> LaxData {
    let n = cfg.len();
    let s = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            (-2.0 * model::dot(&cfg.spins[i].0, &cfg.spins[j].0)).sqrt()
        }
    });
    lax_from_s(&cfg.poles, velocities, s)
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Lax data at every sample of a trajectory.
pub fn lax_series(traj: &Trajectory) -> Result<Vec<(f64, LaxData)>, SpectralError> {
    traj.sorted_samples()
        .into_iter()
        .map(|(t, st)| Ok((*t, lax_data(&st.configuration(traj.m0), &st.velocities)?)))
        .collect()
}

/// Finite-difference Lax residual `max ‖L̇ - [B, L] - [Δ, L]‖_max` over the
/// interior samples.
///
/// Each snapshot is factorised independently, so consecutive `L` differ by
/// a diagonal similarity; `Δ` is the diagonal generator of that gauge
/// motion, fitted by least squares at each sample. The diagonal entries of
/// the residual are unaffected by `Δ`.
pub fn lax_residual(traj: &Trajectory) -> Result<f64, SpectralError> {
    let series = lax_series(traj)?;
    if series.len() < 3 {
        return Err(SpectralError::InsufficientSamples);
    }
    let h = series[1].0 - series[0].0;
    for w in series.windows(2) {
        if ((w[1].0 - w[0].0) - h).abs() > 1e-9 * h.abs().max(1e-300) {
            return Err(SpectralError::NonUniformStride);
        }
    }
    let mut worst: f64 = 0.0;
    for w in series.windows(3) {
        let ldot = (&w[2].1.l - &w[0].1.l) / C64::new(2.0 * h, 0.0);
        let lax = &w[1].1;
        let r = ldot - commutator(&lax.b, &lax.l);
        let delta = fit_gauge(&r, &lax.l);
        let n = r.nrows();
        for j in 0..n {
            for k in 0..n {
                let g = (delta[j] - delta[k]) * lax.l[(j, k)];
                worst = worst.max((r[(j, k)] - g).norm());
            }
        }
    }
    Ok(worst)
}

/// Diagonal `Δ` minimising `Σ_{j≠k} |R_jk - (Δ_j - Δ_k) L_jk|²`.
fn fit_gauge(r: &CMatrix, l: &CMatrix) -> Vec<C64> {
    let n = r.nrows();
    if n < 2 {
        return vec![C64::new(0.0, 0.0); n];
    }
    let rows = n * (n - 1);
    let mut a = CMatrix::zeros(rows, n);
    let mut rhs = CMatrix::zeros(rows, 1);
    let mut row = 0;
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            a[(row, j)] = l[(j, k)];
            a[(row, k)] = -l[(j, k)];
            rhs[(row, 0)] = r[(j, k)];
            row += 1;
        }
    }
    let svd = a.svd(true, true);
    let tol = 1e-12 * svd.singular_values.max().max(1e-300);
    match svd.solve(&rhs, tol) {
        Ok(sol) => sol.column(0).iter().copied().collect(),
        Err(_) => vec![C64::new(0.0, 0.0); n],
    }
}

/// Frozen data for the resolvent formula.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitData {
    pub e0: Vec<[C64; 2]>,
    pub f0: Vec<[C64; 2]>,
    pub x0: CMatrix,
    pub l0: CMatrix,
    /// Overall sign, calibrated at build against the direct sum.
    pub sign: f64,
}

/// Build [`ExplicitData`] from a snapshot and its pole velocities.
pub fn explicit_data(cfg: &Configuration, velocities: &[C64]) -> Result<ExplicitData, SpectralError> {
    let hs = halfspins(cfg)?;
    let mut data = ExplicitData {
        e0: hs.iter().map(|h| h.e).collect(),
        f0: hs.iter().map(|h| h.xi).collect(),
        x0: CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&cfg.poles)),
        l0: build_l(&cfg.poles, velocities, &hs),
        sign: 1.0,
    };
    // calibrate at t = 0 on a point below every pole
    let lowest = cfg.poles.iter().fold(0.0_f64, |m, p| m.max(p.im));
    let mean_re = cfg.poles.iter().map(|p| p.re).sum::<f64>() / cfg.len() as f64;
    let probe = C64::new(mean_re + 0.5, -1.0 - lowest);
    let formula = unsigned_resolvent(&data, 0.0, probe)?;
    let direct = model::pi_minus_direct(cfg, probe);
    if (formula + direct).norm() < (formula - direct).norm() {
        data.sign = -1.0;
    }
    Ok(data)
}

/// `Σ_jk (X0 + tL0 - x)⁻¹_jk e_j ξ_kᵀ`, which is the doubled-resolvent
/// product with the block-diagonal half-spin factors written out.
fn unsigned_resolvent(data: &ExplicitData, t: f64, x: C64) -> Result<Matrix2<C64>, SpectralError> {
    let n = data.x0.nrows();
    let mut m = &data.x0 + &data.l0 * C64::new(t, 0.0);
    for i in 0..n {
        m[(i, i)] -= x;
    }
    let r = linalg::inverse(&m)?;
    let mut out = Matrix2::zeros();
    for j in 0..n {
        for k in 0..n {
            let c = r[(j, k)];
            for a in 0..2 {
                for b in 0..2 {
                    out[(a, b)] += c * data.e0[j][a] * data.f0[k][b];
                }
            }
        }
    }
    Ok(out)
}

/// `Π₋(m - m₀)` at time `t` and complex point `x`, as a 2×2 matrix.
pub fn explicit_pi_minus(data: &ExplicitData, t: f64, x: C64) -> Result<Matrix2<C64>, SpectralError> {
    let poles = poles_at(data, t)?;
    let distance = poles.iter().map(|p| (p - x).norm()).fold(f64::INFINITY, f64::min);
    if distance <= 1e-10 {
        return Err(SpectralError::ResolventSingular { distance });
    }
    Ok(unsigned_resolvent(data, t, x)? * C64::new(data.sign, 0.0))
}

/// Eigenvalues of `X0 + t L0`, sorted by `(Re, Im)`.
pub fn poles_at(data: &ExplicitData, t: f64) -> Result<Vec<C64>, SpectralError> {
    Ok(linalg::eigenvalues(&(&data.x0 + &data.l0 * C64::new(t, 0.0)))?)
}

/// Sorted eigenvalues and whether their minimum pairwise gap exceeds `gap_tol`.
pub fn spectrum(l: &CMatrix, gap_tol: f64) -> Result<(Vec<C64>, bool), SpectralError> {
    let vals = linalg::eigenvalues(l)?;
    Ok((vals.clone(), min_gap(&vals) > gap_tol))
}

/// Minimum pairwise distance, `+∞` for fewer than two values.
pub fn min_gap(vals: &[C64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..vals.len() {
        for j in (i + 1)..vals.len() {
            gap = gap.min((vals[i] - vals[j]).norm());
        }
    }
    gap
}

/// Greedy nearest-neighbour matching: `perm[i]` is the index in `b` paired
/// with `a[i]`, taking the globally closest remaining pair first.
pub fn match_by_proximity(a: &[C64], b: &[C64]) -> Vec<usize> {
    let n = a.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; b.len()];
    for (_, i, j) in pairs {
        if perm[i] == usize::MAX && !used[j] {
            perm[i] = j;
            used[j] = true;
        }
    }
    perm
}
