//! Rational solutions: spins, poles, constraints and pointwise evaluation.
//!
//! Spins are stored in the i-absorbed convention
//!
//! ```text
//! m(t, x) = m0 + i Σ_j s_j / (x - x_j) - i Σ_j conj(s_j) / (x - conj(x_j))
//! ```
//!
//! which is the convention in which the constraint `s_j · B_j = 0` below, the
//! single-soliton formulas and the constructor all close exactly. The 2×2
//! matrix attached to a spin for the Lax side is `A_j = to_pauli(-i s_j)`,
//! see [`matrix_spin`].

use std::fmt;

use nalgebra::Matrix2;

use crate::linalg::C64;

/// Complex 3-vector.
pub type Vec3 = [C64; 3];

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Default absolute tolerance for the constraint residuals.
pub const TOL_CONSTRAINT: f64 = 1e-9;

/// Errors raised when building or using a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// No solitons.
    Empty,
    /// `spins` and `poles` differ in length.
    LengthMismatch { spins: usize, poles: usize },
    /// `|m0| ≠ 1`.
    NonUnitBackground { norm: f64 },
    /// A pole is not strictly in the upper half-plane.
    PoleNotUpperHalf { index: usize },
    /// Two poles coincide.
    CoincidentPoles { i: usize, j: usize },
    /// `from_pauli` received a matrix with nonzero trace.
    NotTraceless,
    /// A spin vanishes where a nonzero spin is required.
    ZeroSpin { index: usize },
    /// An entry is NaN or infinite.
    NonFinite,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "configuration has no solitons"),
            Self::LengthMismatch { spins, poles } => {
                write!(f, "{spins} spins but {poles} poles")
            }
            Self::NonUnitBackground { norm } => write!(f, "background vector has norm {norm}, expected 1"),
            Self::PoleNotUpperHalf { index } => write!(f, "pole {index} is not in the upper half-plane"),
            Self::CoincidentPoles { i, j } => write!(f, "poles {i} and {j} coincide"),
            Self::NotTraceless => write!(f, "matrix is not traceless"),
            Self::ZeroSpin { index } => write!(f, "spin {index} is zero"),
            Self::NonFinite => write!(f, "non-finite entry"),
        }
    }
}

impl std::error::Error for ModelError {}

/// Bilinear dot product (no conjugation).
pub fn dot(a: &Vec3, b: &Vec3) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Hermitian product `Σ a_m conj(b_m)`.
pub fn hdot(a: &Vec3, b: &Vec3) -> C64 {
    a[0] * b[0].conj() + a[1] * b[1].conj() + a[2] * b[2].conj()
}

/// Cross product.
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Componentwise conjugate.
pub fn conj(a: &Vec3) -> Vec3 {
    [a[0].conj(), a[1].conj(), a[2].conj()]
}

/// Hermitian norm.
pub fn norm(a: &Vec3) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()).sqrt()
}

/// `c · a`.
pub fn scale(c: C64, a: &Vec3) -> Vec3 {
    [c * a[0], c * a[1], c * a[2]]
}

/// `a + b`.
pub fn add(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// `a - b`.
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Embed a real vector.
pub fn real3(v: [f64; 3]) -> Vec3 {
    [C64::new(v[0], 0.0), C64::new(v[1], 0.0), C64::new(v[2], 0.0)]
}

/// A complex spin vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spin(pub Vec3);

impl Spin {
    pub fn new(a: C64, b: C64, c: C64) -> Self {
        Spin([a, b, c])
    }

    /// `s · s` without conjugation.
    pub fn square(&self) -> C64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Snapshot of a rational solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub m0: [f64; 3],
    pub spins: Vec<Spin>,
    pub poles: Vec<C64>,
}

impl Configuration {
    /// Build a configuration and check its structural invariants.
    pub fn new(m0: [f64; 3], spins: Vec<Spin>, poles: Vec<C64>) -> Result<Self, ModelError> {
        let cfg = Configuration { m0, spins, poles };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Number of solitons.
    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// Structural checks: nonempty, equal lengths, unit background,
    /// upper half-plane and pairwise distinct poles.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.poles.is_empty() {
            return Err(ModelError::Empty);
        }
        if self.spins.len() != self.poles.len() {
            return Err(ModelError::LengthMismatch { spins: self.spins.len(), poles: self.poles.len() });
        }
        if self.m0.iter().any(|v| !v.is_finite())
            || self.poles.iter().any(|p| !p.re.is_finite() || !p.im.is_finite())
            || self.spins.iter().any(|s| !s.is_finite())
        {
            return Err(ModelError::NonFinite);
        }
        let n0 = self.m0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (n0 - 1.0).abs() > 1e-12 {
            return Err(ModelError::NonUnitBackground { norm: n0 });
        }
        for (index, p) in self.poles.iter().enumerate() {
            if p.im <= 0.0 {
                return Err(ModelError::PoleNotUpperHalf { index });
            }
        }
        for i in 0..self.poles.len() {
            for j in (i + 1)..self.poles.len() {
                if self.poles[i] == self.poles[j] {
                    return Err(ModelError::CoincidentPoles { i, j });
                }
            }
        }
        Ok(())
    }
}

/// Nilpotency and orthogonality residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    /// `|s_j · s_j|`.
    pub nilpotency: Vec<f64>,
    /// `|s_j · B_j|` with the canonical field of [`local_field`].
    pub orthogonality: Vec<f64>,
    /// `|s_j · B'_j|` with the alternative field of [`local_field_intro`].
    /// Diagnostic only, not part of `max_residual`.
    pub orthogonality_intro: Vec<f64>,
    /// Maximum over `nilpotency` and `orthogonality`.
    pub max_residual: f64,
}

/// Pauli representation `s · σ`.
pub fn to_pauli(s: &Vec3) -> Matrix2<C64> {
    Matrix2::new(s[2], s[0] - I * s[1], s[0] + I * s[1], -s[2])
}

/// Inverse of [`to_pauli`]. The input must be traceless.
pub fn from_pauli(a: &Matrix2<C64>) -> Result<Vec3, ModelError> {
    let scale = a.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if a.trace().norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
        return Err(ModelError::NotTraceless);
    }
    Ok([
        (a[(0, 1)] + a[(1, 0)]) * 0.5,
        (a[(1, 0)] - a[(0, 1)]) / (2.0 * I),
        (a[(0, 0)] - a[(1, 1)]) * 0.5,
    ])
}

/// The 2×2 spin matrix `A_j = to_pauli(-i s_j)` used by the Lax matrices and
/// the explicit formula.
pub fn matrix_spin(s: &Spin) -> Matrix2<C64> {
    to_pauli(&scale(-I, &s.0))
}

/// Inverse of [`matrix_spin`].
pub fn spin_from_matrix(a: &Matrix2<C64>) -> Result<Spin, ModelError> {
    Ok(Spin(scale(I, &from_pauli(a)?)))
}

/// Canonical field `B_j = i m0 - Σ_{k≠j} s_k/(x_j - x_k) + Σ_k conj(s_k)/(x_j - conj(x_k))`.
pub fn local_field(cfg: &Configuration, j: usize) -> Vec3 {
    field_from(&cfg.m0, &cfg.spins, &cfg.poles, j)
}

/// Same field with arbitrary spins on fixed poles.
pub(crate) fn field_from(m0: &[f64; 3], spins: &[Spin], poles: &[C64], j: usize) -> Vec3 {
    let mut b = scale(I, &real3(*m0));
    let xj = poles[j];
    for (k, (s, &xk)) in spins.iter().zip(poles).enumerate() {
        if k != j {
            b = sub(&b, &scale(1.0 / (xj - xk), &s.0));
        }
        b = add(&b, &scale(1.0 / (xj - xk.conj()), &conj(&s.0)));
    }
    b
}

/// Alternative field `m0 + Σ_{k≠j} s_k/(x_j - x_k) + Σ_k conj(s_k)/(x_j - conj(x_k))`,
/// reported for comparison only.
pub fn local_field_intro(cfg: &Configuration, j: usize) -> Vec3 {
    let mut b = real3(cfg.m0);
    let xj = cfg.poles[j];
    for (k, (s, &xk)) in cfg.spins.iter().zip(&cfg.poles).enumerate() {
        if k != j {
            b = add(&b, &scale(1.0 / (xj - xk), &s.0));
        }
        b = add(&b, &scale(1.0 / (xj - xk.conj()), &conj(&s.0)));
    }
    b
}

/// Nilpotency and orthogonality residuals of every soliton.
pub fn constraint_residuals(cfg: &Configuration) -> ConstraintReport {
    let n = cfg.len();
    let mut nilpotency = Vec::with_capacity(n);
    let mut orthogonality = Vec::with_capacity(n);
    let mut orthogonality_intro = Vec::with_capacity(n);
    for j in 0..n {
        let s = &cfg.spins[j].0;
        nilpotency.push(dot(s, s).norm());
        orthogonality.push(dot(s, &local_field(cfg, j)).norm());
        orthogonality_intro.push(dot(s, &local_field_intro(cfg, j)).norm());
    }
    let max_residual = nilpotency.iter().chain(&orthogonality).fold(0.0_f64, |m, &v| m.max(v));
    ConstraintReport { nilpotency, orthogonality, orthogonality_intro, max_residual }
}

/// Pole velocities selected by the constraint:
/// `ẋ_j = -(s_j × conj(s_j)) · B_j / |s_j|²`.
pub fn velocity_from_constraints(cfg: &Configuration) -> Result<Vec<C64>, ModelError> {
    (0..cfg.len())
        .map(|j| {
            let s = &cfg.spins[j].0;
            let n2 = norm(s).powi(2);
            if n2 == 0.0 {
                return Err(ModelError::ZeroSpin { index: j });
            }
            let w = cross(s, &conj(s));
            Ok(-dot(&w, &local_field(cfg, j)) / n2)
        })
        .collect()
}

/// Evaluate `m(x)` at a real point.
pub fn evaluate(cfg: &Configuration, x: f64) -> [f64; 3] {
    let mut m = cfg.m0;
    for (s, &p) in cfg.spins.iter().zip(&cfg.poles) {
        let r = 1.0 / (C64::new(x, 0.0) - p);
        for (c, mc) in m.iter_mut().enumerate() {
            // i s/(x-p) + conj = -2 Im(s/(x-p))
            *mc -= 2.0 * (s.0[c] * r).im;
        }
    }
    m
}

/// The negative-frequency part `Π₋(m - m0)` at a complex point, as a 2×2
/// matrix: `i Σ_j to_pauli(s_j)/(x - x_j) = -Σ_j A_j/(x - x_j)`.
pub fn pi_minus_direct(cfg: &Configuration, x: C64) -> Matrix2<C64> {
    let mut acc = Matrix2::zeros();
    for (s, &p) in cfg.spins.iter().zip(&cfg.poles) {
        acc -= matrix_spin(s) / (x - p);
    }
    acc
}

/// Euclidean norm of a real 3-vector.
pub fn norm_real(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl Default for Spin {
    fn default() -> Self {
        Spin([ZERO; 3])
    }
}
