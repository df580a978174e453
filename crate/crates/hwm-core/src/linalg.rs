//! Dense complex linear algebra for the small matrices that appear in the
//! soliton problem (N rarely exceeds a handful).
//!
//! Eigenvalues come from nalgebra's complex Schur factorisation; eigenvectors
//! are recovered by back substitution on the triangular factor. Everything is
//! sorted lexicographically by `(re, im)` so downstream code can index the
//! spectrum deterministically.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;

/// Errors raised by the linear algebra layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// The operation needs a square matrix.
    NotSquare { rows: usize, cols: usize },
    /// An input entry is NaN or infinite.
    NonFinite,
    /// The eigen solver did not reach the requested residual.
    NonConvergence { residual: f64 },
    /// Cauchy nodes are repeated or `a_i + b_j` vanishes.
    DegenerateNodes(&'static str),
    /// A linear solve hit a singular matrix.
    Singular,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotSquare { rows, cols } => write!(f, "expected a square matrix, got {rows}x{cols}"),
            Self::NonFinite => write!(f, "matrix has non-finite entries"),
            Self::NonConvergence { residual } => {
                write!(f, "eigen solver did not converge (residual {residual:e})")
            }
            Self::DegenerateNodes(why) => write!(f, "degenerate Cauchy nodes: {why}"),
            Self::Singular => write!(f, "singular linear system"),
        }
    }
}

impl std::error::Error for LinalgError {}

/// Eigenvalues and right eigenvectors of a square matrix.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Eigenvalues sorted by `(re, im)`.
    pub values: Vec<C64>,
    /// Unit-norm right eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
    /// `max_j |A v_j - λ_j v_j| / max(1, |A|_max)`.
    pub residual: f64,
    /// Set when two eigenvalues are closer than `1e-9` times the matrix scale.
    pub near_degenerate: bool,
}

/// Lexicographic `(re, im)` ordering.
pub fn cmp_re_im(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn check_square(a: &CMatrix) -> Result<usize, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    Ok(a.nrows())
}

/// Full eigendecomposition of a dense complex matrix.
///
/// Fails with [`LinalgError::NonConvergence`] when the relative residual
/// exceeds `tol`.
pub fn eig_dense(a: &CMatrix, tol: f64) -> Result<Eigensystem, LinalgError> {
    let n = check_square(a)?;
    if n == 0 {
        return Ok(Eigensystem {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
            residual: 0.0,
            near_degenerate: false,
        });
    }
    let scale = max_abs(a).max(1.0);
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or(LinalgError::NonConvergence { residual: f64::INFINITY })?;
    let (q, t) = schur.unpack();

    let mut pairs: Vec<(C64, nalgebra::DVector<C64>)> = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = nalgebra::DVector::<C64>::zeros(n);
        y[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[j];
            }
            let mut den = t[(i, i)] - lambda;
            if den.norm() < f64::EPSILON * scale {
                den = C64::new(f64::EPSILON * scale, 0.0);
            }
            y[i] = -acc / den;
        }
        let mut v = &q * y;
        let nv = v.norm();
        if nv > 0.0 {
            v /= C64::new(nv, 0.0);
        }
        pairs.push((lambda, v));
    }
    pairs.sort_by(|x, y| cmp_re_im(&x.0, &y.0));

    let mut vectors = CMatrix::zeros(n, n);
    let mut residual: f64 = 0.0;
    for (k, (lambda, v)) in pairs.iter().enumerate() {
        vectors.set_column(k, v);
        let r = a * v - v * *lambda;
        residual = residual.max(r.norm());
    }
    residual /= scale;
    let values: Vec<C64> = pairs.into_iter().map(|p| p.0).collect();
    let mut near_degenerate = false;
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() < 1e-9 * scale {
                near_degenerate = true;
            }
        }
    }
    if !(residual <= tol) {
        return Err(LinalgError::NonConvergence { residual });
    }
    Ok(Eigensystem { values, vectors, residual, near_degenerate })
}

/// Eigenvalues only, sorted by `(re, im)`.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>, LinalgError> {
    let n = check_square(a)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or(LinalgError::NonConvergence { residual: f64::INFINITY })?;
    let (_, t) = schur.unpack();
    let mut vals: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    vals.sort_by(cmp_re_im);
    Ok(vals)
}

/// The Cauchy matrix `C_ij = 1 / (a_i + b_j)`.
pub fn cauchy_matrix(a: &[C64], b: &[C64]) -> CMatrix {
    CMatrix::from_fn(a.len(), b.len(), |i, j| C64::new(1.0, 0.0) / (a[i] + b[j]))
}

/// Closed-form inverse of the Cauchy matrix built from `a` and `b`.
///
/// Entry `(i, j)` is
/// `Π_k (a_j + b_k)(a_k + b_i) / ((a_j + b_i) Π_{k≠j}(a_j - a_k) Π_{k≠i}(b_i - b_k))`.
pub fn cauchy_inverse(a: &[C64], b: &[C64]) -> Result<CMatrix, LinalgError> {
    let n = a.len();
    if b.len() != n {
        return Err(LinalgError::DegenerateNodes("a and b differ in length"));
    }
    for i in 0..n {
        for j in 0..n {
            if (a[i] + b[j]).norm() == 0.0 {
                return Err(LinalgError::DegenerateNodes("a_i + b_j vanishes"));
            }
            if i != j && (a[i] - a[j]).norm() == 0.0 {
                return Err(LinalgError::DegenerateNodes("repeated a node"));
            }
            if i != j && (b[i] - b[j]).norm() == 0.0 {
                return Err(LinalgError::DegenerateNodes("repeated b node"));
            }
        }
    }
    let one = C64::new(1.0, 0.0);
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let mut num = one;
        for k in 0..n {
            num *= (a[j] + b[k]) * (a[k] + b[i]);
        }
        let mut den = a[j] + b[i];
        for k in 0..n {
            if k != j {
                den *= a[j] - a[k];
            }
            if k != i {
                den *= b[i] - b[k];
            }
        }
        num / den
    }))
}

/// Doubled matrix: block `(i, j)` is `M_ij · I_2`.
pub fn double(m: &CMatrix) -> CMatrix {
    let (r, c) = m.shape();
    CMatrix::from_fn(2 * r, 2 * c, |i, j| {
        if i % 2 == j % 2 {
            m[(i / 2, j / 2)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Gershgorin discs `(M_ii, Σ_{j≠i} |M_ij|)`.
pub fn gershgorin(m: &CMatrix) -> Vec<(C64, f64)> {
    (0..m.nrows())
        .map(|i| {
            let r = (0..m.ncols()).filter(|&j| j != i).map(|j| m[(i, j)].norm()).sum();
            (m[(i, i)], r)
        })
        .collect()
}

/// Characteristic polynomial coefficients `[c_1, ..., c_n]` of
/// `det(λI - M) = λ^n + c_1 λ^{n-1} + ... + c_n`, by Faddeev–LeVerrier.
pub fn char_poly(m: &CMatrix) -> Result<Vec<C64>, LinalgError> {
    let n = check_square(m)?;
    let id = CMatrix::identity(n, n);
    let mut coeffs = Vec::with_capacity(n);
    let mut mk = CMatrix::zeros(n, n);
    let mut c_prev = C64::new(1.0, 0.0);
    for k in 1..=n {
        mk = m * (mk + &id * c_prev);
        let c = -mk.trace() / C64::new(k as f64, 0.0);
        coeffs.push(c);
        c_prev = c;
    }
    Ok(coeffs)
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    check_square(a)?;
    a.clone().lu().solve(b).ok_or(LinalgError::Singular)
}

/// Inverse by LU.
pub fn inverse(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    check_square(a)?;
    a.clone().try_inverse().ok_or(LinalgError::Singular)
}
