//! Closed-form Sobolev norms of rational profiles, with a quadrature oracle.
//!
//! A profile with terms `(c_j, p_j)`, `Im p_j > 0`, stands for the real
//! vector function `f(x) = Σ_j c_j/(x - p_j) + c̄_j/(x - p̄_j)`. Upper and
//! lower half-plane parts are orthogonal in every norm used here, so the
//! squared norm of `f` is twice the real part of the sum of the pairwise
//! inner products of the upper parts.

use std::f64::consts::PI;
use std::fmt;

use quadrature::double_exponential;

use crate::linalg::C64;
use crate::model::{self, Configuration, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub enum SobolevError {
    /// Estimated quadrature error above the requested tolerance.
    QuadratureBudgetExceeded { error_estimate: f64 },
    PoleNotUpperHalf { index: usize },
}

impl fmt::Display for SobolevError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::QuadratureBudgetExceeded { error_estimate } => {
                write!(f, "quadrature error estimate {error_estimate:e} above budget")
            }
            Self::PoleNotUpperHalf { index } => write!(f, "profile pole {index} is not in the upper half-plane"),
        }
    }
}

impl std::error::Error for SobolevError {}

/// One term `c/(x - p)` with `Im p > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: Vec3,
    pub pole: C64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RationalProfile {
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    HalfDot,
    /// Squared L² norm of the k-th derivative.
    HkDerivative(u32),
}

impl RationalProfile {
    pub fn new(terms: Vec<Term>) -> Self {
        RationalProfile { terms }
    }

    /// `m - m₀` of a configuration: coefficients `i·s_j`.
    pub fn from_configuration(cfg: &Configuration) -> Self {
        let i = C64::new(0.0, 1.0);
        RationalProfile {
            terms: cfg.spins.iter().zip(&cfg.poles).map(|(s, p)| Term { coeff: model::scale(i, &s.0), pole: *p }).collect(),
        }
    }

    /// Terms of `self` followed by the negated terms of `other`.
    pub fn minus(&self, other: &RationalProfile) -> RationalProfile {
        let neg = C64::new(-1.0, 0.0);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| Term { coeff: model::scale(neg, &t.coeff), pole: t.pole }));
        RationalProfile { terms }
    }

    pub fn scaled(&self, c: C64) -> RationalProfile {
        RationalProfile { terms: self.terms.iter().map(|t| Term { coeff: model::scale(c, &t.coeff), pole: t.pole }).collect() }
    }

    pub fn translated(&self, shift: f64) -> RationalProfile {
        RationalProfile { terms: self.terms.iter().map(|t| Term { coeff: t.coeff, pole: t.pole + shift }).collect() }
    }

    pub fn validate(&self) -> Result<(), SobolevError> {
        match self.terms.iter().position(|t| !(t.pole.im > 0.0)) {
            Some(index) => Err(SobolevError::PoleNotUpperHalf { index }),
            None => Ok(()),
        }
    }

    /// Value of the real function at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        self.eval_derivative(x, 0)
    }

    /// k-th derivative of the real function at `x`.
    pub fn eval_derivative(&self, x: f64, k: u32) -> [f64; 3] {
        let fact = factorial(k) * if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut out = [0.0; 3];
        for t in &self.terms {
            let w = fact / (C64::new(x, 0.0) - t.pole).powu(k + 1);
            for (o, c) in out.iter_mut().zip(&t.coeff) {
                *o += 2.0 * (c * w).re;
            }
        }
        out
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}

fn central_binomial(k: u32) -> f64 {
    (1..=k).fold(1.0, |a, i| a * (k + i) as f64 / i as f64)
}

/// `⟨c_i/(x - p_i), c_j/(x - p_j)⟩_{L²} = 2πi (c_i · c̄_j)/(p_i - p̄_j)`.
pub fn inner_l2(a: &Term, b: &Term) -> C64 {
    C64::new(0.0, 2.0 * PI) * model::hdot(&a.coeff, &b.coeff) / (a.pole - b.pole.conj())
}

/// `‖∂ᵏ (c/(x - p))‖²_{L²} = (k!)² |c|² √π Γ(k+½) / (Γ(k+1) Im(p)^{2k+1})`.
pub fn hk_diag(t: &Term, k: u32) -> f64 {
    let gamma_ratio = PI * central_binomial(k) / 4f64.powi(k as i32);
    factorial(k).powi(2) * model::norm(&t.coeff).powi(2) * gamma_ratio / t.pole.im.powi(2 * k as i32 + 1)
}

/// `⟨∂ᵏ(c_i/(x - p_i)), ∂ᵏ(c_j/(x - p_j))⟩_{L²}`, by the residue at `p_i`:
/// `(k!)² 2πi (-1)ᵏ C(2k, k) (c_i · c̄_j)/(p_i - p̄_j)^{2k+1}`.
pub fn hk_inner(a: &Term, b: &Term, k: u32) -> C64 {
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let pref = factorial(k).powi(2) * 2.0 * PI * sign * central_binomial(k);
    C64::new(0.0, pref) * model::hdot(&a.coeff, &b.coeff) / (a.pole - b.pole.conj()).powu(2 * k + 1)
}

/// Ḣ^{1/2} pairing of two upper-half-plane terms:
/// `(1/2π)∫|ξ| â b̂* dξ = -2π (c_a · c̄_b)/(p_a - p̄_b)²`.
pub fn half_inner(a: &Term, b: &Term) -> C64 {
    -2.0 * PI * model::hdot(&a.coeff, &b.coeff) / (a.pole - b.pole.conj()).powu(2)
}

/// Closed-form squared norm of the real function of a profile.
pub fn profile_norm(p: &RationalProfile, kind: NormKind) -> f64 {
    let pair: &dyn Fn(&Term, &Term) -> C64 = match kind {
        NormKind::L2 => &inner_l2,
        NormKind::HalfDot => &half_inner,
        NormKind::HkDerivative(k) => &move |a: &Term, b: &Term| hk_inner(a, b, k),
    };
    let mut total = C64::new(0.0, 0.0);
    for a in &p.terms {
        for b in &p.terms {
            total += pair(a, b);
        }
    }
    (2.0 * total.re).max(0.0)
}

/// Squared Ḣ^{1/2} norm of the difference of two profiles,
/// `-4π Σ g_j g_k (c_j · c̄_k)/(p_j - p̄_k)²` with `g = +1` on `a`, `-1` on `b`.
pub fn norm_diff_half(a: &RationalProfile, b: &RationalProfile) -> f64 {
    profile_norm(&a.minus(b), NormKind::HalfDot)
}

/// Independent quadrature of the squared norm of a profile.
///
/// L² and derivative norms integrate `|f⁽ᵏ⁾(x)|²` on the real line; Ḣ^{1/2}
/// integrates `|ξ| |f̂(ξ)|²` with the exact transform
/// `(c/(x - p))^(ξ) = 2πi c e^{-ipξ}` for `ξ < 0`. The line is cut at
/// breakpoints adapted to the poles and the tails are mapped to `[0, 1)`.
pub fn quadrature_oracle(p: &RationalProfile, kind: NormKind) -> Result<f64, SobolevError> {
    p.validate()?;
    if p.terms.is_empty() {
        return Ok(0.0);
    }
    match kind {
        NormKind::HalfDot => fourier_half(p),
        NormKind::L2 => real_line(p, 0),
        NormKind::HkDerivative(k) => real_line(p, k),
    }
}

const ORACLE_REL_TOL: f64 = 1e-12;

/// Integrate over consecutive breakpoints plus the two tails.
fn integrate_line<F: Fn(f64) -> f64 + Copy>(f: F, breaks: &[f64], tol: f64) -> (f64, f64) {
    let a = breaks[0];
    let b = *breaks.last().expect("nonempty breakpoints");
    let mut total = 0.0;
    let mut err = 0.0;
    let left = double_exponential::integrate(
        move |u: f64| {
            let d = 1.0 - u;
            f(a - u / d) / (d * d)
        },
        0.0,
        1.0,
        tol,
    );
    let right = double_exponential::integrate(
        move |u: f64| {
            let d = 1.0 - u;
            f(b + u / d) / (d * d)
        },
        0.0,
        1.0,
        tol,
    );
    for o in [left, right] {
        total += o.integral;
        err += o.error_estimate;
    }
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let o = double_exponential::integrate(f, w[0], w[1], tol);
            total += o.integral;
            err += o.error_estimate;
        }
    }
    (total, err)
}

fn sorted_breaks(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    v
}

fn with_relative_tolerance<F: Fn(f64) -> (f64, f64)>(run: F) -> Result<f64, SobolevError> {
    let (rough, _) = run(1e-6);
    let tol = (ORACLE_REL_TOL * rough.abs()).max(1e-300);
    let (value, err) = run(tol);
    if err > 1e3 * tol.max(1e-14 * value.abs()) {
        return Err(SobolevError::QuadratureBudgetExceeded { error_estimate: err });
    }
    Ok(value)
}

fn real_line(p: &RationalProfile, k: u32) -> Result<f64, SobolevError> {
    let mut breaks = Vec::new();
    for t in &p.terms {
        for m in [0.0, 0.25, 1.0, 4.0, 16.0, 64.0] {
            breaks.push(t.pole.re + m * t.pole.im);
            breaks.push(t.pole.re - m * t.pole.im);
        }
    }
    let breaks = sorted_breaks(breaks);
    let f = |x: f64| p.eval_derivative(x, k).iter().map(|v| v * v).sum::<f64>();
    let n = breaks.len().max(1) as f64 + 2.0;
    with_relative_tolerance(|tol| integrate_line(f, &breaks, tol / n))
}

fn fourier_half(p: &RationalProfile) -> Result<f64, SobolevError> {
    // u = -ξ > 0; |f̂_+(u)|² summed over components
    let spectrum = |u: f64| {
        let mut acc = [C64::new(0.0, 0.0); 3];
        for t in &p.terms {
            let e = C64::new(0.0, 2.0 * PI) * (C64::new(0.0, u) * t.pole).exp();
            for (a, c) in acc.iter_mut().zip(&t.coeff) {
                *a += c * e;
            }
        }
        u * acc.iter().map(|z| z.norm_sqr()).sum::<f64>()
    };
    let im_min = p.terms.iter().fold(f64::INFINITY, |m, t| m.min(t.pole.im));
    let im_max = p.terms.iter().fold(0.0_f64, |m, t| m.max(t.pole.im));
    let re_spread = p.terms.iter().fold(0.0_f64, |m, a| p.terms.iter().fold(m, |m, b| m.max((a.pole.re - b.pole.re).abs())));
    // panels resolve both the fastest decay and the beat oscillations
    let end = 40.0 / im_min;
    let width = (0.25 / im_max).min(1.0 / (re_spread + 1e-300)).min(end);
    let panels = ((end / width).ceil() as usize).clamp(1, 200_000);
    let breaks: Vec<f64> = (0..=panels).map(|i| end * i as f64 / panels as f64).collect();
    let n = panels as f64 + 1.0;
    let run = |tol: f64| {
        let mut total = 0.0;
        let mut err = 0.0;
        for w in breaks.windows(2) {
            let o = double_exponential::integrate(spectrum, w[0], w[1], tol / n);
            total += o.integral;
            err += o.error_estimate;
        }
        let tail = double_exponential::integrate(
            move |v: f64| {
                let d = 1.0 - v;
                spectrum(end + v / d) / (d * d)
            },
            0.0,
            1.0,
            tol / n,
        );
        // real function: both Fourier half-lines, weight 1/2π
        ((total + tail.integral) / PI, (err + tail.error_estimate) / PI)
    };
    with_relative_tolerance(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn unit_term(pole: C64) -> Term {
        Term { coeff: [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], pole }
    }

    #[test]
    fn l2_diagonal() {
        let t = unit_term(c(0.0, 1.0));
        assert!((inner_l2(&t, &t) - c(PI, 0.0)).norm() < 1e-15);
        let o = Term { coeff: [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], pole: c(2.0, 1.0) };
        assert_eq!(inner_l2(&t, &o), c(0.0, 0.0));
    }

    #[test]
    fn hk_diag_values() {
        let t = unit_term(c(0.0, 1.0));
        assert!((hk_diag(&t, 0) - PI).abs() < 1e-15);
        assert!((hk_diag(&t, 1) - PI / 2.0).abs() < 1e-15);
        for k in 0..4 {
            assert!((hk_inner(&t, &t, k).re - hk_diag(&t, k)).abs() < 1e-13 * hk_diag(&t, k));
        }
        assert_eq!(hk_inner(&t, &t, 0), inner_l2(&t, &t));
    }

    #[test]
    fn half_norm_single_term() {
        let a = RationalProfile::new(vec![unit_term(c(0.0, 1.0))]);
        let zero = RationalProfile::new(vec![Term { coeff: [c(0.0, 0.0); 3], pole: c(0.0, 1.0) }]);
        assert!((norm_diff_half(&a, &zero) - PI).abs() < 1e-14);
        assert_eq!(norm_diff_half(&a, &a), 0.0);
    }

    #[test]
    fn oracle_matches_closed_forms() {
        let p = RationalProfile::new(vec![
            Term { coeff: [c(0.3, -0.2), c(1.0, 0.5), c(0.0, 0.7)], pole: c(-0.4, 0.6) },
            Term { coeff: [c(-0.5, 0.1), c(0.2, 0.0), c(0.9, -0.3)], pole: c(1.3, 2.0) },
        ]);
        for kind in [NormKind::L2, NormKind::HalfDot, NormKind::HkDerivative(1), NormKind::HkDerivative(2)] {
            let exact = profile_norm(&p, kind);
            let quad = quadrature_oracle(&p, kind).unwrap();
            assert!((exact - quad).abs() <= 1e-9 * exact, "{kind:?}: {exact} vs {quad}");
        }
    }

    #[test]
    fn oracle_of_empty_profile() {
        assert_eq!(quadrature_oracle(&RationalProfile::default(), NormKind::L2).unwrap(), 0.0);
    }

    #[test]
    fn rejects_lower_poles() {
        let p = RationalProfile::new(vec![unit_term(c(0.0, -1.0))]);
        assert_eq!(quadrature_oracle(&p, NormKind::L2), Err(SobolevError::PoleNotUpperHalf { index: 0 }));
    }
}
