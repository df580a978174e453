//! Invariant suites behind `hwm verify`.

use hwm_core::constructor::{self, Targets, M0};
use hwm_core::dynamics::{self, State, StateDerivative, TrajectoryOptions};
use hwm_core::linalg::{self, CMatrix};
use hwm_core::sobolev::{self, NormKind, RationalProfile, Term};
use hwm_core::{model, scenarios, spectral, Spin, C64};
use nalgebra::Matrix2;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::Fault;
use crate::output::num;

pub const SUITES: [&str; 7] = ["pauli", "cauchy", "isospectral", "constraint", "explicit", "sobolev", "constructor"];

/// One measured invariant: passes when `value ≤ bound`.
#[derive(Debug, Clone)]
pub struct Check {
    pub invariant: &'static str,
    pub case: String,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    fn new(invariant: &'static str, case: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { invariant, case: case.into(), value, bound }
    }

    pub fn pass(&self) -> bool {
        self.value <= self.bound
    }
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: String,
    pub checks: Vec<Check>,
}

impl SuiteResult {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::pass)
    }

    pub fn to_json(&self) -> Value {
        let failures: Vec<Value> = self.checks.iter().filter(|c| !c.pass()).take(10).map(check_json).collect();
        let worst = self.checks.iter().max_by(|a, b| (a.value / a.bound).total_cmp(&(b.value / b.bound)));
        json!({
            "name": self.name,
            "pass": self.pass(),
            "cases": self.checks.len(),
            "worst": worst.map(check_json),
            "failures": failures,
        })
    }
}

fn check_json(c: &Check) -> Value {
    json!({ "invariant": c.invariant, "case": c.case, "value": num(c.value), "bound": num(c.bound) })
}

pub struct VerifyPlan {
    pub seed: u64,
    pub seeds: usize,
    pub fault: Option<Fault>,
}

pub fn run_suite(name: &str, plan: &VerifyPlan) -> Option<SuiteResult> {
    let checks = match name {
        "pauli" => pauli(plan),
        "cauchy" => cauchy(plan),
        "isospectral" => isospectral(plan),
        "constraint" => constraint(plan),
        "explicit" => explicit(plan),
        "sobolev" => sobolev_suite(plan),
        "constructor" => constructor_suite(),
        _ => return None,
    };
    Some(SuiteResult { name: name.to_string(), checks })
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn max2(m: &Matrix2<C64>) -> f64 {
    m.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
}

fn pauli(plan: &VerifyPlan) -> Vec<Check> {
    let mut r = rng(plan.seed, 1);
    let mut worst_prod: f64 = 0.0;
    let mut worst_trip: f64 = 0.0;
    for _ in 0..1000 {
        let s: [C64; 3] = std::array::from_fn(|_| c(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)));
        let t: [C64; 3] = std::array::from_fn(|_| c(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)));
        let lhs = model::to_pauli(&s) * model::to_pauli(&t);
        let rhs = Matrix2::identity() * model::dot(&s, &t) + model::to_pauli(&model::cross(&s, &t)) * c(0.0, 1.0);
        worst_prod = worst_prod.max(max2(&(lhs - rhs)));
        let back = model::from_pauli(&model::to_pauli(&s)).map(|b| model::norm(&model::sub(&b, &s))).unwrap_or(f64::INFINITY);
        worst_trip = worst_trip.max(back);
    }
    vec![Check::new("pauli-product", "1000 pairs", worst_prod, 1e-12), Check::new("pauli-round-trip", "1000 vectors", worst_trip, 1e-14)]
}

fn cauchy(plan: &VerifyPlan) -> Vec<Check> {
    (0..plan.seeds)
        .into_par_iter()
        .map(|k| {
            let mut r = rng(plan.seed + k as u64, 2);
            let n = 2 + k % 7;
            let a: Vec<C64> = (0..n).map(|j| c(j as f64 + r.random_range(0.0..0.3), r.random_range(0.5..1.5))).collect();
            let b: Vec<C64> = (0..n).map(|j| c(j as f64 + 0.5 + r.random_range(0.0..0.3), r.random_range(0.5..1.5))).collect();
            let cm = linalg::cauchy_matrix(&a, &b);
            // agreement with LU in units of n·cond₁(C)·eps
            let value = match (linalg::cauchy_inverse(&a, &b), linalg::inverse(&cm)) {
                (Ok(closed), Ok(dense)) => {
                    let cond = norm1(&cm) * norm1(&dense);
                    linalg::max_abs(&(&closed - &dense)) / linalg::max_abs(&dense) / (n as f64 * cond * f64::EPSILON)
                }
                _ => f64::INFINITY,
            };
            Check::new("cauchy-inverse", format!("seed {} n {n}", plan.seed + k as u64), value, 20.0)
        })
        .collect()
}

fn norm1(m: &CMatrix) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Classical RK4 with the spin equation negated.
fn flipped_flow(start: &State, t_end: f64, stride: f64) -> Vec<(f64, State)> {
    let add = |s: &State, d: &StateDerivative, h: f64| State {
        spins: s.spins.iter().zip(&d.spins).map(|(a, b)| Spin(std::array::from_fn(|m| a.0[m] - h * b.0[m]))).collect(),
        poles: s.poles.iter().zip(&d.poles).map(|(a, b)| a + h * b).collect(),
        velocities: s.velocities.iter().zip(&d.velocities).map(|(a, b)| a + h * b).collect(),
    };
    let dt = 1e-2;
    let per = (stride / dt).round() as usize;
    let mut out = vec![(0.0, start.clone())];
    let mut s = start.clone();
    let steps = (t_end / dt).round() as usize;
    for k in 1..=steps {
        let d = |st: &State| dynamics::rhs(st, 0.0).expect("zero floor never trips");
        let k1 = d(&s);
        let k2 = d(&add(&s, &k1, dt / 2.0));
        let k3 = d(&add(&s, &k2, dt / 2.0));
        let k4 = d(&add(&s, &k3, dt));
        let a = add(&s, &k1, dt / 6.0);
        let b = add(&a, &k2, dt / 3.0);
        let cc = add(&b, &k3, dt / 3.0);
        s = add(&cc, &k4, dt / 6.0);
        if k % per == 0 {
            out.push((k as f64 * dt, s.clone()));
        }
    }
    out
}

fn flow(start: &State, t_end: f64, stride: f64, fault: Option<Fault>) -> Vec<(f64, State)> {
    match fault {
        Some(Fault::SpinSignFlip) => flipped_flow(start, t_end, stride),
        None => match dynamics::integrate(start, M0, &TrajectoryOptions::span(0.0, t_end, stride)) {
            Ok(t) => t.samples,
            Err(_) => Vec::new(),
        },
    }
}

fn sorted_eigs(m: &CMatrix) -> Vec<C64> {
    linalg::eigenvalues(m).unwrap_or_default()
}

fn drift(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() || a.is_empty() {
        return f64::INFINITY;
    }
    let perm = spectral::match_by_proximity(a, b);
    perm.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).norm()).fold(0.0, f64::max)
}

fn isospectral(plan: &VerifyPlan) -> Vec<Check> {
    (0..plan.seeds)
        .into_par_iter()
        .flat_map_iter(|k| {
            let seed = plan.seed + k as u64;
            let n = 2 + k % 2;
            let cfg = scenarios::random_configuration(seed, n);
            let case = format!("seed {seed} n {n}");
            let start = match State::from_configuration(&cfg) {
                Ok(s) => s,
                Err(_) => return vec![Check::new("spectrum-drift", case, f64::INFINITY, 1e-7)],
            };
            let samples = flow(&start, 20.0, 1.0, plan.fault);
            let l0 = match spectral::lax_data(&cfg, &start.velocities) {
                Ok(l) => sorted_eigs(&l.l),
                Err(_) => Vec::new(),
            };
            let mut worst: f64 = if samples.len() < 2 { f64::INFINITY } else { 0.0 };
            for (_, st) in &samples {
                let value = match spectral::lax_data(&st.configuration(M0), &st.velocities) {
                    Ok(l) => drift(&l0, &sorted_eigs(&l.l)),
                    Err(_) => f64::INFINITY,
                };
                worst = worst.max(value);
            }
            vec![Check::new("spectrum-drift", case, worst, 1e-7)]
        })
        .collect()
}

fn constraint(plan: &VerifyPlan) -> Vec<Check> {
    let cases: Vec<Vec<f64>> = vec![vec![-0.5, 0.5], vec![-0.6, 0.0, 0.6]];
    cases
        .par_iter()
        .map(|w| {
            let case = format!("w {w:?}");
            let built = constructor::fixpoint(&Targets::new(w.clone(), 0.01, None), 1e-12, 200);
            let value = match built.ok().and_then(|(cfg, _)| State::from_configuration(&cfg).ok()) {
                Some(start) => {
                    let samples = flow(&start, 20.0, 1.0, plan.fault);
                    samples.iter().map(|(_, s)| model::constraint_residuals(&s.configuration(M0)).max_residual).fold(0.0, f64::max)
                }
                None => f64::INFINITY,
            };
            Check::new("constraint-residual", case, value, 1e-8)
        })
        .collect()
}

fn explicit(plan: &VerifyPlan) -> Vec<Check> {
    (0..plan.seeds)
        .into_par_iter()
        .map(|k| {
            let seed = plan.seed + k as u64;
            let n = 2 + k % 2;
            let cfg = scenarios::random_configuration(seed, n);
            let case = format!("seed {seed} n {n}");
            let value = (|| {
                let start = State::from_configuration(&cfg).ok()?;
                let data = spectral::explicit_data(&cfg, &start.velocities).ok()?;
                let samples = flow(&start, 20.0, 2.0, plan.fault);
                let mut worst: f64 = 0.0;
                for (t, st) in samples.iter() {
                    let eig = spectral::poles_at(&data, *t).ok()?;
                    worst = worst.max(drift(&st.poles, &eig));
                }
                Some(worst)
            })()
            .unwrap_or(f64::INFINITY);
            Check::new("pole-eigenvalue", case, value, 1e-6)
        })
        .collect()
}

fn sobolev_suite(plan: &VerifyPlan) -> Vec<Check> {
    (0..plan.seeds)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut r = rng(plan.seed + k as u64, 3);
            let terms = (0..1 + k % 3)
                .map(|_| Term {
                    coeff: std::array::from_fn(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))),
                    pole: c(r.random_range(-3.0..3.0), r.random_range(0.3..2.0)),
                })
                .collect();
            let p = RationalProfile::new(terms);
            [NormKind::L2, NormKind::HalfDot, NormKind::HkDerivative(1)]
                .into_iter()
                .map(|kind| {
                    let closed = sobolev::profile_norm(&p, kind);
                    let value = match sobolev::quadrature_oracle(&p, kind) {
                        Ok(q) => (closed - q).abs() / q.abs().max(1e-300),
                        Err(_) => f64::INFINITY,
                    };
                    Check::new("sobolev-closed-form", format!("seed {} {kind:?}", plan.seed + k as u64), value, 1e-7)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn constructor_suite() -> Vec<Check> {
    let mut out = Vec::new();
    for w in [vec![-0.5, 0.5], vec![-0.6, 0.0, 0.6]] {
        let case = format!("w {w:?}");
        match constructor::fixpoint(&Targets::new(w, 0.01, None), 1e-12, 200) {
            Ok((cfg, rep)) => {
                out.push(Check::new("constructor-residual", case.clone(), model::constraint_residuals(&cfg).max_residual, 1e-10));
                out.push(Check::new("constructor-ratio", case.clone(), rep.geometric_ratio, 0.5));
                out.push(Check::new("constructor-spectrum", case, rep.spectrum_error, 0.01));
            }
            Err(_) => out.push(Check::new("constructor-residual", case, f64::INFINITY, 1e-10)),
        }
    }
    out
}
