use hwm_core::constructor::{self, Targets, M0};
use hwm_core::dynamics::{self, State, Status, TrajectoryOptions};
use hwm_core::linalg::{self, CMatrix, C64};
use hwm_core::model::{self, Configuration};
use hwm_core::scenarios;
use hwm_core::spectral::{self, HalfSpin, SpectralError};
use nalgebra::Matrix2;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| c(a, b))
}

fn max2(m: &Matrix2<C64>) -> f64 {
    m.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
}

fn state_of(cfg: &Configuration) -> State {
    State::from_configuration(cfg).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn halfspin_reconstructs_nilpotent(e0 in complex(), e1 in complex(), lam in complex()) {
        prop_assume!(e0.norm() + e1.norm() > 1e-2 && lam.norm() > 1e-2);
        // ξ ⟂ e in the bilinear sense makes e ξᵀ nilpotent
        let a = Matrix2::new(e0 * (-e1 * lam), e0 * (e0 * lam), e1 * (-e1 * lam), e1 * (e0 * lam));
        let hs = spectral::halfspin_decompose(&a).unwrap();
        prop_assert!(max2(&(hs.outer() - a)) <= 1e-12 * (1.0 + max2(&a)));
        let ne = (hs.e[0].norm_sqr() + hs.e[1].norm_sqr()).sqrt();
        let nx = (hs.xi[0].norm_sqr() + hs.xi[1].norm_sqr()).sqrt();
        prop_assert!((ne - nx).abs() <= 1e-12 * (1.0 + ne));
    }

    #[test]
    fn rephasing_preserves_spectrum(seed in 0u64..50, phase in 0.1f64..6.0, mag in 0.2f64..5.0) {
        let cfg = scenarios::random_configuration(seed, 3);
        let vel = model::velocity_from_constraints(&cfg).unwrap();
        let hs = spectral::halfspins(&cfg).unwrap();
        let lam = C64::from_polar(mag, phase);
        let moved: Vec<HalfSpin> = hs.iter().enumerate().map(|(j, h)| {
            let f = if j == 1 { lam } else { c(1.0, 0.0) };
            HalfSpin { e: [h.e[0] * f, h.e[1] * f], xi: [h.xi[0] / f, h.xi[1] / f] }
        }).collect();
        let a = linalg::eigenvalues(&spectral::build_l(&cfg.poles, &vel, &hs)).unwrap();
        let b = linalg::eigenvalues(&spectral::build_l(&cfg.poles, &vel, &moved)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() <= 1e-10);
        }
    }
}

#[test]
fn halfspin_rejects_bad_input() {
    assert_eq!(spectral::halfspin_decompose(&Matrix2::zeros()), Err(SpectralError::ZeroMatrix));
    assert!(matches!(spectral::halfspin_decompose(&Matrix2::identity()), Err(SpectralError::NotNilpotent { .. })));
}

#[test]
fn off_diagonal_products_match_symmetric_form() {
    for seed in 0..10 {
        let cfg = scenarios::random_configuration(seed, 2);
        let vel = model::velocity_from_constraints(&cfg).unwrap();
        let l = spectral::lax_data(&cfg, &vel).unwrap().l;
        let m = spectral::build_matsuno(&cfg, &vel).l;
        let d = cfg.poles[0] - cfg.poles[1];
        let oracle = 2.0 * model::dot(&cfg.spins[0].0, &cfg.spins[1].0) / (d * d);
        assert!((l[(0, 1)] * l[(1, 0)] - oracle).norm() <= 1e-12, "seed {seed}");
        assert!((m[(0, 1)] * m[(1, 0)] - oracle).norm() <= 1e-12, "seed {seed}");
        let (a, b) = (linalg::char_poly(&l).unwrap(), linalg::char_poly(&m).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-12);
        }
    }
}

#[test]
fn symmetric_form_differs_beyond_two_solitons() {
    // the square-root branch loses the cyclic product S₁₂S₂₃S₃₁
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let cfg = scenarios::random_configuration(seed, 3);
        let vel = model::velocity_from_constraints(&cfg).unwrap();
        let a = linalg::char_poly(&spectral::lax_data(&cfg, &vel).unwrap().l).unwrap();
        let b = linalg::char_poly(&spectral::build_matsuno(&cfg, &vel).l).unwrap();
        assert!((a[0] - b[0]).norm() <= 1e-12);
        assert!((a[1] - b[1]).norm() <= 1e-12);
        worst = worst.max((a[2] - b[2]).norm());
    }
    assert!(worst > 1e-8, "determinants agree to {worst:e}");
}

#[test]
fn trivial_lax_data() {
    let cfg = constructor::approximate_ic(&Targets::new(vec![0.3], 0.1, Some(1.0))).unwrap();
    let vel = model::velocity_from_constraints(&cfg).unwrap();
    let lax = spectral::build_matsuno(&cfg, &vel);
    assert_eq!(lax.l.shape(), (1, 1));
    assert!((lax.l[(0, 0)] - 0.3).norm() <= 1e-12);
    let tr = scenarios::traveling_configuration(0.2, 0.5, 0.0);
    let vel = model::velocity_from_constraints(&tr).unwrap();
    for lax in [spectral::build_matsuno(&tr, &vel), spectral::lax_data(&tr, &vel).unwrap()] {
        assert!(linalg::max_abs(&lax.s) <= 1e-12);
        assert!(linalg::max_abs(&(&lax.l - CMatrix::identity(2, 2) * c(0.2, 0.0))) <= 1e-12);
    }
}

#[test]
fn lax_residual_examples() {
    let free = constructor::approximate_ic(&Targets::new(vec![0.3], 0.1, Some(1.0))).unwrap();
    let traj = dynamics::integrate_configuration(&free, &TrajectoryOptions::span(0.0, 2.0, 0.1)).unwrap();
    assert!(spectral::lax_residual(&traj).unwrap() <= 1e-12);

    let tr = scenarios::traveling_configuration(0.2, 0.5, 0.0);
    let traj = dynamics::integrate_configuration(&tr, &TrajectoryOptions::span(0.0, 2.0, 0.1)).unwrap();
    assert!(spectral::lax_residual(&traj).unwrap() <= 1e-9);

    let cfg = scenarios::random_configuration(3, 2);
    let coarse = dynamics::integrate_configuration(&cfg, &TrajectoryOptions::span(0.0, 2.0, 0.02)).unwrap();
    let fine = dynamics::integrate_configuration(&cfg, &TrajectoryOptions::span(0.0, 2.0, 0.01)).unwrap();
    let (rc, rf) = (spectral::lax_residual(&coarse).unwrap(), spectral::lax_residual(&fine).unwrap());
    assert!(rf <= 1e-6, "residual {rf:e}");
    // central differences: halving the stride quarters the residual
    assert!(rf < 0.4 * rc || rf <= 1e-10, "{rc:e} -> {rf:e}");

    let short = dynamics::integrate_configuration(&cfg, &TrajectoryOptions::span(0.0, 0.1, 0.1)).unwrap();
    assert_eq!(spectral::lax_residual(&short), Err(SpectralError::InsufficientSamples));
}

#[test]
fn explicit_formula_single_soliton() {
    let cfg = constructor::approximate_ic(&Targets::new(vec![-0.4], 0.1, Some(1.0))).unwrap();
    let vel = model::velocity_from_constraints(&cfg).unwrap();
    let data = spectral::explicit_data(&cfg, &vel).unwrap();
    for x in [c(0.3, -0.5), c(-2.0, 1.0), c(5.0, 0.0)] {
        let a = spectral::explicit_pi_minus(&data, 0.0, x).unwrap();
        assert!(max2(&(a - model::pi_minus_direct(&cfg, x))) <= 1e-12);
    }
    // the single pole moves at the constant speed
    let p = spectral::poles_at(&data, 3.0).unwrap();
    assert!((p[0] - (cfg.poles[0] + 3.0 * vel[0])).norm() <= 1e-12);
}

#[test]
fn explicit_formula_tracks_the_flow() {
    let cfg = scenarios::random_configuration(8, 2);
    let start = state_of(&cfg);
    let data = spectral::explicit_data(&cfg, &start.velocities).unwrap();
    let (later, st) = dynamics::propagate(&start, M0, 5.0, 1e-12).unwrap();
    assert_eq!(st, Status::Completed);
    let now = later.configuration(M0);
    for x in [c(0.0, -1.0), c(3.0, 0.5), c(-4.0, 2.0)] {
        let a = spectral::explicit_pi_minus(&data, 5.0, x).unwrap();
        let b = model::pi_minus_direct(&now, x);
        assert!(max2(&(a - b)) <= 1e-8 * (1.0 + max2(&b)));
    }
    let mut poles = spectral::poles_at(&data, 5.0).unwrap();
    let mut ode = later.poles.clone();
    poles.sort_by(linalg::cmp_re_im);
    ode.sort_by(linalg::cmp_re_im);
    for (p, q) in poles.iter().zip(&ode) {
        assert!((p - q).norm() <= 1e-8);
    }
}

#[test]
fn resolvent_at_a_pole_is_rejected() {
    let cfg = scenarios::random_configuration(1, 2);
    let vel = model::velocity_from_constraints(&cfg).unwrap();
    let data = spectral::explicit_data(&cfg, &vel).unwrap();
    let err = spectral::explicit_pi_minus(&data, 0.0, cfg.poles[0]).unwrap_err();
    assert!(matches!(err, SpectralError::ResolventSingular { .. }));
}

#[test]
fn constructed_spectrum_is_near_targets() {
    let w = vec![-0.6, 0.0, 0.5];
    let targets = Targets::new(w.clone(), 0.01, None);
    let (cfg, report) = constructor::fixpoint(&targets, 1e-12, 200).unwrap();
    let vel = model::velocity_from_constraints(&cfg).unwrap();
    let (vals, separated) = spectral::spectrum(&spectral::lax_data(&cfg, &vel).unwrap().l, 1e-6).unwrap();
    assert!(separated);
    for (v, t) in vals.iter().zip(&w) {
        assert!((v - t).norm() <= 0.01);
    }
    assert!(report.spectrum_error <= 0.01);
}

#[test]
fn proximity_matching_is_a_permutation() {
    let a = [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
    let b = [c(2.1, 0.0), c(-0.1, 0.0), c(0.9, 0.1)];
    assert_eq!(spectral::match_by_proximity(&a, &b), vec![1, 2, 0]);
    assert_eq!(spectral::min_gap(&a), 1.0);
    assert_eq!(spectral::min_gap(&a[..1]), f64::INFINITY);
}
