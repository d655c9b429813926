mod common;

use beamfocus::bounds::*;
use beamfocus::geometry::{steering_vector, ArrayGeometry, SteeringMode, TargetSpec};
use beamfocus::linalg::{complex_normal_matrix, cr, realify_hermitian, C64, CMat};
use common::*;
use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;

fn unit_response(geom: &ArrayGeometry, r: f64, phi: f64) -> CMat {
    let bt = steering_vector(geom.n_tx, geom.wavelength, r, phi, SteeringMode::Exact).unwrap();
    let br = steering_vector(geom.n_rx, geom.wavelength, r, phi, SteeringMode::Exact).unwrap();
    br * bt.adjoint()
}

/// Central difference with one Richardson extrapolation step.
fn richardson(f: impl Fn(f64) -> CMat, x: f64, h: f64) -> CMat {
    let d = |h: f64| (f(x + h) - f(x - h)) / cr(2.0 * h);
    (d(h / 2.0) * cr(4.0) - d(h)) / cr(3.0)
}

#[test]
fn point_fim_matches_definition() {
    let geom = ArrayGeometry::new(4, 4, 1, 28e9).unwrap();
    let (r, phi, mu) = (0.35, 0.4, C64::new(0.7, -0.4));
    let l = 8;
    let sigma2 = 0.6;
    let mut rng = rng(21);
    let x = complex_normal_matrix(&mut rng, 4, l, 1.0);
    let r_x = &x * x.adjoint() / cr(l as f64);

    // stacked mean derivatives of vec(μ G(r, φ) X) for (r, φ, Re μ, Im μ)
    let g = unit_response(&geom, r, phi);
    let dr = richardson(|t| unit_response(&geom, t, phi), r, 1e-4) * mu;
    let dphi = richardson(|t| unit_response(&geom, r, t), phi, 1e-4) * mu;
    let cols: Vec<CMat> = vec![&dr * &x, &dphi * &x, &g * &x, &g * &x * j()];
    let vecs: Vec<Vec<C64>> = cols.iter().map(|m| m.as_slice().to_vec()).collect();
    let mut oracle = Matrix4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            let s: C64 = vecs[a].iter().zip(&vecs[b]).map(|(u, v)| u.conj() * v).sum();
            oracle[(a, b)] = 2.0 / sigma2 * s.re;
        }
    }

    let target = TargetSpec::Point { distance: r, angle: phi, mu };
    let trm = point_trm(&geom, &target, SteeringMode::Exact).unwrap();
    let fim = fim_point(&trm, &r_x, mu, sigma2, l).unwrap();
    let scale = oracle.abs().max();
    assert!((fim.full() - oracle).abs().max() < 1e-6 * scale);

    let a_oracle = oracle.fixed_view::<2, 2>(0, 0) - oracle.fixed_view::<2, 2>(0, 2)
        * oracle.fixed_view::<2, 2>(2, 2).try_inverse().unwrap()
        * oracle.fixed_view::<2, 2>(2, 0);
    assert!((fim.a - a_oracle).abs().max() < 1e-6 * a_oracle.abs().max());
}

#[test]
fn response_derivatives_match_finite_differences() {
    let geom = ArrayGeometry::new(16, 16, 1, 28e9).unwrap();
    let mut rng = rng(5);
    for _ in 0..20 {
        let r = rng.random_range(0.3..5.0);
        let phi = rng.random_range(-1.2..1.2);
        let target = TargetSpec::Point { distance: r, angle: phi, mu: cr(1.0) };
        let (dr, dphi) = point_trm_derivatives(&geom, &target, SteeringMode::Exact).unwrap();
        let fd_r = (unit_response(&geom, r + 1e-5, phi) - unit_response(&geom, r - 1e-5, phi)) / cr(2e-5);
        let fd_p = (unit_response(&geom, r, phi + 1e-6) - unit_response(&geom, r, phi - 1e-6)) / cr(2e-6);
        let scale_r = dr.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale_p = dphi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((fd_r - &dr).iter().all(|z| z.norm() < 1e-4 * scale_r));
        assert!((fd_p - &dphi).iter().all(|z| z.norm() < 1e-4 * scale_p));
    }
}

#[test]
fn derivatives_scale_with_gain() {
    let geom = ArrayGeometry::new(8, 6, 1, 28e9).unwrap();
    let t1 = TargetSpec::Point { distance: 0.7, angle: -0.2, mu: cr(1.0) };
    let c = C64::new(-0.3, 2.0);
    let t2 = TargetSpec::Point { distance: 0.7, angle: -0.2, mu: c };
    let (a1, b1) = point_trm_derivatives(&geom, &t1, SteeringMode::Exact).unwrap();
    let (a2, b2) = point_trm_derivatives(&geom, &t2, SteeringMode::Exact).unwrap();
    assert!((a1 * c - &a2).norm() < 1e-10 * a2.norm());
    assert!((b1 * c - &b2).norm() < 1e-10 * b2.norm());
}

#[test]
fn response_is_rank_one() {
    let geom = ArrayGeometry::new(6, 5, 1, 28e9).unwrap();
    let mut rng = rng(8);
    for _ in 0..5 {
        let target = TargetSpec::Point {
            distance: rng.random_range(0.2..3.0),
            angle: rng.random_range(-1.0..1.0),
            mu: C64::new(rng.random(), rng.random()),
        };
        let b = point_trm(&geom, &target, SteeringMode::Exact).unwrap().b;
        let sv = b.svd(false, false).singular_values;
        assert!(sv[1] < 1e-10 * sv[0]);
    }
}

#[test]
fn crb_is_schur_block_of_full_inverse() {
    let geom = ArrayGeometry::new(4, 4, 1, 28e9).unwrap();
    let target = TargetSpec::Point { distance: 0.5, angle: 0.2, mu: C64::new(0.4, 0.9) };
    let trm = point_trm(&geom, &target, SteeringMode::Exact).unwrap();
    let w = complex_normal_matrix(&mut rng(2), 4, 3, 1.0);
    let fim = fim_point(&trm, &(&w * w.adjoint()), trm.mu, 1.0, 8).unwrap();
    let crb = crb_point(&fim).unwrap();
    let inv = fim.full().try_inverse().unwrap();
    let block = inv.fixed_view::<2, 2>(0, 0);
    assert!((crb.matrix - block).abs().max() < 1e-8 * block.abs().max());
}

#[test]
fn bcrb_matches_realified_bayesian_fim() {
    let (n_tx, n_rx, l) = (3, 2, 4);
    let (sigma2, prior) = (0.7, 1.3);
    let x = complex_normal_matrix(&mut rng(13), n_tx, l, 1.0);
    let r_x = &x * x.adjoint() / cr(l as f64);
    // y = (Xᵀ ⊗ I) vec(B) + n
    let h = kron(&x.transpose(), &CMat::identity(n_rx, n_rx));
    let j1 = realify(&(h.adjoint() * &h)) * (2.0 / sigma2);
    let n = j1.nrows();
    let j = j1 + DMatrix::identity(n, n) * (2.0 / prior);
    let oracle = j.try_inverse().unwrap().trace();
    let params = BcrbParams { noise: sigma2, prior_variance: prior, frame_len: l, n_rx };
    assert!(rel_err(bcrb_extended_trace(&r_x, &params).unwrap(), oracle) < 1e-8);
}

#[test]
fn prior_free_fim_is_singular_below_full_stream_count() {
    let mut rng = rng(17);
    for i in 0..10 {
        let n_tx = 3 + i % 4;
        let k = 1 + i % (n_tx - 1);
        let w = complex_normal_matrix(&mut rng, n_tx, k, 1.0);
        let j = extended_fim(&(&w * w.adjoint()), 1.0, 8, 2);
        let e = SymmetricEigen::new(j).eigenvalues;
        assert!(e.min() / e.max() < 1e-9, "n_tx={n_tx} K={k}");
    }
}

#[test]
fn realify_examples() {
    assert_eq!(realify_hermitian(&CMat::identity(3, 3)), DMatrix::identity(6, 6));
    let a = complex_normal_matrix(&mut rng(4), 3, 3, 1.0);
    let m = &a * a.adjoint() + CMat::identity(3, 3);
    let lhs = realify_hermitian(&m).try_inverse().unwrap();
    let rhs = realify_hermitian(&m.clone().try_inverse().unwrap());
    assert!((lhs - rhs).abs().max() < 1e-10);

    let mut re: Vec<f64> = SymmetricEigen::new(realify_hermitian(&m)).eigenvalues.iter().copied().collect();
    let mut cx: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().flat_map(|&v| [v, v]).collect();
    re.sort_by(f64::total_cmp);
    cx.sort_by(f64::total_cmp);
    assert!(re.iter().zip(&cx).all(|(a, b)| (a - b).abs() < 1e-10));
}

fn psd(seed: u64, n: usize, rank: usize) -> CMat {
    let w = complex_normal_matrix(&mut rng(seed), n, rank, 1.0);
    &w * w.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn crb_is_loewner_monotone(seed in 0u64..10_000, rank in 1usize..4) {
        let geom = ArrayGeometry::new(4, 4, 1, 28e9).unwrap();
        let target = TargetSpec::Point { distance: 0.6, angle: -0.3, mu: cr(1.0) };
        let trm = point_trm(&geom, &target, SteeringMode::Exact).unwrap();
        let r = psd(seed, 4, 4);
        let delta = psd(seed + 1, 4, rank);
        let base = crb_point(&fim_point(&trm, &r, trm.mu, 1.0, 8).unwrap()).unwrap().trace;
        let more = crb_point(&fim_point(&trm, &(&r + delta), trm.mu, 1.0, 8).unwrap()).unwrap().trace;
        prop_assert!(more <= base * (1.0 + 1e-10));
    }

    #[test]
    fn fim_is_linear_in_frame_and_gain(seed in 0u64..10_000, c in 0.1f64..5.0) {
        let geom = ArrayGeometry::new(4, 3, 1, 28e9).unwrap();
        let mu = C64::new(0.3, 0.8);
        let target = TargetSpec::Point { distance: 0.9, angle: 0.5, mu };
        let trm = point_trm(&geom, &target, SteeringMode::Exact).unwrap();
        let r = psd(seed, 4, 2);
        let f = fim_point(&trm, &r, mu, 1.0, 4).unwrap().j_phiphi;
        let f3 = fim_point(&trm, &r, mu, 1.0, 12).unwrap().j_phiphi;
        let fc = fim_point(&trm, &r, mu * c.sqrt(), 1.0, 4).unwrap().j_phiphi;
        prop_assert!((f * 3.0 - f3).abs().max() <= 1e-10 * f3.abs().max());
        prop_assert!((f * c - fc).abs().max() <= 1e-10 * fc.abs().max());
    }

    #[test]
    fn bcrb_decreases_in_prior_and_power(seed in 0u64..10_000, s in 1.1f64..4.0) {
        let r = psd(seed, 3, 2);
        let p = BcrbParams { noise: 1.0, prior_variance: 0.5, frame_len: 8, n_rx: 2 };
        let base = bcrb_extended_trace(&r, &p).unwrap();
        let wider = bcrb_extended_trace(&r, &BcrbParams { prior_variance: 0.5 * s, ..p.clone() }).unwrap();
        let louder = bcrb_extended_trace(&(&r * cr(s)), &p).unwrap();
        prop_assert!(wider > base);
        prop_assert!(louder < base);
    }
}
