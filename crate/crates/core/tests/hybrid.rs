mod common;

use beamfocus::hybrid::*;
use beamfocus::linalg::{complex_normal_matrix, cr, C64, CMat};
use common::*;
use rand::Rng;
use std::f64::consts::{PI, TAU};

fn phases(seed: u64, n: usize, m: usize) -> CMat {
    let mut rng = rng(seed);
    CMat::from_fn(n, m, |_, _| C64::from_polar(1.0, rng.random::<f64>() * TAU))
}

fn block_phases(seed: u64, n_tx: usize, n_rf: usize) -> CMat {
    let g = n_tx / n_rf;
    let full = phases(seed, n_tx, n_rf);
    CMat::from_fn(n_tx, n_rf, |p, q| if q == p / g { full[(p, q)] } else { cr(0.0) })
}

fn nonincreasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10) + 1e-12)
}

#[test]
fn planted_fully_connected_pair_is_recovered() {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let t_a = phases(seed, 16, 4);
        let t_d = complex_normal_matrix(&mut rng(seed + 100), 4, 2, 1.0);
        let w = &t_a * &t_d;
        let p = w.norm_squared();
        let f = factorize(&w, 4, Architecture::Fully, p, &FactorOptions { tol: 1e-12, max_iter: 5000, seed }).unwrap();
        worst = worst.max(f.residual / w.norm());
    }
    assert!(worst <= 1e-3, "worst relative residual {worst}");
}

#[test]
fn residual_traces_are_nonincreasing() {
    for seed in 0..100 {
        let w = complex_normal_matrix(&mut rng(seed), 16, 2, 1.0);
        for arch in [Architecture::Fully, Architecture::Partially] {
            let f = factorize(&w, 4, arch, 3.0, &FactorOptions { seed, ..Default::default() }).unwrap();
            assert!(nonincreasing(&f.residual_trace), "seed {seed} {arch:?}: {:?}", f.residual_trace);
            assert!(in_analog_set(&f.analog, arch, 1e-12));
            assert!(rel_err(f.product().norm_squared(), 3.0) < 1e-8);
            assert!((f.residual - residual(&w, &f.analog, &f.digital)).abs() < 1e-12);
        }
    }
}

#[test]
fn fully_connected_fits_at_least_as_well_as_partially() {
    for seed in 0..50 {
        let w = complex_normal_matrix(&mut rng(500 + seed), 16, 2, 1.0);
        let opts = FactorOptions { seed, ..Default::default() };
        let fully = factorize(&w, 4, Architecture::Fully, 2.0, &opts).unwrap();
        let part = factorize(&w, 4, Architecture::Partially, 2.0, &opts).unwrap();
        assert!(fully.residual <= part.residual * (1.0 + 1e-9), "seed {seed}: {} > {}", fully.residual, part.residual);
    }
}

#[test]
fn analog_step_does_not_increase_majorizer() {
    for seed in 0..50 {
        let w = complex_normal_matrix(&mut rng(seed), 12, 3, 1.0);
        let prev = phases(seed + 1, 12, 4);
        let t_d = complex_normal_matrix(&mut rng(seed + 2), 4, 3, 1.0);
        let next = fully_analog_update(&prev, &t_d, &w);
        assert!(next.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let at_prev = fully_majorizer(&prev, &prev, &t_d, &w);
        let at_next = fully_majorizer(&next, &prev, &t_d, &w);
        assert!(rel_err(at_prev, residual(&w, &prev, &t_d).powi(2)) < 1e-10);
        assert!(at_next <= at_prev * (1.0 + 1e-12));
        assert!(residual(&w, &next, &t_d).powi(2) <= at_next * (1.0 + 1e-12));
    }
}

#[test]
fn zero_digital_keeps_analog_phases() {
    let prev = phases(9, 8, 2);
    let w = complex_normal_matrix(&mut rng(10), 8, 2, 1.0);
    let next = fully_analog_update(&prev, &CMat::zeros(2, 2), &w);
    assert!((next - prev).norm() < 1e-12);
}

#[test]
fn digital_ls_matches_normal_equations() {
    let t_a = phases(1, 10, 4);
    let w = complex_normal_matrix(&mut rng(2), 10, 3, 1.0);
    let (ls, ridge) = fully_digital_ls(&t_a, &w);
    assert!(!ridge);
    // Gaussian elimination on [T_AᴴT_A | T_AᴴW]
    let mut aug = CMat::zeros(4, 7);
    aug.view_mut((0, 0), (4, 4)).copy_from(&(t_a.adjoint() * &t_a));
    aug.view_mut((0, 4), (4, 3)).copy_from(&(t_a.adjoint() * &w));
    for c in 0..4 {
        let piv = (c..4).max_by(|&a, &b| aug[(a, c)].norm().total_cmp(&aug[(b, c)].norm())).unwrap();
        aug.swap_rows(c, piv);
        let d = aug[(c, c)];
        for j in 0..7 {
            aug[(c, j)] /= d;
        }
        for i in 0..4 {
            if i != c {
                let f = aug[(i, c)];
                for j in 0..7 {
                    let v = aug[(c, j)];
                    aug[(i, j)] -= f * v;
                }
            }
        }
    }
    let oracle = aug.view((0, 4), (4, 3)).into_owned();
    assert!((&ls - &oracle).norm() < 1e-8 * oracle.norm());

    let (scaled, _) = fully_digital_update(&t_a, &w, 5.0).unwrap();
    assert!(rel_err((&t_a * &scaled).norm_squared(), 5.0) < 1e-10);
    let expect = &oracle * cr(5f64.sqrt() / (&t_a * &oracle).norm());
    assert!((scaled - &expect).norm() < 1e-8 * expect.norm());
}

#[test]
fn square_network_inverts_exactly() {
    let u = complex_normal_matrix(&mut rng(3), 6, 6, 1.0).qr().q() * cr(2.0);
    let w = complex_normal_matrix(&mut rng(4), 6, 2, 1.0);
    let (ls, _) = fully_digital_ls(&u, &w);
    assert!(residual(&w, &u, &ls) < 1e-10 * w.norm());
}

#[test]
fn partially_digital_update_is_the_projection() {
    let (n_tx, n_rf, p) = (12, 3, 7.0);
    let t_a = block_phases(5, n_tx, n_rf);
    let w = complex_normal_matrix(&mut rng(6), n_tx, 2, 1.0);
    let t_d = partially_digital_update(&t_a, &w, p).unwrap();
    let proj = t_a.adjoint() * &w;
    let oracle = &proj * cr((p / 4.0).sqrt() / proj.norm());
    assert!((&t_d - oracle).norm() < 1e-12);
    assert!(rel_err(t_d.norm_squared(), p / 4.0) < 1e-10);
    assert!(rel_err((&t_a * &t_d).norm_squared(), p) < 1e-10);

    let diag = block_phases(7, 4, 4);
    let w = complex_normal_matrix(&mut rng(8), 4, 2, 1.0);
    let t_d = partially_digital_update(&diag, &w, p).unwrap();
    let expect = diag.adjoint() * &w * cr(p.sqrt() / w.norm());
    assert!((t_d - expect).norm() < 1e-12);

    assert!(partially_digital_update(&t_a, &CMat::zeros(n_tx, 2), p).is_err());
}

#[test]
fn partially_analog_update_minimizes_each_row() {
    let (n_tx, n_rf) = (12, 4);
    let g = n_tx / n_rf;
    let t_d = complex_normal_matrix(&mut rng(11), n_rf, 3, 1.0);
    let w = complex_normal_matrix(&mut rng(12), n_tx, 3, 1.0);
    let t_a = partially_analog_update(&t_d, &w).unwrap();
    assert!(in_analog_set(&t_a, Architecture::Partially, 1e-12));
    assert_eq!(t_a.iter().filter(|z| z.norm() > 0.0).count(), n_tx);
    let step = TAU / 1e4;
    for p in 0..n_tx {
        let q = p / g;
        let cost = |th: f64| {
            let e = C64::from_polar(1.0, th);
            (0..3).map(|j| (w[(p, j)] - e * t_d[(q, j)]).norm_sqr()).sum::<f64>()
        };
        let best = (0..10_000).map(|i| -PI + i as f64 * step).min_by(|a, b| cost(*a).total_cmp(&cost(*b))).unwrap();
        let got = t_a[(p, q)].arg();
        let gap = (got - best + PI).rem_euclid(TAU) - PI;
        assert!(gap.abs() <= step, "row {p}: {got} vs {best}");
    }

    // aligned rows give zero phase
    let w = CMat::from_fn(n_tx, 3, |p, j| t_d[(p / g, j)] * cr(1.0 + p as f64));
    let t_a = partially_analog_update(&t_d, &w).unwrap();
    assert!((0..n_tx).all(|p| t_a[(p, p / g)].arg().abs() < 1e-12));
}

#[test]
fn invalid_grouping_is_rejected() {
    let w = complex_normal_matrix(&mut rng(1), 10, 2, 1.0);
    assert!(factorize(&w, 4, Architecture::Partially, 1.0, &FactorOptions::default()).is_err());
    assert!(group_size(10, 4).is_err());
    assert_eq!(group_size(16, 4).unwrap(), 4);
}
