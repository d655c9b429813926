mod common;

use beamfocus::bounds::*;
use beamfocus::estimators::*;
use beamfocus::geometry::{steering_vector, ArrayGeometry, SteeringMode, TargetSpec};
use beamfocus::linalg::{complex_normal_matrix, cr, vec_of, C64, CMat};
use common::*;
use rand::Rng;

/// 0.1 m to 1 m: the default region starts at 0.5 m, past an 8-element
/// array's near field.
fn region(geom: &ArrayGeometry) -> GridSpec {
    GridSpec { r_min: 0.1, r_max: 1.0, ..GridSpec::for_geometry(geom) }
}

fn small_grid(geom: &ArrayGeometry) -> SearchGrid {
    SearchGrid::new(geom, GridSpec { n_range: 60, n_angle: 91, ..region(geom) }).unwrap()
}

fn response(geom: &ArrayGeometry, r: f64, phi: f64, mu: C64) -> CMat {
    let bt = steering_vector(geom.n_tx, geom.wavelength, r, phi, SteeringMode::Exact).unwrap();
    let br = steering_vector(geom.n_rx, geom.wavelength, r, phi, SteeringMode::Exact).unwrap();
    br * bt.adjoint() * mu
}

#[test]
fn noiseless_echo_is_exact() {
    let b = complex_normal_matrix(&mut rng(1), 3, 4, 1.0);
    let w = complex_normal_matrix(&mut rng(2), 4, 2, 1.0);
    let e = simulate_echo(&b, &w, SymbolMode::Gaussian, 8, 0.0, 3, 0).unwrap();
    assert_eq!(e.y, &b * &e.x);
    assert_eq!(e.x.shape(), (4, 8));
}

#[test]
fn sample_covariance_converges() {
    let w = complex_normal_matrix(&mut rng(4), 4, 2, 1.0);
    let b = CMat::zeros(2, 4);
    let e = simulate_echo(&b, &w, SymbolMode::Gaussian, 10_000, 1.0, 5, 0).unwrap();
    let r = &w * w.adjoint();
    assert!((e.sample_covariance() - &r).norm() < 0.05 * r.norm());
}

#[test]
fn echoes_are_reproducible() {
    let b = complex_normal_matrix(&mut rng(1), 3, 4, 1.0);
    let w = complex_normal_matrix(&mut rng(2), 4, 2, 1.0);
    let a = simulate_echo(&b, &w, SymbolMode::Gaussian, 16, 0.5, 42, 7).unwrap();
    let c = simulate_echo(&b, &w, SymbolMode::Gaussian, 16, 0.5, 42, 7).unwrap();
    let d = simulate_echo(&b, &w, SymbolMode::Gaussian, 16, 0.5, 42, 8).unwrap();
    assert_eq!(a.y.as_slice(), c.y.as_slice());
    assert_ne!(a.y.as_slice(), d.y.as_slice());
}

#[test]
fn psk_symbols_have_unit_modulus() {
    let s = draw_symbols(&mut rng(3), 2, 50, SymbolMode::Psk(4)).unwrap();
    assert!(s.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    assert!(s.iter().all(|z| ((z.arg() / std::f64::consts::FRAC_PI_2).round() * std::f64::consts::FRAC_PI_2 - z.arg()).abs() < 1e-12));
    assert!(draw_symbols(&mut rng(3), 2, 50, SymbolMode::Psk(1)).is_err());
    let w = CMat::identity(2, 2);
    assert!(simulate_echo(&CMat::zeros(2, 2), &w, SymbolMode::Gaussian, 1, 1.0, 0, 0).is_err());
}

#[test]
fn noiseless_mle_recovers_grid_point() {
    let geom = ArrayGeometry::new(8, 8, 2, 28e9).unwrap();
    let grid = small_grid(&geom);
    let (r, phi) = (grid.ranges[20], grid.angles[55]);
    let mu = C64::new(0.3, -0.7);
    let b = response(&geom, r, phi, mu);
    let w = complex_normal_matrix(&mut rng(9), 8, 2, 1.0);
    let e = simulate_echo(&b, &w, SymbolMode::Gaussian, 16, 0.0, 1, 0).unwrap();
    let est = mle_point(&e, &grid).unwrap();
    assert!(rel_err(est.range, r) < 1e-9, "{} vs {r}", est.range);
    assert!((est.angle - phi).abs() < 1e-9);
    assert!((est.mu - mu).norm() < 1e-8);
}

#[test]
fn noiseless_music_peaks_at_truth_cell() {
    let geom = ArrayGeometry::new(8, 8, 2, 28e9).unwrap();
    let grid = small_grid(&geom);
    let (i, j) = (35, 30);
    let (r, phi) = (grid.ranges[i], grid.angles[j]);
    let b = response(&geom, r, phi, cr(1.0));
    let w = complex_normal_matrix(&mut rng(10), 8, 2, 1.0);
    let e = simulate_echo(&b, &w, SymbolMode::Gaussian, 16, 0.0, 2, 0).unwrap();
    let spec = music_spectrum(&e, &grid).unwrap();
    let (mut bi, mut bj) = (0, 0);
    for a in 0..spec.nrows() {
        for c in 0..spec.ncols() {
            if spec[(a, c)] > spec[(bi, bj)] {
                (bi, bj) = (a, c);
            }
        }
    }
    assert_eq!((bi, bj), (i, j));
    let est = music_2d(&e, &grid).unwrap();
    assert!((est.range.ln() - r.ln()).abs() <= (grid.ranges[1] / grid.ranges[0]).ln());
    assert!((est.angle - phi).abs() <= grid.angles[1] - grid.angles[0]);
}

#[test]
fn music_ignores_global_phase() {
    let geom = ArrayGeometry::new(8, 8, 2, 28e9).unwrap();
    let grid = small_grid(&geom);
    let b = response(&geom, 0.4, 0.4, cr(0.2));
    let w = complex_normal_matrix(&mut rng(11), 8, 2, 1.0);
    let e = simulate_echo(&b, &w, SymbolMode::Gaussian, 16, 1.0, 3, 0).unwrap();
    let mut rotated = e.clone();
    rotated.y *= C64::from_polar(1.0, 1.234);
    let a = music_spectrum(&e, &grid).unwrap();
    let c = music_spectrum(&rotated, &grid).unwrap();
    assert!((a - &c).abs().max() <= 1e-8 * c.abs().max());
}

#[test]
fn music_needs_two_receive_antennas() {
    let geom = ArrayGeometry::new(8, 1, 1, 28e9).unwrap();
    let grid = small_grid(&geom);
    let b = response(&geom, 0.4, 0.4, cr(0.2));
    let w = complex_normal_matrix(&mut rng(11), 8, 1, 1.0);
    let e = simulate_echo(&b, &w, SymbolMode::Gaussian, 16, 1.0, 3, 0).unwrap();
    assert!(music_2d(&e, &grid).is_err());
}

#[test]
fn degenerate_grids_are_rejected() {
    let geom = ArrayGeometry::new(8, 8, 2, 28e9).unwrap();
    let base = GridSpec::for_geometry(&geom);
    for bad in [
        GridSpec { n_range: 1, ..base.clone() },
        GridSpec { n_angle: 2, ..base.clone() },
        GridSpec { r_min: 2.0, r_max: 1.0, ..base.clone() },
        GridSpec { r_min: 0.0, ..base.clone() },
        GridSpec { angle_limit: 0.0, ..base.clone() },
    ] {
        assert!(SearchGrid::new(&geom, bad).is_err());
    }
}

#[test]
fn estimates_stay_inside_region() {
    let geom = ArrayGeometry::new(8, 8, 2, 28e9).unwrap();
    let grid = small_grid(&geom);
    let mut g = rng(12);
    let w = complex_normal_matrix(&mut rng(13), 8, 2, 1.0);
    for t in 0..40 {
        // truths both inside and beyond the searched region
        let r = g.random_range(0.1..2.0 * grid.spec.r_max);
        let phi = g.random_range(-1.5..1.5);
        let b = response(&geom, r, phi, cr(g.random_range(0.01..1.0)));
        let e = simulate_echo(&b, &w, SymbolMode::Gaussian, 16, 1.0, 14, t).unwrap();
        let inside = |r: f64, a: f64| {
            r >= grid.spec.r_min && r <= grid.spec.r_max && a >= grid.angles[0] && a <= *grid.angles.last().unwrap()
        };
        let m = mle_point(&e, &grid).unwrap();
        assert!(inside(m.range, m.angle), "{m:?}");
        let m = music_2d(&e, &grid).unwrap();
        assert!(inside(m.range, m.angle), "{m:?}");
    }
}

#[test]
fn mle_error_respects_crb_at_high_snr() {
    let geom = ArrayGeometry::new(8, 8, 2, 28e9).unwrap();
    let grid = SearchGrid::new(&geom, region(&geom)).unwrap();
    let (r0, a0) = (0.3, 0.25);
    let w = complex_normal_matrix(&mut rng(15), 8, 2, 1.0);
    let l = 16;
    let mu = cr((db_snr(25.0) / (l as f64 * w.norm_squared())).sqrt());
    let target = TargetSpec::Point { distance: r0, angle: a0, mu };
    let trm = point_trm(&geom, &target, SteeringMode::Exact).unwrap();
    let crb = crb_point(&fim_point(&trm, &(&w * w.adjoint()), mu, 1.0, l).unwrap()).unwrap();
    let recs: Vec<EstimationRecord> = (0..500)
        .map(|t| {
            let e = simulate_echo(&trm.b, &w, SymbolMode::Gaussian, l, 1.0, 16, t).unwrap();
            let m = mle_point(&e, &grid).unwrap();
            EstimationRecord::point(t as usize, (r0, a0), (m.range, m.angle))
        })
        .collect();
    let (rr, sr) = rmse(&recs, 0);
    let (ra, sa) = rmse(&recs, 1);
    // the bound averages over waveforms; a 3σ slack absorbs both
    assert!(rr >= crb.range_std() - 3.0 * sr, "{rr} ± {sr} vs {}", crb.range_std());
    assert!(ra >= crb.angle_std() - 3.0 * sa, "{ra} ± {sa} vs {}", crb.angle_std());
    assert!(rr < 2.0 * crb.range_std() && ra < 2.0 * crb.angle_std());
}

fn db_snr(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[test]
fn lmmse_shrinks_zero_observation_to_prior_mean() {
    let w = complex_normal_matrix(&mut rng(17), 3, 3, 1.0);
    let e = simulate_echo(&CMat::zeros(2, 3), &w, SymbolMode::Gaussian, 16, 0.0, 18, 0).unwrap();
    let est = lmmse_trm(&e, 1.0, 0.5).unwrap();
    assert!(est.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn lmmse_recovers_response_without_noise() {
    let b = complex_normal_matrix(&mut rng(19), 2, 3, 1.0);
    let w = complex_normal_matrix(&mut rng(20), 3, 3, 1.0);
    let e = simulate_echo(&b, &w, SymbolMode::Gaussian, 16, 0.0, 21, 0).unwrap();
    let est = lmmse_trm(&e, 1.0, 1e-12).unwrap();
    let truth = vec_of(&b);
    assert!((est - &truth).norm() < 1e-6 * truth.norm());
}

#[test]
fn lmmse_matches_bayesian_bound() {
    let (n_tx, n_rx, l) = (3, 2, 16);
    let (noise, prior) = (1.0, 1.0);
    let w = complex_normal_matrix(&mut rng(22), n_tx, n_tx, 0.5);
    let params = BcrbParams { noise, prior_variance: prior, frame_len: l, n_rx };
    let mut err = Vec::new();
    let mut bound = Vec::new();
    for t in 0..2000u64 {
        let b = draw_extended_trm(&mut trial_rng(23, t), n_rx, n_tx, prior);
        let e = simulate_echo(&b, &w, SymbolMode::Gaussian, l, noise, 24, t).unwrap();
        let est = lmmse_trm(&e, prior, noise).unwrap();
        err.push(EstimationRecord::response(t as usize, &vec_of(&b), &est).squared_error[0]);
        bound.push(bcrb_extended_trace(&e.sample_covariance(), &params).unwrap());
    }
    let (mse, _) = mean_stderr(&err);
    let (avg_bound, _) = mean_stderr(&bound);
    let ratio = mse / avg_bound;
    assert!((0.9..=1.1).contains(&ratio), "MSE {mse} vs bound {avg_bound}");
}

#[test]
fn rmse_reports_delta_method_error() {
    let recs: Vec<EstimationRecord> = (0..4).map(|t| EstimationRecord::point(t, (1.0, 0.0), (1.0 + t as f64, 0.0))).collect();
    let (r, se) = rmse(&recs, 0);
    assert!((r - 3.5f64.sqrt()).abs() < 1e-12);
    let sq = [0.0, 1.0, 4.0, 9.0];
    let (_, se_mse) = mean_stderr(&sq);
    assert!((se - se_mse / (2.0 * r)).abs() < 1e-12);
    assert!(recs.iter().all(|r| r.squared_error.iter().all(|&v| v >= 0.0)));
}
