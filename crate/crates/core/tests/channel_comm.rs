mod common;

use beamfocus::comm::*;
use beamfocus::geometry::*;
use beamfocus::linalg::{complex_normal_matrix, cr, C64, CMat, CVec};
use common::*;
use proptest::prelude::*;

#[test]
fn element_distance_reference_values() {
    let r = exact_element_distance(10.0, 0.0, 2.0, 0.00535);
    assert!((r - (100.0f64 + 0.0107 * 0.0107).sqrt()).abs() < 1e-12);
    assert!((r - 10.000_005_7).abs() < 1e-7);
    assert_eq!(exact_element_distance(10.0, 0.7, 0.0, 0.00535), 10.0);
}

#[test]
fn tx_covariance_examples() {
    let w = CMat::from_column_slice(3, 1, &[cr(1.0), C64::new(0.0, 2.0), cr(-1.0)]);
    let r = tx_covariance(&BeamformerSet::from_digital(w.clone())).unwrap();
    assert!((&r - &w * w.adjoint()).norm() < 1e-15);

    let (n, k, p) = (8, 3, 5.0);
    let w = CMat::identity(n, k) * cr((p / n as f64).sqrt());
    let r = tx_covariance(&BeamformerSet::from_digital(w)).unwrap();
    for i in 0..n {
        let expect = if i < k { p / n as f64 } else { 0.0 };
        assert!((r[(i, i)].re - expect).abs() < 1e-14);
    }
    assert!((r.sum() - cr(k as f64 * p / n as f64)).norm() < 1e-13);

    let w = complex_normal_matrix(&mut rng(3), 16, 4, 1.0);
    let r = tx_covariance(&BeamformerSet::from_digital(w)).unwrap();
    let sv = r.svd(false, false).singular_values;
    assert_eq!(sv.iter().filter(|&&s| s > 1e-9 * sv[0]).count(), 4);
}

#[test]
fn total_power_reference_value() {
    let w = CMat::identity(4, 4);
    let pm = PowerModel { amplifier_eff: 0.5, static_power: 31.62, budget: 100.0 };
    assert!((total_power(&BeamformerSet::from_digital(w), &pm) - 39.62).abs() < 1e-12);
}

#[test]
fn seeded_channels_are_reproducible() {
    let geom = ArrayGeometry::new(8, 8, 2, 28e9).unwrap();
    let mut user = UserSpec::los(0, 3.0, 0.2);
    user.nlos_paths = vec![
        NlosPath { distance: 4.0, angle: -0.5, gain_scale: 1.0 },
        NlosPath { distance: 6.0, angle: 0.9, gain_scale: 0.5 },
    ];
    let model = ChannelModel::default();
    let a = channel_vector(&geom, &user, &model, &mut rng(77)).unwrap();
    let b = channel_vector(&geom, &user, &model, &mut rng(77)).unwrap();
    assert_eq!(a, b);
}

fn random_channels(seed: u64, n: usize, k: usize) -> ChannelSet {
    let h = complex_normal_matrix(&mut rng(seed), n, k, 1.0);
    ChannelSet::new(h.column_iter().map(|c| c.into_owned()).collect())
}

proptest! {
    #[test]
    fn steering_entries_have_unit_modulus(n in 1usize..70, r in 0.05f64..1e4, phi in -1.5f64..1.5, quad in any::<bool>()) {
        let mode = if quad { SteeringMode::Quadratic } else { SteeringMode::Exact };
        let b = steering_vector(n, 0.0107, r, phi, mode).unwrap();
        prop_assert!(b.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn offsets_sum_to_zero(n in 1usize..200) {
        let s: f64 = element_offsets(n).unwrap().iter().sum();
        prop_assert!(s.abs() < 1e-9);
    }

    #[test]
    fn channel_scales_with_link_gain(seed in 0u64..1000, db in -20.0f64..20.0) {
        let geom = ArrayGeometry::new(8, 8, 2, 28e9).unwrap();
        let mut user = UserSpec::los(0, 2.0, 0.3);
        user.nlos_paths = vec![NlosPath { distance: 3.0, angle: -0.4, gain_scale: 1.0 }];
        let base = ChannelModel::default();
        let loud = ChannelModel { link_gain_db: db, ..base.clone() };
        let h0 = channel_vector(&geom, &user, &base, &mut rng(seed)).unwrap();
        let h1 = channel_vector(&geom, &user, &loud, &mut rng(seed)).unwrap();
        let c = 10f64.powf(db / 20.0);
        prop_assert!((h0 * cr(c) - &h1).norm() <= 1e-12 * h1.norm());
    }

    #[test]
    fn sinr_vector_and_covariance_forms_agree(seed in 0u64..100_000, k in 1usize..5) {
        let ch = random_channels(seed, 6, k);
        let w = complex_normal_matrix(&mut rng(seed + 1), 6, k, 1.0);
        let cov: Vec<CMat> = w.column_iter().map(|c| { let c: CVec = c.into_owned(); &c * c.adjoint() }).collect();
        for u in 0..k {
            let a = sinr(&ch, &w, u, 0.3).unwrap();
            let b = sinr_covariance(&ch, &cov, u, 0.3).unwrap();
            prop_assert!(rel_err(b, a) < 1e-10);
        }
    }

    #[test]
    fn sum_rate_is_monotone(g in proptest::collection::vec(0.0f64..100.0, 1..6), i in 0usize..6, d in 0.0f64..10.0) {
        let mut h = g.clone();
        let i = i % g.len();
        h[i] += d;
        prop_assert!(sum_rate(&h) >= sum_rate(&g));
    }

    #[test]
    fn total_power_is_at_least_static(seed in 0u64..1000, scale in 0.0f64..3.0) {
        let pm = PowerModel { amplifier_eff: 0.35, static_power: 31.62, budget: 10.0 };
        let w = complex_normal_matrix(&mut rng(seed), 4, 2, 1.0) * cr(scale);
        let t = total_power(&BeamformerSet::from_digital(w.clone()), &pm);
        prop_assert!(t >= pm.static_power);
        prop_assert_eq!(t == pm.static_power, w.norm() == 0.0);
    }

    #[test]
    fn hybrid_covariance_rank_is_bounded_by_rf_chains(seed in 0u64..1000, n_rf in 1usize..5) {
        let a = complex_normal_matrix(&mut rng(seed), 12, n_rf, 1.0).map(|z| z / cr(z.norm()));
        let d = complex_normal_matrix(&mut rng(seed + 7), n_rf, 6, 1.0);
        let bf = BeamformerSet::from_hybrid(a, d, 0.0).unwrap();
        let r = tx_covariance(&bf).unwrap();
        let sv = r.svd(false, false).singular_values;
        prop_assert!(sv.iter().filter(|&&s| s > 1e-9 * sv[0]).count() <= n_rf);
    }
}

/// The exact/quadratic phase gap is the third-order Fresnel term
/// `k x³ sinφ cos²φ / (2r²)`: it tracks that prediction at short range and
/// falls below 1e-3 rad from four Rayleigh distances outward.
#[test]
fn exact_and_quadratic_phases_follow_third_order_term() {
    let lambda = 0.0107;
    let k = 2.0 * std::f64::consts::PI / lambda;
    for n in [8usize, 16, 32, 64] {
        let geom = ArrayGeometry::with_wavelength(n, n, 1, lambda).unwrap();
        let d_r = rayleigh_distance(&geom);
        let x_max = (n as f64 - 1.0) / 2.0 * lambda / 2.0;
        for &f in &[0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
            for &phi in &[-1.2, -0.6, 0.3, 1.0] {
                let r = f * d_r;
                let a = steering_vector(n, lambda, r, phi, SteeringMode::Exact).unwrap();
                let b = steering_vector(n, lambda, r, phi, SteeringMode::Quadratic).unwrap();
                let worst = a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).arg().abs()).fold(0.0, f64::max);
                let predicted = k * x_max.powi(3) * (phi.sin() * phi.cos().powi(2)).abs() / (2.0 * r * r);
                assert!(worst > 0.5 * predicted && worst < 2.0 * predicted, "n={n} r={f}·d_R φ={phi}: {worst} vs {predicted}");
                if f >= 4.0 {
                    assert!(worst < 1e-3, "n={n} r={f}·d_R φ={phi}: {worst}");
                }
            }
        }
    }
}
