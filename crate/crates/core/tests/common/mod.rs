#![allow(dead_code)]

use beamfocus::comm::{db_to_linear, dbm_to_mw, PowerModel};
use beamfocus::geometry::{ArrayGeometry, ChannelModel, ChannelSet, SteeringMode, TargetSpec, UserSpec};
use beamfocus::linalg::{cr, C64, CMat};
use beamfocus::scenario::Scenario;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DESK_FRAME: usize = 16;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two users and one point target in front of a 16/16 array at 28 GHz.
pub fn desk_scenario(snr_db: f64) -> Scenario {
    let geom = ArrayGeometry::new(16, 16, 4, 28e9).unwrap();
    let p = dbm_to_mw(34.0);
    let mu = (db_to_linear(snr_db) / (DESK_FRAME as f64 * p)).sqrt();
    Scenario {
        geometry: geom,
        users: vec![UserSpec::los(0, 0.9375, (-60f64).to_radians()), UserSpec::los(1, 0.625, (-30f64).to_radians())],
        target: TargetSpec::Point { distance: 0.625, angle: 15f64.to_radians(), mu: cr(mu) },
        power: PowerModel { amplifier_eff: 0.5, static_power: dbm_to_mw(15.0), budget: p },
        sinr_threshold: db_to_linear(2.0),
        ee_threshold: 2.0,
        user_noise: 1.0,
        radar_noise: 1.0,
        frame_len: DESK_FRAME,
        steering: SteeringMode::Exact,
    }
}

pub fn desk_channels(scen: &Scenario) -> ChannelSet {
    let model = ChannelModel { link_gain_db: 60.0, ..Default::default() };
    ChannelSet::generate(&scen.geometry, &scen.users, &model, &mut rng(1)).unwrap()
}

/// Test-side Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out.view_mut((i * b.nrows(), j * b.ncols()), b.shape()).copy_from(&(b * a[(i, j)]));
        }
    }
    out
}

/// `[[Re M, −Im M], [Im M, Re M]]` built independently of the library.
pub fn realify(m: &CMat) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(&m.map(|z| z.re));
    out.view_mut((n, n), (n, n)).copy_from(&m.map(|z| z.re));
    out.view_mut((0, n), (n, n)).copy_from(&m.map(|z| -z.im));
    out.view_mut((n, 0), (n, n)).copy_from(&m.map(|z| z.im));
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn j() -> C64 {
    C64::new(0.0, 1.0)
}
