//! Uniform linear arrays, near-field steering vectors and spherical-wave
//! channels.
//!
//! Elements sit on the x-axis at `δ_l·d` with `δ_l = (2l − n − 1)/2`; a
//! point at range `r` and angle `φ` (from broadside, the +y axis) is at
//! `(r sin φ, r cos φ)`.

use crate::error::{invalid, Result};
use crate::linalg::{c, outer, unit_phasor, C64, CMat, CVec};
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, PI};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayGeometry {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_rf: usize,
    pub carrier_freq: f64,
    pub wavelength: f64,
    pub spacing: f64,
}

impl ArrayGeometry {
    pub fn new(n_tx: usize, n_rx: usize, n_rf: usize, carrier_freq: f64) -> Result<Self> {
        if !(carrier_freq > 0.0) {
            return Err(invalid("carrier frequency must be positive"));
        }
        Self::with_wavelength(n_tx, n_rx, n_rf, SPEED_OF_LIGHT / carrier_freq)
    }

    pub fn with_wavelength(n_tx: usize, n_rx: usize, n_rf: usize, wavelength: f64) -> Result<Self> {
        if n_tx == 0 || n_rx == 0 {
            return Err(invalid("antenna counts must be positive"));
        }
        if n_rf == 0 || n_rf > n_tx {
            return Err(invalid(format!("RF chains must satisfy 1 ≤ n_rf ≤ n_tx, got {n_rf}")));
        }
        if !(wavelength > 0.0) {
            return Err(invalid("wavelength must be positive"));
        }
        Ok(Self {
            n_tx,
            n_rx,
            n_rf,
            carrier_freq: SPEED_OF_LIGHT / wavelength,
            wavelength,
            spacing: wavelength / 2.0,
        })
    }

    pub fn tx_steering(&self, r: f64, phi: f64, mode: SteeringMode) -> Result<CVec> {
        steering_vector(self.n_tx, self.wavelength, r, phi, mode)
    }

    pub fn rx_steering(&self, r: f64, phi: f64, mode: SteeringMode) -> Result<CVec> {
        steering_vector(self.n_rx, self.wavelength, r, phi, mode)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SteeringMode {
    #[default]
    Exact,
    /// Second-order (Fresnel) expansion of the element distance.
    Quadratic,
}

pub fn element_offsets(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("element count must be positive"));
    }
    Ok((1..=n).map(|l| (2.0 * l as f64 - n as f64 - 1.0) / 2.0).collect())
}

/// `√(r² + δ²d² − 2rδd sinφ)`.
pub fn exact_element_distance(r: f64, phi: f64, delta: f64, d: f64) -> f64 {
    (r * r + delta * delta * d * d - 2.0 * r * delta * d * phi.sin()).sqrt()
}

/// Path difference `r_l' − r` and its partial derivatives in `r` and `φ`.
fn path_difference(r: f64, phi: f64, delta: f64, d: f64, mode: SteeringMode) -> (f64, f64, f64) {
    let (s, co) = phi.sin_cos();
    let x = delta * d;
    match mode {
        SteeringMode::Exact => {
            let rl = exact_element_distance(r, phi, delta, d);
            // (r'² − r²)/(r' + r) avoids cancellation at large range
            let diff = (x * x - 2.0 * r * x * s) / (rl + r);
            (diff, (r - x * s) / rl - 1.0, -r * x * co / rl)
        }
        SteeringMode::Quadratic => {
            let diff = -x * s + x * x * co * co / (2.0 * r);
            (diff, -x * x * co * co / (2.0 * r * r), -x * co - x * x * s * co / r)
        }
    }
}

fn check_point(r: f64, phi: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(invalid(format!("range must be positive, got {r}")));
    }
    if !(phi.abs() < FRAC_PI_2) {
        return Err(invalid(format!("angle must lie in (−π/2, π/2), got {phi}")));
    }
    Ok(())
}

/// Entry `l` is `exp(−j(2π/λ)(r_l' − r))` with half-wavelength spacing.
pub fn steering_vector(n: usize, wavelength: f64, r: f64, phi: f64, mode: SteeringMode) -> Result<CVec> {
    check_point(r, phi)?;
    let offsets = element_offsets(n)?;
    let k = 2.0 * PI / wavelength;
    let d = wavelength / 2.0;
    Ok(CVec::from_iterator(
        n,
        offsets.iter().map(|&delta| unit_phasor(-k * path_difference(r, phi, delta, d, mode).0)),
    ))
}

/// Steering vector with its analytic derivatives in range and angle.
pub fn steering_with_derivatives(
    n: usize,
    wavelength: f64,
    r: f64,
    phi: f64,
    mode: SteeringMode,
) -> Result<(CVec, CVec, CVec)> {
    check_point(r, phi)?;
    let offsets = element_offsets(n)?;
    let k = 2.0 * PI / wavelength;
    let d = wavelength / 2.0;
    let mut b = CVec::zeros(n);
    let mut db_dr = CVec::zeros(n);
    let mut db_dphi = CVec::zeros(n);
    for (l, &delta) in offsets.iter().enumerate() {
        let (f, f_r, f_phi) = path_difference(r, phi, delta, d, mode);
        let e = unit_phasor(-k * f);
        b[l] = e;
        db_dr[l] = e * c(0.0, -k * f_r);
        db_dphi[l] = e * c(0.0, -k * f_phi);
    }
    Ok((b, db_dr, db_dphi))
}

/// `2(n_tx λ/2)²/λ`.
pub fn rayleigh_distance(geom: &ArrayGeometry) -> f64 {
    let aperture = geom.n_tx as f64 * geom.wavelength / 2.0;
    2.0 * aperture * aperture / geom.wavelength
}

/// Free-space gain with molecular absorption: magnitude
/// `(λ/(4πr))·exp(−k_abs·r/2)`, phase `phase`.
pub fn path_gain(r: f64, carrier_freq: f64, absorption: f64, phase: f64) -> C64 {
    let lambda = SPEED_OF_LIGHT / carrier_freq;
    C64::from_polar(lambda / (4.0 * PI * r) * (-absorption * r / 2.0).exp(), phase)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NlosPath {
    pub distance: f64,
    pub angle: f64,
    pub gain_scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserSpec {
    pub id: usize,
    pub distance: f64,
    pub angle: f64,
    pub nlos_paths: Vec<NlosPath>,
}

impl UserSpec {
    pub fn los(id: usize, distance: f64, angle: f64) -> Self {
        Self { id, distance, angle, nlos_paths: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        check_point(self.distance, self.angle)?;
        for p in &self.nlos_paths {
            check_point(p.distance, p.angle)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    Point { distance: f64, angle: f64, mu: C64 },
    Extended { prior_variance: f64 },
}

impl TargetSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TargetSpec::Point { distance, angle, mu } => {
                check_point(*distance, *angle)?;
                if mu.norm() == 0.0 {
                    return Err(crate::Error::DegenerateTarget);
                }
                Ok(())
            }
            TargetSpec::Extended { prior_variance } => {
                if *prior_variance > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("prior variance must be positive"))
                }
            }
        }
    }
}

/// Large-scale channel settings shared by all users.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    /// Molecular absorption coefficient in 1/m.
    pub absorption: f64,
    /// Extra magnitude factor on every NLoS path.
    pub nlos_scale: f64,
    /// Aggregate antenna/processing gain applied to every path, in dB.
    pub link_gain_db: f64,
    /// Zero path phases instead of uniform random ones.
    pub deterministic_phase: bool,
    pub steering: SteeringMode,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            absorption: 0.0,
            nlos_scale: 0.1,
            link_gain_db: 0.0,
            deterministic_phase: false,
            steering: SteeringMode::Exact,
        }
    }
}

/// `h = β_L b(r, φ) + Σ_i β_i b(r_i, φ_i)`.
pub fn channel_vector<R: Rng + ?Sized>(
    geom: &ArrayGeometry,
    user: &UserSpec,
    model: &ChannelModel,
    rng: &mut R,
) -> Result<CVec> {
    user.validate()?;
    let link = 10f64.powf(model.link_gain_db / 20.0);
    let mut draw_phase = || {
        if model.deterministic_phase {
            0.0
        } else {
            rng.random::<f64>() * 2.0 * PI
        }
    };
    let beta = path_gain(user.distance, geom.carrier_freq, model.absorption, draw_phase()) * link;
    let mut h = geom.tx_steering(user.distance, user.angle, model.steering)? * beta;
    for p in &user.nlos_paths {
        let g = path_gain(p.distance, geom.carrier_freq, model.absorption, draw_phase())
            * (link * model.nlos_scale * p.gain_scale);
        h += geom.tx_steering(p.distance, p.angle, model.steering)? * g;
    }
    Ok(h)
}

/// Per-user channel vectors and their outer products `H_k = h_k h_kᴴ`.
#[derive(Clone, Debug)]
pub struct ChannelSet {
    pub vectors: Vec<CVec>,
    pub outer: Vec<CMat>,
}

impl ChannelSet {
    pub fn new(vectors: Vec<CVec>) -> Self {
        let outer = vectors.iter().map(outer).collect();
        Self { vectors, outer }
    }

    pub fn generate<R: Rng + ?Sized>(
        geom: &ArrayGeometry,
        users: &[UserSpec],
        model: &ChannelModel,
        rng: &mut R,
    ) -> Result<Self> {
        let v = users
            .iter()
            .map(|u| channel_vector(geom, u, model, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(v))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn offsets_closed_form() {
        assert_eq!(element_offsets(4).unwrap(), vec![-1.5, -0.5, 0.5, 1.5]);
        assert_eq!(element_offsets(1).unwrap(), vec![0.0]);
        let o = element_offsets(64).unwrap();
        assert_eq!((o[0], o[63]), (-31.5, 31.5));
        assert!(element_offsets(0).is_err());
    }

    #[test]
    fn element_distance_examples() {
        assert_eq!(exact_element_distance(10.0, 0.7, 0.0, 0.00535), 10.0);
        let expect = (100.0f64 + 0.0107 * 0.0107).sqrt();
        assert!((exact_element_distance(10.0, 0.0, 2.0, 0.00535) - expect).abs() < 1e-15);
        assert!((expect - 10.0000057).abs() < 1e-7);
    }

    #[test]
    fn far_field_distance_expansion() {
        let (r, d, delta) = (1e6, 0.00535, 31.5);
        for phi in [-1.2, -0.3, 0.0, 0.4, 1.1] {
            let exact = exact_element_distance(r, phi, delta, d);
            assert!((exact - (r - delta * d * f64::sin(phi))).abs() < 1e-6);
        }
    }

    #[test]
    fn quadratic_center_entry_is_one() {
        let b = steering_vector(5, 0.0107, 3.0, 0.3, SteeringMode::Quadratic).unwrap();
        assert_eq!(b[2], C64::new(1.0, 0.0));
    }

    #[test]
    fn steering_matches_far_field_at_large_range() {
        let lambda = 0.0107;
        let n = 16;
        let phi = 0.37;
        let b = steering_vector(n, lambda, 1e9, phi, SteeringMode::Exact).unwrap();
        let k = 2.0 * PI / lambda;
        for (l, delta) in element_offsets(n).unwrap().into_iter().enumerate() {
            let ff = unit_phasor(k * delta * lambda / 2.0 * phi.sin());
            assert!((b[l] - ff).norm() < 1e-6);
        }
    }

    #[test]
    fn invalid_points_are_rejected() {
        assert!(steering_vector(4, 0.01, 0.0, 0.1, SteeringMode::Exact).is_err());
        assert!(steering_vector(4, 0.01, -1.0, 0.1, SteeringMode::Exact).is_err());
        assert!(steering_vector(4, 0.01, 1.0, FRAC_PI_2, SteeringMode::Exact).is_err());
    }

    #[test]
    fn rayleigh_examples() {
        let g = ArrayGeometry::with_wavelength(64, 64, 4, 0.0107).unwrap();
        assert!((rayleigh_distance(&g) - 21.92).abs() < 0.01);
        let g2 = ArrayGeometry::with_wavelength(128, 64, 4, 0.0107).unwrap();
        assert!((rayleigh_distance(&g2) / rayleigh_distance(&g) - 4.0).abs() < 1e-12);
        let g3 = ArrayGeometry::with_wavelength(2, 2, 1, 1.0).unwrap();
        assert!((rayleigh_distance(&g3) - 2.0).abs() < 1e-12);
        let g4 = ArrayGeometry::new(64, 64, 4, 28e9).unwrap();
        assert!((rayleigh_distance(&g4) - 21.92).abs() < 0.01);
    }

    #[test]
    fn path_gain_examples() {
        let f = 28e9;
        let lambda = SPEED_OF_LIGHT / f;
        assert!((path_gain(lambda / (4.0 * PI), f, 0.0, 0.0).norm() - 1.0).abs() < 1e-12);
        let g1 = path_gain(5.0, f, 0.0, 0.3).norm();
        let g2 = path_gain(10.0, f, 0.0, 1.1).norm();
        assert!((g1 / g2 - 2.0).abs() < 1e-12);
        let g = path_gain(10.0, f, 0.0, 0.0).norm();
        assert!((g - lambda / (40.0 * PI)).abs() < 1e-15);
        assert!((g - 8.514e-5).abs() < 0.01e-5);
    }

    #[test]
    fn geometry_invariants() {
        let g = ArrayGeometry::new(16, 16, 4, 28e9).unwrap();
        assert_eq!(g.spacing, g.wavelength / 2.0);
        assert!(ArrayGeometry::new(16, 16, 17, 28e9).is_err());
        assert!(ArrayGeometry::new(16, 16, 0, 28e9).is_err());
    }

    #[test]
    fn los_channel_has_flat_magnitude() {
        let g = ArrayGeometry::new(8, 8, 2, 28e9).unwrap();
        let u = UserSpec::los(0, 4.0, -0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = channel_vector(&g, &u, &ChannelModel::default(), &mut rng).unwrap();
        let beta = path_gain(4.0, g.carrier_freq, 0.0, 0.0).norm();
        assert!(h.iter().all(|z| (z.norm() - beta).abs() < 1e-15));
        assert!((h.norm() - beta * 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn seeded_nlos_channel_is_reproducible() {
        let g = ArrayGeometry::new(8, 8, 2, 28e9).unwrap();
        let mut u = UserSpec::los(0, 4.0, 0.2);
        u.nlos_paths = vec![
            NlosPath { distance: 5.0, angle: -0.5, gain_scale: 1.0 },
            NlosPath { distance: 6.5, angle: 0.9, gain_scale: 0.5 },
        ];
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            channel_vector(&g, &u, &ChannelModel::default(), &mut rng).unwrap()
        };
        let (a, b) = (run(), run());
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }
}
