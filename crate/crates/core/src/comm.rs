//! Communication metrics: SINR, sum rate, power consumption and energy
//! efficiency. Powers are linear milliwatts throughout.

use crate::error::{invalid, Result};
use crate::geometry::ChannelSet;
use crate::linalg::{outer, trace_product, CMat, CVec};

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Transmit beamformers. `w` holds one column per user; `cov` holds the
/// per-user covariances, which equal `w_k w_kᴴ` unless the set came from a
/// relaxation that is not rank one.
#[derive(Clone, Debug)]
pub struct BeamformerSet {
    pub w: CMat,
    pub cov: Vec<CMat>,
    pub analog: Option<CMat>,
    pub digital: Option<CMat>,
    /// `‖W − T_A T_D‖_F` of the factorization that produced `w`.
    pub residual: f64,
}

impl BeamformerSet {
    pub fn from_digital(w: CMat) -> Self {
        let cov = w.column_iter().map(|c| outer(&c.into_owned())).collect();
        Self { w, cov, analog: None, digital: None, residual: 0.0 }
    }

    pub fn from_hybrid(analog: CMat, digital: CMat, residual: f64) -> Result<Self> {
        if analog.ncols() != digital.nrows() {
            return Err(invalid("analog and digital shapes do not chain"));
        }
        let mut s = Self::from_digital(&analog * &digital);
        s.analog = Some(analog);
        s.digital = Some(digital);
        s.residual = residual;
        Ok(s)
    }

    /// Covariances with `w` set to the best rank-one approximations.
    pub fn from_covariances(cov: Vec<CMat>) -> Result<Self> {
        let n = cov.first().ok_or_else(|| invalid("no covariances"))?.nrows();
        let mut w = CMat::zeros(n, cov.len());
        for (k, c) in cov.iter().enumerate() {
            if c.nrows() != n || c.ncols() != n {
                return Err(invalid("covariances must share one square shape"));
            }
            let (l, u) = crate::linalg::top_eigenpair(c);
            w.set_column(k, &(u * crate::linalg::cr(l.max(0.0).sqrt())));
        }
        Ok(Self { w, cov, analog: None, digital: None, residual: 0.0 })
    }

    pub fn n_users(&self) -> usize {
        self.cov.len()
    }

    pub fn column(&self, k: usize) -> CVec {
        self.w.column(k).into_owned()
    }
}

/// `R_X = Σ_k W_k`, which is `W Wᴴ` for rank-one covariances.
pub fn tx_covariance(bf: &BeamformerSet) -> Result<CMat> {
    let first = bf.cov.first().ok_or_else(|| invalid("empty beamformer set"))?;
    let mut r = CMat::zeros(first.nrows(), first.ncols());
    for c in &bf.cov {
        r += c;
    }
    Ok(r)
}

fn check_user(channels: &ChannelSet, n_tx: usize, n_users: usize, k: usize, sigma2: f64) -> Result<()> {
    if k >= channels.len() || k >= n_users {
        return Err(invalid(format!("user index {k} out of range")));
    }
    if channels.vectors[k].len() != n_tx {
        return Err(invalid("channel and beamformer dimensions differ"));
    }
    if !(sigma2 > 0.0) {
        return Err(invalid("noise power must be positive"));
    }
    Ok(())
}

/// `|h_kᴴw_k|² / (Σ_{i≠k}|h_kᴴw_i|² + σ²)`.
pub fn sinr(channels: &ChannelSet, w: &CMat, k: usize, sigma2: f64) -> Result<f64> {
    check_user(channels, w.nrows(), w.ncols(), k, sigma2)?;
    let h = &channels.vectors[k];
    let mut interference = sigma2;
    let mut signal = 0.0;
    for (i, col) in w.column_iter().enumerate() {
        let g = h.dotc(&col).norm_sqr();
        if i == k {
            signal = g;
        } else {
            interference += g;
        }
    }
    Ok(signal / interference)
}

/// `Tr(H_kW_k) / (Σ_{i≠k}Tr(H_kW_i) + σ²)`.
pub fn sinr_covariance(channels: &ChannelSet, cov: &[CMat], k: usize, sigma2: f64) -> Result<f64> {
    let n = cov.first().map(|c| c.nrows()).unwrap_or(0);
    check_user(channels, n, cov.len(), k, sigma2)?;
    let hk = &channels.outer[k];
    let mut interference = sigma2;
    let mut signal = 0.0;
    for (i, c) in cov.iter().enumerate() {
        let g = trace_product(hk, c).re;
        if i == k {
            signal = g;
        } else {
            interference += g;
        }
    }
    Ok(signal / interference)
}

pub fn all_sinrs(channels: &ChannelSet, cov: &[CMat], sigma2: f64) -> Result<Vec<f64>> {
    (0..cov.len()).map(|k| sinr_covariance(channels, cov, k, sigma2)).collect()
}

pub fn sum_rate(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|g| (1.0 + g).log2()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerModel {
    /// Amplifier efficiency ρ.
    pub amplifier_eff: f64,
    /// Static circuit power P0 in mW.
    pub static_power: f64,
    /// Transmit budget P in mW.
    pub budget: f64,
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplifier_eff > 0.0 && self.amplifier_eff <= 1.0) {
            return Err(invalid("amplifier efficiency must lie in (0, 1]"));
        }
        if !(self.static_power >= 0.0) {
            return Err(invalid("static power must be nonnegative"));
        }
        if !(self.budget > 0.0) {
            return Err(invalid("power budget must be positive"));
        }
        Ok(())
    }
}

/// `(1/ρ)Σ_k Tr(W_k) + P0` in mW.
pub fn total_power(bf: &BeamformerSet, pm: &PowerModel) -> f64 {
    total_power_of(&bf.cov, pm)
}

pub fn total_power_of(cov: &[CMat], pm: &PowerModel) -> f64 {
    cov.iter().map(|c| c.trace().re).sum::<f64>() / pm.amplifier_eff + pm.static_power
}

/// Rate in bits/s/Hz over power given in mW, reported per joule (power in W).
pub fn energy_efficiency(rate: f64, total_power_mw: f64) -> Result<f64> {
    if !(total_power_mw > 0.0) {
        return Err(invalid("total power must be positive"));
    }
    Ok(rate / (total_power_mw * 1e-3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, complex_normal_matrix, cr};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn channels(n: usize, k: usize, seed: u64) -> ChannelSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = complex_normal_matrix(&mut rng, n, k, 1.0);
        ChannelSet::new(h.column_iter().map(|c| c.into_owned()).collect())
    }

    #[test]
    fn covariance_examples() {
        let w = CMat::from_column_slice(3, 1, &[c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)]);
        let r = tx_covariance(&BeamformerSet::from_digital(w.clone())).unwrap();
        assert!((&r - &w * w.adjoint()).norm() < 1e-15);

        let (p, n) = (8.0, 4);
        let w = CMat::identity(n, 2) * cr((p / n as f64).sqrt());
        let r = tx_covariance(&BeamformerSet::from_digital(w)).unwrap();
        for i in 0..n {
            let expect = if i < 2 { p / n as f64 } else { 0.0 };
            assert!((r[(i, i)].re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn sinr_single_user_and_zero_beam() {
        let ch = channels(4, 1, 2);
        let w = CMat::from_element(4, 1, c(0.3, -0.2));
        let expect = ch.vectors[0].dotc(&w.column(0)).norm_sqr() / 0.5;
        assert!((sinr(&ch, &w, 0, 0.5).unwrap() - expect).abs() < 1e-12);
        let ch2 = channels(4, 2, 3);
        let mut w2 = complex_normal_matrix(&mut ChaCha8Rng::seed_from_u64(4), 4, 2, 1.0);
        w2.column_mut(1).fill(cr(0.0));
        assert_eq!(sinr(&ch2, &w2, 1, 1.0).unwrap(), 0.0);
        assert!(sinr(&ch2, &w2, 2, 1.0).is_err());
    }

    #[test]
    fn sum_rate_examples() {
        assert_eq!(sum_rate(&[1.0, 1.0]), 2.0);
        assert_eq!(sum_rate(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(sum_rate(&[3.0]), 2.0);
    }

    #[test]
    fn power_examples() {
        let pm = PowerModel { amplifier_eff: 0.5, static_power: dbm_to_mw(15.0), budget: 1.0 };
        let zero = BeamformerSet::from_digital(CMat::zeros(4, 4));
        assert_eq!(total_power(&zero, &pm), pm.static_power);
        let w = CMat::identity(4, 4);
        let bf = BeamformerSet::from_digital(w);
        assert!((total_power(&bf, &pm) - 39.6228).abs() < 1e-3);
        let unit = PowerModel { amplifier_eff: 1.0, ..pm.clone() };
        let radiated = |m: &PowerModel| total_power(&bf, m) - m.static_power;
        assert!((radiated(&pm) - 2.0 * radiated(&unit)).abs() < 1e-12);
    }

    #[test]
    fn energy_efficiency_examples() {
        assert_eq!(energy_efficiency(4.0, 1000.0).unwrap(), 4.0);
        assert_eq!(energy_efficiency(0.0, 300.0).unwrap(), 0.0);
        let a = energy_efficiency(3.0, 500.0).unwrap();
        assert!((a / energy_efficiency(3.0, 1000.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(energy_efficiency(1.0, 0.0).is_err());
    }

    #[test]
    fn from_covariances_recovers_rank_one() {
        let w = complex_normal_matrix(&mut ChaCha8Rng::seed_from_u64(8), 5, 2, 1.0);
        let bf = BeamformerSet::from_digital(w);
        let re = BeamformerSet::from_covariances(bf.cov.clone()).unwrap();
        for k in 0..2 {
            assert!((outer(&re.column(k)) - &bf.cov[k]).norm() < 1e-10);
        }
    }
}
