//! A complete design problem: array, users, target and budgets.

use crate::comm::PowerModel;
use crate::error::{invalid, Result};
use crate::geometry::{ArrayGeometry, SteeringMode, TargetSpec, UserSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub users: Vec<UserSpec>,
    pub target: TargetSpec,
    pub power: PowerModel,
    /// Per-user SINR threshold Γ_th (linear).
    pub sinr_threshold: f64,
    /// Energy-efficiency threshold η_th in bits/s/Hz/J.
    pub ee_threshold: f64,
    /// User noise σ_k² in mW.
    pub user_noise: f64,
    /// Radar receiver noise σ_n² in mW.
    pub radar_noise: f64,
    pub frame_len: usize,
    pub steering: SteeringMode,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return Err(invalid("at least one user is required"));
        }
        for u in &self.users {
            u.validate()?;
        }
        self.target.validate()?;
        self.power.validate()?;
        if !(self.sinr_threshold >= 0.0) || !(self.ee_threshold >= 0.0) {
            return Err(invalid("thresholds must be nonnegative"));
        }
        if !(self.user_noise > 0.0) || !(self.radar_noise > 0.0) {
            return Err(invalid("noise powers must be positive"));
        }
        if self.frame_len < self.users.len() {
            return Err(invalid("frame length must be at least the number of users"));
        }
        Ok(())
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// Radar SNR `|μ|² L P / σ_n²` of a point target; `None` for an extended one.
    pub fn radar_snr(&self) -> Option<f64> {
        match &self.target {
            TargetSpec::Point { mu, .. } => {
                Some(mu.norm_sqr() * self.frame_len as f64 * self.power.budget / self.radar_noise)
            }
            TargetSpec::Extended { .. } => None,
        }
    }

    /// Same scenario with the SINR and EE constraints switched off.
    pub fn unconstrained(&self) -> Self {
        Self { sinr_threshold: 0.0, ee_threshold: 0.0, ..self.clone() }
    }
}
