//! Penalty-based successive convex approximation for the point-target CRB
//! and extended-target BCRB designs.
//!
//! Covariances are optimized in units of the power budget (`Ŵ_k = W_k/P`)
//! so every subproblem is well scaled regardless of the absolute powers.

mod comm_block;
mod driver;
mod extended;
mod init;
mod point;

pub use extended::{build_extended_subproblem, solve_extended_sca, ExtendedModel};
pub use init::{init_feasible, InitStage, InitialPoint};
pub use point::{build_point_subproblem, solve_point_sca, PointModel};

use crate::comm::{all_sinrs, energy_efficiency, sum_rate, total_power_of};
use crate::error::{Error, Result};
use crate::geometry::ChannelSet;
use crate::linalg::{cr, hermitian_eig, outer, top_eigenpair, trace_product, CMat, CVec};
use crate::scenario::Scenario;
use beamfocus_conic::{Method, SolverOptions};
use nalgebra::Matrix2;

#[derive(Clone, Debug)]
pub struct ScaOptions {
    /// Penalty factor γ on the rank residual, in budget-normalized units.
    pub gamma: f64,
    /// Relative objective change that ends the iteration.
    pub tol: f64,
    pub max_iter: usize,
    /// Iteration cap of the relaxation phase that precedes the penalty.
    pub relax_max_iter: usize,
    pub rank_tol: f64,
    /// Accuracy of each conic subproblem.
    pub sdp_tol: f64,
    /// Halve γ (down to 1e-5) every five iterations while the rank residual
    /// stays above `rank_tol`.
    pub gamma_schedule: bool,
    /// Relative tightening of every constraint inside the subproblems.
    pub margin: f64,
    pub solver_max_iter: usize,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            gamma: 1e-3,
            tol: 1e-4,
            max_iter: 100,
            relax_max_iter: 30,
            rank_tol: 1e-6,
            sdp_tol: 1e-6,
            gamma_schedule: false,
            margin: 1e-5,
            solver_max_iter: 50_000,
        }
    }
}

impl ScaOptions {
    pub(crate) fn solver(&self) -> SolverOptions {
        SolverOptions::default()
            .with_method(Method::InteriorPoint)
            .with_tol(self.sdp_tol * 0.1)
            .with_max_iter(self.solver_max_iter)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Relaxation,
    Penalty,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScaStatus {
    Converged,
    MaxIterations,
    /// A subproblem failed or a step was rejected; the best earlier iterate
    /// is returned.
    Degraded(String),
}

/// Normalized constraint slacks; all nonnegative at a feasible point.
#[derive(Clone, Debug, PartialEq)]
pub struct Slacks {
    /// `(P − ΣTr W_k)/P`
    pub power: f64,
    /// `(Γ_k − Γ_th)/(1 + Γ_th)`
    pub sinr: Vec<f64>,
    /// `(η − η_th)/(1 + η_th)`
    pub ee: f64,
}

impl Slacks {
    pub fn min(&self) -> f64 {
        self.sinr.iter().copied().fold(self.power.min(self.ee), f64::min)
    }
}

pub fn constraint_slacks(scen: &Scenario, channels: &ChannelSet, cov: &[CMat]) -> Result<Slacks> {
    let p = scen.power.budget;
    let used: f64 = cov.iter().map(|c| c.trace().re).sum();
    let sinrs = all_sinrs(channels, cov, scen.user_noise)?;
    let g = scen.sinr_threshold;
    let ee = energy_efficiency(sum_rate(&sinrs), total_power_of(cov, &scen.power))?;
    Ok(Slacks {
        power: (p - used) / p,
        sinr: sinrs.iter().map(|s| (s - g) / (1.0 + g)).collect(),
        ee: (ee - scen.ee_threshold) / (1.0 + scen.ee_threshold),
    })
}

/// `Σ_k(‖W_k‖_* − ‖W_k‖₂)` and the same divided by `Σ_k Tr W_k`.
pub fn rank_residual(cov: &[CMat]) -> (f64, f64) {
    let mut res = 0.0;
    let mut total = 0.0;
    for c in cov {
        let (vals, _) = hermitian_eig(c);
        let nuclear: f64 = vals.iter().map(|v| v.abs()).sum();
        res += nuclear - vals[0].max(0.0);
        total += c.trace().re;
    }
    (res, if total > 0.0 { res / total } else { 0.0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaIterate {
    pub phase: Phase,
    /// Objective of the phase at the accepted iterate.
    pub objective: f64,
    /// Achieved bound (Tr CRB or Tr BCRB).
    pub bound: f64,
    pub rank_residual: f64,
    pub slacks: Slacks,
    pub gamma: f64,
    pub solver_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaTrace {
    pub iterations: Vec<ScaIterate>,
    pub status: ScaStatus,
    /// Auxiliary Schur-complement matrix at the initial point (point target).
    pub xi_init: Option<Matrix2<f64>>,
    pub rank_tol: f64,
}

impl ScaTrace {
    pub fn penalty_objectives(&self) -> Vec<f64> {
        self.phase_objectives(Phase::Penalty)
    }

    pub fn phase_objectives(&self, phase: Phase) -> Vec<f64> {
        self.iterations.iter().filter(|i| i.phase == phase).map(|i| i.objective).collect()
    }

    pub fn last(&self) -> Option<&ScaIterate> {
        self.iterations.last()
    }
}

#[derive(Clone, Debug)]
pub struct ScaResult {
    /// Equivalent fully-digital beamformer, one column per user.
    pub w: CMat,
    pub cov: Vec<CMat>,
    pub trace: ScaTrace,
    /// `Tr CRB` (point) or `Tr BCRB` (extended) at `cov`.
    pub bound: f64,
}

/// First-order expansion of `‖W‖₂` at `W_prev`:
/// `W̃(W) = ‖W_prev‖₂ + uᴴ(W − W_prev)u` with `u` the top eigenvector.
#[derive(Clone, Debug)]
pub struct SpectralSurrogate {
    pub norm: f64,
    pub u: CVec,
    pub w_prev: CMat,
}

impl SpectralSurrogate {
    pub fn eval(&self, w: &CMat) -> f64 {
        self.norm + self.u.dotc(&((w - &self.w_prev) * &self.u)).re
    }

    pub fn projector(&self) -> CMat {
        outer(&self.u)
    }
}

pub fn spectral_surrogate(w_prev: &CMat) -> SpectralSurrogate {
    let (norm, u) = top_eigenpair(w_prev);
    SpectralSurrogate { norm, u, w_prev: w_prev.clone() }
}

/// Lower bound on user `k`'s rate that is tight at the previous iterates:
/// `log₂(Σ_i Tr(H_kW_i) + σ²) − w − (log₂e/2^w) Σ_{i≠k} Tr(H_k(W_i − W_i'))`
/// with `w = log₂(Σ_{i≠k} Tr(H_kW_i') + σ²)`.
#[derive(Clone, Debug)]
pub struct RateSurrogate {
    pub k: usize,
    pub sigma2: f64,
    pub h: CMat,
    /// `w` above.
    pub log_interference: f64,
    /// `Σ_{i≠k} Tr(H_kW_i')`
    pub interference_prev: f64,
}

impl RateSurrogate {
    pub fn slope(&self) -> f64 {
        std::f64::consts::LOG2_E / 2f64.powf(self.log_interference)
    }

    pub fn eval(&self, cov: &[CMat]) -> f64 {
        let mut total = self.sigma2;
        let mut interference = 0.0;
        for (i, c) in cov.iter().enumerate() {
            let g = trace_product(&self.h, c).re;
            total += g;
            if i != self.k {
                interference += g;
            }
        }
        total.log2() - (self.log_interference + self.slope() * (interference - self.interference_prev))
    }
}

pub fn rate_surrogate(prev: &[CMat], k: usize, channels: &ChannelSet, sigma2: f64) -> RateSurrogate {
    let h = channels.outer[k].clone();
    let interference_prev: f64 =
        prev.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, c)| trace_product(&h, c).re).sum();
    RateSurrogate {
        k,
        sigma2,
        log_interference: (interference_prev + sigma2).log2(),
        interference_prev,
        h,
    }
}

/// `√λ₁ u₁` of a near-rank-one PSD matrix, phase-normalized so the first
/// non-negligible entry is real and nonnegative.
pub fn extract_beamformer(w: &CMat, rank_tol: f64) -> Result<CVec> {
    let (vals, _) = hermitian_eig(w);
    let nuclear: f64 = vals.iter().map(|v| v.abs()).sum();
    if !(vals[0] > 0.0) || nuclear == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let residual = (nuclear - vals[0]) / nuclear;
    if residual > rank_tol {
        return Err(Error::RankViolation { residual });
    }
    let (l, u) = top_eigenpair(w);
    Ok(u * cr(l.sqrt()))
}

/// Columns `√λ₁ u₁` of each covariance without a rank check.
pub(crate) fn dominant_columns(cov: &[CMat]) -> CMat {
    let n = cov[0].nrows();
    let mut w = CMat::zeros(n, cov.len());
    for (k, c) in cov.iter().enumerate() {
        let (l, u) = top_eigenpair(c);
        w.set_column(k, &(u * cr(l.max(0.0).sqrt())));
    }
    w
}
