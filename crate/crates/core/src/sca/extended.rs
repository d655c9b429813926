//! Extended-target design: minimize the BCRB trace
//! `(σ² n_rx/L) Tr((Σ_k W_k + ρI)⁻¹)` with `ρ = σ²/(σ_β² L)`.

use super::comm_block::{add_comm_constraints, EeRow};
use super::driver::{penalty_terms, run, Design};
use super::init::init_feasible;
use super::{ScaOptions, ScaResult, SpectralSurrogate};
use crate::bounds::{bcrb_extended_trace, BcrbParams};
use crate::error::{invalid, Result};
use crate::geometry::{ChannelSet, TargetSpec};
use crate::linalg::{cr, CMat};
use crate::scenario::Scenario;
use beamfocus_conic::{ConicProgram, MatVar, MatrixExpr};

#[derive(Clone, Debug)]
pub struct ExtendedModel {
    pub params: BcrbParams,
    pub budget: f64,
    /// `ρ/P`
    pub reg_hat: f64,
    /// BCRB trace of the isotropic covariance `(P/n)I`.
    pub bcrb_ref: f64,
}

impl ExtendedModel {
    pub fn new(scen: &Scenario) -> Result<Self> {
        let prior_variance = match scen.target {
            TargetSpec::Extended { prior_variance } => prior_variance,
            TargetSpec::Point { .. } => return Err(invalid("extended target required")),
        };
        let params = BcrbParams {
            noise: scen.radar_noise,
            prior_variance,
            frame_len: scen.frame_len,
            n_rx: scen.geometry.n_rx,
        };
        params.validate()?;
        let n = scen.geometry.n_tx;
        let budget = scen.power.budget;
        let iso = CMat::identity(n, n) * cr(budget / n as f64);
        let bcrb_ref = bcrb_extended_trace(&iso, &params)?;
        Ok(Self { reg_hat: params.regularizer() / budget, budget, bcrb_ref, params })
    }

    pub fn bcrb(&self, cov: &[CMat]) -> f64 {
        let mut r = cov[0].clone();
        for c in &cov[1..] {
            r += c;
        }
        bcrb_extended_trace(&r, &self.params).unwrap_or(f64::INFINITY)
    }
}

pub struct ExtendedHandles {
    pub w: Vec<MatVar>,
    pub u: MatVar,
}

/// One SCA subproblem: `min Tr(U)·scale/(P·bcrb_ref)` over
/// `[[U, I], [I, Σ_kŴ_k + (ρ/P)I]] ⪰ 0` and the shared constraint block.
pub fn build_extended_subproblem(
    model: &ExtendedModel,
    scen: &Scenario,
    ch: &ChannelSet,
    prev: &[CMat],
    penalty: Option<(&[SpectralSurrogate], f64)>,
    margin: f64,
) -> (ConicProgram, ExtendedHandles) {
    let n = scen.geometry.n_tx;
    let mut p = ConicProgram::new();
    let wv: Vec<MatVar> = (0..scen.n_users()).map(|k| p.hermitian(&format!("W{k}"), n)).collect();
    let mut sum = MatrixExpr::zeros(n, true);
    sum.axpy(model.reg_hat, &MatrixExpr::identity(n, true));
    for &w in &wv {
        sum.axpy(1.0, &p.var_expr(w));
    }
    let (u, tr_u) = p.epigraph_trace_inverse("U", &sum);
    let mut obj = tr_u.scaled(model.params.scale() / (model.budget * model.bcrb_ref));
    if let Some((surr, gamma)) = penalty {
        obj += &penalty_terms(&p, &wv, surr, gamma);
    }
    p.minimize(obj);
    add_comm_constraints(&mut p, &wv, scen, ch, prev, margin, EeRow::Constraint);
    (p, ExtendedHandles { w: wv, u })
}

struct ExtendedDesign<'a> {
    model: ExtendedModel,
    scen: &'a Scenario,
    ch: &'a ChannelSet,
    margin: f64,
}

impl Design for ExtendedDesign<'_> {
    fn build(&self, prev: &[CMat], penalty: Option<(&[SpectralSurrogate], f64)>) -> (ConicProgram, Vec<MatVar>) {
        let (p, h) = build_extended_subproblem(&self.model, self.scen, self.ch, prev, penalty, self.margin);
        (p, h.w)
    }

    fn objective(&self, cov_hat: &[CMat]) -> f64 {
        let cov: Vec<CMat> = cov_hat.iter().map(|c| c * cr(self.model.budget)).collect();
        self.model.bcrb(&cov) / self.model.bcrb_ref
    }

    fn bound(&self, cov: &[CMat]) -> f64 {
        self.model.bcrb(cov)
    }
}

pub fn solve_extended_sca(scen: &Scenario, ch: &ChannelSet, opts: &ScaOptions) -> Result<ScaResult> {
    scen.validate()?;
    let model = ExtendedModel::new(scen)?;
    let init = init_feasible(scen, ch, opts)?;
    let d = ExtendedDesign { model, scen, ch, margin: opts.margin };
    run(&d, scen, ch, opts, init.cov, None)
}
