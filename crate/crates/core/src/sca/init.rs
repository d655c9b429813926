//! Feasible starting covariances for the SCA.

use super::comm_block::{add_comm_constraints, EeRow};
use super::driver::{solve_checked, SolveFailure};
use super::{constraint_slacks, ScaOptions, Slacks};
use crate::error::{Error, Result};
use crate::geometry::ChannelSet;
use crate::linalg::{cr, hermitian_part, outer, CMat};
use crate::scenario::Scenario;
use beamfocus_conic::{ConicProgram, LinExpr, MatVar};

/// How the starting point was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitStage {
    /// Scaled matched filters already satisfy every constraint.
    MatchedFilter,
    /// SDR power minimization under the SINR and power rows.
    PowerMin,
    /// SCA on the energy-efficiency slack after the power minimization.
    EnergyEfficiency,
}

#[derive(Clone, Debug)]
pub struct InitialPoint {
    /// Physical covariances, one per user.
    pub cov: Vec<CMat>,
    pub slacks: Slacks,
    pub stage: InitStage,
}

fn infeasible(constraint: impl Into<String>) -> Error {
    Error::ScenarioInfeasible { constraint: constraint.into() }
}

fn solver_error(e: SolveFailure, constraint: &str) -> Error {
    match e {
        SolveFailure::Infeasible => infeasible(constraint),
        SolveFailure::Inaccurate(m) => Error::Solver(m),
    }
}

fn values(p: &ConicProgram, wv: &[MatVar], x: &[f64], budget: f64) -> Vec<CMat> {
    wv.iter().map(|&w| hermitian_part(&p.hermitian_value(w, x)) * cr(budget)).collect()
}

/// Finds covariances satisfying the power, SINR and energy-efficiency
/// constraints of `scen`.
///
/// Tries scaled matched filters first, then the SDR power minimization and,
/// if the energy-efficiency row is still violated, a short SCA that
/// maximizes its slack. Fails with the violated constraint named.
pub fn init_feasible(scen: &Scenario, ch: &ChannelSet, opts: &ScaOptions) -> Result<InitialPoint> {
    scen.validate()?;
    let budget = scen.power.budget;
    let k_users = scen.n_users();
    if ch.len() != k_users {
        return Err(crate::error::invalid("one channel per user is required"));
    }
    for (k, h) in ch.vectors.iter().enumerate() {
        if scen.sinr_threshold > h.norm_squared() * budget / scen.user_noise {
            return Err(infeasible(format!("sinr[{k}]")));
        }
    }

    let mrt: Vec<CMat> = ch
        .vectors
        .iter()
        .map(|h| outer(&(h / cr(h.norm()))) * cr(0.5 * budget / k_users as f64))
        .collect();
    let slacks = constraint_slacks(scen, ch, &mrt)?;
    if slacks.min() > 0.0 {
        return Ok(InitialPoint { cov: mrt, slacks, stage: InitStage::MatchedFilter });
    }

    let n = scen.geometry.n_tx;
    let no_ee = Scenario { ee_threshold: 0.0, ..scen.clone() };
    let mut p = ConicProgram::new();
    let wv: Vec<MatVar> = (0..k_users).map(|k| p.hermitian(&format!("W{k}"), n)).collect();
    let mut used = LinExpr::zero();
    for &w in &wv {
        used += &p.trace(w);
    }
    p.minimize(used);
    add_comm_constraints(&mut p, &wv, &no_ee, ch, &[], opts.margin, EeRow::Constraint);
    let sol = solve_checked(&p, opts, None).map_err(|e| solver_error(e, "sinr"))?;
    let mut cov = values(&p, &wv, &sol.x, budget);
    let mut slacks = constraint_slacks(scen, ch, &cov)?;
    if slacks.power.min(slacks.sinr.iter().copied().fold(f64::INFINITY, f64::min)) < -opts.sdp_tol {
        return Err(infeasible("sinr"));
    }
    if slacks.ee >= 0.0 {
        return Ok(InitialPoint { cov, slacks, stage: InitStage::PowerMin });
    }

    // raise the energy-efficiency slack from the power-minimizing point
    let mut warm = None;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..50 {
        let prev: Vec<CMat> = cov.iter().map(|c| c / cr(budget)).collect();
        let mut p = ConicProgram::new();
        let wv: Vec<MatVar> = (0..k_users).map(|k| p.hermitian(&format!("W{k}"), n)).collect();
        let t = p.scalar("t");
        p.minimize(p.scalar_expr(t).scaled(-1.0));
        p.add_ge("t_cap", LinExpr::constant(1.0) - p.scalar_expr(t));
        add_comm_constraints(&mut p, &wv, scen, ch, &prev, opts.margin, EeRow::Slack(t));
        let sol = solve_checked(&p, opts, warm.as_ref()).map_err(|e| solver_error(e, "sinr"))?;
        warm = Some(sol.warm.clone());
        cov = values(&p, &wv, &sol.x, budget);
        slacks = constraint_slacks(scen, ch, &cov)?;
        if slacks.min() >= 0.0 {
            return Ok(InitialPoint { cov, slacks, stage: InitStage::EnergyEfficiency });
        }
        let t_val = p.scalar_value(t, &sol.x);
        if t_val < 0.0 && t_val <= best + 1e-6 {
            break;
        }
        best = best.max(t_val);
    }
    Err(infeasible("energy_efficiency"))
}
