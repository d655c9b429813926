//! The outer SCA loop shared by the point and extended designs.

use super::{
    constraint_slacks, dominant_columns, rank_residual, spectral_surrogate, Phase, ScaIterate, ScaOptions,
    ScaResult, ScaStatus, ScaTrace, Slacks, SpectralSurrogate,
};
use crate::error::Result;
use crate::geometry::ChannelSet;
use crate::linalg::{cr, hermitian_eig, hermitian_part, outer, CMat};
use crate::scenario::Scenario;
use beamfocus_conic::{solve_warm, ConicProgram, ConicSolution, MatVar, SolveStatus, WarmStart};
use nalgebra::Matrix2;

pub(crate) trait Design {
    /// Subproblem around `prev` (budget-normalized); `penalty` carries the
    /// spectral expansions and γ.
    fn build(&self, prev: &[CMat], penalty: Option<(&[SpectralSurrogate], f64)>) -> (ConicProgram, Vec<MatVar>);
    /// Normalized sensing objective at budget-normalized covariances;
    /// infinite when the bound does not exist.
    fn objective(&self, cov_hat: &[CMat]) -> f64;
    /// Bound in physical units at physical covariances.
    fn bound(&self, cov: &[CMat]) -> f64;
}

fn penalized(obj: f64, cov_hat: &[CMat], gamma: f64) -> f64 {
    obj + rank_residual(cov_hat).0 / gamma
}

/// Adds `(1/γ)Σ_k Tr((I − u_k u_kᴴ) Ŵ_k)` to the program objective.
pub(crate) fn penalty_terms(p: &ConicProgram, wv: &[MatVar], surr: &[SpectralSurrogate], gamma: f64) -> beamfocus_conic::LinExpr {
    let mut e = beamfocus_conic::LinExpr::zero();
    for (&w, s) in wv.iter().zip(surr) {
        e.axpy(1.0 / gamma, &p.trace(w));
        e.axpy(-1.0 / gamma, &p.inner(w, &s.projector()));
    }
    e
}

struct Step {
    cov_hat: Vec<CMat>,
    iterations: usize,
}

/// Solves `prog`, accepting a stalled run only when its residuals and gap
/// are within 10·sdp_tol.
pub(crate) fn solve_checked(
    prog: &ConicProgram,
    opts: &ScaOptions,
    warm: Option<&WarmStart>,
) -> std::result::Result<ConicSolution, SolveFailure> {
    let sol = solve_warm(prog, &opts.solver(), warm);
    match sol.status {
        SolveStatus::Optimal => Ok(sol),
        SolveStatus::Infeasible => Err(SolveFailure::Infeasible),
        SolveStatus::MaxIterations => {
            if sol.primal_residual.max(sol.dual_residual).max(sol.gap) > 10.0 * opts.sdp_tol {
                Err(SolveFailure::Inaccurate(format!(
                    "subproblem solve stalled (residuals {:.1e}, {:.1e}, gap {:.1e})",
                    sol.primal_residual, sol.dual_residual, sol.gap
                )))
            } else {
                Ok(sol)
            }
        }
    }
}

#[derive(Debug)]
pub(crate) enum SolveFailure {
    Infeasible,
    Inaccurate(String),
}

impl std::fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveFailure::Infeasible => write!(f, "subproblem infeasible"),
            SolveFailure::Inaccurate(m) => write!(f, "{m}"),
        }
    }
}

fn solve_step(
    d: &dyn Design,
    prev: &[CMat],
    penalty: Option<(&[SpectralSurrogate], f64)>,
    opts: &ScaOptions,
    warm: &mut Option<WarmStart>,
) -> std::result::Result<Step, String> {
    let (prog, wv) = d.build(prev, penalty);
    let sol = solve_checked(&prog, opts, warm.as_ref()).map_err(|e| e.to_string())?;
    let cov_hat = wv.iter().map(|&w| hermitian_part(&prog.hermitian_value(w, &sol.x))).collect();
    *warm = Some(sol.warm.clone());
    Ok(Step { cov_hat, iterations: sol.iterations })
}

fn scaled(cov_hat: &[CMat], p: f64) -> Vec<CMat> {
    cov_hat.iter().map(|c| c * cr(p)).collect()
}

/// Rank-one pieces `λ_k q_k q_kᴴ` of `Σ_k Ŵ_k` when its rank is at most
/// the number of users; the sum, and so the sensing objective, is kept.
fn eigen_split(cov_hat: &[CMat]) -> Option<Vec<CMat>> {
    let mut r = cov_hat[0].clone();
    for c in &cov_hat[1..] {
        r += c;
    }
    let (vals, vecs) = hermitian_eig(&r);
    if !(vals[0] > 0.0) {
        return None;
    }
    let rank = vals.iter().filter(|&&v| v > 1e-9 * vals[0]).count();
    if rank > cov_hat.len() {
        return None;
    }
    Some(
        (0..cov_hat.len())
            .map(|k| {
                if k < rank {
                    outer(&vecs.column(k).into_owned()) * cr(vals[k])
                } else {
                    CMat::zeros(r.nrows(), r.ncols())
                }
            })
            .collect(),
    )
}

pub(crate) fn run(
    d: &dyn Design,
    scen: &Scenario,
    ch: &ChannelSet,
    opts: &ScaOptions,
    init: Vec<CMat>,
    xi_init: Option<Matrix2<f64>>,
) -> Result<ScaResult> {
    let budget = scen.power.budget;
    let slack_tol = 10.0 * opts.sdp_tol;
    let mut prev: Vec<CMat> = init.iter().map(|c| c / cr(budget)).collect();
    let mut warm = None;
    let mut iterations = Vec::new();
    let mut status = ScaStatus::MaxIterations;

    let record = |phase, obj, cov_hat: &[CMat], slacks: Slacks, gamma, it| ScaIterate {
        phase,
        objective: obj,
        bound: d.bound(&scaled(cov_hat, budget)),
        rank_residual: rank_residual(cov_hat).1,
        slacks,
        gamma,
        solver_iterations: it,
    };

    // relaxation phase: no rank penalty, only the rate expansion moves
    let mut prev_obj = d.objective(&prev);
    for _ in 0..opts.relax_max_iter {
        let step = match solve_step(d, &prev, None, opts, &mut warm) {
            Ok(s) => s,
            Err(msg) => {
                status = ScaStatus::Degraded(msg);
                break;
            }
        };
        let obj = d.objective(&step.cov_hat);
        let slacks = constraint_slacks(scen, ch, &scaled(&step.cov_hat, budget))?;
        if obj > prev_obj + slack_tol * prev_obj.abs().max(1.0) || slacks.min() < -opts.sdp_tol {
            break;
        }
        iterations.push(record(Phase::Relaxation, obj, &step.cov_hat, slacks, f64::INFINITY, step.iterations));
        let change = (prev_obj - obj).abs() / obj.abs().max(1e-300);
        prev = step.cov_hat;
        prev_obj = obj;
        if change < opts.tol {
            break;
        }
    }

    let mut gamma = opts.gamma;
    if let Some(split) = eigen_split(&prev) {
        let ok = constraint_slacks(scen, ch, &scaled(&split, budget))?.min() >= 0.0;
        if ok && penalized(d.objective(&split), &split, gamma) < penalized(d.objective(&prev), &prev, gamma) {
            prev = split;
        }
    }
    let mut f_prev = penalized(d.objective(&prev), &prev, gamma);
    let mut stalled_since = 0usize;
    let mut best_rank = rank_residual(&prev).1;
    if !matches!(status, ScaStatus::Degraded(_)) {
        status = ScaStatus::MaxIterations;
        for it in 0..opts.max_iter {
            let surr: Vec<SpectralSurrogate> = prev.iter().map(spectral_surrogate).collect();
            let step = match solve_step(d, &prev, Some((&surr, gamma)), opts, &mut warm) {
                Ok(s) => s,
                Err(msg) => {
                    status = ScaStatus::Degraded(msg);
                    break;
                }
            };
            let obj = d.objective(&step.cov_hat);
            let f = penalized(obj, &step.cov_hat, gamma);
            let slacks = constraint_slacks(scen, ch, &scaled(&step.cov_hat, budget))?;
            if f > f_prev + slack_tol * f_prev.abs().max(1.0) {
                status = ScaStatus::Degraded(format!("step rejected: objective rose from {f_prev:.6e} to {f:.6e}"));
                break;
            }
            if slacks.min() < -opts.sdp_tol {
                status = ScaStatus::Degraded(format!("step rejected: constraint slack {:.3e}", slacks.min()));
                break;
            }
            iterations.push(record(Phase::Penalty, f, &step.cov_hat, slacks, gamma, step.iterations));
            let change = (f_prev - f).abs() / f.abs().max(1e-300);
            prev = step.cov_hat;
            f_prev = f;
            let rank = rank_residual(&prev).1;
            if change < opts.tol {
                if rank <= opts.rank_tol {
                    status = ScaStatus::Converged;
                    break;
                }
                if !opts.gamma_schedule || gamma <= 1e-5 {
                    status = ScaStatus::Degraded(format!("rank residual {rank:.3e} above tolerance"));
                    break;
                }
            }
            if opts.gamma_schedule && rank > opts.rank_tol {
                if rank < 0.5 * best_rank {
                    best_rank = rank;
                    stalled_since = it;
                } else if it >= stalled_since + 5 && gamma > 1e-5 {
                    gamma = (gamma * 0.5).max(1e-5);
                    f_prev = penalized(d.objective(&prev), &prev, gamma);
                    stalled_since = it;
                }
            }
        }
    }

    let cov = scaled(&prev, budget);
    let bound = d.bound(&cov);
    Ok(ScaResult {
        w: dominant_columns(&cov),
        cov,
        trace: ScaTrace { iterations, status, xi_init, rank_tol: opts.rank_tol },
        bound,
    })
}
