//! Sweep orchestration: design per point, factorize per architecture,
//! evaluate the bound at the realized covariance, optionally run trials.

use crate::config::{Arch, ConfigError, ExperimentConfig, SweepVar};
use crate::table::{status, ResultTable, Row};
use crate::trials;
use beamfocus::bounds::{bcrb_extended_trace, crb_point, fim_point, point_trm, BcrbParams};
use beamfocus::comm::{all_sinrs, energy_efficiency, sum_rate, total_power_of};
use beamfocus::geometry::{ChannelSet, TargetSpec};
use beamfocus::hybrid::{factorize, Architecture, FactorOptions};
use beamfocus::linalg::{outer, CMat};
use beamfocus::sca::{constraint_slacks, rank_residual, solve_extended_sca, solve_point_sca, ScaOptions, ScaResult, ScaStatus};
use beamfocus::scenario::Scenario;
use rayon::prelude::*;

/// Optimized design of one scenario.
#[derive(Clone, Debug)]
pub struct Design {
    pub scenario: Scenario,
    pub channels: ChannelSet,
    pub result: ScaResult,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Infeasible(String),
    Core(beamfocus::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Infeasible(m) => write!(f, "scenario infeasible: {m}"),
            RunError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<beamfocus::Error> for RunError {
    fn from(e: beamfocus::Error) -> Self {
        match e {
            beamfocus::Error::ScenarioInfeasible { constraint } => RunError::Infeasible(constraint),
            e => RunError::Core(e),
        }
    }
}

pub fn design(cfg: &ExperimentConfig, opts: &ScaOptions) -> Result<Design, RunError> {
    design_scenario(cfg, cfg.scenario()?, opts)
}

/// Design for `scenario` with the channels drawn from `cfg`.
pub fn design_scenario(cfg: &ExperimentConfig, scenario: Scenario, opts: &ScaOptions) -> Result<Design, RunError> {
    let channels = cfg.channels(&scenario)?;
    let result = match scenario.target {
        TargetSpec::Point { .. } => solve_point_sca(&scenario, &channels, opts)?,
        TargetSpec::Extended { .. } => solve_extended_sca(&scenario, &channels, opts)?,
    };
    Ok(Design { scenario, channels, result })
}

/// The transmitted precoder under `arch`: the design itself, or its
/// analog/digital factorization at the full budget.
pub fn realize(design: &Design, arch: Arch) -> Result<(CMat, f64), RunError> {
    let w = &design.result.w;
    let hybrid = match arch {
        Arch::Digital => return Ok((w.clone(), 0.0)),
        Arch::Fully => Architecture::Fully,
        Arch::Partially => Architecture::Partially,
    };
    let f = factorize(w, design.scenario.geometry.n_rf, hybrid, design.scenario.power.budget, &FactorOptions::default())?;
    Ok((f.product(), f.residual))
}

/// Deterministic bound metrics of precoder `w` in `scen`.
pub fn bound_metrics(scen: &Scenario, w: &CMat) -> Result<Vec<(&'static str, f64)>, RunError> {
    let r_x = w * w.adjoint();
    match &scen.target {
        TargetSpec::Point { mu, .. } => {
            let trm = point_trm(&scen.geometry, &scen.target, scen.steering)?;
            let crb = crb_point(&fim_point(&trm, &r_x, *mu, scen.radar_noise, scen.frame_len)?)?;
            Ok(vec![
                ("crb_trace", crb.trace),
                ("crb_range", crb.matrix[(0, 0)]),
                ("crb_angle", crb.matrix[(1, 1)]),
                ("rmse_bound_range", crb.range_std()),
                ("rmse_bound_angle", crb.angle_std()),
            ])
        }
        TargetSpec::Extended { prior_variance } => {
            let params = BcrbParams {
                noise: scen.radar_noise,
                prior_variance: *prior_variance,
                frame_len: scen.frame_len,
                n_rx: scen.geometry.n_rx,
            };
            Ok(vec![("bcrb_trace", bcrb_extended_trace(&r_x, &params)?)])
        }
    }
}

/// Communication metrics of precoder `w`: sum rate, EE and the smallest
/// normalized constraint slack.
pub fn comm_metrics(design: &Design, w: &CMat) -> Result<Vec<(&'static str, f64)>, RunError> {
    let cov: Vec<CMat> = w.column_iter().map(|c| outer(&c.into_owned())).collect();
    let scen = &design.scenario;
    let rate = sum_rate(&all_sinrs(&design.channels, &cov, scen.user_noise)?);
    let ee = energy_efficiency(rate, total_power_of(&cov, &scen.power))?;
    let slack = constraint_slacks(scen, &design.channels, &cov)?.min();
    Ok(vec![("sum_rate", rate), ("energy_efficiency", ee), ("min_slack", slack)])
}

fn status_code(s: &ScaStatus) -> f64 {
    match s {
        ScaStatus::Converged => status::CONVERGED,
        ScaStatus::MaxIterations => status::MAX_ITERATIONS,
        ScaStatus::Degraded(_) => status::DEGRADED,
    }
}

fn error_code(e: &RunError) -> f64 {
    match e {
        RunError::Infeasible(_) => status::INFEASIBLE,
        _ => status::ERROR,
    }
}

/// Rows of one sweep point. Failures become `status` rows.
pub fn run_point(cfg: &ExperimentConfig, var: Option<SweepVar>, value: f64, opts: &ScaOptions) -> (Vec<Row>, Vec<String>) {
    let name = var.map_or("none", |v| v.name());
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let point = cfg.at(var, value).map_err(RunError::from).and_then(|c| design(&c, opts).map(|d| (c, d)));
    let (pcfg, design) = match point {
        Ok(x) => x,
        Err(e) => {
            for a in &cfg.architectures {
                rows.push(Row::exact(name, value, a.name(), "status", error_code(&e)));
            }
            errors.push(format!("{name}={value}: {e}"));
            return (rows, errors);
        }
    };
    let code = status_code(&design.result.trace.status);
    let per_arch: Vec<(Arch, Result<Vec<Row>, RunError>)> = cfg
        .architectures
        .par_iter()
        .map(|&arch| {
            let out = (|| {
                let (w, residual) = realize(&design, arch)?;
                let mut r = vec![
                    Row::exact(name, value, arch.name(), "status", code),
                    Row::exact(name, value, arch.name(), "design_bound", design.result.bound),
                    Row::exact(name, value, arch.name(), "rank_residual", rank_residual(&design.result.cov).1),
                    Row::exact(name, value, arch.name(), "sca_iterations", design.result.trace.iterations.len() as f64),
                    Row::exact(name, value, arch.name(), "factor_residual", residual),
                ];
                for (m, v) in bound_metrics(&design.scenario, &w)?.into_iter().chain(comm_metrics(&design, &w)?) {
                    r.push(Row::exact(name, value, arch.name(), m, v));
                }
                if pcfg.trials > 0 {
                    r.extend(trials::trial_rows(&design.scenario, &w, pcfg.trials, pcfg.seed)?.into_iter().map(|(m, v, se)| {
                        Row::monte_carlo(name, value, arch.name(), m, v, pcfg.trials, se)
                    }));
                }
                Ok(r)
            })();
            (arch, out)
        })
        .collect();
    for (arch, out) in per_arch {
        match out {
            Ok(r) => rows.extend(r),
            Err(e) => {
                rows.push(Row::exact(name, value, arch.name(), "status", error_code(&e)));
                errors.push(format!("{name}={value} {}: {e}", arch.name()));
            }
        }
    }
    (rows, errors)
}

pub struct SweepOutcome {
    pub table: ResultTable,
    /// One message per failed point or architecture.
    pub errors: Vec<String>,
    pub any_infeasible: bool,
}

pub fn run_sweep(cfg: &ExperimentConfig) -> SweepOutcome {
    run_sweep_with(cfg, &ScaOptions::default())
}

pub fn run_sweep_with(cfg: &ExperimentConfig, opts: &ScaOptions) -> SweepOutcome {
    let parts: Vec<(Vec<Row>, Vec<String>)> =
        cfg.sweep_points().par_iter().map(|&(var, value)| run_point(cfg, var, value, opts)).collect();
    let mut table = ResultTable::new();
    let mut errors = Vec::new();
    for (rows, errs) in parts {
        table.extend(rows);
        errors.extend(errs);
    }
    table.sort();
    let any_infeasible = table.rows.iter().any(|r| r.metric == "status" && r.value == status::INFEASIBLE);
    SweepOutcome { table, errors, any_infeasible }
}
