//! Monte Carlo estimator trials for a fixed precoder.

use crate::sweep::RunError;
use beamfocus::bounds::{bcrb_extended_trace, point_trm, BcrbParams};
use beamfocus::estimators::{
    draw_extended_trm, lmmse_trm, mean_stderr, mle_point, music_2d, rmse, simulate_echo, trial_rng, EstimationRecord,
    GridSpec, SearchGrid, SymbolMode,
};
use beamfocus::geometry::TargetSpec;
use beamfocus::linalg::{vec_of, CMat};
use beamfocus::scenario::Scenario;
use rayon::prelude::*;

/// Offset between the response stream and the echo stream of a trial.
const RESPONSE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Debug, Default)]
pub struct PointTrials {
    pub mle: Vec<EstimationRecord>,
    pub music: Vec<EstimationRecord>,
}

pub fn point_trials(
    scen: &Scenario,
    w: &CMat,
    grid: &SearchGrid,
    trials: usize,
    seed: u64,
    with_music: bool,
) -> Result<PointTrials, RunError> {
    let TargetSpec::Point { distance, angle, .. } = scen.target else {
        return Err(RunError::Core(beamfocus::Error::InvalidArgument("point trials need a point target".into())));
    };
    let trm = point_trm(&scen.geometry, &scen.target, scen.steering)?;
    let per: Vec<(EstimationRecord, Option<EstimationRecord>)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<_, RunError> {
            let echo = simulate_echo(&trm.b, w, SymbolMode::Gaussian, scen.frame_len, scen.radar_noise, seed, t as u64)?;
            let m = mle_point(&echo, grid)?;
            let mle = EstimationRecord::point(t, (distance, angle), (m.range, m.angle));
            let music = if with_music {
                let m = music_2d(&echo, grid)?;
                Some(EstimationRecord::point(t, (distance, angle), (m.range, m.angle)))
            } else {
                None
            };
            Ok((mle, music))
        })
        .collect::<Result<_, _>>()?;
    let mut out = PointTrials::default();
    for (a, b) in per {
        out.mle.push(a);
        out.music.extend(b);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct ExtendedTrials {
    /// Squared error of the LMMSE estimate per trial.
    pub errors: Vec<f64>,
    /// Bayesian bound at each trial's sample covariance.
    pub bounds: Vec<f64>,
}

pub fn extended_trials(scen: &Scenario, w: &CMat, trials: usize, seed: u64) -> Result<ExtendedTrials, RunError> {
    let TargetSpec::Extended { prior_variance } = scen.target else {
        return Err(RunError::Core(beamfocus::Error::InvalidArgument("LMMSE trials need an extended target".into())));
    };
    let (n_rx, n_tx) = (scen.geometry.n_rx, scen.geometry.n_tx);
    let params = BcrbParams { noise: scen.radar_noise, prior_variance, frame_len: scen.frame_len, n_rx };
    let per: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<_, RunError> {
            let b = draw_extended_trm(&mut trial_rng(seed ^ RESPONSE_STREAM, t as u64), n_rx, n_tx, prior_variance);
            let echo = simulate_echo(&b, w, SymbolMode::Gaussian, scen.frame_len, scen.radar_noise, seed, t as u64)?;
            let est = lmmse_trm(&echo, prior_variance, scen.radar_noise)?;
            let err = EstimationRecord::response(t, &vec_of(&b), &est).squared_error[0];
            Ok((err, bcrb_extended_trace(&echo.sample_covariance(), &params)?))
        })
        .collect::<Result<_, _>>()?;
    Ok(ExtendedTrials { errors: per.iter().map(|p| p.0).collect(), bounds: per.iter().map(|p| p.1).collect() })
}

/// `(metric, value, stderr)` rows of the estimator suited to the target.
pub fn trial_rows(scen: &Scenario, w: &CMat, trials: usize, seed: u64) -> Result<Vec<(&'static str, f64, f64)>, RunError> {
    match scen.target {
        TargetSpec::Point { .. } => {
            let grid = SearchGrid::new(&scen.geometry, GridSpec::for_geometry(&scen.geometry))?;
            let t = point_trials(scen, w, &grid, trials, seed, true)?;
            let row = |name, recs: &[EstimationRecord], c| {
                let (v, se) = rmse(recs, c);
                (name, v, se)
            };
            Ok(vec![
                row("rmse_mle_range", &t.mle, 0),
                row("rmse_mle_angle", &t.mle, 1),
                row("rmse_music_range", &t.music, 0),
                row("rmse_music_angle", &t.music, 1),
            ])
        }
        TargetSpec::Extended { .. } => {
            let t = extended_trials(scen, w, trials, seed)?;
            let (mse, se) = mean_stderr(&t.errors);
            let (bound, bse) = mean_stderr(&t.bounds);
            Ok(vec![("mse_lmmse", mse, se), ("bcrb_sample", bound, bse)])
        }
    }
}
