//! Power, SINR and energy-efficiency constraints on budget-normalized
//! covariances, shared by every subproblem.

use crate::geometry::ChannelSet;
use crate::linalg::{trace_product, CMat};
use crate::scenario::Scenario;
use beamfocus_conic::{CExpr, ConicProgram, LinExpr, MatVar, MatrixExpr, ScalarVar};
use std::f64::consts::LOG2_E;

/// How the energy-efficiency row enters the program.
#[derive(Clone, Copy, Debug)]
pub(crate) enum EeRow {
    /// `row ≥ 0` when `η_th > 0`, omitted otherwise.
    Constraint,
    /// `row ≥ t` for a free scalar `t`, always present.
    Slack(ScalarVar),
}

/// Adds `Ŵ_k ⪰ 0`, the power budget, the SINR rows and the linearized EE
/// row around `prev` (budget-normalized covariances).
pub(crate) fn add_comm_constraints(
    p: &mut ConicProgram,
    wv: &[MatVar],
    scen: &Scenario,
    ch: &ChannelSet,
    prev: &[CMat],
    margin: f64,
    ee: EeRow,
) {
    let budget = scen.power.budget;
    let k_users = wv.len();
    for (k, &w) in wv.iter().enumerate() {
        p.add_psd_var(&format!("w{k}_psd"), w);
    }
    let mut used = LinExpr::zero();
    for &w in wv {
        used += &p.trace(w);
    }
    p.add_ge("power", LinExpr::constant(1.0 - margin) - used.clone());

    // Ĥ_k = H_k/‖h_k‖² so Tr(H_k W_i) = c_k Tr(Ĥ_k Ŵ_i) with c_k = P‖h_k‖²
    let hhat: Vec<CMat> = ch
        .outer
        .iter()
        .zip(&ch.vectors)
        .map(|(h, v)| h / crate::linalg::cr(v.norm_squared()))
        .collect();
    let gains: Vec<f64> = ch.vectors.iter().map(|v| budget * v.norm_squared()).collect();
    let t: Vec<Vec<LinExpr>> = (0..k_users).map(|k| wv.iter().map(|&w| p.inner(w, &hhat[k])).collect()).collect();
    let sigma2 = scen.user_noise;

    let g = scen.sinr_threshold;
    if g > 0.0 {
        let g_eff = g + margin * (1.0 + g);
        for k in 0..k_users {
            let mut row = t[k][k].clone();
            for i in (0..k_users).filter(|&i| i != k) {
                row.axpy(-g_eff, &t[k][i]);
            }
            row = row - g_eff * sigma2 / gains[k];
            p.add_ge(&format!("sinr[{k}]"), row);
        }
    }

    let eta = scen.ee_threshold;
    if matches!(ee, EeRow::Constraint) && eta <= 0.0 {
        return;
    }
    let eta_eff = eta + margin * (1.0 + eta);
    let pm = &scen.power;
    let mut row = LinExpr::zero();
    for k in 0..k_users {
        let prev_t: Vec<f64> = prev.iter().map(|c| trace_product(&hhat[k], c).re).collect();
        let a0 = gains[k] * prev_t.iter().sum::<f64>() + sigma2;
        let i_prev = gains[k] * prev_t.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| v).sum::<f64>();
        let w_log = (i_prev + sigma2).log2();
        let slope = LOG2_E / (i_prev + sigma2);

        // log₂(a) ≥ log₂(a₀) + log₂e·(1 − τ) whenever τ ≥ a₀/a
        let tau = p.scalar(&format!("tau{k}"));
        let tau_e = p.scalar_expr(tau);
        let mut ratio = LinExpr::constant(sigma2 / a0);
        for i in 0..k_users {
            ratio.axpy(gains[k] / a0, &t[k][i]);
        }
        let mut lmi = MatrixExpr::zeros(2, false);
        lmi.set(0, 0, CExpr::real(tau_e.clone()));
        lmi.set(0, 1, CExpr::real(LinExpr::constant(1.0)));
        lmi.set(1, 1, CExpr::real(ratio));
        p.add_psd(&format!("rate_log[{k}]"), lmi);

        row = row + (a0.log2() + LOG2_E - w_log + slope * i_prev);
        row.axpy(-LOG2_E, &tau_e);
        for i in (0..k_users).filter(|&i| i != k) {
            row.axpy(-slope * gains[k], &t[k][i]);
        }
    }
    // η in bits/s/Hz/J with power in watts
    let cost = eta_eff * 1e-3;
    row = row - cost * pm.static_power;
    row.axpy(-cost * budget / pm.amplifier_eff, &used);
    let norm = 1.0 + cost * (budget / pm.amplifier_eff + pm.static_power);
    let mut row = row.scaled(1.0 / norm);
    if let EeRow::Slack(s) = ee {
        row = row - p.scalar_expr(s);
    }
    p.add_ge("energy_efficiency", row);
}
