//! Point-target design: minimize `Tr CRB(r, φ)` through the Schur
//! complement LMI on the FIM.

use super::comm_block::{add_comm_constraints, EeRow};
use super::driver::{penalty_terms, run, Design};
use super::init::init_feasible;
use super::{ScaOptions, ScaResult, SpectralSurrogate};
use crate::bounds::{crb_point, point_trm, FimCoefficients};
use crate::error::{invalid, Result};
use crate::geometry::{ChannelSet, TargetSpec};
use crate::linalg::{cr, CMat, J};
use crate::scenario::Scenario;
use beamfocus_conic::{CExpr, ConicProgram, LinExpr, MatVar, MatrixExpr};

/// FIM coefficients in congruence-scaled, budget-normalized form.
///
/// With `S = diag(s_r, s_φ)` and `s_μ` chosen so the FIM of the isotropic
/// covariance `(P/n)I` has unit diagonal, the LMI is written for
/// `Ξ̃ = S Ξ S` and the objective is `Tr(S² Ũ)/crb_ref`.
#[derive(Clone, Debug)]
pub struct PointModel {
    pub coeffs: FimCoefficients,
    pub budget: f64,
    pub s_r: f64,
    pub s_phi: f64,
    pub s_mu: f64,
    pub crb_ref: f64,
    m_rr: CMat,
    m_rp: CMat,
    m_pp: CMat,
    m_r0: CMat,
    m_r1: CMat,
    m_p0: CMat,
    m_p1: CMat,
    m_00: CMat,
}

impl PointModel {
    pub fn new(scen: &Scenario) -> Result<Self> {
        let mu = match scen.target {
            TargetSpec::Point { mu, .. } => mu,
            TargetSpec::Extended { .. } => return Err(invalid("point target required")),
        };
        let trm = point_trm(&scen.geometry, &scen.target, scen.steering)?;
        let coeffs = FimCoefficients::new(&trm, mu, scen.radar_noise, scen.frame_len)?;
        let n = scen.geometry.n_tx;
        let budget = scen.power.budget;
        let r_ref = CMat::identity(n, n) * cr(budget / n as f64);
        let fim = coeffs.fim(&r_ref)?;
        let crb_ref = crb_point(&fim)?.trace;
        let s_r = 1.0 / fim.j_phiphi[(0, 0)].sqrt();
        let s_phi = 1.0 / fim.j_phiphi[(1, 1)].sqrt();
        let s_mu = 1.0 / fim.j_mumu[(0, 0)].sqrt();
        let k = coeffs.kappa;
        let m2 = mu.norm_sqr();
        let mc = mu.conj();
        let sc = |c: &CMat, f: f64| c * cr(f * budget);
        Ok(Self {
            m_rr: sc(&coeffs.c_rr, k * m2 * s_r * s_r),
            m_rp: sc(&coeffs.c_rphi, k * m2 * s_r * s_phi),
            m_pp: sc(&coeffs.c_phiphi, k * m2 * s_phi * s_phi),
            m_r0: sc(&(&coeffs.c_r * mc), k * s_r * s_mu),
            m_r1: sc(&(&coeffs.c_r * (J * mc)), k * s_r * s_mu),
            m_p0: sc(&(&coeffs.c_phi * mc), k * s_phi * s_mu),
            m_p1: sc(&(&coeffs.c_phi * (J * mc)), k * s_phi * s_mu),
            m_00: sc(&coeffs.c_0, k * s_mu * s_mu),
            coeffs,
            budget,
            s_r,
            s_phi,
            s_mu,
            crb_ref,
        })
    }

    /// `Tr CRB` at physical covariances; infinite when singular.
    pub fn crb_trace(&self, cov: &[CMat]) -> f64 {
        let mut r = cov[0].clone();
        for c in &cov[1..] {
            r += c;
        }
        self.coeffs.fim(&r).and_then(|f| crb_point(&f)).map(|c| c.trace).unwrap_or(f64::INFINITY)
    }

    /// Congruence-scaled 4×4 FIM `diag(S, s_μ I) J diag(S, s_μ I)` as an
    /// affine expression of the normalized covariances.
    pub fn scaled_fim_expr(&self, p: &ConicProgram, wv: &[MatVar]) -> [[LinExpr; 4]; 4] {
        let e = |m: &CMat| {
            let mut out = LinExpr::zero();
            for &w in wv {
                out += &p.inner(w, m);
            }
            out
        };
        let (rr, rp, pp) = (e(&self.m_rr), e(&self.m_rp), e(&self.m_pp));
        let (r0, r1, p0, p1) = (e(&self.m_r0), e(&self.m_r1), e(&self.m_p0), e(&self.m_p1));
        let mm = e(&self.m_00);
        let z = LinExpr::zero;
        [
            [rr.clone(), rp.clone(), r0.clone(), r1.clone()],
            [rp, pp, p0.clone(), p1.clone()],
            [r0, p0, mm.clone(), z()],
            [r1, p1, z(), mm],
        ]
    }
}

pub struct PointHandles {
    pub w: Vec<MatVar>,
    pub xi: MatVar,
    pub u: MatVar,
}

/// One SCA subproblem: variables `Ŵ_k`, `Ξ̃`, `Ũ`; objective
/// `Tr(S²Ũ)/crb_ref` plus the linearized rank penalty when `penalty` is
/// given; the Schur LMI, `Ξ̃ ⪰ 0`, power, SINR and linearized EE rows.
pub fn build_point_subproblem(
    model: &PointModel,
    scen: &Scenario,
    ch: &ChannelSet,
    prev: &[CMat],
    penalty: Option<(&[SpectralSurrogate], f64)>,
    margin: f64,
) -> (ConicProgram, PointHandles) {
    let n = scen.geometry.n_tx;
    let mut p = ConicProgram::new();
    let wv: Vec<MatVar> = (0..scen.n_users()).map(|k| p.hermitian(&format!("W{k}"), n)).collect();
    let xi = p.symmetric("Xi", 2);
    p.add_psd_var("xi_psd", xi);

    let f = model.scaled_fim_expr(&p, &wv);
    let mut lmi = MatrixExpr::zeros(4, false);
    for j in 0..4 {
        for i in 0..=j {
            let mut e = f[i][j].clone();
            if j < 2 {
                e -= &p.entry(xi, i, j).re;
            }
            lmi.set(i, j, CExpr::real(e));
        }
    }
    p.add_psd("fim_schur", lmi);
    let (u, _) = p.epigraph_trace_inverse("U", &p.var_expr(xi));
    let mut obj = p.entry(u, 0, 0).re.scaled(model.s_r * model.s_r / model.crb_ref);
    obj.axpy(model.s_phi * model.s_phi / model.crb_ref, &p.entry(u, 1, 1).re);
    if let Some((surr, gamma)) = penalty {
        obj += &penalty_terms(&p, &wv, surr, gamma);
    }
    p.minimize(obj);
    add_comm_constraints(&mut p, &wv, scen, ch, prev, margin, EeRow::Constraint);
    (p, PointHandles { w: wv, xi, u })
}

struct PointDesign<'a> {
    model: PointModel,
    scen: &'a Scenario,
    ch: &'a ChannelSet,
    margin: f64,
}

impl Design for PointDesign<'_> {
    fn build(&self, prev: &[CMat], penalty: Option<(&[SpectralSurrogate], f64)>) -> (ConicProgram, Vec<MatVar>) {
        let (p, h) = build_point_subproblem(&self.model, self.scen, self.ch, prev, penalty, self.margin);
        (p, h.w)
    }

    fn objective(&self, cov_hat: &[CMat]) -> f64 {
        let cov: Vec<CMat> = cov_hat.iter().map(|c| c * cr(self.model.budget)).collect();
        self.model.crb_trace(&cov) / self.model.crb_ref
    }

    fn bound(&self, cov: &[CMat]) -> f64 {
        self.model.crb_trace(cov)
    }
}

/// Penalty SCA for the point target. Returns the covariances, the extracted
/// beamformer, the iteration record and the achieved `Tr CRB`.
pub fn solve_point_sca(scen: &Scenario, ch: &ChannelSet, opts: &ScaOptions) -> Result<ScaResult> {
    scen.validate()?;
    let model = PointModel::new(scen)?;
    let init = init_feasible(scen, ch, opts)?;
    let mut r = init.cov[0].clone();
    for c in &init.cov[1..] {
        r += c;
    }
    let xi_init = model.coeffs.fim(&r).ok().map(|f| f.a * 0.9);
    let d = PointDesign { model, scen, ch, margin: opts.margin };
    run(&d, scen, ch, opts, init.cov, xi_init)
}
