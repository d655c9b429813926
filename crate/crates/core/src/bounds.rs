//! Sensing bounds: the point-target CRB on (range, angle) with the complex
//! reflection coefficient as nuisance, and the Bayesian CRB of the
//! extended-target response matrix.

use crate::error::{invalid, Error, Result};
use crate::geometry::{steering_with_derivatives, ArrayGeometry, SteeringMode, TargetSpec};
use crate::linalg::{hermitian_eig, kron, realify_hermitian, sym_inverse, C64, CMat};
use nalgebra::{DMatrix, Matrix2, Matrix4};

/// Point-target response `B = μ b_r b_tᴴ` with its range and angle
/// derivatives. The `unit_*` fields are the same quantities for `μ = 1`.
#[derive(Clone, Debug)]
pub struct TrmPoint {
    pub mu: C64,
    pub b: CMat,
    pub db_dr: CMat,
    pub db_dphi: CMat,
    pub unit: CMat,
    pub unit_dr: CMat,
    pub unit_dphi: CMat,
}

fn point_parts(target: &TargetSpec) -> Result<(f64, f64, C64)> {
    match target {
        TargetSpec::Point { distance, angle, mu } => {
            if mu.norm() == 0.0 {
                return Err(Error::DegenerateTarget);
            }
            Ok((*distance, *angle, *mu))
        }
        TargetSpec::Extended { .. } => Err(invalid("point target required")),
    }
}

pub fn point_trm(geom: &ArrayGeometry, target: &TargetSpec, mode: SteeringMode) -> Result<TrmPoint> {
    let (r, phi, mu) = point_parts(target)?;
    unit_trm(geom, r, phi, mode).map(|(g, gr, gp)| TrmPoint {
        mu,
        b: &g * mu,
        db_dr: &gr * mu,
        db_dphi: &gp * mu,
        unit: g,
        unit_dr: gr,
        unit_dphi: gp,
    })
}

/// `(∂B/∂r, ∂B/∂φ)` by the product rule on `μ b_r b_tᴴ`.
pub fn point_trm_derivatives(geom: &ArrayGeometry, target: &TargetSpec, mode: SteeringMode) -> Result<(CMat, CMat)> {
    let t = point_trm(geom, target, mode)?;
    Ok((t.db_dr, t.db_dphi))
}

fn unit_trm(geom: &ArrayGeometry, r: f64, phi: f64, mode: SteeringMode) -> Result<(CMat, CMat, CMat)> {
    let (bt, bt_r, bt_p) = steering_with_derivatives(geom.n_tx, geom.wavelength, r, phi, mode)?;
    let (br, br_r, br_p) = steering_with_derivatives(geom.n_rx, geom.wavelength, r, phi, mode)?;
    let g = &br * bt.adjoint();
    let gr = &br_r * bt.adjoint() + &br * bt_r.adjoint();
    let gp = &br_p * bt.adjoint() + &br * bt_p.adjoint();
    Ok((g, gr, gp))
}

/// The point-target FIM blocks for parameters `(r, φ)` and `(Re μ, Im μ)`,
/// and the Schur complement `A` of the nuisance block.
#[derive(Clone, Debug, PartialEq)]
pub struct FimPoint {
    pub j_phiphi: Matrix2<f64>,
    pub j_phimu: Matrix2<f64>,
    pub j_mumu: Matrix2<f64>,
    pub a: Matrix2<f64>,
}

impl FimPoint {
    pub fn full(&self) -> Matrix4<f64> {
        let mut j = Matrix4::zeros();
        j.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.j_phiphi);
        j.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.j_phimu);
        j.fixed_view_mut::<2, 2>(2, 0).copy_from(&self.j_phimu.transpose());
        j.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.j_mumu);
        j
    }
}

/// Matrices whose inner products with `R_X` give every FIM entry:
/// `J_uv = κ|μ|² Re Tr(C_uv R_X)`, `t_u = Tr(C_u R_X)` and
/// `J_μμ = κ Re Tr(C_0 R_X) I` with `κ = 2L/σ²`.
#[derive(Clone, Debug)]
pub struct FimCoefficients {
    pub c_rr: CMat,
    pub c_rphi: CMat,
    pub c_phiphi: CMat,
    /// `Ġ_rᴴ G`
    pub c_r: CMat,
    /// `Ġ_φᴴ G`
    pub c_phi: CMat,
    /// `Gᴴ G`
    pub c_0: CMat,
    pub kappa: f64,
    pub mu: C64,
}

impl FimCoefficients {
    pub fn new(trm: &TrmPoint, mu: C64, sigma2: f64, frame_len: usize) -> Result<Self> {
        if !(sigma2 > 0.0) || frame_len == 0 {
            return Err(invalid("noise power and frame length must be positive"));
        }
        let (g, gr, gp) = (&trm.unit, &trm.unit_dr, &trm.unit_dphi);
        Ok(Self {
            c_rr: gr.adjoint() * gr,
            c_rphi: gr.adjoint() * gp,
            c_phiphi: gp.adjoint() * gp,
            c_r: gr.adjoint() * g,
            c_phi: gp.adjoint() * g,
            c_0: g.adjoint() * g,
            kappa: 2.0 * frame_len as f64 / sigma2,
            mu,
        })
    }

    pub fn fim(&self, r_x: &CMat) -> Result<FimPoint> {
        let tr = |c: &CMat| c.component_mul(&r_x.transpose()).sum();
        let k = self.kappa;
        let m2 = self.mu.norm_sqr();
        let jrr = k * m2 * tr(&self.c_rr).re;
        let jrp = k * m2 * tr(&self.c_rphi).re;
        let jpp = k * m2 * tr(&self.c_phiphi).re;
        let j_phiphi = Matrix2::new(jrr, jrp, jrp, jpp);
        let t = [self.mu.conj() * tr(&self.c_r), self.mu.conj() * tr(&self.c_phi)];
        let j_phimu = Matrix2::new(k * t[0].re, -k * t[0].im, k * t[1].re, -k * t[1].im);
        let q = tr(&self.c_0).re;
        let scale = self.c_0.trace().re * r_x.trace().re.abs();
        if !(q > 1e-12 * scale) || q <= 0.0 {
            return Err(Error::SingularNuisance);
        }
        let j_mumu = Matrix2::identity() * (k * q);
        let a = j_phiphi - j_phimu * j_phimu.transpose() / (k * q);
        let a = (a + a.transpose()) * 0.5;
        Ok(FimPoint { j_phiphi, j_phimu, j_mumu, a })
    }
}

pub fn fim_point(trm: &TrmPoint, r_x: &CMat, mu: C64, sigma2: f64, frame_len: usize) -> Result<FimPoint> {
    FimCoefficients::new(trm, mu, sigma2, frame_len)?.fim(r_x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrbPoint {
    /// `A⁻¹`; diagonal in m² and rad².
    pub matrix: Matrix2<f64>,
    pub trace: f64,
}

impl CrbPoint {
    pub fn range_std(&self) -> f64 {
        self.matrix[(0, 0)].sqrt()
    }

    pub fn angle_std(&self) -> f64 {
        self.matrix[(1, 1)].sqrt()
    }
}

pub fn crb_point(fim: &FimPoint) -> Result<CrbPoint> {
    let a = DMatrix::from_column_slice(2, 2, fim.a.as_slice());
    let inv = sym_inverse(&a, 1e-12).ok_or(Error::Unidentifiable)?;
    let matrix = Matrix2::new(inv[(0, 0)], inv[(0, 1)], inv[(1, 0)], inv[(1, 1)]);
    Ok(CrbPoint { trace: matrix.trace(), matrix })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcrbParams {
    pub noise: f64,
    pub prior_variance: f64,
    pub frame_len: usize,
    pub n_rx: usize,
}

impl BcrbParams {
    pub fn validate(&self) -> Result<()> {
        if self.noise > 0.0 && self.prior_variance > 0.0 && self.frame_len > 0 && self.n_rx > 0 {
            Ok(())
        } else {
            Err(invalid("BCRB parameters must be strictly positive"))
        }
    }

    /// `σ_n²/(σ_β² L)`
    pub fn regularizer(&self) -> f64 {
        self.noise / (self.prior_variance * self.frame_len as f64)
    }

    /// `σ_n² n_rx / L`
    pub fn scale(&self) -> f64 {
        self.noise * self.n_rx as f64 / self.frame_len as f64
    }
}

/// `(σ_n² n_rx/L) Tr((R_X + σ_n²/(σ_β²L) I)⁻¹)`.
pub fn bcrb_extended_trace(r_x: &CMat, params: &BcrbParams) -> Result<f64> {
    params.validate()?;
    let reg = params.regularizer();
    let (vals, _) = hermitian_eig(r_x);
    Ok(params.scale() * vals.iter().map(|l| 1.0 / (l.max(0.0) + reg)).sum::<f64>())
}

/// Prior-free FIM of `[Re vec B; Im vec B]`:
/// `(2L/σ²)·realify(R_Xᵀ ⊗ I_{n_rx})`.
pub fn extended_fim(r_x: &CMat, sigma2: f64, frame_len: usize, n_rx: usize) -> DMatrix<f64> {
    let m = kron(&r_x.transpose(), &CMat::identity(n_rx, n_rx));
    realify_hermitian(&m) * (2.0 * frame_len as f64 / sigma2)
}

/// Smallest eigenvalue of the prior-free FIM. The Kronecker factor with the
/// receive identity only repeats eigenvalues, so one receive antenna is used.
pub fn extended_fim_min_eigenvalue(r_x: &CMat, sigma2: f64, frame_len: usize) -> f64 {
    let j = extended_fim(r_x, sigma2, frame_len, 1);
    nalgebra::SymmetricEigen::new(j).eigenvalues.min()
}

/// `J₁ + J₂` with the prior term `(2/σ_β²) I`.
pub fn bayesian_fim(r_x: &CMat, params: &BcrbParams) -> DMatrix<f64> {
    let j = extended_fim(r_x, params.noise, params.frame_len, params.n_rx);
    let n = j.nrows();
    j + DMatrix::identity(n, n) * (2.0 / params.prior_variance)
}
