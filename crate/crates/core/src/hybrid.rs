//! Analog/digital factorization `W ≈ T_A T_D` of a fully-digital
//! beamformer under fully- and partially-connected phase-shifter networks.

use crate::error::{invalid, Error, Result};
use crate::linalg::{arg0, cr, unit_phasor, CMat, C64};
use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Architecture {
    /// Every RF chain drives every antenna.
    Fully,
    /// RF chain `q` drives the `I_g` consecutive antennas of group `q`.
    Partially,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Fully => "fully",
            Architecture::Partially => "partially",
        }
    }
}

#[derive(Clone, Debug)]
pub struct HybridFactors {
    /// `n_tx × n_rf`
    pub analog: CMat,
    /// `n_rf × K`
    pub digital: CMat,
    pub architecture: Architecture,
    /// `‖W − T_A T_D‖_F` at exit.
    pub residual: f64,
    pub iterations: usize,
    /// Residual after every digital update, starting from the initial pair.
    pub residual_trace: Vec<f64>,
    /// A ridge was needed in some least-squares digital update.
    pub regularized: bool,
    /// The analog network started from random phases.
    pub random_init: bool,
}

impl HybridFactors {
    pub fn product(&self) -> CMat {
        &self.analog * &self.digital
    }
}

#[derive(Clone, Debug)]
pub struct FactorOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Seed for the random-phase fallback initialization.
    pub seed: u64,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 200, seed: 0 }
    }
}

/// Antennas per RF chain in the partially-connected network.
pub fn group_size(n_tx: usize, n_rf: usize) -> Result<usize> {
    if n_rf == 0 || n_tx == 0 || n_tx % n_rf != 0 {
        return Err(invalid(format!("n_rf = {n_rf} must divide n_tx = {n_tx}")));
    }
    Ok(n_tx / n_rf)
}

pub fn residual(w: &CMat, t_a: &CMat, t_d: &CMat) -> f64 {
    (w - t_a * t_d).norm()
}

/// Whether `t_a` lies in the analog constraint set of `arch`, with moduli
/// within `tol` of one and exact zeros off the block pattern.
pub fn in_analog_set(t_a: &CMat, arch: Architecture, tol: f64) -> bool {
    let (n_tx, n_rf) = t_a.shape();
    match arch {
        Architecture::Fully => t_a.iter().all(|z| (z.norm() - 1.0).abs() <= tol),
        Architecture::Partially => {
            let Ok(g) = group_size(n_tx, n_rf) else { return false };
            (0..n_tx).all(|p| {
                (0..n_rf).all(|q| if q == p / g { (t_a[(p, q)].norm() - 1.0).abs() <= tol } else { t_a[(p, q)].norm() == 0.0 })
            })
        }
    }
}

/// Least-squares digital precoder `(T_Aᴴ T_A)⁻¹ T_Aᴴ W` before power
/// normalization. The flag reports a `10⁻¹⁰` ridge on a rank-deficient
/// Gram matrix.
pub fn fully_digital_ls(t_a: &CMat, w: &CMat) -> (CMat, bool) {
    let gram = t_a.adjoint() * t_a;
    let rhs = t_a.adjoint() * w;
    let n = gram.nrows();
    let mean_diag = (0..n).map(|i| gram[(i, i)].re).sum::<f64>() / n.max(1) as f64;
    let well_posed = crate::linalg::min_eigenvalue(&gram) > 1e-10 * mean_diag.max(f64::MIN_POSITIVE);
    if well_posed {
        if let Some(ch) = Cholesky::new(gram.clone()) {
            return (ch.solve(&rhs), false);
        }
    }
    let mut ridged = gram;
    for i in 0..n {
        ridged[(i, i)] += cr(1e-10 * mean_diag.max(1.0));
    }
    let sol = Cholesky::new(ridged).map(|ch| ch.solve(&rhs)).unwrap_or_else(|| CMat::zeros(n, w.ncols()));
    (sol, true)
}

fn normalize(t_a: &CMat, t_d: CMat, budget: f64) -> Result<CMat> {
    let norm = (t_a * &t_d).norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroDirection);
    }
    Ok(t_d * cr(budget.sqrt() / norm))
}

/// Least-squares digital update scaled so that `‖T_A T_D‖_F² = P`. Among
/// precoders meeting that power, this minimizes the residual.
pub fn fully_digital_update(t_a: &CMat, w: &CMat, budget: f64) -> Result<(CMat, bool)> {
    let (t_d, ridge) = fully_digital_ls(t_a, w);
    Ok((normalize(t_a, t_d, budget)?, ridge))
}

/// Majorization-minimization step for the unit-modulus network:
/// `T_A = exp(−j·arg(Fᵀ))` with `F = T_D Wᴴ − (M_D − λ_max(M_D) I) T_prevᴴ`
/// and `M_D = T_D T_Dᴴ`.
pub fn fully_analog_update(t_a_prev: &CMat, t_d: &CMat, w: &CMat) -> CMat {
    let m_d = t_d * t_d.adjoint();
    let lmax = crate::linalg::spectral_norm_psd(&m_d).max(0.0);
    let mut shifted = m_d;
    for i in 0..shifted.nrows() {
        shifted[(i, i)] -= cr(lmax);
    }
    let f = t_d * w.adjoint() - shifted * t_a_prev.adjoint();
    // a zero entry leaves the majorizer flat in that phase; keep the old one
    CMat::from_fn(t_a_prev.nrows(), t_a_prev.ncols(), |p, q| {
        if f[(q, p)] == C64::new(0.0, 0.0) {
            unit_phasor(arg0(t_a_prev[(p, q)]))
        } else {
            unit_phasor(-arg0(f[(q, p)]))
        }
    })
}

/// Value of the majorizer of `‖W − T_A T_D‖_F²` built at `t_a_prev`,
/// evaluated at `t_a`. It equals the residual at `t_a = t_a_prev` and
/// upper-bounds it for any unit-modulus `t_a`.
pub fn fully_majorizer(t_a: &CMat, t_a_prev: &CMat, t_d: &CMat, w: &CMat) -> f64 {
    let m_d = t_d * t_d.adjoint();
    let lmax = crate::linalg::spectral_norm_psd(&m_d).max(0.0);
    let mut shifted = m_d.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] -= cr(lmax);
    }
    let quad = |a: &CMat, m: &CMat, b: &CMat| (a * m * b.adjoint()).trace().re;
    let lin = (t_a.adjoint() * w * t_d.adjoint()).trace().re;
    lmax * t_a.norm_squared() + 2.0 * quad(t_a, &shifted, t_a_prev) - quad(t_a_prev, &shifted, t_a_prev)
        - 2.0 * lin
        + w.norm_squared()
}

/// Projection update `T_D = √(P/I_g)·T_AᴴW/‖T_AᴴW‖_F`.
pub fn partially_digital_update(t_a: &CMat, w: &CMat, budget: f64) -> Result<CMat> {
    let g = group_size(t_a.nrows(), t_a.ncols())?;
    let proj = t_a.adjoint() * w;
    let norm = proj.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroDirection);
    }
    Ok(proj * cr((budget / g as f64).sqrt() / norm))
}

/// Phase rotation update `[T_A]_{p,q} = exp(j·arg(d_qᴴ w_p))` on the block
/// pattern, with `w_p`, `d_q` the rows of `W` and `T_D`.
pub fn partially_analog_update(t_d: &CMat, w: &CMat) -> Result<CMat> {
    let (n_tx, n_rf) = (w.nrows(), t_d.nrows());
    let g = group_size(n_tx, n_rf)?;
    if t_d.ncols() != w.ncols() {
        return Err(invalid("digital precoder and beamformer disagree on K"));
    }
    let mut t_a = CMat::zeros(n_tx, n_rf);
    for p in 0..n_tx {
        let q = p / g;
        let inner: C64 = (0..w.ncols()).map(|j| t_d[(q, j)].conj() * w[(p, j)]).sum();
        t_a[(p, q)] = unit_phasor(arg0(inner));
    }
    Ok(t_a)
}

fn random_phases(n_tx: usize, n_rf: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = CMat::zeros(n_tx, n_rf);
    for q in 0..n_rf {
        for p in 0..n_tx {
            t[(p, q)] = unit_phasor(rng.random::<f64>() * TAU);
        }
    }
    t
}

/// Initial analog network from the phases of `W`: column `q` copies the
/// phases of column `q mod K` (fully) or row `p` takes the phase of
/// `W[p, q mod K]` on its group column (partially). The fully-connected
/// network falls back to seeded random phases when the copies leave
/// `T_Aᴴ T_A` ill-conditioned.
fn initial_analog(w: &CMat, n_rf: usize, arch: Architecture, seed: u64) -> Result<(CMat, bool)> {
    let (n_tx, k) = w.shape();
    match arch {
        Architecture::Fully => {
            let t = CMat::from_fn(n_tx, n_rf, |p, q| unit_phasor(arg0(w[(p, q % k)])));
            let gram = t.adjoint() * &t;
            let eig = crate::linalg::hermitian_eig(&gram).0;
            let (hi, lo) = (eig[0], eig[eig.len() - 1]);
            if lo > 1e-8 * hi {
                Ok((t, false))
            } else {
                Ok((random_phases(n_tx, n_rf, seed), true))
            }
        }
        Architecture::Partially => {
            let g = group_size(n_tx, n_rf)?;
            let mut t = CMat::zeros(n_tx, n_rf);
            for p in 0..n_tx {
                let q = p / g;
                t[(p, q)] = unit_phasor(arg0(w[(p, q % k)]));
            }
            Ok((t, false))
        }
    }
}

/// Alternates digital and analog updates until the relative residual
/// change drops below `opts.tol` or `opts.max_iter` sweeps. The returned
/// pair satisfies the power equality `‖T_A T_D‖_F² = P`.
pub fn factorize(w: &CMat, n_rf: usize, arch: Architecture, budget: f64, opts: &FactorOptions) -> Result<HybridFactors> {
    let (n_tx, k) = w.shape();
    if k == 0 || n_tx == 0 {
        return Err(invalid("empty beamformer"));
    }
    if n_rf < k || n_rf > n_tx {
        return Err(invalid(format!("need K ≤ n_rf ≤ n_tx, got K = {k}, n_rf = {n_rf}, n_tx = {n_tx}")));
    }
    if arch == Architecture::Partially {
        group_size(n_tx, n_rf)?;
    }
    if !(budget > 0.0) {
        return Err(invalid("power budget must be positive"));
    }
    if w.norm() == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let (mut t_a, random_init) = initial_analog(w, n_rf, arch, opts.seed)?;
    let mut regularized = false;
    // Returns the power-normalized precoder and the one driving the analog
    // step. For the fully-connected network that is the unnormalized
    // least-squares solution: the normalized residual is a decreasing
    // function of ‖Π_A W‖, which the unconstrained alternation increases
    // monotonically.
    let mut digital = |t_a: &CMat| -> Result<(CMat, CMat)> {
        match arch {
            Architecture::Fully => {
                let (ls, ridge) = fully_digital_ls(t_a, w);
                regularized |= ridge;
                Ok((normalize(t_a, ls.clone(), budget)?, ls))
            }
            Architecture::Partially => {
                let t_d = partially_digital_update(t_a, w, budget)?;
                Ok((t_d.clone(), t_d))
            }
        }
    };
    let (mut t_d, mut driver) = digital(&t_a)?;
    let mut trace = vec![residual(w, &t_a, &t_d)];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let next_a = match arch {
            Architecture::Fully => fully_analog_update(&t_a, &driver, w),
            Architecture::Partially => partially_analog_update(&driver, w)?,
        };
        let (next_d, next_driver) = digital(&next_a)?;
        let r = residual(w, &next_a, &next_d);
        let prev = *trace.last().unwrap();
        t_a = next_a;
        t_d = next_d;
        driver = next_driver;
        trace.push(r);
        if (prev - r).abs() <= opts.tol * prev.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(HybridFactors {
        residual: *trace.last().unwrap(),
        analog: t_a,
        digital: t_d,
        architecture: arch,
        iterations,
        residual_trace: trace,
        regularized,
        random_init,
    })
}
