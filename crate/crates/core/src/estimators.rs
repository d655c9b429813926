//! Echo simulation and the estimators used to check the bounds empirically:
//! concentrated maximum likelihood and 2D MUSIC for a point target, LMMSE
//! for an extended one.

use crate::error::{invalid, Result};
use crate::geometry::{rayleigh_distance, steering_vector, ArrayGeometry, SteeringMode};
use crate::linalg::{complex_normal_matrix, cr, top_eigenpair, unit_phasor, vec_of, C64, CMat, CVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SymbolMode {
    /// i.i.d. unit-variance circular Gaussian symbols.
    #[default]
    Gaussian,
    /// Unit-modulus symbols drawn uniformly from an M-PSK alphabet.
    Psk(usize),
}

#[derive(Clone, Debug)]
pub struct EchoBatch {
    /// Received echo, `n_rx × L`.
    pub y: CMat,
    /// Transmitted waveform, `n_tx × L`.
    pub x: CMat,
    pub noise: f64,
    pub seed: u64,
    pub trial: u64,
}

impl EchoBatch {
    pub fn frame_len(&self) -> usize {
        self.x.ncols()
    }

    /// `(1/L) X Xᴴ`
    pub fn sample_covariance(&self) -> CMat {
        &self.x * self.x.adjoint() / cr(self.frame_len() as f64)
    }
}

/// Per-trial generator: ChaCha8 keyed by `seed` on stream `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn draw_symbols<R: Rng + ?Sized>(rng: &mut R, users: usize, frame_len: usize, mode: SymbolMode) -> Result<CMat> {
    match mode {
        SymbolMode::Gaussian => Ok(complex_normal_matrix(rng, users, frame_len, 1.0)),
        SymbolMode::Psk(m) => {
            if m < 2 {
                return Err(invalid("PSK order must be at least 2"));
            }
            let mut s = CMat::zeros(users, frame_len);
            for j in 0..frame_len {
                for i in 0..users {
                    s[(i, j)] = unit_phasor(2.0 * PI * rng.random_range(0..m) as f64 / m as f64);
                }
            }
            Ok(s)
        }
    }
}

/// `Y = B W S + N` with `S` drawn per `mode` and `N` i.i.d. `CN(0, noise)`.
/// `w` is the (possibly hybrid) `n_tx × K` precoder.
pub fn simulate_echo(
    b: &CMat,
    w: &CMat,
    mode: SymbolMode,
    frame_len: usize,
    noise: f64,
    seed: u64,
    trial: u64,
) -> Result<EchoBatch> {
    if b.ncols() != w.nrows() {
        return Err(invalid(format!("response has {} columns, precoder {} rows", b.ncols(), w.nrows())));
    }
    if w.ncols() == 0 || frame_len < w.ncols() {
        return Err(invalid("frame length must be at least the number of streams"));
    }
    if !(noise >= 0.0) {
        return Err(invalid("noise power must be nonnegative"));
    }
    let mut rng = trial_rng(seed, trial);
    let s = draw_symbols(&mut rng, w.ncols(), frame_len, mode)?;
    let x = w * s;
    let mut y = b * &x;
    if noise > 0.0 {
        y += complex_normal_matrix(&mut rng, b.nrows(), frame_len, noise);
    }
    Ok(EchoBatch { y, x, noise, seed, trial })
}

/// i.i.d. `CN(0, σ_β²)` extended-target response.
pub fn draw_extended_trm<R: Rng + ?Sized>(rng: &mut R, n_rx: usize, n_tx: usize, prior_variance: f64) -> CMat {
    complex_normal_matrix(rng, n_rx, n_tx, prior_variance)
}

/// Search region: ranges log-spaced over `[r_min, r_max]`, angles uniform
/// over the open interval `(−angle_limit, angle_limit)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n_range: usize,
    pub n_angle: usize,
    pub angle_limit: f64,
    pub mode: SteeringMode,
    /// Halvings of the local quadratic refinement stencil.
    pub refine_rounds: usize,
}

impl GridSpec {
    /// 0.5 m to 1.5 Rayleigh distances, 200 × 361 points.
    pub fn for_geometry(geom: &ArrayGeometry) -> Self {
        Self {
            r_min: 0.5,
            r_max: 1.5 * rayleigh_distance(geom),
            n_range: 200,
            n_angle: 361,
            angle_limit: FRAC_PI_2,
            mode: SteeringMode::Exact,
            refine_rounds: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_range < 3 || self.n_angle < 3 {
            return Err(invalid("grid needs at least 3 points per axis"));
        }
        if !(self.r_min > 0.0 && self.r_max > self.r_min) {
            return Err(invalid("range interval must satisfy 0 < r_min < r_max"));
        }
        if !(self.angle_limit > 0.0 && self.angle_limit <= FRAC_PI_2) {
            return Err(invalid("angle limit must lie in (0, π/2]"));
        }
        Ok(())
    }

    pub fn ranges(&self) -> Vec<f64> {
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        let n = self.n_range - 1;
        (0..self.n_range).map(|i| (a + (b - a) * i as f64 / n as f64).exp()).collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        let n = self.n_angle + 1;
        (1..=self.n_angle)
            .map(|i| -self.angle_limit + 2.0 * self.angle_limit * i as f64 / n as f64)
            .collect()
    }
}

/// Grid with its steering vectors precomputed, reusable across trials.
/// Column `i·n_angle + j` belongs to `(ranges[i], angles[j])`.
#[derive(Clone, Debug)]
pub struct SearchGrid {
    pub spec: GridSpec,
    pub ranges: Vec<f64>,
    pub angles: Vec<f64>,
    wavelength: f64,
    tx: CMat,
    rx: CMat,
}

impl SearchGrid {
    pub fn new(geom: &ArrayGeometry, spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let ranges = spec.ranges();
        let angles = spec.angles();
        let cols = ranges.len() * angles.len();
        let mut tx = CMat::zeros(geom.n_tx, cols);
        let mut rx = CMat::zeros(geom.n_rx, cols);
        for (i, &r) in ranges.iter().enumerate() {
            for (j, &phi) in angles.iter().enumerate() {
                let k = i * angles.len() + j;
                tx.set_column(k, &steering_vector(geom.n_tx, geom.wavelength, r, phi, spec.mode)?);
                rx.set_column(k, &steering_vector(geom.n_rx, geom.wavelength, r, phi, spec.mode)?);
            }
        }
        Ok(Self { spec, ranges, angles, wavelength: geom.wavelength, tx, rx })
    }

    fn steer(&self, n: usize, r: f64, phi: f64) -> CVec {
        steering_vector(n, self.wavelength, r, phi, self.spec.mode).expect("refinement stays inside the region")
    }

    fn cell(&self, k: usize) -> (usize, usize) {
        (k / self.angles.len(), k % self.angles.len())
    }

    /// Refines the best grid cell of `score` (larger is better) by repeated
    /// 3×3 quadratic fits in `(ln r, φ)`, halving the stencil each round.
    fn refine(&self, k: usize, score: impl Fn(f64, f64) -> f64) -> (f64, f64) {
        let (i, j) = self.cell(k);
        let lo = [self.spec.r_min.ln(), self.angles[0]];
        let hi = [self.spec.r_max.ln(), *self.angles.last().unwrap()];
        let mut h = [
            (hi[0] - lo[0]) / (self.ranges.len() - 1) as f64,
            self.angles[1] - self.angles[0],
        ];
        let f = |x: [f64; 2]| score(x[0].exp(), x[1]);
        let mut best = [self.ranges[i].ln(), self.angles[j]];
        let mut best_val = f(best);
        for _ in 0..self.spec.refine_rounds {
            let mut c = best;
            for d in 0..2 {
                c[d] = c[d].clamp(lo[d] + h[d], hi[d] - h[d]);
            }
            let mut v = [[0.0; 3]; 3];
            for (a, row) in v.iter_mut().enumerate() {
                for (b, val) in row.iter_mut().enumerate() {
                    let x = [c[0] + (a as f64 - 1.0) * h[0], c[1] + (b as f64 - 1.0) * h[1]];
                    *val = f(x);
                    if *val > best_val {
                        best_val = *val;
                        best = x;
                    }
                }
            }
            let g = [(v[2][1] - v[0][1]) / 2.0, (v[1][2] - v[1][0]) / 2.0];
            let huu = v[2][1] - 2.0 * v[1][1] + v[0][1];
            let hpp = v[1][2] - 2.0 * v[1][1] + v[1][0];
            let hup = (v[2][2] - v[2][0] - v[0][2] + v[0][0]) / 4.0;
            let det = huu * hpp - hup * hup;
            let step = if huu < 0.0 && det > 0.0 {
                [(-hpp * g[0] + hup * g[1]) / det, (hup * g[0] - huu * g[1]) / det]
            } else {
                let axis = |gd: f64, hd: f64| if hd < 0.0 { -gd / hd } else { gd.signum() };
                [axis(g[0], huu), axis(g[1], hpp)]
            };
            let x = [
                (c[0] + step[0].clamp(-1.0, 1.0) * h[0]).clamp(lo[0], hi[0]),
                (c[1] + step[1].clamp(-1.0, 1.0) * h[1]).clamp(lo[1], hi[1]),
            ];
            let val = f(x);
            if val > best_val {
                best_val = val;
                best = x;
            }
            h = [h[0] / 2.0, h[1] / 2.0];
        }
        (best[0].exp(), best[1])
    }
}

fn argmax(vals: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, v) in vals.enumerate() {
        if v > best.1 {
            best = (k, v);
        }
    }
    best.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointEstimate {
    pub range: f64,
    pub angle: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleEstimate {
    pub range: f64,
    pub angle: f64,
    pub mu: C64,
}

/// Concentrated maximum-likelihood estimate of `(r, φ, μ)`.
///
/// With `Z = Y Xᴴ` and `A = b_r b_tᴴ`, the gain estimate at a candidate is
/// `μ̂ = b_rᴴ Z b_t / (‖b_r‖² b_tᴴ X Xᴴ b_t)` and the residual
/// `‖Y − μ̂AX‖²` is smallest where `|b_rᴴ Z b_t|² / (‖b_r‖² b_tᴴXXᴴb_t)`
/// is largest.
pub fn mle_point(echo: &EchoBatch, grid: &SearchGrid) -> Result<MleEstimate> {
    if echo.y.nrows() != grid.rx.nrows() || echo.x.nrows() != grid.tx.nrows() {
        return Err(invalid("echo dimensions do not match the grid geometry"));
    }
    let z = &echo.y * echo.x.adjoint();
    let g = &echo.x * echo.x.adjoint();
    let parts = |bt: &CVec, br: &CVec| -> (C64, f64) {
        let num = (br.adjoint() * &z * bt)[(0, 0)];
        let den = br.norm_squared() * (bt.adjoint() * &g * bt)[(0, 0)].re;
        (num, den)
    };
    let score = |num: C64, den: f64| if den > 0.0 { num.norm_sqr() / den } else { 0.0 };

    let zt = &z * &grid.tx;
    let gt = &g * &grid.tx;
    let n_rx = grid.rx.nrows() as f64;
    let k = argmax((0..grid.tx.ncols()).map(|k| {
        let num = grid.rx.column(k).dotc(&zt.column(k));
        let den = n_rx * grid.tx.column(k).dotc(&gt.column(k)).re;
        score(num, den)
    }));
    let n_tx = grid.tx.nrows();
    let n_rx = grid.rx.nrows();
    let (range, angle) = grid.refine(k, |r, phi| {
        let (num, den) = parts(&grid.steer(n_tx, r, phi), &grid.steer(n_rx, r, phi));
        score(num, den)
    });
    let (num, den) = parts(&grid.steer(n_tx, range, angle), &grid.steer(n_rx, range, angle));
    let mu = if den > 0.0 { num / den } else { C64::new(0.0, 0.0) };
    Ok(MleEstimate { range, angle, mu })
}

/// 2D MUSIC on the receive array with a one-dimensional signal subspace.
///
/// The noise-subspace projection is `‖E_nᴴ b_r‖² = ‖b_r‖² − |u₁ᴴ b_r|²` with
/// `u₁` the top eigenvector of `(1/L) Y Yᴴ`; the spectrum is its reciprocal.
pub fn music_2d(echo: &EchoBatch, grid: &SearchGrid) -> Result<PointEstimate> {
    let (n_rx, l) = echo.y.shape();
    if n_rx < 2 {
        return Err(invalid("MUSIC needs at least two receive antennas"));
    }
    if l < 2 {
        return Err(invalid("MUSIC needs a frame of at least two snapshots"));
    }
    if n_rx != grid.rx.nrows() {
        return Err(invalid("echo dimensions do not match the grid geometry"));
    }
    let cov = &echo.y * echo.y.adjoint() / cr(l as f64);
    let (_, u) = top_eigenpair(&cov);
    let proj = |b: &CVec| (b.norm_squared() - u.dotc(b).norm_sqr()).max(0.0);
    let k = argmax((0..grid.rx.ncols()).map(|k| -proj(&grid.rx.column(k).into_owned())));
    let (range, angle) = grid.refine(k, |r, phi| -proj(&grid.steer(n_rx, r, phi)));
    Ok(PointEstimate { range, angle })
}

/// MUSIC pseudo-spectrum `1/‖E_nᴴ b_r‖²` over the grid, rows by range.
pub fn music_spectrum(echo: &EchoBatch, grid: &SearchGrid) -> Result<nalgebra::DMatrix<f64>> {
    if echo.y.nrows() < 2 {
        return Err(invalid("MUSIC needs at least two receive antennas"));
    }
    let l = echo.y.ncols() as f64;
    let (_, u) = top_eigenpair(&(&echo.y * echo.y.adjoint() / cr(l)));
    let (nr, na) = (grid.ranges.len(), grid.angles.len());
    Ok(nalgebra::DMatrix::from_fn(nr, na, |i, j| {
        let b = grid.rx.column(i * na + j);
        let d = (b.norm_squared() - u.dotc(&b).norm_sqr()).max(0.0);
        1.0 / d.max(f64::MIN_POSITIVE)
    }))
}

/// LMMSE estimate of `vec(B)` under the prior `CN(0, σ_β² I)`.
///
/// `(X̄ ⊗ I) y = vec(Y Xᴴ)` and `(L R_Xᵀ ⊗ I + c I)⁻¹ = (L R_Xᵀ + c I)⁻¹ ⊗ I`,
/// so `B̂ = Y Xᴴ (X Xᴴ + (σ_n²/σ_β²) I)⁻¹` and only an `n_tx × n_tx` system
/// is solved.
pub fn lmmse_trm(echo: &EchoBatch, prior_variance: f64, noise: f64) -> Result<CVec> {
    if !(prior_variance > 0.0) || !(noise >= 0.0) {
        return Err(invalid("prior variance must be positive and noise nonnegative"));
    }
    let n_tx = echo.x.nrows();
    let gram = &echo.x * echo.x.adjoint() + CMat::identity(n_tx, n_tx) * cr(noise / prior_variance);
    let chol = gram
        .cholesky()
        .ok_or_else(|| invalid("waveform Gram matrix is singular at zero noise"))?;
    // B̂ᴴ = G⁻¹ X Yᴴ
    let bh = chol.solve(&(&echo.x * echo.y.adjoint()));
    Ok(vec_of(&bh.adjoint()))
}

/// One Monte Carlo trial: truth, estimate and per-coordinate squared error.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationRecord {
    pub trial: usize,
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
    pub squared_error: Vec<f64>,
}

impl EstimationRecord {
    pub fn point(trial: usize, truth: (f64, f64), est: (f64, f64)) -> Self {
        Self {
            trial,
            truth: vec![truth.0, truth.1],
            estimate: vec![est.0, est.1],
            squared_error: vec![(est.0 - truth.0).powi(2), (est.1 - truth.1).powi(2)],
        }
    }

    /// Total squared error of a complex response, stored as interleaved
    /// real and imaginary parts.
    pub fn response(trial: usize, truth: &CVec, est: &CVec) -> Self {
        let flat = |v: &CVec| v.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>();
        Self { trial, truth: flat(truth), estimate: flat(est), squared_error: vec![(est - truth).norm_squared()] }
    }
}

/// Mean and standard error of `values`.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Root-mean-square error of coordinate `coord` over `records`, with the
/// delta-method standard error `se(MSE)/(2·RMSE)`.
pub fn rmse(records: &[EstimationRecord], coord: usize) -> (f64, f64) {
    let sq: Vec<f64> = records.iter().map(|r| r.squared_error[coord]).collect();
    let (mse, se) = mean_stderr(&sq);
    let root = mse.sqrt();
    (root, if root > 0.0 { se / (2.0 * root) } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_grid_is_open_and_symmetric() {
        let spec = GridSpec { n_angle: 5, ..GridSpec::for_geometry(&ArrayGeometry::new(4, 4, 1, 28e9).unwrap()) };
        let a = spec.angles();
        assert!(a[0] > -FRAC_PI_2 && a[4] < FRAC_PI_2);
        assert!(a[2].abs() < 1e-15);
        assert!((a[0] + a[4]).abs() < 1e-15);
    }

    #[test]
    fn log_ranges_hit_both_ends() {
        let spec = GridSpec { r_min: 0.5, r_max: 2.0, n_range: 3, ..GridSpec::for_geometry(&ArrayGeometry::new(4, 4, 1, 28e9).unwrap()) };
        let r = spec.ranges();
        assert!((r[0] - 0.5).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12 && (r[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psk_symbols_have_unit_modulus() {
        let mut rng = trial_rng(3, 0);
        let s = draw_symbols(&mut rng, 2, 8, SymbolMode::Psk(4)).unwrap();
        assert!(s.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(draw_symbols(&mut rng, 2, 8, SymbolMode::Psk(1)).is_err());
    }

    #[test]
    fn streams_differ_per_trial() {
        let a: u64 = trial_rng(5, 0).random();
        let b: u64 = trial_rng(5, 1).random();
        assert_ne!(a, b);
    }
}
