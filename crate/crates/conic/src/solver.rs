//! Operator-splitting solver for the real symmetric-cone form.
//!
//! The program is put in the form `min cᵀx s.t. Ax + s = b, s ∈ K` with
//! `K` a product of zero, nonnegative and PSD (svec) cones, equilibrated
//! by Ruiz scaling, and solved by over-relaxed ADMM with an adaptive
//! penalty. The `x`-update solves `(σI + AᵀρA) x = r` either by a dense
//! Cholesky factorization or, for large programs, by Jacobi-preconditioned
//! conjugate gradients.

use crate::expr::LinExpr;
use crate::program::ConicProgram;
use crate::realify::{realify_program, RealProgram};
use nalgebra::linalg::SymmetricEigen;
use nalgebra::{Cholesky, Complex, DMatrix, DVector, Dyn};
use std::f64::consts::SQRT_2;

type C64 = Complex<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

/// Solution method.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Over-relaxed ADMM with PSD projections.
    Splitting,
    /// Primal-dual interior point with Nesterov-Todd scaling.
    InteriorPoint,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    /// Iteration after which the infeasibility test is armed.
    pub infeasibility_after: usize,
    pub rho: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub scaling_iters: usize,
    pub check_every: usize,
    pub adapt_every: usize,
    /// Above this many parameters the x-update uses conjugate gradients.
    pub dense_limit: usize,
    /// Iteration cap of the interior-point method.
    pub ipm_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::Splitting,
            tol: 1e-6,
            max_iter: 50_000,
            infeasibility_after: 5_000,
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            scaling_iters: 15,
            check_every: 10,
            adapt_every: 50,
            dense_limit: 3_000,
            ipm_max_iter: 100,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// Unscaled primal/dual iterates for warm starting a program of the same shape.
#[derive(Clone, Debug)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub x: Vec<f64>,
    pub warm: WarmStart,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Cone {
    Zero,
    Nonneg,
    Psd(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct Block {
    pub(crate) cone: Cone,
    pub(crate) start: usize,
    pub(crate) len: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Csr {
    pub(crate) ncols: usize,
    pub(crate) ptr: Vec<usize>,
    pub(crate) idx: Vec<usize>,
    pub(crate) val: Vec<f64>,
}

impl Csr {
    pub(crate) fn nrows(&self) -> usize {
        self.ptr.len() - 1
    }

    pub(crate) fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.ptr[i]..self.ptr[i + 1];
        (&self.idx[r.clone()], &self.val[r])
    }

    pub(crate) fn mul(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.nrows() {
            let (idx, val) = self.row(i);
            out[i] = idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub(crate) fn mul_t(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.nrows() {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                out[j] += v * yi;
            }
        }
    }
}

/// Problem data in `Ax + s = b` form.
#[derive(Clone, Debug)]
pub(crate) struct Standard {
    pub(crate) a: Csr,
    pub(crate) b: Vec<f64>,
    pub(crate) c: Vec<f64>,
    pub(crate) c0: f64,
    pub(crate) blocks: Vec<Block>,
}

pub(crate) fn standard_form(rp: &RealProgram) -> Standard {
    let mut ptr = vec![0];
    let mut idx = Vec::new();
    let mut val = Vec::new();
    let mut b = Vec::new();
    let mut blocks = Vec::new();
    let mut push_row = |terms: &[(usize, f64)], scale: f64, rhs: f64, b: &mut Vec<f64>| {
        let mut row = LinExpr { constant: 0.0, terms: terms.to_vec() };
        row.compact();
        for &(j, v) in &row.terms {
            idx.push(j);
            val.push(scale * v);
        }
        ptr.push(idx.len());
        b.push(rhs);
    };
    if !rp.eq.is_empty() {
        blocks.push(Block { cone: Cone::Zero, start: b.len(), len: rp.eq.len() });
        for (_, e) in &rp.eq {
            push_row(&e.terms, 1.0, -e.constant, &mut b);
        }
    }
    if !rp.ineq.is_empty() {
        blocks.push(Block { cone: Cone::Nonneg, start: b.len(), len: rp.ineq.len() });
        for (_, e) in &rp.ineq {
            push_row(&e.terms, -1.0, e.constant, &mut b);
        }
    }
    for blk in &rp.psd {
        let start = b.len();
        let mut k = 0;
        for j in 0..blk.dim {
            for i in 0..=j {
                let w = if i == j { 1.0 } else { SQRT_2 };
                let e = &blk.entries[k];
                push_row(&e.terms, -w, w * e.constant, &mut b);
                k += 1;
            }
        }
        blocks.push(Block { cone: Cone::Psd(blk.dim), start, len: b.len() - start });
    }
    let mut c = vec![0.0; rp.n_params];
    for &(j, v) in &rp.objective.terms {
        c[j] += v;
    }
    Standard {
        a: Csr { ncols: rp.n_params, ptr, idx, val },
        b,
        c,
        c0: rp.objective.constant,
        blocks,
    }
}

pub(crate) fn svec_to_mat(s: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                m[(i, i)] = s[k];
            } else {
                let v = s[k] / SQRT_2;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
            k += 1;
        }
    }
    m
}

pub(crate) fn mat_to_svec(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for j in 0..n {
        for i in 0..=j {
            out[k] = if i == j { m[(i, i)] } else { SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]) };
            k += 1;
        }
    }
}

fn project_psd(s: &mut [f64], n: usize) {
    let m = svec_to_mat(s, n);
    let eig = SymmetricEigen::new(m);
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return;
    }
    let mut p = DMatrix::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            let v = eig.eigenvectors.column(k);
            p.ger(l, &v, &v, 1.0);
        }
    }
    mat_to_svec(&p, s);
}

fn min_eig(s: &[f64], n: usize) -> f64 {
    let eig = SymmetricEigen::new(svec_to_mat(s, n));
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn project_cone(blocks: &[Block], s: &mut [f64]) {
    for blk in blocks {
        let seg = &mut s[blk.start..blk.start + blk.len];
        match blk.cone {
            Cone::Zero => seg.iter_mut().for_each(|v| *v = 0.0),
            Cone::Nonneg => seg.iter_mut().for_each(|v| *v = v.max(0.0)),
            Cone::Psd(n) => project_psd(seg, n),
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ruiz equilibration. Returns row scaling `d`, column scaling `e`, and the
/// cost scaling `k`; the scaled data replace the originals.
fn equilibrate(data: &mut Standard, iters: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let m = data.a.nrows();
    let n = data.a.ncols;
    let mut d = vec![1.0; m];
    let mut e = vec![1.0; n];
    for _ in 0..iters {
        let mut rn = vec![0.0f64; m];
        let mut cn = vec![0.0f64; n];
        for i in 0..m {
            let (idx, val) = data.a.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                rn[i] = rn[i].max(v.abs());
                cn[j] = cn[j].max(v.abs());
            }
        }
        for blk in &data.blocks {
            if let Cone::Psd(_) = blk.cone {
                let r = blk.start..blk.start + blk.len;
                let mx = rn[r.clone()].iter().copied().fold(0.0, f64::max);
                rn[r].iter_mut().for_each(|v| *v = mx);
            }
        }
        let dr: Vec<f64> = rn
            .iter()
            .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        let dc: Vec<f64> = cn
            .iter()
            .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        for i in 0..m {
            let r = data.a.ptr[i]..data.a.ptr[i + 1];
            for k in r {
                data.a.val[k] *= dr[i] * dc[data.a.idx[k]];
            }
            d[i] *= dr[i];
            data.b[i] *= dr[i];
        }
        for j in 0..n {
            e[j] *= dc[j];
            data.c[j] *= dc[j];
        }
    }
    let cmax = inf_norm(&data.c);
    let k = if cmax > 0.0 { (1.0 / cmax).clamp(1e-4, 1e4) } else { 1.0 };
    data.c.iter_mut().for_each(|v| *v *= k);
    (d, e, k)
}

enum Kkt {
    Dense(Cholesky<f64, Dyn>),
    Cg { diag: Vec<f64> },
}

fn factor(a: &Csr, rho: &[f64], sigma: f64, dense_limit: usize) -> Kkt {
    let n = a.ncols;
    if n <= dense_limit {
        let mut k = DMatrix::<f64>::zeros(n, n);
        {
            let data = k.as_mut_slice();
            for i in 0..a.nrows() {
                let (idx, val) = a.row(i);
                let r = rho[i];
                for (p, (&jp, &vp)) in idx.iter().zip(val).enumerate() {
                    let w = r * vp;
                    for (&jq, &vq) in idx[..=p].iter().zip(&val[..=p]) {
                        data[jq * n + jp] += w * vq;
                    }
                }
            }
        }
        // fill the upper triangle from the lower one and add the proximal term
        for j in 0..n {
            k[(j, j)] += sigma;
            for i in 0..j {
                let v = k[(j, i)] + k[(i, j)];
                k[(j, i)] = v;
                k[(i, j)] = v;
            }
        }
        let chol = Cholesky::new(k).expect("KKT matrix is positive definite by construction");
        Kkt::Dense(chol)
    } else {
        let mut diag = vec![sigma; n];
        for i in 0..a.nrows() {
            let (idx, val) = a.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                diag[j] += rho[i] * v * v;
            }
        }
        Kkt::Cg { diag }
    }
}

struct CgWork {
    ax: Vec<f64>,
    aty: Vec<f64>,
}

fn kkt_apply(a: &Csr, rho: &[f64], sigma: f64, v: &[f64], out: &mut [f64], w: &mut CgWork) {
    a.mul(v, &mut w.ax);
    for (t, r) in w.ax.iter_mut().zip(rho) {
        *t *= r;
    }
    a.mul_t(&w.ax, &mut w.aty);
    for ((o, &t), &vi) in out.iter_mut().zip(&w.aty).zip(v) {
        *o = t + sigma * vi;
    }
}

fn kkt_solve(kkt: &Kkt, a: &Csr, rho: &[f64], sigma: f64, rhs: &[f64], x: &mut [f64], tol: f64) {
    match kkt {
        Kkt::Dense(chol) => {
            let sol = chol.solve(&DVector::from_column_slice(rhs));
            x.copy_from_slice(sol.as_slice());
        }
        Kkt::Cg { diag } => {
            let n = rhs.len();
            let mut w = CgWork { ax: vec![0.0; a.nrows()], aty: vec![0.0; n] };
            let mut r = vec![0.0; n];
            kkt_apply(a, rho, sigma, x, &mut r, &mut w);
            for (ri, &bi) in r.iter_mut().zip(rhs) {
                *ri = bi - *ri;
            }
            let target = tol * inf_norm(rhs).max(1e-30);
            let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
            let mut p = z.clone();
            let mut rz = dot(&r, &z);
            let mut ap = vec![0.0; n];
            for _ in 0..10 * n.max(10) {
                if inf_norm(&r) <= target {
                    break;
                }
                kkt_apply(a, rho, sigma, &p, &mut ap, &mut w);
                let alpha = rz / dot(&p, &ap);
                for i in 0..n {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                for i in 0..n {
                    z[i] = r[i] / diag[i];
                }
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for i in 0..n {
                    p[i] = z[i] + beta * p[i];
                }
            }
        }
    }
}

fn row_rho(blocks: &[Block], m: usize, rho: f64) -> Vec<f64> {
    let mut out = vec![rho; m];
    for blk in blocks {
        if let Cone::Zero = blk.cone {
            out[blk.start..blk.start + blk.len].iter_mut().for_each(|v| *v = 1e3 * rho);
        }
    }
    out
}

/// Solve a complex-modeled program after lifting it to real form.
pub fn solve(program: &ConicProgram, opts: &SolverOptions) -> ConicSolution {
    solve_warm(program, opts, None)
}

pub fn solve_warm(program: &ConicProgram, opts: &SolverOptions, warm: Option<&WarmStart>) -> ConicSolution {
    let rp = realify_program(program);
    let mut sol = solve_real(&rp, opts, warm);
    snap_psd_vars(program, &rp, &mut sol);
    sol.objective = program.objective_value(&sol.x);
    sol
}

/// Replace variables constrained as `X ⪰ 0` by the projected cone iterate,
/// which lies exactly in the cone.
fn snap_psd_vars(program: &ConicProgram, rp: &RealProgram, sol: &mut ConicSolution) {
    let data = standard_form(rp);
    for (blk, sblk) in rp.psd.iter().zip(data.blocks.iter().filter(|b| matches!(b.cone, Cone::Psd(_)))) {
        let Some(v) = blk.var else { continue };
        let s = &sol.warm.s[sblk.start..sblk.start + sblk.len];
        let m = svec_to_mat(s, blk.dim);
        let w = if blk.complex_origin {
            let n = blk.dim / 2;
            DMatrix::from_fn(n, n, |i, j| {
                C64::new(
                    0.5 * (m[(i, j)] + m[(n + i, n + j)]),
                    0.5 * (m[(n + i, j)] - m[(i, n + j)]),
                )
            })
        } else {
            m.map(|v| C64::new(v, 0.0))
        };
        program.write_var(v, &w, &mut sol.x);
    }
}

pub fn solve_real(rp: &RealProgram, opts: &SolverOptions, warm: Option<&WarmStart>) -> ConicSolution {
    let orig = standard_form(rp);
    if opts.method == Method::InteriorPoint {
        let r = crate::ipm::solve(&orig, opts.tol, opts.ipm_max_iter);
        let status = if r.converged {
            SolveStatus::Optimal
        } else if r.infeasible {
            SolveStatus::Infeasible
        } else {
            SolveStatus::MaxIterations
        };
        return ConicSolution {
            status,
            objective: dot(&orig.c, &r.x) + orig.c0,
            primal_residual: r.pres,
            dual_residual: r.dres,
            gap: r.gap,
            iterations: r.iterations,
            x: r.x.clone(),
            warm: WarmStart { x: r.x, s: r.s, y: r.z.iter().map(|v| -v).collect() },
        };
    }
    let mut data = orig.clone();
    let (d, e, k) = equilibrate(&mut data, opts.scaling_iters);
    let m = data.a.nrows();
    let n = data.a.ncols;
    let blocks = data.blocks.clone();

    let mut x = vec![0.0; n];
    let mut s = vec![0.0; m];
    let mut y = vec![0.0; m];
    if let Some(w) = warm {
        if w.x.len() == n && w.s.len() == m && w.y.len() == m {
            for j in 0..n {
                x[j] = w.x[j] / e[j];
            }
            for i in 0..m {
                s[i] = w.s[i] * d[i];
                y[i] = k * w.y[i] / d[i];
            }
        }
    }

    let mut rho_base = opts.rho;
    let mut rho = row_rho(&blocks, m, rho_base);
    let mut kkt = factor(&data.a, &rho, opts.sigma, opts.dense_limit);

    let mut xt = x.clone();
    let mut st = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let mut tmp_m = vec![0.0; m];
    let mut tmp_n = vec![0.0; n];
    let mut y_check = y.clone();

    let mut status = SolveStatus::MaxIterations;
    let mut iter = 0;
    let mut res = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let cg_tol = 1e-3 * opts.tol;

    while iter < opts.max_iter {
        iter += 1;
        for i in 0..m {
            tmp_m[i] = rho[i] * (data.b[i] - s[i]) + y[i];
        }
        data.a.mul_t(&tmp_m, &mut tmp_n);
        for j in 0..n {
            rhs[j] = opts.sigma * x[j] - data.c[j] + tmp_n[j];
        }
        kkt_solve(&kkt, &data.a, &rho, opts.sigma, &rhs, &mut xt, cg_tol);
        data.a.mul(&xt, &mut st);
        for i in 0..m {
            st[i] = data.b[i] - st[i];
        }
        for j in 0..n {
            x[j] = opts.alpha * xt[j] + (1.0 - opts.alpha) * x[j];
        }
        let mut s_new: Vec<f64> = (0..m)
            .map(|i| {
                let relaxed = opts.alpha * st[i] + (1.0 - opts.alpha) * s[i];
                tmp_m[i] = relaxed;
                relaxed + y[i] / rho[i]
            })
            .collect();
        project_cone(&blocks, &mut s_new);
        for i in 0..m {
            y[i] += rho[i] * (tmp_m[i] - s_new[i]);
        }
        s = s_new;

        if iter % opts.check_every != 0 && iter != opts.max_iter {
            continue;
        }

        // residuals in the original units
        let (pr, dr, gap, scaled_ratio) = residuals(&orig, &data, &d, &e, k, &x, &s, &y);
        res = (pr, dr, gap);
        if pr <= opts.tol && dr <= opts.tol && gap <= opts.tol {
            status = SolveStatus::Optimal;
            break;
        }
        if !(pr.is_finite() && dr.is_finite()) {
            status = SolveStatus::Infeasible;
            break;
        }
        if iter >= opts.infeasibility_after
            && certifies_infeasible(&orig, &data, &d, &e, k, &y, &y_check, opts.tol)
        {
            status = SolveStatus::Infeasible;
            break;
        }
        y_check.copy_from_slice(&y);

        if iter % opts.adapt_every == 0 && scaled_ratio.is_finite() && scaled_ratio > 0.0 {
            let ratio = scaled_ratio.sqrt();
            if !(0.2..=5.0).contains(&ratio) {
                rho_base = (rho_base * ratio).clamp(1e-6, 1e6);
                let new_rho = row_rho(&blocks, m, rho_base);
                rho = new_rho;
                kkt = factor(&data.a, &rho, opts.sigma, opts.dense_limit);
            }
        }
    }

    // unscale
    let xu: Vec<f64> = (0..n).map(|j| e[j] * x[j]).collect();
    let su: Vec<f64> = (0..m).map(|i| s[i] / d[i]).collect();
    let yu: Vec<f64> = (0..m).map(|i| d[i] * y[i] / k).collect();
    let objective = dot(&orig.c, &xu) + orig.c0;
    ConicSolution {
        status,
        objective,
        primal_residual: res.0,
        dual_residual: res.1,
        gap: res.2,
        iterations: iter,
        x: xu.clone(),
        warm: WarmStart { x: xu, s: su, y: yu },
    }
}

/// Normalized primal residual, dual residual and gap in original units,
/// plus the primal/dual ratio in scaled units used for penalty adaptation.
#[allow(clippy::too_many_arguments)]
fn residuals(
    orig: &Standard,
    data: &Standard,
    d: &[f64],
    e: &[f64],
    k: f64,
    x: &[f64],
    s: &[f64],
    y: &[f64],
) -> (f64, f64, f64, f64) {
    let m = y.len();
    let n = x.len();
    let mut ax = vec![0.0; m];
    data.a.mul(x, &mut ax);
    let mut aty = vec![0.0; n];
    data.a.mul_t(y, &mut aty);

    let rp_s: Vec<f64> = (0..m).map(|i| ax[i] + s[i] - data.b[i]).collect();
    let rd_s: Vec<f64> = (0..n).map(|j| data.c[j] - aty[j]).collect();
    let p_norm_s = inf_norm(&ax).max(inf_norm(s)).max(inf_norm(&data.b)).max(1e-12);
    let d_norm_s = inf_norm(&aty).max(inf_norm(&data.c)).max(1e-12);
    let scaled_ratio = (inf_norm(&rp_s) / p_norm_s) / (inf_norm(&rd_s) / d_norm_s).max(1e-300);

    let rp: Vec<f64> = (0..m).map(|i| rp_s[i] / d[i]).collect();
    let axu: Vec<f64> = (0..m).map(|i| ax[i] / d[i]).collect();
    let su: Vec<f64> = (0..m).map(|i| s[i] / d[i]).collect();
    let rd: Vec<f64> = (0..n).map(|j| rd_s[j] / (k * e[j])).collect();
    let atyu: Vec<f64> = (0..n).map(|j| aty[j] / (k * e[j])).collect();
    let xu: Vec<f64> = (0..n).map(|j| e[j] * x[j]).collect();
    let yu: Vec<f64> = (0..m).map(|i| d[i] * y[i] / k).collect();

    let pr = inf_norm(&rp) / (1.0 + inf_norm(&axu).max(inf_norm(&su)).max(inf_norm(&orig.b)));
    let dr = inf_norm(&rd) / (1.0 + inf_norm(&atyu).max(inf_norm(&orig.c)));
    let pobj = dot(&orig.c, &xu);
    let dobj = dot(&orig.b, &yu);
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    (pr, dr, gap, scaled_ratio)
}

/// Farkas-type test on the dual increment: `z = −Δy ∈ K*`, `Aᵀz ≈ 0`, `bᵀz < 0`.
#[allow(clippy::too_many_arguments)]
fn certifies_infeasible(
    orig: &Standard,
    data: &Standard,
    d: &[f64],
    e: &[f64],
    k: f64,
    y: &[f64],
    y_prev: &[f64],
    tol: f64,
) -> bool {
    let m = y.len();
    let n = e.len();
    let dy_s: Vec<f64> = (0..m).map(|i| y[i] - y_prev[i]).collect();
    let dy: Vec<f64> = (0..m).map(|i| d[i] * dy_s[i] / k).collect();
    let norm = inf_norm(&dy);
    if norm < 1e-12 {
        return false;
    }
    let mut aty = vec![0.0; n];
    data.a.mul_t(&dy_s, &mut aty);
    let aty_u: Vec<f64> = (0..n).map(|j| aty[j] / (k * e[j])).collect();
    let eps = tol.max(1e-8) * 10.0;
    if inf_norm(&aty_u) > eps * norm {
        return false;
    }
    if dot(&orig.b, &dy) <= eps * norm * (1.0 + inf_norm(&orig.b)) {
        return false;
    }
    for blk in &orig.blocks {
        let seg: Vec<f64> = dy[blk.start..blk.start + blk.len].iter().map(|v| -v).collect();
        let ok = match blk.cone {
            Cone::Zero => true,
            Cone::Nonneg => seg.iter().all(|&v| v >= -eps * norm),
            Cone::Psd(nn) => min_eig(&seg, nn) >= -eps * norm,
        };
        if !ok {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{CExpr, MatrixExpr};

    #[test]
    fn svec_roundtrip() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 3.0, 6.0, 9.0]);
        let mut s = vec![0.0; 6];
        mat_to_svec(&m, &mut s);
        assert_eq!(svec_to_mat(&s, 3), m);
        let fro2: f64 = s.iter().map(|v| v * v).sum();
        assert!((fro2 - m.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn psd_projection_clips_negative_part() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let mut s = vec![0.0; 3];
        mat_to_svec(&m, &mut s);
        project_psd(&mut s, 2);
        assert!((s[0] - 1.0).abs() < 1e-14 && s[1].abs() < 1e-14 && s[2].abs() < 1e-14);
    }

    #[test]
    fn scalar_lp() {
        let mut p = ConicProgram::new();
        let t = p.scalar("t");
        p.minimize(p.scalar_expr(t));
        p.add_ge("lower", p.scalar_expr(t) - 1.0);
        let sol = solve(&p, &SolverOptions::default());
        assert!(sol.is_optimal());
        assert!((sol.objective - 1.0).abs() < 1e-5);
    }

    #[test]
    fn two_by_two_determinant() {
        // min t s.t. [[t, 1], [1, t]] ⪰ 0
        let mut p = ConicProgram::new();
        let t = p.scalar("t");
        let te = p.scalar_expr(t);
        let mut m = MatrixExpr::zeros(2, false);
        m.set(0, 0, CExpr::real(te.clone()));
        m.set(1, 1, CExpr::real(te.clone()));
        m.set(0, 1, CExpr::real(LinExpr::constant(1.0)));
        p.add_psd("lmi", m);
        p.minimize(te);
        let sol = solve(&p, &SolverOptions::default());
        assert!(sol.is_optimal());
        assert!((sol.objective - 1.0).abs() < 1e-4);
    }

    #[test]
    fn infeasible_pair_is_reported() {
        let mut p = ConicProgram::new();
        let t = p.scalar("t");
        p.minimize(p.scalar_expr(t));
        p.add_ge("a", p.scalar_expr(t) - 2.0);
        p.add_ge("b", LinExpr::constant(1.0) - p.scalar_expr(t));
        let opts = SolverOptions { infeasibility_after: 100, ..Default::default() };
        let sol = solve(&p, &opts);
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }
}
