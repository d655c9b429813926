//! Primal-dual interior-point method with Nesterov-Todd scaling and
//! Mehrotra predictor-corrector steps, for the same `Ax + s = b, s ∈ K`
//! form as the splitting solver. Rows of the zero cone are handled as
//! equality constraints.

use crate::solver::{mat_to_svec, svec_to_mat, Cone, Standard};
use nalgebra::linalg::SymmetricEigen;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::f64::consts::SQRT_2;

pub(crate) struct IpmResult {
    pub converged: bool,
    pub infeasible: bool,
    pub iterations: usize,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    /// Multipliers with `c + Aᵀz = 0` at optimality.
    pub z: Vec<f64>,
    pub pres: f64,
    pub dres: f64,
    pub gap: f64,
}

/// Per-parameter entries of one PSD block: `(a, b, g)` with `a ≤ b` and `g`
/// the matrix entry at `(a, b)` (and `(b, a)`).
struct BlockCols {
    dim: usize,
    start: usize,
    len: usize,
    params: Vec<usize>,
    entries: Vec<Vec<(usize, usize, f64)>>,
}

enum Scaling {
    Lp { d: Vec<f64>, w: Vec<f64>, lambda: Vec<f64> },
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64>, q: DMatrix<f64>, lambda: Vec<f64> },
}

struct Layout {
    eq: Vec<usize>,
    lp: Vec<usize>,
    psd: Vec<BlockCols>,
    degree: usize,
}

fn layout(data: &Standard) -> Layout {
    let mut eq = Vec::new();
    let mut lp = Vec::new();
    let mut psd = Vec::new();
    let mut degree = 0;
    for blk in &data.blocks {
        let rows = blk.start..blk.start + blk.len;
        match blk.cone {
            Cone::Zero => eq.extend(rows),
            Cone::Nonneg => {
                degree += blk.len;
                lp.extend(rows)
            }
            Cone::Psd(n) => {
                degree += n;
                let mut pos = Vec::with_capacity(blk.len);
                for j in 0..n {
                    for i in 0..=j {
                        pos.push((i, j));
                    }
                }
                let mut map: std::collections::BTreeMap<usize, Vec<(usize, usize, f64)>> = Default::default();
                for (k, &(i, j)) in pos.iter().enumerate() {
                    let (idx, val) = data.a.row(blk.start + k);
                    for (&p, &v) in idx.iter().zip(val) {
                        let g = if i == j { v } else { v / SQRT_2 };
                        map.entry(p).or_default().push((i, j, g));
                    }
                }
                let (params, entries) = map.into_iter().unzip();
                psd.push(BlockCols { dim: n, start: blk.start, len: blk.len, params, entries });
            }
        }
    }
    Layout { eq, lp, psd, degree }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest `α` with `x + α dx` in the cone (∞ when unbounded), using a
/// Cholesky factor `l` of `x` for PSD blocks.
fn max_step_psd(l: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let linv = l.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(l.nrows(), l.ncols()));
    let m = sym(&(&linv * dx * linv.transpose()));
    let mn = SymmetricEigen::new(m).eigenvalues.min();
    if mn >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / mn
    }
}

fn max_step_lp(x: &[f64], dx: &[f64]) -> f64 {
    x.iter().zip(dx).filter(|(_, d)| **d < 0.0).map(|(x, d)| -x / d).fold(f64::INFINITY, f64::min)
}

fn chol_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    Cholesky::new(sym(m)).map(|c| c.l())
}

/// Shifts a cone vector into the interior: adds `(1 + t)e` when the
/// smallest eigenvalue `−t` is not positive.
fn make_interior(v: &mut [f64], lay: &Layout) {
    for &i in &lay.lp {
        if v[i] <= 0.0 {
            v[i] = 1.0;
        }
    }
    for b in &lay.psd {
        let seg = &mut v[b.start..b.start + b.len];
        let m = svec_to_mat(seg, b.dim);
        let mn = SymmetricEigen::new(m.clone()).eigenvalues.min();
        if mn <= 0.0 {
            let shifted = m + DMatrix::identity(b.dim, b.dim) * (1.0 - mn);
            mat_to_svec(&shifted, seg);
        }
    }
}

struct Kkt {
    h: Cholesky<f64, Dyn>,
    /// Cholesky of `A_e H⁻¹ A_eᵀ` and `H⁻¹A_eᵀ` when equalities exist.
    eq: Option<(Cholesky<f64, Dyn>, DMatrix<f64>)>,
}

fn scaled_hessian(data: &Standard, lay: &Layout, scal: &[Scaling]) -> DMatrix<f64> {
    let n = data.a.ncols;
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut it = scal.iter();
    if !lay.lp.is_empty() {
        if let Some(Scaling::Lp { d, .. }) = it.next() {
            for (k, &row) in lay.lp.iter().enumerate() {
                let (idx, val) = data.a.row(row);
                for (p, (&jp, &vp)) in idx.iter().zip(val).enumerate() {
                    let w = d[k] * vp;
                    for (&jq, &vq) in idx[..=p].iter().zip(&val[..=p]) {
                        h[(jp.max(jq), jp.min(jq))] += w * vq;
                    }
                }
            }
        }
    }
    for b in &lay.psd {
        let Some(Scaling::Psd { q, .. }) = it.next() else { unreachable!() };
        let m = b.dim;
        let mut mats: Vec<DMatrix<f64>> = Vec::with_capacity(b.params.len());
        for ent in &b.entries {
            let mut mm = DMatrix::<f64>::zeros(m, m);
            for &(a, c, g) in ent {
                if a == c {
                    mm.ger(g, &q.column(a), &q.column(a), 1.0);
                } else {
                    mm.ger(g, &q.column(a), &q.column(c), 1.0);
                    mm.ger(g, &q.column(c), &q.column(a), 1.0);
                }
            }
            mats.push(mm);
        }
        for (p, mp) in mats.iter().enumerate() {
            let jp = b.params[p];
            for (qi, ent) in b.entries[..=p].iter().enumerate() {
                let jq = b.params[qi];
                let mut v = 0.0;
                for &(a, c, g) in ent {
                    v += if a == c { g * mp[(a, a)] } else { 2.0 * g * mp[(a, c)] };
                }
                h[(jp.max(jq), jp.min(jq))] += v;
            }
        }
    }
    for j in 0..n {
        for i in 0..j {
            h[(i, j)] = h[(j, i)];
        }
    }
    h
}

fn factor(data: &Standard, lay: &Layout, scal: &[Scaling]) -> Option<Kkt> {
    let h = scaled_hessian(data, lay, scal);
    let n = h.nrows();
    // diagonal-relative regularization; the diagonal spans many decades
    let scale = (0..n).map(|i| h[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut reg = 1e-14;
    let chol = loop {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += reg * h[(i, i)] + 1e-30 * scale;
        }
        if let Some(c) = Cholesky::new(hr) {
            break c;
        }
        reg *= 100.0;
        if reg > 1e-2 {
            return None;
        }
    };
    let eq = if lay.eq.is_empty() {
        None
    } else {
        let ne = lay.eq.len();
        let mut at = DMatrix::<f64>::zeros(n, ne);
        for (k, &row) in lay.eq.iter().enumerate() {
            let (idx, val) = data.a.row(row);
            for (&j, &v) in idx.iter().zip(val) {
                at[(j, k)] += v;
            }
        }
        let hinv_at = chol.solve(&at);
        let mut s = at.transpose() * &hinv_at;
        let sc = (0..ne).map(|i| s[(i, i)]).fold(0.0, f64::max).max(1e-300);
        for i in 0..ne {
            s[(i, i)] += 1e-13 * sc;
        }
        Some((Cholesky::new(sym(&s))?, hinv_at))
    };
    Some(Kkt { h: chol, eq })
}

/// Applies `(WᵀW)⁻¹` to a cone vector.
fn apply_d(lay: &Layout, scal: &[Scaling], v: &[f64], out: &mut [f64]) {
    let mut it = scal.iter();
    if !lay.lp.is_empty() {
        if let Some(Scaling::Lp { d, .. }) = it.next() {
            for (k, &row) in lay.lp.iter().enumerate() {
                out[row] = d[k] * v[row];
            }
        }
    }
    for b in &lay.psd {
        let Some(Scaling::Psd { q, .. }) = it.next() else { unreachable!() };
        let m = svec_to_mat(&v[b.start..b.start + b.len], b.dim);
        mat_to_svec(&(q * m * q), &mut out[b.start..b.start + b.len]);
    }
}

/// Complementarity right-hand side in the scaled space, per block.
enum Rc {
    Lp(Vec<f64>),
    Psd(DMatrix<f64>),
}

struct Direction {
    dx: Vec<f64>,
    ds: Vec<f64>,
    dz: Vec<f64>,
}

/// Solves the Newton system for residuals `r_d = c + Aᵀz`, `r_p = b − Ax − s`
/// and complementarity target `rc`.
#[allow(clippy::too_many_arguments)]
fn newton(
    data: &Standard,
    lay: &Layout,
    scal: &[Scaling],
    kkt: &Kkt,
    rd: &[f64],
    rp: &[f64],
    rc: &[Rc],
) -> Direction {
    let n = data.a.ncols;
    let m = data.a.nrows();
    // u = Wᵀ(λ \ rc), the part of ds fixed by the complementarity target
    let mut u = vec![0.0; m];
    let mut it = scal.iter().zip(rc);
    if !lay.lp.is_empty() {
        if let Some((Scaling::Lp { w, lambda, .. }, Rc::Lp(r))) = it.next() {
            for (k, &row) in lay.lp.iter().enumerate() {
                u[row] = w[k] * r[k] / lambda[k];
            }
        }
    }
    for b in &lay.psd {
        let Some((Scaling::Psd { r, lambda, .. }, Rc::Psd(t))) = it.next() else { unreachable!() };
        let t = DMatrix::from_fn(b.dim, b.dim, |i, j| 2.0 * t[(i, j)] / (lambda[i] + lambda[j]));
        mat_to_svec(&(r * t * r.transpose()), &mut u[b.start..b.start + b.len]);
    }
    let mut rhs_c = vec![0.0; m];
    for &i in lay.lp.iter().chain(lay.psd.iter().flat_map(|b| b.start..b.start + b.len).collect::<Vec<_>>().iter()) {
        rhs_c[i] = rp[i] - u[i];
    }
    let mut d_rhs = vec![0.0; m];
    apply_d(lay, scal, &rhs_c, &mut d_rhs);
    let mut at_d = vec![0.0; n];
    data.a.mul_t(&d_rhs, &mut at_d);
    let r1 = DVector::from_iterator(n, (0..n).map(|j| -rd[j] + at_d[j]));

    let mut dz = vec![0.0; m];
    let dx = match &kkt.eq {
        None => kkt.h.solve(&r1),
        Some((schur, hinv_at)) => {
            let hinv_r1 = kkt.h.solve(&r1);
            let mut t = hinv_at.transpose() * &r1;
            for (k, &row) in lay.eq.iter().enumerate() {
                t[k] -= rp[row];
            }
            let dze = schur.solve(&t);
            for (k, &row) in lay.eq.iter().enumerate() {
                dz[row] = dze[k];
            }
            hinv_r1 - hinv_at * dze
        }
    };
    let dx: Vec<f64> = dx.iter().copied().collect();
    let mut adx = vec![0.0; m];
    data.a.mul(&dx, &mut adx);
    let mut tmp = vec![0.0; m];
    for &i in &lay.lp {
        tmp[i] = adx[i] - rhs_c[i];
    }
    for b in &lay.psd {
        for i in b.start..b.start + b.len {
            tmp[i] = adx[i] - rhs_c[i];
        }
    }
    let mut dzc = vec![0.0; m];
    apply_d(lay, scal, &tmp, &mut dzc);
    let mut ds = vec![0.0; m];
    for &i in &lay.lp {
        dz[i] = dzc[i];
        ds[i] = rp[i] - adx[i];
    }
    for b in &lay.psd {
        for i in b.start..b.start + b.len {
            dz[i] = dzc[i];
            ds[i] = rp[i] - adx[i];
        }
    }
    Direction { dx, ds, dz }
}

/// `newton` followed by iterative refinement on the dual equation
/// `Aᵀdz = −r_d`, which loses accuracy as the scaling degenerates.
#[allow(clippy::too_many_arguments)]
fn newton_refined(
    data: &Standard,
    lay: &Layout,
    scal: &[Scaling],
    kkt: &Kkt,
    rd: &[f64],
    rp: &[f64],
    rc: &[Rc],
    zero_rc: &[Rc],
) -> Direction {
    let n = data.a.ncols;
    let m = data.a.nrows();
    let mut dir = newton(data, lay, scal, kkt, rd, rp, rc);
    let mut atdz = vec![0.0; n];
    let dual_err = |dir: &Direction, atdz: &mut Vec<f64>| {
        data.a.mul_t(&dir.dz, atdz);
        let e: Vec<f64> = (0..n).map(|j| atdz[j] + rd[j]).collect();
        (norm2(&e), e)
    };
    let (mut err, mut e) = dual_err(&dir, &mut atdz);
    let zero_p = vec![0.0; m];
    for _ in 0..3 {
        if err <= 1e-14 * (1.0 + norm2(rd)) {
            break;
        }
        let corr = newton(data, lay, scal, kkt, &e, &zero_p, zero_rc);
        let mut next = Direction { dx: dir.dx.clone(), ds: dir.ds.clone(), dz: dir.dz.clone() };
        for (a, b) in next.dx.iter_mut().zip(&corr.dx) {
            *a += b;
        }
        for (a, b) in next.ds.iter_mut().zip(&corr.ds) {
            *a += b;
        }
        for (a, b) in next.dz.iter_mut().zip(&corr.dz) {
            *a += b;
        }
        let (err2, e2) = dual_err(&next, &mut atdz);
        if err2 >= err {
            break;
        }
        dir = next;
        err = err2;
        e = e2;
    }
    dir
}

fn compute_scaling(lay: &Layout, s: &[f64], z: &[f64]) -> Option<Vec<Scaling>> {
    let mut out = Vec::new();
    if !lay.lp.is_empty() {
        let mut d = Vec::new();
        let mut w = Vec::new();
        let mut lambda = Vec::new();
        for &i in &lay.lp {
            if !(s[i] > 0.0 && z[i] > 0.0) {
                return None;
            }
            d.push(z[i] / s[i]);
            w.push((s[i] / z[i]).sqrt());
            lambda.push((s[i] * z[i]).sqrt());
        }
        out.push(Scaling::Lp { d, w, lambda });
    }
    for b in &lay.psd {
        let sm = svec_to_mat(&s[b.start..b.start + b.len], b.dim);
        let zm = svec_to_mat(&z[b.start..b.start + b.len], b.dim);
        let ls = chol_lower(&sm)?;
        let lz = chol_lower(&zm)?;
        let svd = (lz.transpose() * &ls).svd(false, true);
        let vt = svd.v_t?;
        let lambda: Vec<f64> = svd.singular_values.iter().copied().collect();
        if lambda.iter().any(|&l| !(l > 0.0)) {
            return None;
        }
        let v = vt.transpose();
        let isq = DMatrix::from_diagonal(&DVector::from_iterator(b.dim, lambda.iter().map(|l| 1.0 / l.sqrt())));
        let sq = DMatrix::from_diagonal(&DVector::from_iterator(b.dim, lambda.iter().map(|l| l.sqrt())));
        let r = &ls * &v * isq;
        let ls_inv = ls.clone().try_inverse()?;
        let rinv = sq * v.transpose() * ls_inv;
        let q = sym(&(rinv.transpose() * &rinv));
        out.push(Scaling::Psd { r, rinv, q, lambda });
    }
    Some(out)
}

/// Scaled complementarity data: `λ∘λ` and the scaled directions.
fn scaled_dirs(lay: &Layout, scal: &[Scaling], ds: &[f64], dz: &[f64]) -> Vec<(Rc, Rc)> {
    let mut out = Vec::new();
    let mut it = scal.iter();
    if !lay.lp.is_empty() {
        if let Some(Scaling::Lp { w, .. }) = it.next() {
            let a = lay.lp.iter().enumerate().map(|(k, &i)| ds[i] / w[k]).collect();
            let b = lay.lp.iter().enumerate().map(|(k, &i)| dz[i] * w[k]).collect();
            out.push((Rc::Lp(a), Rc::Lp(b)));
        }
    }
    for b in &lay.psd {
        let Some(Scaling::Psd { r, rinv, .. }) = it.next() else { unreachable!() };
        let dsm = svec_to_mat(&ds[b.start..b.start + b.len], b.dim);
        let dzm = svec_to_mat(&dz[b.start..b.start + b.len], b.dim);
        out.push((Rc::Psd(sym(&(rinv * dsm * rinv.transpose()))), Rc::Psd(sym(&(r.transpose() * dzm * r)))));
    }
    out
}

fn complementarity_rhs(scal: &[Scaling], sigma_mu: f64, corr: Option<&[(Rc, Rc)]>) -> Vec<Rc> {
    scal.iter()
        .enumerate()
        .map(|(k, sc)| match sc {
            Scaling::Lp { lambda, .. } => {
                let mut r: Vec<f64> = lambda.iter().map(|l| sigma_mu - l * l).collect();
                if let Some(c) = corr {
                    if let (Rc::Lp(a), Rc::Lp(b)) = &c[k] {
                        for i in 0..r.len() {
                            r[i] -= a[i] * b[i];
                        }
                    }
                }
                Rc::Lp(r)
            }
            Scaling::Psd { lambda, .. } => {
                let n = lambda.len();
                let mut r = DMatrix::from_fn(n, n, |i, j| if i == j { sigma_mu - lambda[i] * lambda[i] } else { 0.0 });
                if let Some(c) = corr {
                    if let (Rc::Psd(a), Rc::Psd(b)) = &c[k] {
                        r -= sym(&(a * b));
                    }
                }
                Rc::Psd(r)
            }
        })
        .collect()
}

fn step_length(lay: &Layout, s: &[f64], z: &[f64], ds: &[f64], dz: &[f64]) -> f64 {
    let mut a = f64::INFINITY;
    let lp_s: Vec<f64> = lay.lp.iter().map(|&i| s[i]).collect();
    let lp_ds: Vec<f64> = lay.lp.iter().map(|&i| ds[i]).collect();
    let lp_z: Vec<f64> = lay.lp.iter().map(|&i| z[i]).collect();
    let lp_dz: Vec<f64> = lay.lp.iter().map(|&i| dz[i]).collect();
    a = a.min(max_step_lp(&lp_s, &lp_ds)).min(max_step_lp(&lp_z, &lp_dz));
    for b in &lay.psd {
        let r = b.start..b.start + b.len;
        for (x, dx) in [(&s[r.clone()], &ds[r.clone()]), (&z[r.clone()], &dz[r.clone()])] {
            let xm = svec_to_mat(x, b.dim);
            let Some(l) = chol_lower(&xm) else { return 0.0 };
            let st = max_step_psd(&l, &svec_to_mat(dx, b.dim));
            a = a.min(st);
        }
    }
    a
}

pub(crate) fn solve(data: &Standard, tol: f64, max_iter: usize) -> IpmResult {
    let lay = layout(data);
    let n = data.a.ncols;
    let m = data.a.nrows();
    let cone_rows: Vec<usize> =
        lay.lp.iter().copied().chain(lay.psd.iter().flat_map(|b| b.start..b.start + b.len)).collect();

    let bnorm = norm2(&data.b).max(1.0);
    let cnorm = norm2(&data.c).max(1.0);

    // identity-scaled least-squares starting point, shifted into the cone
    let mut ident = Vec::new();
    if !lay.lp.is_empty() {
        let k = lay.lp.len();
        ident.push(Scaling::Lp { d: vec![1.0; k], w: vec![1.0; k], lambda: vec![1.0; k] });
    }
    for b in &lay.psd {
        let i = DMatrix::identity(b.dim, b.dim);
        ident.push(Scaling::Psd { r: i.clone(), rinv: i.clone(), q: i, lambda: vec![1.0; b.dim] });
    }
    let Some(kkt0) = factor(data, &lay, &ident) else {
        return failed(n, m);
    };
    let zero_rc: Vec<Rc> = ident
        .iter()
        .map(|s| match s {
            Scaling::Lp { d, .. } => Rc::Lp(vec![0.0; d.len()]),
            Scaling::Psd { lambda, .. } => Rc::Psd(DMatrix::zeros(lambda.len(), lambda.len())),
        })
        .collect();
    // primal: min ‖s‖ subject to Ax + s = b
    let dir = newton(data, &lay, &ident, &kkt0, &vec![0.0; n], &data.b, &zero_rc);
    let mut x = dir.dx;
    let mut s = vec![0.0; m];
    let mut ax = vec![0.0; m];
    data.a.mul(&x, &mut ax);
    for &i in &cone_rows {
        s[i] = data.b[i] - ax[i];
    }
    make_interior(&mut s, &lay);
    // dual: min ‖z‖ subject to c + Aᵀz = 0
    let dir = newton(data, &lay, &ident, &kkt0, &data.c, &vec![0.0; m], &zero_rc);
    let mut z = dir.dz;
    make_interior(&mut z, &lay);

    let mut res = IpmResult {
        converged: false,
        infeasible: false,
        iterations: 0,
        x: vec![],
        s: vec![],
        z: vec![],
        pres: f64::INFINITY,
        dres: f64::INFINITY,
        gap: f64::INFINITY,
    };
    let mut rd = vec![0.0; n];
    let mut rp = vec![0.0; m];
    // best iterate by its worst residual, returned when progress stalls
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, [f64; 3])> = None;
    for iter in 0..=max_iter {
        res.iterations = iter;
        data.a.mul_t(&z, &mut rd);
        for j in 0..n {
            rd[j] += data.c[j];
        }
        data.a.mul(&x, &mut ax);
        for i in 0..m {
            rp[i] = data.b[i] - ax[i] - s[i];
        }
        let gap: f64 = cone_rows.iter().map(|&i| s[i] * z[i]).sum();
        let pobj = dot(&data.c, &x);
        let dobj = -dot(&data.b, &z);
        res.pres = norm2(&rp) / bnorm;
        res.dres = norm2(&rd) / cnorm;
        res.gap = gap.max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());
        if res.pres <= tol && res.dres <= tol && res.gap <= tol {
            res.converged = true;
            best = None;
            break;
        }
        let score = res.pres.max(res.dres).max(res.gap);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, x.clone(), s.clone(), z.clone(), [res.pres, res.dres, res.gap]));
        }
        // a growing dual ray with bᵀz < 0 certifies primal infeasibility
        let bz = dot(&data.b, &z);
        if bz < 0.0 {
            let atz: Vec<f64> = (0..n).map(|j| rd[j] - data.c[j]).collect();
            if norm2(&atz) / (-bz) < 1e-9 && res.pres > tol {
                res.infeasible = true;
                best = None;
                break;
            }
        }
        if iter == max_iter {
            break;
        }
        let mu = gap / lay.degree.max(1) as f64;
        let Some(scal) = compute_scaling(&lay, &s, &z) else { break };
        let Some(kkt) = factor(data, &lay, &scal) else { break };

        let rc = complementarity_rhs(&scal, 0.0, None);
        let aff = newton_refined(data, &lay, &scal, &kkt, &rd, &rp, &rc, &zero_rc);
        let a_aff = step_length(&lay, &s, &z, &aff.ds, &aff.dz).min(1.0);
        let sigma = (1.0 - a_aff).powi(3).clamp(0.0, 1.0);
        let corr = scaled_dirs(&lay, &scal, &aff.ds, &aff.dz);
        let rc = complementarity_rhs(&scal, sigma * mu, Some(&corr));
        let dir = newton_refined(data, &lay, &scal, &kkt, &rd, &rp, &rc, &zero_rc);
        let alpha = (0.99 * step_length(&lay, &s, &z, &dir.ds, &dir.dz)).min(1.0);
        if !(alpha > 1e-12) {
            break;
        }
        for j in 0..n {
            x[j] += alpha * dir.dx[j];
        }
        for &i in &cone_rows {
            s[i] += alpha * dir.ds[i];
        }
        for i in 0..m {
            z[i] += alpha * dir.dz[i];
        }
    }
    if let Some((_, bx, bs, bz, [p, d, g])) = best {
        (x, s, z) = (bx, bs, bz);
        (res.pres, res.dres, res.gap) = (p, d, g);
    }
    res.x = x;
    res.s = s;
    res.z = z;
    res
}

fn failed(n: usize, m: usize) -> IpmResult {
    IpmResult {
        converged: false,
        infeasible: false,
        iterations: 0,
        x: vec![0.0; n],
        s: vec![0.0; m],
        z: vec![0.0; m],
        pres: f64::INFINITY,
        dres: f64::INFINITY,
        gap: f64::INFINITY,
    }
}
