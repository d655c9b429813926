//! Complex-to-real lifting: a Hermitian `M` is PSD iff
//! `[[Re M, −Im M], [Im M, Re M]]` is PSD.

use crate::expr::{LinExpr, MatrixExpr};
use crate::program::{ConicProgram, MatVar};
use nalgebra::{Complex, DMatrix};

type C64 = Complex<f64>;

/// `[[Re M, −Im M], [Im M, Re M]]`.
pub fn realify_hermitian(m: &DMatrix<C64>) -> DMatrix<f64> {
    let n = m.nrows();
    assert!(m.is_square());
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Real symmetric PSD block with packed upper-triangle entries.
#[derive(Clone, Debug)]
pub struct RealBlock {
    pub label: String,
    pub dim: usize,
    pub entries: Vec<LinExpr>,
    /// Variable whose lifted form this block is, if any.
    pub var: Option<MatVar>,
    pub complex_origin: bool,
}

impl RealBlock {
    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut k = 0;
        for j in 0..self.dim {
            for i in 0..=j {
                let v = self.entries[k].eval(x);
                m[(i, j)] = v;
                m[(j, i)] = v;
                k += 1;
            }
        }
        m
    }
}

/// The real symmetric-cone form of a [`ConicProgram`]. The objective is the
/// same real functional of the parameters, so reported values coincide
/// with the complex model.
#[derive(Clone, Debug)]
pub struct RealProgram {
    pub n_params: usize,
    pub objective: LinExpr,
    pub eq: Vec<(String, LinExpr)>,
    pub ineq: Vec<(String, LinExpr)>,
    pub psd: Vec<RealBlock>,
}

fn lift_block(m: &MatrixExpr) -> Vec<LinExpr> {
    let n = m.dim();
    let mut out = Vec::new();
    if !m.is_complex() {
        for j in 0..n {
            for i in 0..=j {
                out.push(m.get(i, j).re);
            }
        }
        return out;
    }
    for j in 0..2 * n {
        for i in 0..=j {
            let e = m.get(i % n, j % n);
            let v = match (i < n, j < n) {
                (true, true) | (false, false) => e.re,
                (true, false) => e.im.scaled(-1.0),
                (false, true) => e.im,
            };
            out.push(v.compacted());
        }
    }
    out
}

pub fn realify_program(p: &ConicProgram) -> RealProgram {
    let psd = p
        .psd
        .iter()
        .zip(&p.psd_var)
        .map(|(c, var)| RealBlock {
            label: c.label.clone(),
            dim: if c.body.is_complex() { 2 * c.body.dim() } else { c.body.dim() },
            entries: lift_block(&c.body),
            var: *var,
            complex_origin: c.body.is_complex(),
        })
        .collect();
    RealProgram {
        n_params: p.n_params,
        objective: p.objective.clone(),
        eq: p.eq.iter().map(|c| (c.label.clone(), c.body.clone())).collect(),
        ineq: p.ineq.iter().map(|c| (c.label.clone(), c.body.clone())).collect(),
        psd,
    }
}
