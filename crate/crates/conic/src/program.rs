//! Modeling layer: matrix and scalar variables, objective, constraints.
//!
//! Every variable is mapped onto a block of real parameters. A Hermitian
//! `n×n` variable uses `n²` parameters (diagonal, then real and imaginary
//! parts of the strict upper triangle); a real symmetric one uses
//! `n(n+1)/2`; a scalar uses one.

use crate::expr::{CExpr, LinExpr, MatrixExpr};
use nalgebra::{Complex, DMatrix};

type C64 = Complex<f64>;

/// Handle to a matrix variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MatVar(pub(crate) usize);

/// Handle to a scalar variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScalarVar(pub(crate) usize);

#[derive(Clone, Debug)]
pub struct MatrixVarInfo {
    pub name: String,
    pub dim: usize,
    pub hermitian: bool,
    pub offset: usize,
}

#[derive(Clone, Debug)]
pub struct ScalarVarInfo {
    pub name: String,
    pub offset: usize,
}

/// A labelled constraint.
#[derive(Clone, Debug)]
pub struct Labeled<T> {
    pub label: String,
    pub body: T,
}

/// Minimize a real affine objective subject to PSD, equality and
/// nonnegativity constraints.
#[derive(Clone, Debug, Default)]
pub struct ConicProgram {
    pub(crate) matrix_vars: Vec<MatrixVarInfo>,
    pub(crate) scalar_vars: Vec<ScalarVarInfo>,
    pub(crate) n_params: usize,
    pub(crate) objective: LinExpr,
    pub(crate) psd: Vec<Labeled<MatrixExpr>>,
    pub(crate) psd_var: Vec<Option<MatVar>>,
    pub(crate) eq: Vec<Labeled<LinExpr>>,
    pub(crate) ineq: Vec<Labeled<LinExpr>>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn matrix_vars(&self) -> &[MatrixVarInfo] {
        &self.matrix_vars
    }

    pub fn scalar_vars(&self) -> &[ScalarVarInfo] {
        &self.scalar_vars
    }

    pub fn psd_constraints(&self) -> &[Labeled<MatrixExpr>] {
        &self.psd
    }

    pub fn eq_constraints(&self) -> &[Labeled<LinExpr>] {
        &self.eq
    }

    pub fn ineq_constraints(&self) -> &[Labeled<LinExpr>] {
        &self.ineq
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    /// Complex Hermitian `n×n` variable.
    pub fn hermitian(&mut self, name: &str, n: usize) -> MatVar {
        self.matrix_var(name, n, true)
    }

    /// Real symmetric `n×n` variable.
    pub fn symmetric(&mut self, name: &str, n: usize) -> MatVar {
        self.matrix_var(name, n, false)
    }

    fn matrix_var(&mut self, name: &str, n: usize, hermitian: bool) -> MatVar {
        assert!(n >= 1, "matrix variable must have positive size");
        let size = if hermitian { n * n } else { n * (n + 1) / 2 };
        self.matrix_vars.push(MatrixVarInfo {
            name: name.to_string(),
            dim: n,
            hermitian,
            offset: self.n_params,
        });
        self.n_params += size;
        MatVar(self.matrix_vars.len() - 1)
    }

    pub fn scalar(&mut self, name: &str) -> ScalarVar {
        self.scalar_vars.push(ScalarVarInfo { name: name.to_string(), offset: self.n_params });
        self.n_params += 1;
        ScalarVar(self.scalar_vars.len() - 1)
    }

    pub fn info(&self, v: MatVar) -> &MatrixVarInfo {
        &self.matrix_vars[v.0]
    }

    pub fn var_dim(&self, v: MatVar) -> usize {
        self.matrix_vars[v.0].dim
    }

    /// Parameter index of entry `(i, j)` with `i ≤ j`: real part, and the
    /// imaginary part when the variable is Hermitian and `i < j`.
    fn slot(&self, v: MatVar, i: usize, j: usize) -> (usize, Option<usize>) {
        let info = &self.matrix_vars[v.0];
        debug_assert!(i <= j && j < info.dim);
        if info.hermitian {
            // column j holds: j-1 off-diagonal pairs above, preceded by columns 0..j
            // column start = Σ_{c<j} (1 + 2c) = j²
            let start = info.offset + j * j;
            if i == j {
                (start, None)
            } else {
                let p = start + 1 + 2 * i;
                (p, Some(p + 1))
            }
        } else {
            (info.offset + j * (j + 1) / 2 + i, None)
        }
    }

    /// Entry `X[i, j]` of a matrix variable as a complex expression.
    pub fn entry(&self, v: MatVar, i: usize, j: usize) -> CExpr {
        let (a, b, conj) = if i <= j { (i, j, false) } else { (j, i, true) };
        let (re, im) = self.slot(v, a, b);
        let e = CExpr {
            re: LinExpr::param(re, 1.0),
            im: im.map(|p| LinExpr::param(p, 1.0)).unwrap_or_default(),
        };
        if conj {
            e.conj()
        } else {
            e
        }
    }

    /// The variable itself as a matrix expression.
    pub fn var_expr(&self, v: MatVar) -> MatrixExpr {
        let info = &self.matrix_vars[v.0];
        let mut m = MatrixExpr::zeros(info.dim, info.hermitian);
        for j in 0..info.dim {
            for i in 0..=j {
                m.set(i, j, self.entry(v, i, j));
            }
        }
        m
    }

    pub fn scalar_expr(&self, s: ScalarVar) -> LinExpr {
        LinExpr::param(self.scalar_vars[s.0].offset, 1.0)
    }

    pub fn trace(&self, v: MatVar) -> LinExpr {
        let n = self.var_dim(v);
        let mut e = LinExpr::zero();
        for i in 0..n {
            e.push(self.slot(v, i, i).0, 1.0);
        }
        e
    }

    /// `Re Tr(C X)` for a matrix variable `X`; `C` need not be Hermitian.
    pub fn inner(&self, v: MatVar, c: &DMatrix<C64>) -> LinExpr {
        let n = self.var_dim(v);
        assert_eq!(c.shape(), (n, n), "coefficient shape mismatch");
        let hermitian = self.matrix_vars[v.0].hermitian;
        let mut e = LinExpr::zero();
        for j in 0..n {
            for i in 0..=j {
                let (re, im) = self.slot(v, i, j);
                if i == j {
                    e.push(re, c[(i, i)].re);
                } else {
                    // C_ji X_ij + C_ij X_ji with X_ij = a + jb
                    e.push(re, c[(j, i)].re + c[(i, j)].re);
                    if hermitian {
                        e.push(im.unwrap(), c[(i, j)].im - c[(j, i)].im);
                    }
                }
            }
        }
        e
    }

    pub fn minimize(&mut self, objective: LinExpr) {
        self.objective = objective.compacted();
    }

    pub fn add_psd(&mut self, label: &str, mut body: MatrixExpr) {
        body.compact();
        self.psd.push(Labeled { label: label.to_string(), body });
        self.psd_var.push(None);
    }

    /// Require the variable itself to be PSD. The solver returns such
    /// variables exactly inside the cone.
    pub fn add_psd_var(&mut self, label: &str, v: MatVar) {
        let body = self.var_expr(v);
        self.psd.push(Labeled { label: label.to_string(), body });
        self.psd_var.push(Some(v));
    }

    /// `expr ≥ 0`.
    pub fn add_ge(&mut self, label: &str, expr: LinExpr) {
        self.ineq.push(Labeled { label: label.to_string(), body: expr.compacted() });
    }

    /// `expr = 0`.
    pub fn add_eq(&mut self, label: &str, expr: LinExpr) {
        self.eq.push(Labeled { label: label.to_string(), body: expr.compacted() });
    }

    /// Lift `Tr(Ξ⁻¹)`: adds an auxiliary `U` and the block constraint
    /// `[[U, I], [I, Ξ]] ⪰ 0`, returning `U` and the expression `Tr(U)`.
    pub fn epigraph_trace_inverse(&mut self, name: &str, xi: &MatrixExpr) -> (MatVar, LinExpr) {
        let m = xi.dim();
        let complex = xi.is_complex();
        let u = self.matrix_var(name, m, complex);
        let mut block = MatrixExpr::zeros(2 * m, complex);
        block.place(0, &self.var_expr(u));
        block.place(m, xi);
        for i in 0..m {
            block.set(i, m + i, CExpr::real(LinExpr::constant(1.0)));
        }
        self.add_psd(&format!("{name}_epigraph"), block);
        (u, self.trace(u))
    }

    pub fn hermitian_value(&self, v: MatVar, x: &[f64]) -> DMatrix<C64> {
        let n = self.var_dim(v);
        DMatrix::from_fn(n, n, |i, j| self.entry(v, i, j).eval(x))
    }

    pub fn symmetric_value(&self, v: MatVar, x: &[f64]) -> DMatrix<f64> {
        self.hermitian_value(v, x).map(|z| z.re)
    }

    pub fn scalar_value(&self, s: ScalarVar, x: &[f64]) -> f64 {
        x[self.scalar_vars[s.0].offset]
    }

    /// Overwrite the parameters of `v` with the given Hermitian matrix.
    pub fn write_var(&self, v: MatVar, m: &DMatrix<C64>, x: &mut [f64]) {
        let n = self.var_dim(v);
        for j in 0..n {
            for i in 0..=j {
                let (re, im) = self.slot(v, i, j);
                x[re] = m[(i, j)].re;
                if let Some(p) = im {
                    x[p] = m[(i, j)].im;
                }
            }
        }
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }
}
