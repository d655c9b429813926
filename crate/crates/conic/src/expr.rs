//! Affine expressions over the real parameter vector of a program.

use nalgebra::{Complex, DMatrix};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

type C64 = Complex<f64>;

/// Real affine expression `constant + Σ coef·x[idx]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn param(idx: usize, coef: f64) -> Self {
        Self { constant: 0.0, terms: vec![(idx, coef)] }
    }

    pub fn push(&mut self, idx: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((idx, coef));
        }
    }

    /// `self += scale * other`
    pub fn axpy(&mut self, scale: f64, other: &LinExpr) {
        self.constant += scale * other.constant;
        if scale != 0.0 {
            self.terms
                .extend(other.terms.iter().map(|&(i, c)| (i, scale * c)));
        }
    }

    pub fn scaled(&self, s: f64) -> LinExpr {
        let mut out = LinExpr::zero();
        out.axpy(s, self);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(i, c)| acc + c * x[i])
    }

    /// Merge duplicate indices and drop exact zeros; terms end up sorted by index.
    pub fn compact(&mut self) {
        if self.terms.is_empty() {
            return;
        }
        self.terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(i, c) in &self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        self.terms = merged;
    }

    pub fn compacted(mut self) -> Self {
        self.compact();
        self
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.1 == 0.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&LinExpr> for LinExpr {
    fn sub_assign(&mut self, rhs: &LinExpr) {
        self.axpy(-1.0, rhs);
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self += &rhs;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self -= &rhs;
        self
    }
}

impl Add<f64> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: f64) -> LinExpr {
        self.constant += rhs;
        self
    }
}

impl Sub<f64> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: f64) -> LinExpr {
        self.constant -= rhs;
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

/// Complex affine expression, stored as real and imaginary parts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CExpr {
    pub fn real(re: LinExpr) -> Self {
        Self { re, im: LinExpr::zero() }
    }

    pub fn constant(c: C64) -> Self {
        Self { re: LinExpr::constant(c.re), im: LinExpr::constant(c.im) }
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: self.im.scaled(-1.0) }
    }

    /// `self += c * other` with complex `c`.
    pub fn axpy(&mut self, c: C64, other: &CExpr) {
        self.re.axpy(c.re, &other.re);
        self.re.axpy(-c.im, &other.im);
        self.im.axpy(c.re, &other.im);
        self.im.axpy(c.im, &other.re);
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        C64::new(self.re.eval(x), self.im.eval(x))
    }

    pub fn compact(&mut self) {
        self.re.compact();
        self.im.compact();
    }
}

/// Square Hermitian (or real symmetric) matrix whose entries are affine in
/// the parameters. Only the upper triangle is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixExpr {
    dim: usize,
    complex: bool,
    entries: Vec<CExpr>,
}

fn packed(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

impl MatrixExpr {
    pub fn zeros(dim: usize, complex: bool) -> Self {
        Self { dim, complex, entries: vec![CExpr::default(); dim * (dim + 1) / 2] }
    }

    /// Constant Hermitian matrix; the strictly lower triangle is ignored.
    pub fn constant(m: &DMatrix<C64>, complex: bool) -> Self {
        assert!(m.is_square());
        let mut out = Self::zeros(m.nrows(), complex);
        for j in 0..m.nrows() {
            for i in 0..=j {
                out.set(i, j, CExpr::constant(m[(i, j)]));
            }
        }
        out
    }

    pub fn identity(dim: usize, complex: bool) -> Self {
        let mut out = Self::zeros(dim, complex);
        for i in 0..dim {
            out.set(i, i, CExpr::real(LinExpr::constant(1.0)));
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    pub fn get(&self, i: usize, j: usize) -> CExpr {
        if i <= j {
            self.entries[packed(i, j)].clone()
        } else {
            self.entries[packed(j, i)].conj()
        }
    }

    /// Set entry `(i, j)`; its mirror is implied by Hermitian symmetry.
    pub fn set(&mut self, i: usize, j: usize, mut e: CExpr) {
        if i == j || !self.complex {
            e.im = LinExpr::zero();
        }
        if i <= j {
            self.entries[packed(i, j)] = e;
        } else {
            self.entries[packed(j, i)] = e.conj();
        }
    }

    pub fn add_to(&mut self, i: usize, j: usize, e: &CExpr) {
        let mut cur = self.get(i, j);
        cur.axpy(C64::new(1.0, 0.0), e);
        self.set(i, j, cur);
    }

    /// Copy `block` onto the diagonal position starting at `offset`.
    pub fn place(&mut self, offset: usize, block: &MatrixExpr) {
        assert!(offset + block.dim <= self.dim);
        for j in 0..block.dim {
            for i in 0..=j {
                self.set(offset + i, offset + j, block.get(i, j));
            }
        }
    }

    /// `self += scale * other` (same shape).
    pub fn axpy(&mut self, scale: f64, other: &MatrixExpr) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            a.axpy(C64::new(scale, 0.0), b);
        }
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j).eval(x))
    }

    pub fn compact(&mut self) {
        for e in &mut self.entries {
            e.compact();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_merges_duplicates() {
        let mut e = LinExpr::param(3, 1.0) + LinExpr::param(1, 2.0) + LinExpr::param(3, -1.0);
        e.compact();
        assert_eq!(e.terms, vec![(1, 2.0)]);
    }

    #[test]
    fn lower_entries_are_conjugates() {
        let mut m = MatrixExpr::zeros(2, true);
        m.set(1, 0, CExpr::constant(C64::new(1.0, 2.0)));
        assert_eq!(m.get(0, 1).eval(&[]), C64::new(1.0, -2.0));
        assert_eq!(m.get(1, 0).eval(&[]), C64::new(1.0, 2.0));
    }

    #[test]
    fn complex_axpy_matches_multiplication() {
        let mut acc = CExpr::default();
        let v = CExpr { re: LinExpr::param(0, 1.0), im: LinExpr::param(1, 1.0) };
        acc.axpy(C64::new(0.5, -2.0), &v);
        let x = [0.3, -1.2];
        let expect = C64::new(0.5, -2.0) * C64::new(0.3, -1.2);
        assert!((acc.eval(&x) - expect).norm() < 1e-15);
    }
}
