//! Small dense linear-algebra helpers over complex matrices.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

pub use beamfocus_conic::realify_hermitian;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const J: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `v vᴴ`
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * cr(0.5)
}

/// Eigenvalues in descending order with matching eigenvector columns.
pub fn hermitian_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Rotate `v` so its first non-negligible entry is real and nonnegative.
pub fn phase_normalize(v: &mut CVec) {
    let scale = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12 * scale).copied() {
        let rot = z.conj() / z.norm();
        v.iter_mut().for_each(|e| *e *= rot);
    }
}

/// Largest eigenvalue and its unit eigenvector. Among eigenvalues within
/// `1e-10` of the largest, the one the eigensolver lists first wins; the
/// vector is phase-normalized.
pub fn top_eigenpair(m: &CMat) -> (f64, CVec) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let max = eig.eigenvalues.max();
    let k = eig
        .eigenvalues
        .iter()
        .position(|&l| l >= max - 1e-10)
        .unwrap_or(0);
    let mut u: CVec = eig.eigenvectors.column(k).into_owned();
    phase_normalize(&mut u);
    (eig.eigenvalues[k], u)
}

/// Spectral norm of a Hermitian PSD matrix.
pub fn spectral_norm_psd(m: &CMat) -> f64 {
    SymmetricEigen::new(hermitian_part(m)).eigenvalues.max()
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    SymmetricEigen::new(hermitian_part(m)).eigenvalues.min()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    a.component_mul(&b.transpose()).sum()
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-stacking vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of a real symmetric matrix via eigendecomposition; `None` when
/// the smallest eigenvalue falls below `rel_cutoff·trace`.
pub fn sym_inverse(m: &DMatrix<f64>, rel_cutoff: f64) -> Option<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let tr: f64 = eig.eigenvalues.iter().map(|v| v.abs()).sum();
    if tr == 0.0 || eig.eigenvalues.min() <= rel_cutoff * tr {
        return None;
    }
    let n = m.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        inv.ger(1.0 / l, &v, &v, 1.0);
    }
    Some(inv)
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(s * re, s * im)
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    // column-major fill so the draw order is fixed
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_normal(rng, var);
        }
    }
    m
}

/// `arg(z)` with the convention `arg(0) = 0`.
pub fn arg0(z: C64) -> f64 {
    if z == C64::new(0.0, 0.0) {
        0.0
    } else {
        z.arg()
    }
}

pub fn unit_phasor(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eig_is_descending_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = complex_normal_matrix(&mut rng, 4, 4, 1.0);
        let h = hermitian_part(&a);
        let (vals, vecs) = hermitian_eig(&h);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(4, vals.iter().map(|&v| cr(v))));
        let rec = &vecs * d * vecs.adjoint();
        assert!((rec - h).norm() < 1e-10);
    }

    #[test]
    fn phase_normalization_makes_first_entry_real() {
        let mut v = CVec::from_vec(vec![c(0.0, 0.0), c(0.0, 2.0), c(1.0, 1.0)]);
        phase_normalize(&mut v);
        assert!(v[1].im.abs() < 1e-15 && v[1].re > 0.0);
    }

    #[test]
    fn kron_shape_and_entry() {
        let a = CMat::from_fn(2, 3, |i, j| cr((i * 3 + j) as f64));
        let b = CMat::identity(2, 2);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (4, 6));
        assert_eq!(k[(2, 4)], a[(1, 2)]);
        assert_eq!(k[(3, 4)], cr(0.0));
    }

    #[test]
    fn sym_inverse_detects_singularity() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(sym_inverse(&m, 1e-12).is_none());
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let inv = sym_inverse(&m, 1e-12).unwrap();
        assert!((&m * inv - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
