//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending
/// order. Columns of the returned matrix are the matching eigenvectors.
pub fn eigh(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn eigvalsh(m: &DMatrix<C64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `exp(-i h tau)` for Hermitian `h`.
pub fn expm_hermitian(h: &DMatrix<C64>, tau: f64) -> DMatrix<C64> {
    let (values, vectors) = eigh(h);
    let phases = DVector::from_iterator(values.len(), values.iter().map(|&l| (-I * l * tau).exp()));
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, c)] * phases[c]
    });
    scaled * vectors.adjoint()
}

/// Applies `exp(-i h tau)` to `psi` without forming the exponential.
pub(crate) fn apply_expm_hermitian(h: &DMatrix<C64>, tau: f64, psi: &DVector<C64>) -> DVector<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let mut vectors = eig.eigenvectors;
    orthonormalize(&mut vectors);
    let mut coeffs = vectors.adjoint() * psi;
    for (c, &l) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= (-I * l * tau).exp();
    }
    vectors * coeffs
}

/// One modified Gram-Schmidt pass over the columns. Removes the small
/// non-orthogonality of computed eigenvectors, which otherwise accumulates
/// into a norm drift over millions of steps.
pub(crate) fn orthonormalize(m: &mut DMatrix<C64>) {
    for j in 0..m.ncols() {
        for k in 0..j {
            let overlap = m.column(k).dotc(&m.column(j));
            let ck = m.column(k).into_owned();
            m.column_mut(j).axpy(-overlap, &ck, ONE);
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry of `|m - m†|`.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Largest entry of `|m† m - 1|`.
pub fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.ncols();
    max_abs(&(m.adjoint() * m - DMatrix::<C64>::identity(n, n)))
}
