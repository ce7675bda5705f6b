//! Small dense helpers over nalgebra for Hermitian matrices.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::Float;

use crate::C64;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
///
/// Only the lower triangle is trusted; the input is symmetrized first.
pub fn hermitian_eig(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let h = hermitian_part(m);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Eigenvalues of a real symmetric matrix in descending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let s = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    hermitian_eig(m).0.last().copied().unwrap_or(0.0)
}

pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// `a^H M a`, real part.
pub fn quad_form(a: &[C64], m: &DMatrix<C64>) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for j in 0..n {
        let mut col = C64::new(0.0, 0.0);
        for i in 0..n {
            col += a[i].conj() * m[(i, j)];
        }
        acc += (col * a[j]).re;
    }
    acc
}

/// `v v^H`.
pub fn outer(v: &[C64]) -> DMatrix<C64> {
    let n = v.len();
    DMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

pub fn trace_re(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

pub fn frobenius(m: &DMatrix<C64>) -> f64 {
    Float::sqrt(m.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

pub fn to_dvector(v: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(v)
}

/// Real `2n x 2n` embedding `[[Re X, -Im X], [Im X, Re X]]` of a complex matrix.
pub fn real_embedding(x: &DMatrix<C64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = x[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`real_embedding`], averaging the redundant blocks.
pub fn complex_from_embedding(e: &DMatrix<f64>) -> DMatrix<C64> {
    let n = e.nrows() / 2;
    DMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (e[(i, j)] + e[(i + n, j + n)]);
        let im = 0.5 * (e[(i + n, j)] - e[(i, j + n)]);
        C64::new(re, im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eig_matches_characteristic_polynomial_2x2() {
        // [[a, b], [b*, d]]: lambda = (a+d)/2 +- sqrt(((a-d)/2)^2 + |b|^2)
        let (a, d, b) = (3.0, 1.0, c(0.5, -1.2));
        let m = DMatrix::from_row_slice(2, 2, &[c(a, 0.0), b, b.conj(), c(d, 0.0)]);
        let (vals, vecs) = hermitian_eig(&m);
        let r = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        assert_relative_eq!(vals[0], (a + d) / 2.0 + r, max_relative = 1e-13);
        assert_relative_eq!(vals[1], (a + d) / 2.0 - r, max_relative = 1e-13);
        let v = vecs.column(0);
        let mv = &m * v;
        for i in 0..2 {
            assert!((mv[i] - v[i] * vals[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn embedding_round_trip() {
        let x = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 0.5), c(1.0, -0.5), c(3.0, 0.0)]);
        let e = real_embedding(&x);
        assert_eq!(e, e.transpose());
        let back = complex_from_embedding(&e);
        assert!(frobenius(&(back.clone() - &x)) < 1e-15);
        assert!(frobenius(&(back.clone() - back.adjoint())) < 1e-15);
        // Embedding doubles each eigenvalue.
        let ev = symmetric_eigenvalues(&e);
        let (hv, _) = hermitian_eig(&x);
        assert_relative_eq!(ev[0], hv[0], max_relative = 1e-12);
        assert_relative_eq!(ev[1], hv[0], max_relative = 1e-12);
        assert_relative_eq!(ev[3], hv[1], max_relative = 1e-12);
    }

    #[test]
    fn quad_form_of_outer() {
        let v = [c(1.0, 2.0), c(-0.5, 0.25)];
        let a = [c(0.3, -0.1), c(1.0, 1.0)];
        let direct: C64 = a.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
        assert_relative_eq!(quad_form(&a, &outer(&v)), direct.norm_sqr(), max_relative = 1e-14);
    }
}
