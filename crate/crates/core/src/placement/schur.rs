//! Block LMIs that encode `F = B W B^T` through Schur complements:
//!
//! ```text
//! [ S      F    B W ]
//! [ F^H    T    B   ]  >= 0
//! [ W^H B^T B^T  I  ]
//! ```
//!
//! together with `tr(S) <= tr(B W W^H B^T)`. The same shape, with `(U, Y, V, R)`,
//! encodes `Y = B R B^T`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::conic::{AffineExpr, ComplexAffine};
use crate::{Error, Result, C64};

/// Handles of the auxiliary matrix variables of the Schur-complement position subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryBlocks {
    pub f: Vec<crate::conic::HermitianVar>,
    pub y: crate::conic::HermitianVar,
    /// One `S_k`, `T_k` per user.
    pub s: Vec<crate::conic::HermitianVar>,
    pub t: Vec<crate::conic::HermitianVar>,
    pub u: crate::conic::HermitianVar,
    pub v: crate::conic::HermitianVar,
}

/// Full row-major entries of the `(2 MN + N)` block matrix.
///
/// `s`, `f`, `t` return entries of the `MN x MN` blocks, `b` entries of the
/// real `MN x N` selection matrix, and `w` is the fixed `N x N` covariance.
pub fn schur_lmi_blocks(
    mn: usize,
    s: impl Fn(usize, usize) -> ComplexAffine,
    f: impl Fn(usize, usize) -> ComplexAffine,
    t: impl Fn(usize, usize) -> ComplexAffine,
    b: impl Fn(usize, usize) -> AffineExpr,
    w: &DMatrix<C64>,
) -> Result<Vec<ComplexAffine>> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "schur block covariance",
            expected: n,
            actual: w.ncols(),
        });
    }
    let dim = 2 * mn + n;
    // B W, one column of W at a time
    let bw = |r: usize, c: usize| -> ComplexAffine {
        let mut acc = ComplexAffine::default();
        for k in 0..n {
            let z = ComplexAffine::real(b(r, k)).scale(w[(k, c)]);
            acc.re.add_scaled(&z.re, 1.0);
            acc.im.add_scaled(&z.im, 1.0);
        }
        acc
    };
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let e = match (i / mn, j / mn, i, j) {
                (0, 0, ..) => s(i, j),
                (0, 1, ..) => f(i, j - mn),
                (1, 0, ..) => f(j, i - mn).conj(),
                (1, 1, ..) => t(i - mn, j - mn),
                _ if i < 2 * mn => {
                    let c = j - 2 * mn;
                    if i < mn { bw(i, c) } else { ComplexAffine::real(b(i - mn, c)) }
                }
                _ => {
                    let r = i - 2 * mn;
                    if j < mn {
                        bw(j, r).conj()
                    } else if j < 2 * mn {
                        ComplexAffine::real(b(j - mn, r))
                    } else {
                        ComplexAffine::constant(C64::new(if r == j - 2 * mn { 1.0 } else { 0.0 }, 0.0))
                    }
                }
            };
            out.push(e);
        }
    }
    Ok(out)
}

/// Numeric block matrix at a given point.
pub fn schur_block_value(
    s: &DMatrix<C64>,
    f: &DMatrix<C64>,
    t: &DMatrix<C64>,
    b: &DMatrix<f64>,
    w: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    let mn = s.nrows();
    let full = schur_lmi_blocks(
        mn,
        |i, j| ComplexAffine::constant(s[(i, j)]),
        |i, j| ComplexAffine::constant(f[(i, j)]),
        |i, j| ComplexAffine::constant(t[(i, j)]),
        |i, j| AffineExpr::constant(b[(i, j)]),
        w,
    )?;
    let dim = 2 * mn + w.nrows();
    Ok(DMatrix::from_fn(dim, dim, |i, j| full[i * dim + j].eval(&[])))
}
