//! Linearized penalty terms: the concave `-x^2` parts of the binary penalties
//! and the convex `tr(B G B^T)` parts of the trace bounds are replaced by
//! their first-order expansions at the linearization point.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::conic::AffineExpr;
use crate::C64;

/// `sum (x - x^2)`.
pub fn binary_penalty(x: &[f64]) -> f64 {
    x.iter().map(|v| v - v * v).sum()
}

/// `sum (x - x_t (2 x - x_t))`, an upper bound of [`binary_penalty`] that is tight at `x = x_t`.
pub fn linearized_binary_penalty(x: &[f64], xt: &[f64]) -> f64 {
    x.iter().zip(xt).map(|(v, t)| v - t * (2.0 * v - t)).sum()
}

/// Affine form of [`linearized_binary_penalty`]; the constant part multiplies `one`.
pub fn binary_penalty_expr(terms: impl IntoIterator<Item = (AffineExpr, f64)>, one: &AffineExpr) -> AffineExpr {
    let mut e = AffineExpr::zero();
    for (v, t) in terms {
        e.add_scaled(&v, 1.0 - 2.0 * t);
        e.add_scaled(one, t * t);
    }
    e
}

/// Diagonal of `G = X X^H`; with a block-diagonal `B`, `tr(B G B^T) = sum_n G[n,n] ||b_n||^2`.
pub fn gram_diagonal(x: &DMatrix<C64>) -> Vec<f64> {
    (0..x.nrows())
        .map(|n| x.row(n).iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// `tr(B G B^T)`.
pub fn dc_exact(g: &[f64], b: &[Vec<f64>]) -> f64 {
    g.iter()
        .zip(b)
        .map(|(gn, bn)| gn * bn.iter().map(|v| v * v).sum::<f64>())
        .sum()
}

/// First-order expansion of `tr(B G B^T)` at `B^t`:
/// `tr(B^t G B^tT) + 2 Re tr(G B^tT (B - B^t))`.
pub fn dc_linearized(g: &[f64], bt: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut acc = dc_exact(g, bt);
    for ((gn, btn), bn) in g.iter().zip(bt).zip(b) {
        acc += 2.0 * gn * btn.iter().zip(bn).map(|(t, v)| t * (v - t)).sum::<f64>();
    }
    acc
}

/// Affine form of [`dc_linearized`] in the selection variables.
pub fn dc_linearized_expr(g: &[f64], bt: &[Vec<f64>], select: impl Fn(usize, usize) -> AffineExpr) -> AffineExpr {
    let mut e = AffineExpr::constant(-dc_exact(g, bt));
    for (n, (gn, btn)) in g.iter().zip(bt).enumerate() {
        for (m, t) in btn.iter().enumerate() {
            if *t != 0.0 {
                e.add_scaled(&select(n, m), 2.0 * gn * t);
            }
        }
    }
    e
}
