use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::linalg::hermitian_eig;
use crate::{Error, Result, C64};

/// Default eigenvalue ratio `lambda_2 / lambda_1` accepted as rank one.
pub const DEFAULT_RANK_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RankOne {
    /// `sqrt(lambda_1) u_1`.
    pub vector: Vec<C64>,
    pub is_rank_one: bool,
    /// `lambda_2 / lambda_1` (zero for `1 x 1` inputs).
    pub ratio: f64,
}

/// Dominant rank-one factor of a Hermitian PSD matrix.
pub fn extract_rank_one(w: &DMatrix<C64>, tol_ratio: f64) -> Result<RankOne> {
    let n = w.nrows();
    if n == 0 {
        return Ok(RankOne {
            vector: Vec::new(),
            is_rank_one: true,
            ratio: 0.0,
        });
    }
    let (vals, vecs) = hermitian_eig(w);
    let l1 = vals[0];
    let trace: f64 = vals.iter().sum();
    if l1 <= 0.0 {
        if trace.abs() <= f64::EPSILON * n as f64 && vals.iter().all(|v| v.abs() <= f64::EPSILON) {
            return Ok(RankOne {
                vector: alloc::vec![C64::new(0.0, 0.0); n],
                is_rank_one: true,
                ratio: 0.0,
            });
        }
        return Err(Error::NumericalFailure(format!(
            "dominant eigenvalue {l1} is not positive"
        )));
    }
    let ratio = if n > 1 { vals[1].max(0.0) / l1 } else { 0.0 };
    // fix the global phase so the largest entry is real and positive
    let col = vecs.column(0);
    let mut k = 0;
    for i in 0..n {
        if col[i].norm() > col[k].norm() {
            k = i;
        }
    }
    let ph = if col[k].norm() > 0.0 { col[k].conj() / col[k].norm() } else { C64::new(1.0, 0.0) };
    let s = Float::sqrt(l1);
    Ok(RankOne {
        vector: col.iter().map(|z| z * ph * s).collect(),
        is_rank_one: ratio <= tol_ratio,
        ratio,
    })
}
