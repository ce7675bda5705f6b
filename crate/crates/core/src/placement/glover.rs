//! Linearization of the pairwise minimum-distance constraint with auxiliary
//! product variables `phi_{n,n',i,j}` standing for `b_n[i] b_{n'}[j]`.

use alloc::vec::Vec;

use crate::conic::{AffineExpr, ConicProgram};
use crate::geometry::DistanceMatrix;
use crate::{Error, Result};

/// Indexing of the flattened `phi` vector over ordered antenna pairs `n != n'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GloverLayout {
    antennas: usize,
    candidates: usize,
    pairs: Vec<(usize, usize)>,
}

impl GloverLayout {
    pub fn new(antennas: usize, candidates: usize) -> Self {
        let pairs = (0..antennas)
            .flat_map(|n| (0..antennas).filter(move |&m| m != n).map(move |m| (n, m)))
            .collect();
        GloverLayout {
            antennas,
            candidates,
            pairs,
        }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len() * self.candidates * self.candidates
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pair_index(&self, n: usize, n2: usize) -> Option<usize> {
        self.pairs.iter().position(|&p| p == (n, n2))
    }

    pub fn index(&self, pair: usize, i: usize, j: usize) -> usize {
        (pair * self.candidates + i) * self.candidates + j
    }

    /// `phi` at a binary placement: the products of the two selection entries.
    pub fn binary_phi(&self, indices: &[usize]) -> Vec<f64> {
        let mut phi = alloc::vec![0.0; self.len()];
        for (p, &(n, n2)) in self.pairs.iter().enumerate() {
            phi[self.index(p, indices[n], indices[n2])] = 1.0;
        }
        phi
    }

    /// Products `b_n[i] b_{n'}[j]` of arbitrary rows.
    pub fn product_phi(&self, b: &[Vec<f64>]) -> Vec<f64> {
        let mut phi = alloc::vec![0.0; self.len()];
        for (p, &(n, n2)) in self.pairs.iter().enumerate() {
            for i in 0..self.candidates {
                for j in 0..self.candidates {
                    phi[self.index(p, i, j)] = b[n][i] * b[n2][j];
                }
            }
        }
        phi
    }
}

/// Operand of a Glover row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GloverTerm {
    /// `b_n[m]`
    Select { antenna: usize, candidate: usize },
    /// `phi` at a flattened index
    Product(usize),
}

/// `sum coeff * term + constant >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GloverRow {
    pub terms: Vec<(GloverTerm, f64)>,
    pub constant: f64,
}

impl GloverRow {
    pub fn eval(&self, b: &[Vec<f64>], phi: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(t, c)| {
                c * match t {
                    GloverTerm::Select { antenna, candidate } => b[antenna][candidate],
                    GloverTerm::Product(i) => phi[i],
                }
            })
            .sum::<f64>()
            + self.constant
    }
}

/// Distance row plus the two upper bounds and the lower bound per product,
/// for every ordered pair `n != n'`. Products pair `b_n[i]` with `b_{n'}[j]`.
pub fn glover_constraints(
    antennas: usize,
    distances: &DistanceMatrix,
    min_distance: f64,
) -> Result<(GloverLayout, Vec<GloverRow>)> {
    if !(min_distance > 0.0) {
        return Err(Error::param("min_distance", "must be positive"));
    }
    let m = distances.len();
    let layout = GloverLayout::new(antennas, m);
    let mut rows = Vec::with_capacity(layout.pairs().len() * (3 * m * m + 1));
    for (p, &(n, n2)) in layout.pairs().iter().enumerate() {
        let mut dist = GloverRow {
            terms: Vec::with_capacity(m * m),
            constant: -min_distance,
        };
        for i in 0..m {
            for j in 0..m {
                let k = layout.index(p, i, j);
                let phi = GloverTerm::Product(k);
                let bi = GloverTerm::Select {
                    antenna: n,
                    candidate: i,
                };
                let bj = GloverTerm::Select {
                    antenna: n2,
                    candidate: j,
                };
                if distances.get(i, j) != 0.0 {
                    dist.terms.push((phi, distances.get(i, j)));
                }
                rows.push(GloverRow {
                    terms: alloc::vec![(bi, 1.0), (phi, -1.0)],
                    constant: 0.0,
                });
                rows.push(GloverRow {
                    terms: alloc::vec![(bj, 1.0), (phi, -1.0)],
                    constant: 0.0,
                });
                rows.push(GloverRow {
                    terms: alloc::vec![(phi, 1.0), (bi, -1.0), (bj, -1.0)],
                    constant: 1.0,
                });
            }
        }
        rows.push(dist);
    }
    Ok((layout, rows))
}

/// Adds the rows to a program. Constants multiply `one` (a constant one, or a
/// homogenizing scale variable).
pub fn emit_glover(
    program: &mut ConicProgram,
    rows: &[GloverRow],
    select: impl Fn(usize, usize) -> AffineExpr,
    product: impl Fn(usize) -> AffineExpr,
    one: &AffineExpr,
) {
    for r in rows {
        let mut e = one.clone() * r.constant;
        for &(t, c) in &r.terms {
            let v = match t {
                GloverTerm::Select { antenna, candidate } => select(antenna, candidate),
                GloverTerm::Product(i) => product(i),
            };
            e.add_scaled(&v, c);
        }
        program.add_nonneg(e);
    }
}

/// True when all rows hold within `tol` at the given point.
pub fn glover_satisfied(rows: &[GloverRow], b: &[Vec<f64>], phi: &[f64], tol: f64) -> bool {
    rows.iter().all(|r| r.eval(b, phi) >= -tol)
}
