//! Quantized transmitter area, antenna selection vectors and the minimum
//! inter-antenna distance constraint.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_traits::Float;

use crate::{Error, Result};

/// A point in the transmitter plane, `[x, y]` in meters.
pub type Point = [f64; 2];

/// Slack applied before flooring `a*lambda/d`, so that exact multiples such as
/// `2 * 0.06 / 0.01` do not lose a lattice row to binary rounding.
const SIDE_FLOOR_SLACK: f64 = 1e-9;

/// Square lattice of candidate antenna positions covering `[0, a*lambda]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    normalized_size: f64,
    spacing: f64,
    wavelength: f64,
    side: usize,
    positions: Vec<Point>,
}

impl GridSpec {
    pub fn normalized_size(&self) -> f64 {
        self.normalized_size
    }

    /// Lattice pitch `d` in meters.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Number of lattice points per side, `s = floor(a*lambda/d) + 1`.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of candidate positions `M = s^2`.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Candidate positions in row-major order (x fastest), `p_1 = (0, 0)`.
    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    /// Index of the lattice point at integer coordinates `(col, row)`.
    pub fn index_of(&self, col: usize, row: usize) -> Option<usize> {
        (col < self.side && row < self.side).then(|| row * self.side + col)
    }

    /// Index of the candidate closest to `p` (ties resolved towards the lower index).
    pub fn nearest(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (m, q) in self.positions.iter().enumerate() {
            let d = distance(*q, p);
            if d < best_d - 1e-15 {
                best = m;
                best_d = d;
            }
        }
        best
    }
}

/// Quantizes the `a*lambda x a*lambda` transmitter area into a lattice of pitch `d`.
pub fn build_grid(normalized_size: f64, spacing: f64, wavelength: f64) -> Result<GridSpec> {
    for (name, v) in [
        ("normalized_size", normalized_size),
        ("spacing", spacing),
        ("wavelength", wavelength),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("must be positive and finite, got {v}")));
        }
    }
    let ratio = normalized_size * wavelength / spacing;
    let side = Float::floor(ratio + SIDE_FLOOR_SLACK) as usize + 1;
    let mut positions = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            positions.push([col as f64 * spacing, row as f64 * spacing]);
        }
    }
    Ok(GridSpec {
        normalized_size,
        spacing,
        wavelength,
        side,
        positions,
    })
}

pub fn distance(a: Point, b: Point) -> f64 {
    Float::hypot(a[0] - b[0], a[1] - b[1])
}

/// Symmetric matrix of pairwise Euclidean distances between candidates (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(DMatrix<f64>);

impl DistanceMatrix {
    pub fn new(positions: &[Point]) -> Self {
        let m = positions.len();
        let mut d = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in (i + 1)..m {
                let v = distance(positions[i], positions[j]);
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        DistanceMatrix(d)
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `b1^T D b2`.
    pub fn bilinear(&self, b1: &[f64], b2: &[f64]) -> f64 {
        let m = self.len();
        let mut acc = 0.0;
        for i in 0..m {
            if b1[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                acc += b1[i] * self.0[(i, j)] * b2[j];
            }
        }
        acc
    }
}

/// Convenience wrapper around [`DistanceMatrix::new`] for a lattice.
pub fn distance_matrix(grid: &GridSpec) -> DistanceMatrix {
    DistanceMatrix::new(grid.positions())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    Binary,
    Relaxed,
}

const RELAXED_SUM_TOL: f64 = 1e-9;

/// Position selection vector of one antenna over the `M` candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionVector {
    b: Vec<f64>,
    mode: SelectionMode,
}

impl SelectionVector {
    pub fn one_hot(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::param("index", format!("{index} out of range for {len} candidates")));
        }
        let mut b = vec![0.0; len];
        b[index] = 1.0;
        Ok(SelectionVector {
            b,
            mode: SelectionMode::Binary,
        })
    }

    /// Binary vector: entries in {0, 1} with exactly one 1.
    pub fn binary(b: Vec<f64>) -> Result<Self> {
        let ones = b.iter().filter(|&&v| v == 1.0).count();
        if b.iter().any(|&v| v != 0.0 && v != 1.0) || ones != 1 {
            return Err(Error::param("selection", "binary selection needs exactly one entry equal to 1"));
        }
        Ok(SelectionVector {
            b,
            mode: SelectionMode::Binary,
        })
    }

    /// Relaxed vector: entries in [0, 1] summing to one.
    pub fn relaxed(b: Vec<f64>) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::param("selection", "empty selection vector"));
        }
        if b.iter().any(|&v| !(-1e-12..=1.0 + 1e-12).contains(&v)) {
            return Err(Error::param("selection", "relaxed entries must lie in [0, 1]"));
        }
        let sum: f64 = b.iter().sum();
        if Float::abs(sum - 1.0) > RELAXED_SUM_TOL {
            return Err(Error::param("selection", format!("entries sum to {sum}, expected 1")));
        }
        Ok(SelectionVector {
            b,
            mode: SelectionMode::Relaxed,
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }

    /// Selected index for binary vectors.
    pub fn selected(&self) -> Option<usize> {
        match self.mode {
            SelectionMode::Binary => self.b.iter().position(|&v| v == 1.0),
            SelectionMode::Relaxed => None,
        }
    }

    /// Index of the largest entry (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.b.iter().enumerate() {
            if v > self.b[best] {
                best = i;
            }
        }
        best
    }

    /// `sum_m b[m] - b[m]^2`, zero exactly at binary points.
    pub fn binary_violation(&self) -> f64 {
        self.b.iter().map(|&v| v - v * v).sum()
    }
}

/// Selection vectors of all `N` antennas plus the minimum distance `D_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    vectors: Vec<SelectionVector>,
    min_distance: f64,
}

impl Placement {
    pub fn new(vectors: Vec<SelectionVector>, min_distance: f64) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::param("placement", "at least one antenna is required"));
        };
        let m = first.len();
        for v in &vectors {
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "placement selection vectors",
                    expected: m,
                    actual: v.len(),
                });
            }
        }
        if !(min_distance >= 0.0) {
            return Err(Error::param("min_distance", "must be non-negative"));
        }
        Ok(Placement {
            vectors,
            min_distance,
        })
    }

    /// Binary placement selecting `indices[n]` for antenna `n`.
    pub fn from_indices(candidates: usize, indices: &[usize], min_distance: f64) -> Result<Self> {
        let vectors = indices
            .iter()
            .map(|&i| SelectionVector::one_hot(candidates, i))
            .collect::<Result<Vec<_>>>()?;
        Placement::new(vectors, min_distance)
    }

    /// Relaxed placement from per-antenna rows; rows are renormalized to sum to one.
    pub fn from_relaxed_rows(rows: Vec<Vec<f64>>, min_distance: f64) -> Result<Self> {
        let vectors = rows
            .into_iter()
            .map(|mut r| {
                for v in r.iter_mut() {
                    *v = v.clamp(0.0, 1.0);
                }
                let s: f64 = r.iter().sum();
                if s > 0.0 {
                    for v in r.iter_mut() {
                        *v /= s;
                    }
                }
                SelectionVector::relaxed(r)
            })
            .collect::<Result<Vec<_>>>()?;
        Placement::new(vectors, min_distance)
    }

    pub fn antennas(&self) -> usize {
        self.vectors.len()
    }

    pub fn candidates(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn min_distance(&self) -> f64 {
        self.min_distance
    }

    pub fn vectors(&self) -> &[SelectionVector] {
        &self.vectors
    }

    pub fn is_binary(&self) -> bool {
        self.vectors.iter().all(|v| v.mode() == SelectionMode::Binary)
    }

    /// Selected candidate index per antenna, if binary.
    pub fn indices(&self) -> Option<Vec<usize>> {
        self.vectors.iter().map(|v| v.selected()).collect()
    }

    /// Same placement with antennas ordered by ascending candidate index.
    ///
    /// Antennas are exchangeable, so this is the representative used for
    /// final reporting.
    pub fn canonical(&self) -> Option<Placement> {
        let mut idx = self.indices()?;
        idx.sort_unstable();
        Placement::from_indices(self.candidates(), &idx, self.min_distance).ok()
    }

    pub fn binary_violation(&self) -> f64 {
        self.vectors.iter().map(|v| v.binary_violation()).sum()
    }

    /// Block matrix `B` (`MN x N`): column `n` carries `b_n` in rows `nM..(n+1)M`.
    pub fn block_matrix(&self) -> DMatrix<f64> {
        expand_block_matrix(self)
    }
}

/// Expands the selection vectors into the block-diagonal matrix `B`.
pub fn expand_block_matrix(p: &Placement) -> DMatrix<f64> {
    let n = p.antennas();
    let m = p.candidates();
    let mut b = DMatrix::zeros(m * n, n);
    for (col, v) in p.vectors().iter().enumerate() {
        for (i, &x) in v.as_slice().iter().enumerate() {
            b[(col * m + i, col)] = x;
        }
    }
    b
}

/// Result of the minimum-distance check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinDistanceReport {
    pub satisfied: bool,
    /// Violating antenna pairs `(n, n')` with `n < n'` (zero-based).
    pub violations: Vec<(usize, usize)>,
}

/// Checks `b_n^T D b_n' >= D_min` for every antenna pair of a binary placement.
pub fn check_min_distance(p: &Placement, d: &DistanceMatrix) -> Result<MinDistanceReport> {
    if !p.is_binary() {
        return Err(Error::InvalidMode(
            "minimum distance is only defined for binary placements",
        ));
    }
    if d.len() != p.candidates() {
        return Err(Error::DimensionMismatch {
            context: "distance matrix",
            expected: p.candidates(),
            actual: d.len(),
        });
    }
    let mut violations = Vec::new();
    let v = p.vectors();
    for n in 0..v.len() {
        for n2 in (n + 1)..v.len() {
            if d.bilinear(v[n].as_slice(), v[n2].as_slice()) < p.min_distance() {
                violations.push((n, n2));
            }
        }
    }
    Ok(MinDistanceReport {
        satisfied: violations.is_empty(),
        violations,
    })
}

/// Checks the distance constraint for plain candidate indices.
pub fn indices_respect_distance(indices: &[usize], d: &DistanceMatrix, min_distance: f64) -> bool {
    for (a, &i) in indices.iter().enumerate() {
        for &j in &indices[a + 1..] {
            if d.get(i, j) < min_distance {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn table_grid_has_169_points() {
        let g = build_grid(2.0, 0.01, 0.06).unwrap();
        assert_eq!(g.side(), 13);
        assert_eq!(g.len(), 169);
        assert_eq!(g.positions()[0], [0.0, 0.0]);
    }

    #[test]
    fn smallest_lattice() {
        let d = 0.01;
        let lambda = 0.06;
        let g = build_grid(d / lambda, d, lambda).unwrap();
        assert_eq!(g.len(), 4);
        let p = g.positions();
        let expect = [[0.0, 0.0], [d, 0.0], [0.0, d], [d, d]];
        for (a, b) in p.iter().zip(expect.iter()) {
            assert_relative_eq!(a[0], b[0]);
            assert_relative_eq!(a[1], b[1]);
        }
    }

    #[test]
    fn degenerate_single_cell() {
        let g = build_grid(0.1, 0.01, 0.06).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.positions()[0], [0.0, 0.0]);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(build_grid(0.0, 0.01, 0.06).is_err());
        assert!(build_grid(1.0, -0.01, 0.06).is_err());
        assert!(build_grid(1.0, 0.01, f64::NAN).is_err());
    }

    #[test]
    fn distance_entries() {
        let g = build_grid(0.5, 0.01, 0.06).unwrap();
        let d = distance_matrix(&g);
        assert_relative_eq!(d.get(0, 1), 0.01, epsilon = 1e-15);
        assert_eq!(d.get(3, 3), 0.0);
        // (0,0) to (0.01,0.01): compare against sqrt(2)*0.01 computed separately.
        let diag = g.index_of(1, 1).unwrap();
        assert_relative_eq!(d.get(0, diag), 0.01 * core::f64::consts::SQRT_2, max_relative = 1e-15);
    }

    #[test]
    fn block_matrix_hand_expansion() {
        let p = Placement::from_indices(2, &[0, 1], 0.0).unwrap();
        let b = expand_block_matrix(&p);
        assert_eq!(b.shape(), (4, 2));
        assert_eq!(b[(0, 0)], 1.0);
        assert_eq!(b[(3, 1)], 1.0);
        assert_eq!(b.sum(), 2.0);

        let single = Placement::new(vec![SelectionVector::relaxed(vec![0.25, 0.75]).unwrap()], 0.0).unwrap();
        let b1 = expand_block_matrix(&single);
        assert_eq!(b1.shape(), (2, 1));
        assert_eq!(b1[(1, 0)], 0.75);
    }

    #[test]
    fn adjacent_cells_violate_table_min_distance() {
        let g = build_grid(0.5, 0.01, 0.06).unwrap();
        let d = distance_matrix(&g);
        let p = Placement::from_indices(g.len(), &[0, 1], 0.015).unwrap();
        let r = check_min_distance(&p, &d).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.violations, vec![(0, 1)]);

        let p2 = Placement::from_indices(g.len(), &[0, 2], 0.015).unwrap();
        assert!(check_min_distance(&p2, &d).unwrap().satisfied);
    }

    #[test]
    fn relaxed_input_is_rejected() {
        let g = build_grid(0.2, 0.01, 0.06).unwrap();
        let d = distance_matrix(&g);
        let p = Placement::from_relaxed_rows(vec![vec![0.5; 4], vec![0.25; 4]], 0.015).unwrap();
        assert!(matches!(check_min_distance(&p, &d), Err(Error::InvalidMode(_))));
    }

    #[test]
    fn exhaustive_pairs_on_nine_points() {
        let g = build_grid(2.0 * 0.01 / 0.06, 0.01, 0.06).unwrap();
        assert_eq!(g.len(), 9);
        let d = distance_matrix(&g);
        let mut accepted = 0;
        let mut pairs = 0;
        for i in 0..9 {
            for j in (i + 1)..9 {
                pairs += 1;
                let p = Placement::from_indices(9, &[i, j], 0.015).unwrap();
                let ok = check_min_distance(&p, &d).unwrap().satisfied;
                let (xi, yi) = ((i % 3) as f64 * 0.01, (i / 3) as f64 * 0.01);
                let (xj, yj) = ((j % 3) as f64 * 0.01, (j / 3) as f64 * 0.01);
                let brute = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt() >= 0.015;
                assert_eq!(ok, brute, "pair ({i},{j})");
                accepted += ok as usize;
            }
        }
        assert_eq!(pairs, 36);
        // 36 pairs minus 12 edge-adjacent minus 8 diagonal-adjacent.
        assert_eq!(accepted, 16);
    }

    proptest! {
        #[test]
        fn binary_bilinear_is_entry(i in 0usize..16, j in 0usize..16) {
            let g = build_grid(0.5, 0.01, 0.06).unwrap();
            let d = distance_matrix(&g);
            let a = SelectionVector::one_hot(16, i).unwrap();
            let b = SelectionVector::one_hot(16, j).unwrap();
            prop_assert_eq!(d.bilinear(a.as_slice(), b.as_slice()), d.get(i, j));
        }

        #[test]
        fn block_columns_keep_sums_and_gram_is_diagonal(
            raw in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 4), 1..4)
        ) {
            let rows: Vec<Vec<f64>> = raw.into_iter().map(|mut r| { r[0] += 1e-3; r }).collect();
            let p = Placement::from_relaxed_rows(rows, 0.0).unwrap();
            let b = expand_block_matrix(&p);
            let gram = b.transpose() * &b;
            for (n, v) in p.vectors().iter().enumerate() {
                let col_sum: f64 = b.column(n).iter().sum();
                prop_assert!((col_sum - v.as_slice().iter().sum::<f64>()).abs() < 1e-12);
                let norm2: f64 = v.as_slice().iter().map(|x| x * x).sum();
                prop_assert!((gram[(n, n)] - norm2).abs() < 1e-12);
                for n2 in 0..p.antennas() {
                    if n2 != n {
                        prop_assert_eq!(gram[(n, n2)], 0.0);
                    }
                }
            }
        }

        #[test]
        fn min_distance_check_is_order_symmetric(i in 0usize..16, j in 0usize..16, k in 0usize..16) {
            let g = build_grid(0.5, 0.01, 0.06).unwrap();
            let d = distance_matrix(&g);
            let a = check_min_distance(&Placement::from_indices(16, &[i, j, k], 0.015).unwrap(), &d).unwrap();
            let b = check_min_distance(&Placement::from_indices(16, &[k, j, i], 0.015).unwrap(), &d).unwrap();
            prop_assert_eq!(a.satisfied, b.satisfied);
            prop_assert_eq!(a.violations.len(), b.violations.len());
        }
    }
}
