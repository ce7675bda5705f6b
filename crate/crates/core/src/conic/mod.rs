//! Solver-agnostic conic programs.
//!
//! A [`ConicProgram`] holds real scalar variables, a linear objective and a
//! list of affine constraints: equalities, inequalities, second-order cones
//! and real symmetric LMIs. Complex Hermitian matrix variables and LMIs are
//! mapped to real ones through `[[Re X, -Im X], [Im X, Re X]]`.
//!
//! [`InteriorPoint`] is the bundled backend; any other solver can be plugged
//! in through [`ConicBackend`].

mod cones;
pub mod dump;
mod rank;
mod solver;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use num_traits::Float;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Range, Sub};

use nalgebra::DMatrix;

use crate::linalg::symmetric_eigenvalues;
use crate::{Error, Result, C64};

pub use rank::{extract_rank_one, RankOne, DEFAULT_RANK_RATIO};
pub use solver::{InteriorPoint, SolverSettings};

/// Affine function `sum_i a_i x_i + c` of the scalar variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        AffineExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        Self::term(i, 1.0)
    }

    pub fn term(i: usize, a: f64) -> Self {
        AffineExpr {
            terms: vec![(i, a)],
            constant: 0.0,
        }
    }

    pub fn push(&mut self, i: usize, a: f64) {
        if a != 0.0 {
            self.terms.push((i, a));
        }
    }

    pub fn add_scaled(&mut self, other: &AffineExpr, a: f64) {
        if a == 0.0 {
            return;
        }
        self.terms.extend(other.terms.iter().map(|&(i, v)| (i, v * a)));
        self.constant += a * other.constant;
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, a)| a * x[i]).sum::<f64>() + self.constant
    }

    /// Merges repeated indices and drops zero coefficients; terms end up sorted.
    pub fn compact(&mut self) {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(i, a) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += a,
                _ => out.push((i, a)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
    }

    /// Sum of `|a_i x_i|` plus `|c|`, the natural scale of the expression at `x`.
    pub fn magnitude(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, a)| (a * x[i]).abs()).sum::<f64>() + self.constant.abs()
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(mut self, rhs: AffineExpr) -> AffineExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(mut self, a: f64) -> AffineExpr {
        for t in &mut self.terms {
            t.1 *= a;
        }
        self.constant *= a;
        self
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self * -1.0
    }
}

/// Complex affine expression, real and imaginary parts kept separately.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexAffine {
    pub re: AffineExpr,
    pub im: AffineExpr,
}

impl ComplexAffine {
    pub fn real(re: AffineExpr) -> Self {
        ComplexAffine {
            re,
            im: AffineExpr::zero(),
        }
    }

    pub fn constant(z: C64) -> Self {
        ComplexAffine {
            re: AffineExpr::constant(z.re),
            im: AffineExpr::constant(z.im),
        }
    }

    pub fn conj(mut self) -> Self {
        self.im = -self.im;
        self
    }

    /// `a * self` for a complex constant `a`.
    pub fn scale(&self, a: C64) -> Self {
        let mut re = self.re.clone() * a.re;
        re.add_scaled(&self.im, -a.im);
        let mut im = self.re.clone() * a.im;
        im.add_scaled(&self.im, a.re);
        ComplexAffine { re, im }
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        C64::new(self.re.eval(x), self.im.eval(x))
    }
}

/// Handle to an `n x n` Hermitian matrix variable.
///
/// Storage: `n` real diagonal entries, then the real parts of the strict
/// lower triangle (column-major), then their imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitianVar {
    pub dim: usize,
    pub offset: usize,
}

fn lower_index(n: usize, i: usize, j: usize) -> usize {
    // strict lower triangle, column-major, i > j
    j * n - j * (j + 1) / 2 + (i - j - 1)
}

impl HermitianVar {
    pub fn scalars(dim: usize) -> usize {
        dim * dim
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + Self::scalars(self.dim)
    }

    pub fn entry(&self, i: usize, j: usize) -> ComplexAffine {
        let n = self.dim;
        let off = n * (n - 1) / 2;
        if i == j {
            return ComplexAffine::real(AffineExpr::var(self.offset + i));
        }
        let (a, b, sign) = if i > j { (i, j, 1.0) } else { (j, i, -1.0) };
        let k = lower_index(n, a, b);
        ComplexAffine {
            re: AffineExpr::var(self.offset + n + k),
            im: AffineExpr::term(self.offset + n + off + k, sign),
        }
    }

    pub fn trace(&self) -> AffineExpr {
        let mut e = AffineExpr::zero();
        for i in 0..self.dim {
            e.push(self.offset + i, 1.0);
        }
        e
    }

    /// `Re tr(C X)` for a Hermitian constant `C`.
    pub fn inner(&self, c: &DMatrix<C64>) -> AffineExpr {
        let n = self.dim;
        let off = n * (n - 1) / 2;
        let mut e = AffineExpr::zero();
        for i in 0..n {
            e.push(self.offset + i, c[(i, i)].re);
        }
        for j in 0..n {
            for i in (j + 1)..n {
                let k = lower_index(n, i, j);
                // C_ji X_ij + C_ij X_ji = 2 Re(C_ji X_ij), X_ij = u + i v
                let cji = c[(j, i)];
                e.push(self.offset + n + k, 2.0 * cji.re);
                e.push(self.offset + n + off + k, -2.0 * cji.im);
            }
        }
        e
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j).eval(x))
    }

    pub fn entries(&self) -> Vec<ComplexAffine> {
        let n = self.dim;
        let mut v = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                v.push(self.entry(i, j));
            }
        }
        v
    }
}

/// Handle to an `n x n` real symmetric matrix variable (lower triangle, column-major).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetricVar {
    pub dim: usize,
    pub offset: usize,
}

impl SymmetricVar {
    pub fn scalars(dim: usize) -> usize {
        dim * (dim + 1) / 2
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        let n = self.dim;
        self.offset + b * n - b * (b + 1) / 2 + a
    }

    pub fn entry(&self, i: usize, j: usize) -> AffineExpr {
        AffineExpr::var(self.index(i, j))
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| x[self.index(i, j)])
    }
}

/// Affine constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `e(x) = 0`
    Zero(AffineExpr),
    /// `e(x) >= 0`
    NonNeg(AffineExpr),
    /// `||u(x)|| <= t(x)`
    SecondOrder { t: AffineExpr, u: Vec<AffineExpr> },
    /// Symmetric `dim x dim` matrix PSD; `lower` lists `(i, j)`, `i >= j`, column-major.
    Lmi { dim: usize, lower: Vec<AffineExpr> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBlock {
    pub name: String,
    pub range: Range<usize>,
}

/// Minimize a linear objective subject to affine conic constraints.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    num_vars: usize,
    blocks: Vec<VarBlock>,
    objective: AffineExpr,
    constraints: Vec<Constraint>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn blocks(&self) -> &[VarBlock] {
        &self.blocks
    }

    pub fn objective(&self) -> &AffineExpr {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn add_vector(&mut self, name: &str, n: usize) -> Range<usize> {
        let r = self.num_vars..self.num_vars + n;
        self.num_vars += n;
        self.blocks.push(VarBlock {
            name: name.into(),
            range: r.clone(),
        });
        r
    }

    pub fn add_scalar(&mut self, name: &str) -> usize {
        self.add_vector(name, 1).start
    }

    /// Free Hermitian matrix variable.
    pub fn add_hermitian(&mut self, name: &str, n: usize) -> HermitianVar {
        let r = self.add_vector(name, HermitianVar::scalars(n));
        HermitianVar { dim: n, offset: r.start }
    }

    /// Hermitian matrix variable constrained PSD.
    pub fn add_hermitian_psd(&mut self, name: &str, n: usize) -> HermitianVar {
        let h = self.add_hermitian(name, n);
        self.add_hermitian_lmi(n, &h.entries());
        h
    }

    pub fn add_symmetric(&mut self, name: &str, n: usize) -> SymmetricVar {
        let r = self.add_vector(name, SymmetricVar::scalars(n));
        SymmetricVar { dim: n, offset: r.start }
    }

    pub fn add_symmetric_psd(&mut self, name: &str, n: usize) -> SymmetricVar {
        let s = self.add_symmetric(name, n);
        let mut lower = Vec::with_capacity(SymmetricVar::scalars(n));
        for j in 0..n {
            for i in j..n {
                lower.push(s.entry(i, j));
            }
        }
        self.constraints.push(Constraint::Lmi { dim: n, lower });
        s
    }

    pub fn minimize(&mut self, objective: AffineExpr) {
        self.objective = objective;
    }

    pub fn add(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn add_zero(&mut self, e: AffineExpr) {
        self.add(Constraint::Zero(e));
    }

    pub fn add_nonneg(&mut self, e: AffineExpr) {
        self.add(Constraint::NonNeg(e));
    }

    /// `lhs <= rhs`
    pub fn add_le(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.add_nonneg(rhs - lhs);
    }

    pub fn add_soc(&mut self, t: AffineExpr, u: Vec<AffineExpr>) {
        self.add(Constraint::SecondOrder { t, u });
    }

    /// Real symmetric LMI from a full row-major `dim x dim` list; the lower triangle is used.
    pub fn add_lmi(&mut self, dim: usize, full: &[AffineExpr]) {
        let mut lower = Vec::with_capacity(SymmetricVar::scalars(dim));
        for j in 0..dim {
            for i in j..dim {
                lower.push(full[i * dim + j].clone());
            }
        }
        self.add(Constraint::Lmi { dim, lower });
    }

    /// Hermitian LMI from a full row-major `dim x dim` list, via the real embedding.
    pub fn add_hermitian_lmi(&mut self, dim: usize, full: &[ComplexAffine]) {
        let n2 = 2 * dim;
        let mut lower = Vec::with_capacity(SymmetricVar::scalars(n2));
        for j in 0..n2 {
            for i in j..n2 {
                let (bi, bj) = (i % dim, j % dim);
                let z = &full[bi * dim + bj];
                let e = match (i >= dim, j >= dim) {
                    (false, false) | (true, true) => z.re.clone(),
                    (true, false) => z.im.clone(),
                    (false, true) => -z.im.clone(),
                };
                lower.push(e);
            }
        }
        self.add(Constraint::Lmi { dim: n2, lower });
    }

    /// Checks indices, sizes and finiteness.
    pub fn validate(&self) -> Result<()> {
        let check = |e: &AffineExpr, what: &str| -> Result<()> {
            if !e.constant.is_finite() {
                return Err(Error::MalformedProgram(format!("non-finite constant in {what}")));
            }
            for &(i, a) in &e.terms {
                if i >= self.num_vars {
                    return Err(Error::MalformedProgram(format!(
                        "{what} references undeclared variable {i} (have {})",
                        self.num_vars
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::MalformedProgram(format!("non-finite coefficient in {what}")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (k, c) in self.constraints.iter().enumerate() {
            let what = format!("constraint {k}");
            match c {
                Constraint::Zero(e) | Constraint::NonNeg(e) => check(e, &what)?,
                Constraint::SecondOrder { t, u } => {
                    check(t, &what)?;
                    for e in u {
                        check(e, &what)?;
                    }
                }
                Constraint::Lmi { dim, lower } => {
                    if *dim == 0 || lower.len() != SymmetricVar::scalars(*dim) {
                        return Err(Error::MalformedProgram(format!(
                            "{what}: LMI of dimension {dim} needs {} entries, got {}",
                            SymmetricVar::scalars(*dim),
                            lower.len()
                        )));
                    }
                    for e in lower {
                        check(e, &what)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Worst violation over all constraints at `x`, relative to each
    /// expression's magnitude, and the most negative LMI eigenvalue.
    pub fn violation(&self, x: &[f64]) -> (f64, f64) {
        let mut res: f64 = 0.0;
        let mut psd: f64 = 0.0;
        for c in &self.constraints {
            match c {
                Constraint::Zero(e) => res = res.max(e.eval(x).abs() / (1.0 + e.magnitude(x))),
                Constraint::NonNeg(e) => res = res.max((-e.eval(x)).max(0.0) / (1.0 + e.magnitude(x))),
                Constraint::SecondOrder { t, u } => {
                    let nu = Float::sqrt(u.iter().map(|e| Float::powi(e.eval(x), 2)).sum::<f64>());
                    let scale = 1.0 + t.magnitude(x) + u.iter().map(|e| e.magnitude(x)).fold(0.0, f64::max);
                    res = res.max((nu - t.eval(x)).max(0.0) / scale);
                }
                Constraint::Lmi { dim, lower } => {
                    let m = lmi_value(*dim, lower, x);
                    let ev = symmetric_eigenvalues(&m);
                    let scale = 1.0 + m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let low = ev.last().copied().unwrap_or(0.0);
                    psd = psd.max((-low).max(0.0) / scale);
                }
            }
        }
        (res, psd)
    }
}

/// Evaluates the symmetric matrix of an LMI at `x`.
pub fn lmi_value(dim: usize, lower: &[AffineExpr], x: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    let mut k = 0;
    for j in 0..dim {
        for i in j..dim {
            let v = lower[k].eval(x);
            m[(i, j)] = v;
            m[(j, i)] = v;
            k += 1;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Largest relative violation of equality, inequality and cone constraints.
    pub primal_residual: f64,
    /// Largest relative negative eigenvalue over the LMIs.
    pub psd_violation: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Contract for conic solvers.
pub trait ConicBackend {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution>;
}

/// Solves with the bundled interior-point backend at feasibility tolerance `tol`.
pub fn solve(program: &ConicProgram, tol: f64) -> Result<ConicSolution> {
    InteriorPoint::new(SolverSettings {
        feasibility_tol: tol,
        ..SolverSettings::default()
    })
    .solve(program)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_inner_matches_trace() {
        let mut p = ConicProgram::new();
        let h = p.add_hermitian("X", 3);
        let x: Vec<f64> = (0..p.num_vars()).map(|i| 0.3 * i as f64 - 1.0).collect();
        let xv = h.value(&x);
        assert!((xv.clone() - xv.adjoint()).iter().all(|z| z.norm() < 1e-15));
        let c = DMatrix::from_fn(3, 3, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let direct = (&c * &xv).trace().re;
        assert!((h.inner(&c).eval(&x) - direct).abs() < 1e-12);
    }

    #[test]
    fn symmetric_index_is_bijective() {
        let s = SymmetricVar { dim: 4, offset: 3 };
        let mut seen = alloc::collections::BTreeSet::new();
        for j in 0..4 {
            for i in j..4 {
                assert!(seen.insert(s.index(i, j)));
                assert_eq!(s.index(i, j), s.index(j, i));
            }
        }
        assert_eq!(seen.len(), 10);
        assert_eq!(*seen.iter().next().unwrap(), 3);
    }

    #[test]
    fn undeclared_variable_is_malformed() {
        let mut p = ConicProgram::new();
        let x = p.add_scalar("x");
        p.add_nonneg(AffineExpr::var(x + 1));
        assert!(matches!(p.validate(), Err(Error::MalformedProgram(_))));
    }

    #[test]
    fn compact_merges() {
        let mut e = AffineExpr::var(2) + AffineExpr::term(0, 2.0) + AffineExpr::term(2, -1.0);
        e.compact();
        assert_eq!(e.terms, vec![(0, 2.0)]);
    }
}
