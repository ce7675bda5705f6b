//! Dense primal-dual interior-point method on the homogeneous self-dual
//! embedding, with Nesterov-Todd scaling and Mehrotra predictor-corrector
//! steps.
//!
//! Standard form: minimize `c^T x` subject to `G x + s = h`, `s in K`,
//! `A x = b`, where `K` is a product of an orthant, second-order cones and
//! PSD cones. The Newton systems are reduced to the normal equations
//! `(G^T W^-1 W^-T G + A^T A) x = ...` and solved by Cholesky with a Schur
//! complement for the equality multipliers.

use alloc::vec;
use alloc::vec::Vec;

use log::debug;
use num_traits::Float;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::cones::{dot, jordan, jordan_div, max_step, norm, Block, Cones, Op, Scaling};
use super::{ConicBackend, ConicProgram, ConicSolution, Constraint, SolveStatus};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Tolerance on the relative constraint violation of the returned point.
    pub feasibility_tol: f64,
    /// Residual tolerance of the embedded iterations (scaled problem).
    pub internal_tol: f64,
    pub abs_gap_tol: f64,
    pub rel_gap_tol: f64,
    /// Looser residual and relative-gap tolerance accepted when the iterations stall.
    pub reduced_tol: f64,
    pub max_iterations: usize,
    pub refinement_steps: usize,
    pub equilibrate: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            feasibility_tol: 1e-7,
            internal_tol: 1e-9,
            abs_gap_tol: 1e-10,
            rel_gap_tol: 1e-9,
            reduced_tol: 1e-6,
            max_iterations: 120,
            refinement_steps: 2,
            equilibrate: true,
        }
    }
}

/// The bundled backend.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InteriorPoint {
    pub settings: SolverSettings,
}

impl InteriorPoint {
    pub fn new(settings: SolverSettings) -> Self {
        InteriorPoint { settings }
    }
}

type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
struct Standard {
    n: usize,
    c: Vec<f64>,
    a: Vec<SparseRow>,
    b: Vec<f64>,
    g: Vec<SparseRow>,
    h: Vec<f64>,
    cones: Cones,
}

const SQRT_2: f64 = core::f64::consts::SQRT_2;

fn compact(terms: &[(usize, f64)], scale: f64) -> SparseRow {
    let mut e = super::AffineExpr {
        terms: terms.to_vec(),
        constant: 0.0,
    };
    e.compact();
    e.terms.into_iter().map(|(i, a)| (i, a * scale)).collect()
}

/// Replaces a long second-order cone `||M x + g|| <= t` by the equivalent
/// `||(R x + Q^T g, rho)|| <= t` with `M = QR` and `rho = ||g - Q Q^T g||`.
fn compress_soc(n: usize, u: &[super::AffineExpr]) -> Option<(Vec<SparseRow>, Vec<f64>)> {
    let mut cols: Vec<usize> = u.iter().flat_map(|e| e.terms.iter().map(|t| t.0)).collect();
    cols.sort_unstable();
    cols.dedup();
    let m = u.len();
    let k = cols.len();
    if m <= k + 1 || k > n {
        return None;
    }
    let mut mat = DMatrix::<f64>::zeros(m, k);
    let mut g = DVector::<f64>::zeros(m);
    for (r, e) in u.iter().enumerate() {
        for &(i, a) in &e.terms {
            let c = cols.binary_search(&i).unwrap();
            mat[(r, c)] += a;
        }
        g[r] = e.constant;
    }
    let qr = mat.qr();
    let q = qr.q();
    let rmat = qr.r();
    let qtg = q.transpose() * &g;
    let resid = &g - &q * &qtg;
    let mut rows = Vec::with_capacity(qtg.len() + 1);
    let mut consts = Vec::with_capacity(qtg.len() + 1);
    for r in 0..rmat.nrows() {
        let row: SparseRow = (0..k).filter(|&c| rmat[(r, c)] != 0.0).map(|c| (cols[c], rmat[(r, c)])).collect();
        rows.push(row);
        consts.push(qtg[r]);
    }
    rows.push(Vec::new());
    consts.push(resid.norm());
    Some((rows, consts))
}

fn standardize(p: &ConicProgram) -> (Standard, bool) {
    let n = p.num_vars();
    let mut c = vec![0.0; n];
    for &(i, a) in &p.objective().terms {
        c[i] += a;
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut trivially_infeasible = false;
    let mut g = Vec::new();
    let mut h = Vec::new();
    let mut cones = Cones::default();
    for con in p.constraints() {
        match con {
            Constraint::Zero(e) => {
                let row = compact(&e.terms, 1.0);
                if row.is_empty() {
                    trivially_infeasible |= e.constant.abs() > 1e-12;
                } else {
                    a.push(row);
                    b.push(-e.constant);
                }
            }
            Constraint::NonNeg(e) => {
                let row = compact(&e.terms, -1.0);
                if row.is_empty() {
                    trivially_infeasible |= e.constant < -1e-12;
                } else {
                    g.push(row);
                    h.push(e.constant);
                    cones.l += 1;
                }
            }
            _ => {}
        }
    }
    for con in p.constraints() {
        if let Constraint::SecondOrder { t, u } = con {
            g.push(compact(&t.terms, -1.0));
            h.push(t.constant);
            match compress_soc(n, u) {
                Some((rows, consts)) => {
                    for (r, k) in rows.into_iter().zip(consts) {
                        g.push(r.into_iter().map(|(i, v)| (i, -v)).collect());
                        h.push(k);
                    }
                }
                None => {
                    for e in u {
                        g.push(compact(&e.terms, -1.0));
                        h.push(e.constant);
                    }
                }
            }
            cones.q.push(0);
            let start = cones.dim_without_last_soc();
            let len = g.len() - start;
            *cones.q.last_mut().unwrap() = len;
        }
    }
    for con in p.constraints() {
        if let Constraint::Lmi { dim, lower } = con {
            let mut k = 0;
            for j in 0..*dim {
                for i in j..*dim {
                    let f = if i == j { 1.0 } else { SQRT_2 };
                    g.push(compact(&lower[k].terms, -f));
                    h.push(f * lower[k].constant);
                    k += 1;
                }
            }
            cones.s.push(*dim);
        }
    }
    (
        Standard {
            n,
            c,
            a,
            b,
            g,
            h,
            cones,
        },
        trivially_infeasible,
    )
}

impl Cones {
    /// Offset where the most recently pushed SOC starts.
    fn dim_without_last_soc(&self) -> usize {
        self.l + self.q[..self.q.len() - 1].iter().sum::<usize>()
    }
}

/// Diagonal equilibration `x = col .* x_hat`, rows of `G` and `A` scaled.
struct Equilibration {
    col: Vec<f64>,
    obj: f64,
    rhs: f64,
}

fn equilibrate(st: &mut Standard, enabled: bool) -> Equilibration {
    let n = st.n;
    let mut col = vec![1.0; n];
    let mut row_g = vec![1.0; st.g.len()];
    let mut row_a = vec![1.0; st.a.len()];
    let blocks = st.cones.blocks();
    if enabled {
        for _ in 0..12 {
            let mut cmax = vec![0.0f64; n];
            for (r, row) in st.g.iter().enumerate() {
                for &(j, v) in row {
                    cmax[j] = cmax[j].max((v * row_g[r] * col[j]).abs());
                }
            }
            for (r, row) in st.a.iter().enumerate() {
                for &(j, v) in row {
                    cmax[j] = cmax[j].max((v * row_a[r] * col[j]).abs());
                }
            }
            for j in 0..n {
                if cmax[j] > 0.0 {
                    col[j] /= Float::sqrt(cmax[j]);
                }
            }
            for (r, row) in st.a.iter().enumerate() {
                let m = row.iter().fold(0.0f64, |m, &(j, v)| m.max((v * row_a[r] * col[j]).abs()));
                if m > 0.0 {
                    row_a[r] /= Float::sqrt(m);
                }
            }
            for &(b, o, len) in &blocks {
                let rmax = |r: usize, rg: &[f64]| st.g[r].iter().fold(0.0f64, |m, &(j, v)| m.max((v * rg[r] * col[j]).abs()));
                match b {
                    Block::Lp => {
                        for r in o..o + len {
                            let m = rmax(r, &row_g);
                            if m > 0.0 {
                                row_g[r] /= Float::sqrt(m);
                            }
                        }
                    }
                    _ => {
                        let m = (o..o + len).map(|r| rmax(r, &row_g)).fold(0.0f64, f64::max);
                        if m > 0.0 {
                            let f = 1.0 / Float::sqrt(m);
                            for r in o..o + len {
                                row_g[r] *= f;
                            }
                        }
                    }
                }
            }
        }
    }
    for (r, row) in st.g.iter_mut().enumerate() {
        for t in row.iter_mut() {
            t.1 *= row_g[r] * col[t.0];
        }
        st.h[r] *= row_g[r];
    }
    for (r, row) in st.a.iter_mut().enumerate() {
        for t in row.iter_mut() {
            t.1 *= row_a[r] * col[t.0];
        }
        st.b[r] *= row_a[r];
    }
    for j in 0..n {
        st.c[j] *= col[j];
    }
    let (mut obj, mut rhs) = (1.0, 1.0);
    if enabled {
        let cm = st.c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if cm > 0.0 {
            obj = 1.0 / cm;
        }
        let hm = st.h.iter().chain(st.b.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        if hm > 0.0 {
            rhs = 1.0 / hm;
        }
        st.c.iter_mut().for_each(|v| *v *= obj);
        st.h.iter_mut().for_each(|v| *v *= rhs);
        st.b.iter_mut().for_each(|v| *v *= rhs);
    }
    Equilibration { col, obj, rhs }
}

fn mul_rows(rows: &[SparseRow], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()).collect()
}

fn mul_rows_t(rows: &[SparseRow], y: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (r, row) in rows.iter().enumerate() {
        if y[r] != 0.0 {
            for &(j, v) in row {
                out[j] += v * y[r];
            }
        }
    }
    out
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Per-block dense column data used to form the normal matrix.
struct BlockCols {
    offset: usize,
    len: usize,
    block: usize,
    cols: Vec<usize>,
    dense: DMatrix<f64>,
}

fn block_columns(st: &Standard) -> Vec<BlockCols> {
    let mut out = Vec::new();
    for (bi, (b, o, len)) in st.cones.blocks().into_iter().enumerate() {
        if b == Block::Lp {
            continue;
        }
        let mut cols: Vec<usize> = st.g[o..o + len].iter().flat_map(|r| r.iter().map(|t| t.0)).collect();
        cols.sort_unstable();
        cols.dedup();
        let mut dense = DMatrix::zeros(len, cols.len());
        for r in 0..len {
            for &(j, v) in &st.g[o + r] {
                let c = cols.binary_search(&j).unwrap();
                dense[(r, c)] += v;
            }
        }
        out.push(BlockCols {
            offset: o,
            len,
            block: bi,
            cols,
            dense,
        });
    }
    out
}

fn robust_cholesky(mut m: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1e-300f64, f64::max);
    let mut delta = 1e-13 * scale;
    for _ in 0..8 {
        for i in 0..n {
            m[(i, i)] += delta;
        }
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(c);
        }
        delta *= 100.0;
    }
    None
}

struct Kkt<'a> {
    st: &'a Standard,
    w: &'a Scaling,
    chol_m: Cholesky<f64, Dyn>,
    v: DMatrix<f64>,
    chol_s: Option<Cholesky<f64, Dyn>>,
    refine: usize,
}

impl<'a> Kkt<'a> {
    fn factor(st: &'a Standard, w: &'a Scaling, blocks: &[BlockCols], refine: usize) -> Option<Self> {
        let n = st.n;
        let mut h = DMatrix::<f64>::zeros(n, n);
        let d = w.lp_diag();
        for (r, row) in st.g[..st.cones.l].iter().enumerate() {
            let f = 1.0 / (d[r] * d[r]);
            for &(i, vi) in row {
                for &(j, vj) in row {
                    h[(i, j)] += f * vi * vj;
                }
            }
        }
        for bc in blocks {
            let mut gh = bc.dense.clone();
            for c in 0..gh.ncols() {
                let mut colv: Vec<f64> = gh.column(c).iter().copied().collect();
                w.apply_block(bc.block, Op::Wit, &mut colv);
                gh.column_mut(c).copy_from_slice(&colv);
            }
            let prod = gh.transpose() * &gh;
            for (a, &i) in bc.cols.iter().enumerate() {
                for (b, &j) in bc.cols.iter().enumerate() {
                    h[(i, j)] += prod[(a, b)];
                }
            }
            let _ = (bc.offset, bc.len);
        }
        for row in &st.a {
            for &(i, vi) in row {
                for &(j, vj) in row {
                    h[(i, j)] += vi * vj;
                }
            }
        }
        let chol_m = robust_cholesky(h)?;
        let p = st.a.len();
        let mut at = DMatrix::<f64>::zeros(n, p);
        for (r, row) in st.a.iter().enumerate() {
            for &(j, v) in row {
                at[(j, r)] += v;
            }
        }
        let v = chol_m.solve(&at);
        let chol_s = if p > 0 {
            let s = at.transpose() * &v;
            Some(robust_cholesky(s)?)
        } else {
            None
        };
        Some(Kkt {
            st,
            w,
            chol_m,
            v,
            chol_s,
            refine,
        })
    }

    /// Solves `[0 A^T G^T; A 0 0; G 0 -W^T W] (x, y, z) = (bx, by, bz)`,
    /// returning `x`, `y` and `W z`.
    fn solve(&self, bx: &[f64], by: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (mut x, mut y, mut wz) = self.solve_once(bx, by, bz);
        for _ in 0..self.refine {
            let mut z = wz.clone();
            self.w.apply(Op::Winv, &mut z);
            let aty = mul_rows_t(&self.st.a, &y, self.st.n);
            let gtz = mul_rows_t(&self.st.g, &z, self.st.n);
            let r1: Vec<f64> = (0..self.st.n).map(|i| bx[i] - aty[i] - gtz[i]).collect();
            let ax = mul_rows(&self.st.a, &x);
            let r2: Vec<f64> = by.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let gx = mul_rows(&self.st.g, &x);
            let mut wtwz = wz.clone();
            self.w.apply(Op::Wt, &mut wtwz);
            let r3: Vec<f64> = (0..bz.len()).map(|i| bz[i] - gx[i] + wtwz[i]).collect();
            let (dx, dy, dwz) = self.solve_once(&r1, &r2, &r3);
            axpy(1.0, &dx, &mut x);
            axpy(1.0, &dy, &mut y);
            axpy(1.0, &dwz, &mut wz);
        }
        (x, y, wz)
    }

    fn solve_once(&self, bx: &[f64], by: &[f64], bz: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.st.n;
        let mut t = bz.to_vec();
        self.w.apply(Op::Wit, &mut t);
        let mut uz = t.clone();
        self.w.apply(Op::Winv, &mut uz);
        let gtu = mul_rows_t(&self.st.g, &uz, n);
        let aty = mul_rows_t(&self.st.a, by, n);
        let r = DVector::from_iterator(n, (0..n).map(|i| bx[i] + gtu[i] + aty[i]));
        let u = self.chol_m.solve(&r);
        let (x, y) = match &self.chol_s {
            Some(cs) => {
                let au = mul_rows(&self.st.a, u.as_slice());
                let rhs = DVector::from_iterator(by.len(), au.iter().zip(by).map(|(a, b)| a - b));
                let y = cs.solve(&rhs);
                let x = u - &self.v * &y;
                (x.as_slice().to_vec(), y.as_slice().to_vec())
            }
            None => (u.as_slice().to_vec(), Vec::new()),
        };
        let mut wz = mul_rows(&self.st.g, &x);
        self.w.apply(Op::Wit, &mut wz);
        axpy(-1.0, &t, &mut wz);
        (x, y, wz)
    }
}

struct Outcome {
    status: SolveStatus,
    x: Vec<f64>,
    iterations: usize,
}

fn ipm(st: &Standard, set: &SolverSettings) -> Outcome {
    let n = st.n;
    let cones = &st.cones;
    let blocks = block_columns(st);
    // best iterate meeting the reduced tolerances: (score, x, iteration)
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let fail = |x: Vec<f64>, it: usize, best: &Option<(f64, Vec<f64>, usize)>| match best {
        Some((_, bx, _)) => {
            debug!("ipm: returning the best reduced-accuracy iterate");
            Outcome {
                status: SolveStatus::Optimal,
                x: bx.clone(),
                iterations: it,
            }
        }
        None => Outcome {
            status: SolveStatus::NumericalFailure,
            x,
            iterations: it,
        },
    };
    let e = cones.identity();
    let id = Scaling::identity(cones);
    let Some(k0) = Kkt::factor(st, &id, &blocks, set.refinement_steps) else {
        return fail(vec![0.0; n], 0, &best);
    };
    let zero_n = vec![0.0; n];
    let zero_p = vec![0.0; st.a.len()];
    let zero_m = vec![0.0; st.h.len()];
    let (mut x, _, wz) = k0.solve(&zero_n, &st.b, &st.h);
    let mut s: Vec<f64> = wz.iter().map(|v| -v).collect();
    let negc: Vec<f64> = st.c.iter().map(|v| -v).collect();
    let (_, mut y, mut z) = k0.solve(&negc, &zero_p, &zero_m);
    drop(k0);
    for v in [&mut s, &mut z] {
        let t = cones.max_violation(v);
        let nv = norm(v);
        if t >= -1e-8 * nv.max(1.0) {
            axpy(1.0 + t, &e, v);
        }
    }
    let (mut tau, mut kappa) = (1.0f64, 1.0f64);
    let resx0 = norm(&st.c).max(1.0);
    let resy0 = norm(&st.b).max(1.0);
    let resz0 = norm(&st.h).max(1.0);
    let degree = cones.degree() as f64;
    let mut stalls = 0;

    for it in 0..=set.max_iterations {
        let aty = mul_rows_t(&st.a, &y, n);
        let gtz = mul_rows_t(&st.g, &z, n);
        let hrx: Vec<f64> = (0..n).map(|i| aty[i] + gtz[i]).collect();
        let hresx = norm(&hrx);
        let rx: Vec<f64> = (0..n).map(|i| hrx[i] + st.c[i] * tau).collect();
        let resx = norm(&rx) / tau;
        let ax = mul_rows(&st.a, &x);
        let hresy = norm(&ax);
        let ry: Vec<f64> = (0..ax.len()).map(|i| st.b[i] * tau - ax[i]).collect();
        let resy = norm(&ry) / tau;
        let gx = mul_rows(&st.g, &x);
        let hrz: Vec<f64> = (0..gx.len()).map(|i| s[i] + gx[i]).collect();
        let hresz = norm(&hrz);
        let rz: Vec<f64> = (0..gx.len()).map(|i| hrz[i] - st.h[i] * tau).collect();
        let resz = norm(&rz) / tau;
        let (cx, by, hz) = (dot(&st.c, &x), dot(&st.b, &y), dot(&st.h, &z));
        let rt = kappa + cx + by + hz;
        let gap = dot(&s, &z);
        let pcost = cx / tau;
        let dcost = -(by + hz) / tau;
        let relgap = if pcost < 0.0 {
            Some(gap / -pcost)
        } else if dcost > 0.0 {
            Some(gap / dcost)
        } else {
            None
        };
        let pres = (resy / resy0).max(resz / resz0);
        let dres = resx / resx0;
        let pinf = (hz + by < 0.0).then(|| hresx / resx0 / (-hz - by));
        let dinf = (cx < 0.0).then(|| (hresy / resy0).max(hresz / resz0) / (-cx));
        debug!(
            "ipm {it:3} pcost {pcost:+.6e} dcost {dcost:+.6e} gap {gap:.2e} pres {pres:.2e} dres {dres:.2e} k/t {:.2e}",
            kappa / tau
        );
        let ft = set.internal_tol;
        if pres <= ft && dres <= ft && (gap / (tau * tau) <= set.abs_gap_tol || relgap.is_some_and(|r| r <= set.rel_gap_tol)) {
            return Outcome {
                status: SolveStatus::Optimal,
                x: x.iter().map(|v| v / tau).collect(),
                iterations: it,
            };
        }
        if pinf.is_some_and(|r| r <= ft) {
            return Outcome {
                status: SolveStatus::Infeasible,
                x: vec![0.0; n],
                iterations: it,
            };
        }
        if dinf.is_some_and(|r| r <= ft) {
            return Outcome {
                status: SolveStatus::Unbounded,
                x: vec![0.0; n],
                iterations: it,
            };
        }
        let score = pres.max(dres).max(relgap.unwrap_or(f64::INFINITY).min(gap / (tau * tau)));
        if score <= set.reduced_tol {
            if best.as_ref().is_none_or(|b| score < b.0) {
                best = Some((score, x.iter().map(|v| v / tau).collect(), it));
            }
        } else if best.as_ref().is_some_and(|b| score > 1e3 * set.reduced_tol.max(b.0)) {
            return fail(Vec::new(), it, &best);
        }
        if it == set.max_iterations || stalls >= 4 {
            return fail(x.iter().map(|v| v / tau).collect(), it, &best);
        }

        let Some(w) = Scaling::compute(cones, &s, &z) else {
            return fail(x.iter().map(|v| v / tau).collect(), it, &best);
        };
        let Some(kkt) = Kkt::factor(st, &w, &blocks, set.refinement_steps) else {
            return fail(x.iter().map(|v| v / tau).collect(), it, &best);
        };
        let lam = &w.lambda;
        let mu = (gap + tau * kappa) / (degree + 1.0);
        let ll = jordan(cones, lam, lam);
        let (x2, y2, wz2) = kkt.solve(&negc, &st.b, &st.h);
        let mut z2 = wz2.clone();
        w.apply(Op::Winv, &mut z2);
        let denom = dot(&st.c, &x2) + dot(&st.b, &y2) + dot(&st.h, &z2) - kappa / tau;

        let mut sigma = 0.0;
        let mut second: Option<(Vec<f64>, f64)> = None;
        let mut step = 0.0;
        let mut dir = None;
        for pass in 0..2 {
            let m = 1.0 - sigma;
            let mut rhs_s: Vec<f64> = (0..ll.len()).map(|i| -ll[i] + sigma * mu * e[i]).collect();
            let mut dk = -tau * kappa + sigma * mu;
            if let Some((corr, kt)) = &second {
                axpy(-1.0, corr, &mut rhs_s);
                dk -= kt;
            }
            let ds_hat = jordan_div(cones, lam, &rhs_s);
            let mut wt_ds = ds_hat.clone();
            w.apply(Op::Wt, &mut wt_ds);
            let bx: Vec<f64> = rx.iter().map(|v| -m * v).collect();
            let byv: Vec<f64> = ry.iter().map(|v| m * v).collect();
            let bz: Vec<f64> = (0..rz.len()).map(|i| -m * rz[i] - wt_ds[i]).collect();
            let (x1, y1, wz1) = kkt.solve(&bx, &byv, &bz);
            let mut z1 = wz1.clone();
            w.apply(Op::Winv, &mut z1);
            let num = -m * rt - dk / tau - dot(&st.c, &x1) - dot(&st.b, &y1) - dot(&st.h, &z1);
            let dtau = num / denom;
            let mut dx = x1;
            axpy(dtau, &x2, &mut dx);
            let mut dy = y1;
            axpy(dtau, &y2, &mut dy);
            let mut dzt = wz1;
            axpy(dtau, &wz2, &mut dzt);
            let dst: Vec<f64> = (0..dzt.len()).map(|i| ds_hat[i] - dzt[i]).collect();
            let dkappa = (dk - kappa * dtau) / tau;
            let mut alpha = max_step(cones, lam, &dst).min(max_step(cones, lam, &dzt));
            if dtau < 0.0 {
                alpha = alpha.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                alpha = alpha.min(-kappa / dkappa);
            }
            if pass == 0 {
                let a_aff = alpha.min(1.0);
                sigma = Float::powi(1.0 - a_aff, 3).min(1.0);
                second = Some((jordan(cones, &dst, &dzt), dtau * dkappa));
            } else {
                step = (0.99 * alpha).min(1.0);
                dir = Some((dx, dy, dzt, dst, dtau, dkappa));
            }
        }
        let (dx, dy, dzt, dst, dtau, dkappa) = dir.unwrap();
        axpy(step, &dx, &mut x);
        axpy(step, &dy, &mut y);
        let mut dz = dzt;
        w.apply(Op::Winv, &mut dz);
        axpy(step, &dz, &mut z);
        let mut ds = dst;
        w.apply(Op::Wt, &mut ds);
        axpy(step, &ds, &mut s);
        tau += step * dtau;
        kappa += step * dkappa;
        stalls = if step < 1e-8 { stalls + 1 } else { 0 };
    }
    fail(x.iter().map(|v| v / tau).collect(), set.max_iterations, &best)
}

impl ConicBackend for InteriorPoint {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution> {
        program.validate()?;
        let n = program.num_vars();
        let (mut st, trivially_infeasible) = standardize(program);
        if trivially_infeasible {
            return Ok(ConicSolution {
                status: SolveStatus::Infeasible,
                x: vec![0.0; n],
                objective: f64::NAN,
                primal_residual: f64::INFINITY,
                psd_violation: 0.0,
                iterations: 0,
            });
        }
        let eq = equilibrate(&mut st, self.settings.equilibrate);
        let out = ipm(&st, &self.settings);
        let x: Vec<f64> = (0..n).map(|j| out.x[j] * eq.col[j] / eq.rhs).collect();
        let _ = eq.obj;
        let objective = program.objective().eval(&x);
        let (primal_residual, psd_violation) = program.violation(&x);
        let tol = self.settings.feasibility_tol;
        let mut status = out.status;
        let feasible = primal_residual <= tol && psd_violation <= tol;
        match status {
            SolveStatus::Optimal if !feasible => status = SolveStatus::NumericalFailure,
            _ => {}
        }
        debug!(
            "conic solve: {:?} after {} iterations, objective {objective:.9e}, residual {primal_residual:.2e}, psd {psd_violation:.2e}",
            status, out.iterations
        );
        Ok(ConicSolution {
            status,
            x,
            objective,
            primal_residual,
            psd_violation,
            iterations: out.iterations,
        })
    }
}
