//! Cone algebra for the interior-point backend: nonnegative orthant,
//! second-order cones and real PSD cones in scaled-vector (`svec`) storage.
//!
//! `svec` stacks the lower triangle column-major with off-diagonal entries
//! multiplied by `sqrt(2)`, so `svec(U) . svec(V) = tr(UV)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use nalgebra::{DMatrix, SVD};
use num_traits::Float;

use crate::linalg::symmetric_eigenvalues;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct Cones {
    pub l: usize,
    pub q: Vec<usize>,
    pub s: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Block {
    Lp,
    Soc,
    Psd(usize),
}

impl Cones {
    pub fn dim(&self) -> usize {
        self.l + self.q.iter().sum::<usize>() + self.s.iter().map(|&p| p * (p + 1) / 2).sum::<usize>()
    }

    pub fn degree(&self) -> usize {
        self.l + self.q.len() + self.s.iter().sum::<usize>()
    }

    /// `(kind, offset, len)` of every block; the orthant counts as one block.
    pub fn blocks(&self) -> Vec<(Block, usize, usize)> {
        let mut v = Vec::with_capacity(1 + self.q.len() + self.s.len());
        let mut o = 0;
        if self.l > 0 {
            v.push((Block::Lp, 0, self.l));
            o = self.l;
        }
        for &q in &self.q {
            v.push((Block::Soc, o, q));
            o += q;
        }
        for &p in &self.s {
            let d = p * (p + 1) / 2;
            v.push((Block::Psd(p), o, d));
            o += d;
        }
        v
    }

    pub fn identity(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.dim()];
        for (b, o, len) in self.blocks() {
            match b {
                Block::Lp => e[o..o + len].iter_mut().for_each(|v| *v = 1.0),
                Block::Soc => e[o] = 1.0,
                Block::Psd(p) => {
                    for i in 0..p {
                        e[o + svec_index(p, i, i)] = 1.0;
                    }
                }
            }
        }
        e
    }

    /// Smallest `t` such that `x + t e` lies on the cone boundary, negated:
    /// positive when `x` is outside the cone.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut t = f64::NEG_INFINITY;
        for (b, o, len) in self.blocks() {
            let v = &x[o..o + len];
            let r = match b {
                Block::Lp => v.iter().fold(f64::NEG_INFINITY, |a, &xi| a.max(-xi)),
                Block::Soc => norm(&v[1..]) - v[0],
                Block::Psd(p) => -symmetric_eigenvalues(&smat(v, p)).last().copied().unwrap_or(0.0),
            };
            t = t.max(r);
        }
        t
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    Float::sqrt(v.iter().map(|x| x * x).sum::<f64>())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Position of `(i, j)`, `i >= j`, inside the `svec` of a `p x p` matrix.
pub(crate) fn svec_index(p: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    j * p - j * (j + 1) / 2 + i
}

pub(crate) fn smat(v: &[f64], p: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(p, p);
    let mut k = 0;
    for j in 0..p {
        for i in j..p {
            let x = if i == j { v[k] } else { v[k] / SQRT_2 };
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

pub(crate) fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let p = m.nrows();
    let mut k = 0;
    for j in 0..p {
        for i in j..p {
            out[k] = if i == j { m[(i, j)] } else { SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]) };
            k += 1;
        }
    }
}

#[derive(Debug, Clone)]
struct SocScale {
    w: Vec<f64>,
    eta: f64,
}

#[derive(Debug, Clone)]
struct PsdScale {
    r: DMatrix<f64>,
    rinv: DMatrix<f64>,
}

/// Nesterov-Todd scaling `W` with `W z = W^-T s = lambda`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    cones: Cones,
    d: Vec<f64>,
    soc: Vec<SocScale>,
    psd: Vec<PsdScale>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Op {
    W,
    Wt,
    Winv,
    Wit,
}

fn jdot(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] - dot(&a[1..], &b[1..])
}

fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone()).map(|c| c.l())
}

impl Scaling {
    pub fn identity(cones: &Cones) -> Self {
        let e = cones.identity();
        Scaling {
            cones: cones.clone(),
            d: vec![1.0; cones.l],
            soc: cones
                .q
                .iter()
                .map(|&q| {
                    let mut w = vec![0.0; q];
                    w[0] = 1.0;
                    SocScale { w, eta: 1.0 }
                })
                .collect(),
            psd: cones
                .s
                .iter()
                .map(|&p| PsdScale {
                    r: DMatrix::identity(p, p),
                    rinv: DMatrix::identity(p, p),
                })
                .collect(),
            lambda: e,
        }
    }

    /// Scaling at a strictly interior pair `(s, z)`; `None` if either is not interior.
    pub fn compute(cones: &Cones, s: &[f64], z: &[f64]) -> Option<Self> {
        let mut sc = Scaling {
            cones: cones.clone(),
            d: Vec::with_capacity(cones.l),
            soc: Vec::with_capacity(cones.q.len()),
            psd: Vec::with_capacity(cones.s.len()),
            lambda: vec![0.0; cones.dim()],
        };
        for (b, o, len) in cones.blocks() {
            let (sv, zv) = (&s[o..o + len], &z[o..o + len]);
            match b {
                Block::Lp => {
                    for i in 0..len {
                        if !(sv[i] > 0.0 && zv[i] > 0.0) {
                            return None;
                        }
                        sc.d.push(Float::sqrt(sv[i] / zv[i]));
                        sc.lambda[o + i] = Float::sqrt(sv[i] * zv[i]);
                    }
                }
                Block::Soc => {
                    let (sjs, zjz) = (jdot(sv, sv), jdot(zv, zv));
                    if !(sjs > 0.0 && zjz > 0.0 && sv[0] > 0.0 && zv[0] > 0.0) {
                        return None;
                    }
                    let (sn, zn) = (Float::sqrt(sjs), Float::sqrt(zjz));
                    let sb: Vec<f64> = sv.iter().map(|x| x / sn).collect();
                    let zb: Vec<f64> = zv.iter().map(|x| x / zn).collect();
                    let gamma = Float::sqrt((1.0 + dot(&sb, &zb)) / 2.0);
                    let mut w = vec![0.0; len];
                    w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
                    for i in 1..len {
                        w[i] = (sb[i] - zb[i]) / (2.0 * gamma);
                    }
                    // W is the square root of the quadratic representation of w:
                    // v = (w + e) / sqrt(2 (w_0 + 1)), W = eta (2 v v^T - J)
                    let f = 1.0 / Float::sqrt(2.0 * (w[0] + 1.0));
                    w[0] += 1.0;
                    w.iter_mut().for_each(|x| *x *= f);
                    let eta = Float::sqrt(Float::sqrt(sjs / zjz));
                    sc.soc.push(SocScale { w, eta });
                }
                Block::Psd(p) => {
                    let ls = cholesky_lower(&smat(sv, p))?;
                    let lz = cholesky_lower(&smat(zv, p))?;
                    let prod = lz.transpose() * &ls;
                    let svd = SVD::new(prod, true, true);
                    let (u, vt) = (svd.u?, svd.v_t?);
                    let sig = svd.singular_values;
                    if sig.iter().any(|&x| !(x > 0.0)) {
                        return None;
                    }
                    let isq: Vec<f64> = sig.iter().map(|&x| 1.0 / Float::sqrt(x)).collect();
                    let mut r = ls * vt.transpose();
                    for (j, f) in isq.iter().enumerate() {
                        r.column_mut(j).scale_mut(*f);
                    }
                    let mut rinv = u.transpose() * lz.transpose();
                    for (i, f) in isq.iter().enumerate() {
                        rinv.row_mut(i).scale_mut(*f);
                    }
                    for i in 0..p {
                        sc.lambda[o + svec_index(p, i, i)] = sig[i];
                    }
                    sc.psd.push(PsdScale { r, rinv });
                }
            }
        }
        // SOC lambda = W z
        let mut qi = 0;
        for (b, o, len) in cones.blocks() {
            if b == Block::Soc {
                let mut v = z[o..o + len].to_vec();
                soc_apply(&sc.soc[qi], Op::W, &mut v);
                sc.lambda[o..o + len].copy_from_slice(&v);
                qi += 1;
            }
        }
        Some(sc)
    }

    /// Applies `op` to every block of `v` in place.
    pub fn apply(&self, op: Op, v: &mut [f64]) {
        let (mut qi, mut si) = (0, 0);
        for (b, o, len) in self.cones.blocks() {
            let x = &mut v[o..o + len];
            match b {
                Block::Lp => {
                    for (xi, di) in x.iter_mut().zip(&self.d) {
                        match op {
                            Op::W | Op::Wt => *xi *= di,
                            Op::Winv | Op::Wit => *xi /= di,
                        }
                    }
                }
                Block::Soc => {
                    soc_apply(&self.soc[qi], op, x);
                    qi += 1;
                }
                Block::Psd(p) => {
                    self.psd_apply(si, p, op, x);
                    si += 1;
                }
            }
        }
    }

    /// Applies `op` to a vector living in a single block.
    pub fn apply_block(&self, block: usize, op: Op, x: &mut [f64]) {
        let blocks = self.cones.blocks();
        let (b, _, _) = blocks[block];
        let has_lp = self.cones.l > 0;
        match b {
            Block::Lp => {
                for (xi, di) in x.iter_mut().zip(&self.d) {
                    match op {
                        Op::W | Op::Wt => *xi *= di,
                        Op::Winv | Op::Wit => *xi /= di,
                    }
                }
            }
            Block::Soc => soc_apply(&self.soc[block - has_lp as usize], op, x),
            Block::Psd(p) => {
                let si = block - has_lp as usize - self.cones.q.len();
                self.psd_apply(si, p, op, x)
            }
        }
    }

    pub fn lp_diag(&self) -> &[f64] {
        &self.d
    }

    fn psd_apply(&self, si: usize, p: usize, op: Op, x: &mut [f64]) {
        let m = smat(x, p);
        let sc = &self.psd[si];
        let out = match op {
            Op::W => sc.r.transpose() * m * &sc.r,
            Op::Wt => &sc.r * m * sc.r.transpose(),
            Op::Winv => sc.rinv.transpose() * m * &sc.rinv,
            Op::Wit => &sc.rinv * m * sc.rinv.transpose(),
        };
        svec_into(&out, x);
    }
}

fn soc_apply(sc: &SocScale, op: Op, x: &mut [f64]) {
    let w = &sc.w;
    match op {
        // W = eta (2 w w^T - J)
        Op::W | Op::Wt => {
            let a = 2.0 * dot(w, x);
            x[0] = sc.eta * (a * w[0] - x[0]);
            for i in 1..x.len() {
                x[i] = sc.eta * (a * w[i] + x[i]);
            }
        }
        // W^-1 = (2 J w w^T J - J) / eta
        Op::Winv | Op::Wit => {
            let a = 2.0 * jdot(w, x);
            x[0] = (a * w[0] - x[0]) / sc.eta;
            for i in 1..x.len() {
                x[i] = (-a * w[i] + x[i]) / sc.eta;
            }
        }
    }
}

/// Jordan product `u o v`.
pub(crate) fn jordan(cones: &Cones, u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for (b, o, len) in cones.blocks() {
        let (a, c) = (&u[o..o + len], &v[o..o + len]);
        let r = &mut out[o..o + len];
        match b {
            Block::Lp => {
                for i in 0..len {
                    r[i] = a[i] * c[i];
                }
            }
            Block::Soc => {
                r[0] = dot(a, c);
                for i in 1..len {
                    r[i] = a[0] * c[i] + c[0] * a[i];
                }
            }
            Block::Psd(p) => {
                let (ma, mc) = (smat(a, p), smat(c, p));
                let prod = (&ma * &mc + &mc * &ma) * 0.5;
                svec_into(&prod, r);
            }
        }
    }
    out
}

/// Solves `lambda o x = v` for `x`, with `lambda` a scaling point
/// (diagonal in the PSD blocks).
pub(crate) fn jordan_div(cones: &Cones, lambda: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (b, o, len) in cones.blocks() {
        let (l, c) = (&lambda[o..o + len], &v[o..o + len]);
        let r = &mut out[o..o + len];
        match b {
            Block::Lp => {
                for i in 0..len {
                    r[i] = c[i] / l[i];
                }
            }
            Block::Soc => {
                let det = l[0] * l[0] - dot(&l[1..], &l[1..]);
                let u0 = (l[0] * c[0] - dot(&l[1..], &c[1..])) / det;
                r[0] = u0;
                for i in 1..len {
                    r[i] = (c[i] - u0 * l[i]) / l[0];
                }
            }
            Block::Psd(p) => {
                for j in 0..p {
                    for i in j..p {
                        let k = svec_index(p, i, j);
                        let li = l[svec_index(p, i, i)];
                        let lj = l[svec_index(p, j, j)];
                        r[k] = 2.0 * c[k] / (li + lj);
                    }
                }
            }
        }
    }
    out
}

/// Largest `alpha` with `lambda + alpha d` in the cone (`lambda` interior,
/// diagonal in PSD blocks). Returns infinity when unbounded.
pub(crate) fn max_step(cones: &Cones, lambda: &[f64], d: &[f64]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (b, o, len) in cones.blocks() {
        let (l, v) = (&lambda[o..o + len], &d[o..o + len]);
        let a = match b {
            Block::Lp => {
                let mut a = f64::INFINITY;
                for i in 0..len {
                    if v[i] < 0.0 {
                        a = a.min(-l[i] / v[i]);
                    }
                }
                a
            }
            Block::Soc => soc_step(l, v),
            Block::Psd(p) => {
                let mut m = smat(v, p);
                let isq: Vec<f64> = (0..p).map(|i| 1.0 / Float::sqrt(l[svec_index(p, i, i)])).collect();
                for i in 0..p {
                    for j in 0..p {
                        m[(i, j)] *= isq[i] * isq[j];
                    }
                }
                let low = symmetric_eigenvalues(&m).last().copied().unwrap_or(0.0);
                if low < 0.0 { -1.0 / low } else { f64::INFINITY }
            }
        };
        alpha = alpha.min(a);
    }
    alpha
}

fn soc_step(l: &[f64], d: &[f64]) -> f64 {
    let a = jdot(d, d);
    let b = jdot(l, d);
    let c = jdot(l, l);
    // f(alpha) = a alpha^2 + 2 b alpha + c, c > 0
    let mut best = f64::INFINITY;
    if a == 0.0 {
        if b < 0.0 {
            best = -c / (2.0 * b);
        }
    } else {
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let sq = Float::sqrt(disc);
            let q = -(b + if b >= 0.0 { sq } else { -sq });
            for r in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
                if r > 0.0 && r < best {
                    best = r;
                }
            }
        }
    }
    // the leading coordinate must also stay positive
    if d[0] < 0.0 {
        best = best.min(-l[0] / d[0]);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cones() -> Cones {
        Cones {
            l: 2,
            q: vec![3],
            s: vec![3],
        }
    }

    fn interior(seed: f64) -> Vec<f64> {
        let c = cones();
        let mut v = vec![0.0; c.dim()];
        v[0] = 1.0 + seed;
        v[1] = 0.5;
        v[2] = 2.0 + seed;
        v[3] = 0.3;
        v[4] = -0.7 * seed;
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0 + seed, 0.2, -0.1, 0.2, 1.5]);
        svec_into(&m, &mut v[5..]);
        v
    }

    #[test]
    fn nt_scaling_maps_z_and_s_to_lambda() {
        let c = cones();
        let s = interior(0.4);
        let z = interior(1.3);
        let sc = Scaling::compute(&c, &s, &z).unwrap();
        let mut wz = z.clone();
        sc.apply(Op::W, &mut wz);
        let mut wis = s.clone();
        sc.apply(Op::Wit, &mut wis);
        for i in 0..s.len() {
            assert!((wz[i] - sc.lambda[i]).abs() < 1e-12, "Wz at {i}");
            assert!((wis[i] - sc.lambda[i]).abs() < 1e-12, "W^-T s at {i}");
        }
        // W^T W z = s
        let mut wtwz = wz.clone();
        sc.apply(Op::Wt, &mut wtwz);
        for i in 0..s.len() {
            assert!((wtwz[i] - s[i]).abs() < 1e-12);
        }
        // W^-1 W = I
        let mut back = wz;
        sc.apply(Op::Winv, &mut back);
        for i in 0..s.len() {
            assert!((back[i] - z[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn jordan_division_inverts_product() {
        let c = cones();
        let s = interior(0.2);
        let z = interior(0.9);
        let sc = Scaling::compute(&c, &s, &z).unwrap();
        let v: Vec<f64> = (0..c.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let u = jordan_div(&c, &sc.lambda, &v);
        let back = jordan(&c, &sc.lambda, &u);
        for i in 0..v.len() {
            assert!((back[i] - v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_reaches_boundary() {
        let c = cones();
        let s = interior(0.2);
        let z = interior(0.9);
        let sc = Scaling::compute(&c, &s, &z).unwrap();
        let d: Vec<f64> = (0..c.dim()).map(|i| -((i as f64 * 0.61).cos()).abs() - 0.1).collect();
        let a = max_step(&c, &sc.lambda, &d);
        assert!(a.is_finite() && a > 0.0);
        let at = |t: f64| -> Vec<f64> { sc.lambda.iter().zip(&d).map(|(l, x)| l + t * x).collect() };
        assert!(c.max_violation(&at(0.999 * a)) < 0.0);
        assert!(c.max_violation(&at(a)).abs() < 1e-9);
    }

    #[test]
    fn svec_inner_product_is_trace() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.5, -1.0, -1.0, 4.0]);
        let (mut va, mut vb) = (vec![0.0; 3], vec![0.0; 3]);
        svec_into(&a, &mut va);
        svec_into(&b, &mut vb);
        assert!((dot(&va, &vb) - (&a * &b).trace()).abs() < 1e-14);
        assert_eq!(smat(&va, 2), a);
    }
}
