//! Assembly and solution of the position subproblem.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;

use super::glover::{emit_glover, glover_constraints, GloverLayout};
use super::schur::{schur_lmi_blocks, AuxiliaryBlocks};
use super::taylor::{binary_penalty_expr, dc_linearized_expr, gram_diagonal, linearized_binary_penalty};
use super::{LinearizationPoint, P2Formulation};
use crate::beamforming::BeamformingSolution;
use crate::conic::{AffineExpr, ConicBackend, ConicProgram, InteriorPoint, SolveStatus, SolverSettings};
use crate::linalg::outer;
use crate::scenario::Scenario;
use crate::{Error, Result, C64};

/// Beams held fixed during a position update.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedBeams {
    /// `W_k = w_k w_k^H` (watts).
    pub w: Vec<DMatrix<C64>>,
    pub r: DMatrix<C64>,
    pub rho0: f64,
    /// `sum tr(W_k) + tr(R)`.
    pub power: f64,
}

impl FixedBeams {
    pub fn from_solution(sol: &BeamformingSolution) -> Self {
        FixedBeams {
            w: sol.beams.iter().map(|b| outer(b)).collect(),
            r: sol.r.clone(),
            rho0: sol.rho0,
            power: sol.power,
        }
    }

    fn total(&self) -> DMatrix<C64> {
        let mut t = self.r.clone();
        for w in &self.w {
            t += w;
        }
        t
    }
}

/// Variables of the lifted form: beam scale `s`, `zeta_n = s b_n`, and for each
/// unordered antenna pair the admissible products `s b_n[i] b_n'[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPair {
    pub antennas: (usize, usize),
    /// `M x M` table of product variables; `None` where the candidates are closer than `D_min`.
    pub table: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum P2Handles {
    Lifted {
        scale: usize,
        zeta: usize,
        pairs: Vec<LiftedPair>,
    },
    Schur {
        b: usize,
        phi: usize,
        aux: AuxiliaryBlocks,
    },
}

#[derive(Debug, Clone)]
pub struct P2Program {
    pub program: ConicProgram,
    pub handles: P2Handles,
    /// Covariances inside the program are divided by this power (watts).
    pub power_unit: f64,
    pub antennas: usize,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct P2Result {
    pub status: SolveStatus,
    /// Relaxed selection rows.
    pub b: Vec<Vec<f64>>,
    /// Products over ordered pairs ([`GloverLayout`] order).
    pub phi: Vec<f64>,
    /// Beam scale; 1 for the Schur form.
    pub scale: f64,
    /// Program objective in watts.
    pub objective: f64,
    /// Values of the four penalty terms (trace bounds, selection, products).
    pub penalties: [f64; 4],
    /// `max_k ||F_k - B W_k B^T||_F / ||W_k||_F` (Schur form only).
    pub consistency: Option<f64>,
    pub iterations: usize,
}

impl P2Result {
    pub fn point(&self) -> LinearizationPoint {
        LinearizationPoint {
            b: self.b.clone(),
            phi: self.phi.clone(),
        }
    }
}

fn check_inputs(sc: &Scenario, beams: &FixedBeams, point: &LinearizationPoint) -> Result<()> {
    point.validate()?;
    if point.antennas() != sc.antennas || point.candidates() != sc.candidates() {
        return Err(Error::DimensionMismatch {
            context: "linearization point",
            expected: sc.candidates(),
            actual: point.candidates(),
        });
    }
    if beams.w.len() != sc.users() || beams.w.iter().chain(core::iter::once(&beams.r)).any(|m| m.nrows() != sc.antennas) {
        return Err(Error::DimensionMismatch {
            context: "fixed beams",
            expected: sc.users(),
            actual: beams.w.len(),
        });
    }
    if !(beams.power > 0.0) {
        return Err(Error::param("beams", "fixed beams must carry positive power"));
    }
    Ok(())
}

/// Largest number of scalar variables a position subproblem may have; the
/// dense interior-point backend factors a matrix of this order every iteration.
pub const P2_VARIABLE_LIMIT: usize = 4000;

/// Scalar variable count of the position subproblem.
pub fn p2_variables(antennas: usize, candidates: usize, users: usize, formulation: P2Formulation) -> usize {
    let (n, m) = (antennas, candidates);
    match formulation {
        P2Formulation::Lifted => 1 + n * m + n * n.saturating_sub(1) / 2 * m * m,
        P2Formulation::Schur => n * m + n * n.saturating_sub(1) * m * m + (2 * users + 4) * (n * m) * (n * m),
    }
}

/// Builds the position subproblem. `tau` holds absolute penalty factors (watts).
pub fn assemble_p2(
    sc: &Scenario,
    beams: &FixedBeams,
    point: &LinearizationPoint,
    tau: [f64; 4],
    formulation: P2Formulation,
) -> Result<P2Program> {
    check_inputs(sc, beams, point)?;
    let vars = p2_variables(sc.antennas, sc.candidates(), sc.users(), formulation);
    if vars > P2_VARIABLE_LIMIT {
        return Err(Error::SizeGuard(alloc::format!(
            "position subproblem needs {vars} variables (limit {P2_VARIABLE_LIMIT})"
        )));
    }
    match formulation {
        P2Formulation::Lifted => assemble_lifted(sc, beams, point, tau),
        P2Formulation::Schur => assemble_schur(sc, beams, point, tau),
    }
}

/// Quadratic form `g^H X g`, `g_n = sum_i c_i b_n[i]`, in the lifted variables.
fn lifted_form(zeta: usize, m: usize, pairs: &[LiftedPair], x: &DMatrix<C64>, c: &[C64]) -> AffineExpr {
    let n = x.nrows();
    let mut e = AffineExpr::zero();
    for a in 0..n {
        let d = x[(a, a)].re;
        for (i, ci) in c.iter().enumerate() {
            e.push(zeta + a * m + i, d * ci.norm_sqr());
        }
    }
    for p in pairs {
        let xo = x[p.antennas];
        for i in 0..m {
            for j in 0..m {
                if let Some(v) = p.table[i * m + j] {
                    e.push(v, 2.0 * (xo * c[i].conj() * c[j]).re);
                }
            }
        }
    }
    e
}

fn assemble_lifted(sc: &Scenario, beams: &FixedBeams, point: &LinearizationPoint, tau: [f64; 4]) -> Result<P2Program> {
    let n = sc.antennas;
    let m = sc.candidates();
    let unit = beams.power;
    let mut p = ConicProgram::new();
    let scale = p.add_scalar("s");
    let zeta = p.add_vector("zeta", n * m).start;
    let mut pairs = Vec::new();
    for a in 0..n {
        for a2 in a + 1..n {
            let mut table = vec![None; m * m];
            let count = (0..m * m)
                .filter(|&k| sc.distances.get(k / m, k % m) >= sc.min_distance)
                .count();
            let base = p.add_vector("phi", count).start;
            let mut next = base;
            for (k, slot) in table.iter_mut().enumerate() {
                if sc.distances.get(k / m, k % m) >= sc.min_distance {
                    *slot = Some(next);
                    next += 1;
                }
            }
            pairs.push(LiftedPair { antennas: (a, a2), table });
        }
    }
    let s = AffineExpr::var(scale);
    let z = |a: usize, i: usize| AffineExpr::var(zeta + a * m + i);

    // objective: s P + linearized penalties, in units of P
    let mut obj = s.clone();
    let bin = binary_penalty_expr(
        (0..n).flat_map(|a| (0..m).map(move |i| (a, i))).map(|(a, i)| (z(a, i), point.b[a][i])),
        &s,
    );
    obj.add_scaled(&bin, tau[2] / unit);
    let layout = GloverLayout::new(n, m);
    let mut phi_terms = Vec::new();
    for (pi, &(a, a2)) in layout.pairs().iter().enumerate() {
        let (lo, hi, swap) = if a < a2 { (a, a2, false) } else { (a2, a, true) };
        let pair = pairs.iter().find(|q| q.antennas == (lo, hi)).unwrap();
        for i in 0..m {
            for j in 0..m {
                let t = point.phi[layout.index(pi, i, j)];
                let slot = if swap { pair.table[j * m + i] } else { pair.table[i * m + j] };
                let v = slot.map_or_else(AffineExpr::zero, AffineExpr::var);
                phi_terms.push((v, t));
            }
        }
    }
    obj.add_scaled(&binary_penalty_expr(phi_terms, &s), tau[3] / unit);
    p.minimize(obj);

    let scaled = |x: &DMatrix<C64>| x.map(|v| v / unit);
    let w: Vec<DMatrix<C64>> = beams.w.iter().map(scaled).collect();
    let r = scaled(&beams.r);
    let total = scaled(&beams.total());

    // SINR rows
    let block = sc.channel.block();
    for k in 0..sc.users() {
        let gamma = sc.channel.sinr_threshold()[k];
        let mut x = w[k].clone();
        for (i, wi) in w.iter().enumerate() {
            if i != k {
                x -= wi.map(|v| v * gamma);
            }
        }
        x -= r.map(|v| v * gamma);
        let c: Vec<C64> = (0..m).map(|i| block[(k, i)].conj()).collect();
        let mut e = lifted_form(zeta, m, &pairs, &x, &c);
        e.constant -= gamma * sc.channel.noise()[k] / unit;
        p.add_nonneg(e);
    }
    // chance rows
    for (a, &thr) in sc.target_steering().iter().zip(&sc.chance) {
        let mut e = lifted_form(zeta, m, &pairs, &total, a);
        e.constant -= thr / unit;
        p.add_nonneg(e);
    }
    // pattern MSE with rho0 frozen relative to the beam scale
    if let Some(cap) = sc.mse_cap() {
        let lq = sc.grid_steering().len() as f64;
        let k = 1.0 / Float::sqrt(lq);
        let rho = beams.rho0 / unit;
        let u = sc
            .grid_steering()
            .iter()
            .zip(sc.ideal())
            .map(|(a, &d)| {
                let mut e = -lifted_form(zeta, m, &pairs, &total, a);
                e.push(scale, rho * d);
                e * k
            })
            .collect();
        p.add_soc(AffineExpr::constant(Float::sqrt(cap) / unit), u);
    }
    // one position per antenna
    for a in 0..n {
        let mut e = -s.clone();
        for i in 0..m {
            e.push(zeta + a * m + i, 1.0);
        }
        p.add_zero(e);
    }
    // products: marginals, lower bounds, distance row, nonnegativity
    for pair in &pairs {
        let (a, a2) = pair.antennas;
        for i in 0..m {
            let mut row = -z(a, i);
            let mut col = -z(a2, i);
            for j in 0..m {
                if let Some(v) = pair.table[i * m + j] {
                    row.push(v, 1.0);
                }
                if let Some(v) = pair.table[j * m + i] {
                    col.push(v, 1.0);
                }
            }
            p.add_zero(row);
            p.add_zero(col);
        }
        let mut dist = s.clone() * -sc.min_distance;
        for i in 0..m {
            for j in 0..m {
                let mut lower = s.clone() - z(a, i) - z(a2, j);
                if let Some(v) = pair.table[i * m + j] {
                    lower.push(v, 1.0);
                    dist.push(v, sc.distances.get(i, j));
                    p.add_nonneg(AffineExpr::var(v));
                }
                p.add_nonneg(lower);
            }
        }
        p.add_nonneg(dist);
    }
    // Gram LMI [[Z, zeta], [zeta^T, s]] >= 0
    let dim = n * m + 1;
    let mut full = vec![AffineExpr::zero(); dim * dim];
    for a in 0..n {
        for i in 0..m {
            let r0 = a * m + i;
            full[r0 * dim + r0] = z(a, i);
            full[r0 * dim + dim - 1] = z(a, i);
            full[(dim - 1) * dim + r0] = z(a, i);
        }
    }
    full[dim * dim - 1] = s.clone();
    for pair in &pairs {
        let (a, a2) = pair.antennas;
        for i in 0..m {
            for j in 0..m {
                if let Some(v) = pair.table[i * m + j] {
                    let (r0, c0) = (a * m + i, a2 * m + j);
                    full[r0 * dim + c0] = AffineExpr::var(v);
                    full[c0 * dim + r0] = AffineExpr::var(v);
                }
            }
        }
    }
    p.add_lmi(dim, &full);

    Ok(P2Program {
        program: p,
        handles: P2Handles::Lifted { scale, zeta, pairs },
        power_unit: unit,
        antennas: n,
        candidates: m,
    })
}

fn assemble_schur(sc: &Scenario, beams: &FixedBeams, point: &LinearizationPoint, tau: [f64; 4]) -> Result<P2Program> {
    let n = sc.antennas;
    let m = sc.candidates();
    let mn = m * n;
    let k_users = sc.users();
    let unit = beams.power;
    let mut p = ConicProgram::new();
    let b0 = p.add_vector("b", n * m).start;
    let (layout, rows) = glover_constraints(n, &sc.distances, sc.min_distance)?;
    let phi0 = p.add_vector("phi", layout.len()).start;
    let aux = AuxiliaryBlocks {
        f: (0..k_users).map(|_| p.add_hermitian("F", mn)).collect(),
        y: p.add_hermitian("Y", mn),
        s: (0..k_users).map(|_| p.add_hermitian("S", mn)).collect(),
        t: (0..k_users).map(|_| p.add_hermitian("T", mn)).collect(),
        u: p.add_hermitian("U", mn),
        v: p.add_hermitian("V", mn),
    };
    let bvar = |a: usize, i: usize| AffineExpr::var(b0 + a * m + i);
    let bmat = |r: usize, c: usize| if r / m == c { bvar(c, r % m) } else { AffineExpr::zero() };
    let one = AffineExpr::constant(1.0);

    let scaled = |x: &DMatrix<C64>| x.map(|v| v / unit);
    let w: Vec<DMatrix<C64>> = beams.w.iter().map(scaled).collect();
    let r = scaled(&beams.r);

    // objective: constant power plus penalties, in units of P
    let mut obj = AffineExpr::constant(1.0);
    for (k, wk) in w.iter().enumerate() {
        let mut e = aux.s[k].trace();
        e.add_scaled(&dc_linearized_expr(&gram_diagonal(wk), &point.b, bvar), -1.0);
        obj.add_scaled(&e, tau[0] / unit);
    }
    let mut e = aux.u.trace();
    e.add_scaled(&dc_linearized_expr(&gram_diagonal(&r), &point.b, bvar), -1.0);
    obj.add_scaled(&e, tau[1] / unit);
    let bin = binary_penalty_expr(
        (0..n).flat_map(|a| (0..m).map(move |i| (a, i))).map(|(a, i)| (bvar(a, i), point.b[a][i])),
        &one,
    );
    obj.add_scaled(&bin, tau[2] / unit);
    let ph = binary_penalty_expr((0..layout.len()).map(|i| (AffineExpr::var(phi0 + i), point.phi[i])), &one);
    obj.add_scaled(&ph, tau[3] / unit);
    p.minimize(obj);

    // boxes, one position per antenna, distance linearization
    for i in 0..n * m {
        p.add_nonneg(AffineExpr::var(b0 + i));
        p.add_nonneg(one.clone() - AffineExpr::var(b0 + i));
    }
    for i in 0..layout.len() {
        p.add_nonneg(AffineExpr::var(phi0 + i));
        p.add_nonneg(one.clone() - AffineExpr::var(phi0 + i));
    }
    for a in 0..n {
        let mut e = AffineExpr::constant(-1.0);
        for i in 0..m {
            e.push(b0 + a * m + i, 1.0);
        }
        p.add_zero(e);
    }
    emit_glover(&mut p, &rows, bvar, |i| AffineExpr::var(phi0 + i), &one);

    // communication and sensing rows on the lifted covariances
    let full = |v: &[C64]| -> Vec<C64> { (0..mn).map(|r0| v[r0 % m]).collect() };
    let block = sc.channel.block();
    for k in 0..k_users {
        let h = full(&(0..m).map(|i| block[(k, i)]).collect::<Vec<_>>());
        let ht = DMatrix::from_fn(mn, mn, |i, j| h[i].conj() * h[j]);
        let gamma = sc.channel.sinr_threshold()[k];
        let mut e = aux.f[k].inner(&ht);
        for (i, fi) in aux.f.iter().enumerate() {
            if i != k {
                e.add_scaled(&fi.inner(&ht), -gamma);
            }
        }
        e.add_scaled(&aux.y.inner(&ht), -gamma);
        e.constant -= gamma * sc.channel.noise()[k] / unit;
        p.add_nonneg(e);
    }
    let pattern = |a: &[C64]| -> AffineExpr {
        let c = outer(&full(a));
        let mut e = aux.y.inner(&c);
        for f in &aux.f {
            e = e + f.inner(&c);
        }
        e
    };
    for (a, &thr) in sc.target_steering().iter().zip(&sc.chance) {
        let mut e = pattern(a);
        e.constant -= thr / unit;
        p.add_nonneg(e);
    }
    if let Some(cap) = sc.mse_cap() {
        let k = 1.0 / Float::sqrt(sc.grid_steering().len() as f64);
        let rho = beams.rho0 / unit;
        let u = sc
            .grid_steering()
            .iter()
            .zip(sc.ideal())
            .map(|(a, &d)| {
                let mut e = -pattern(a);
                e.constant += rho * d;
                e * k
            })
            .collect();
        p.add_soc(AffineExpr::constant(Float::sqrt(cap) / unit), u);
    }
    // Schur-complement LMIs
    for k in 0..k_users {
        let lmi = schur_lmi_blocks(
            mn,
            |i, j| aux.s[k].entry(i, j),
            |i, j| aux.f[k].entry(i, j),
            |i, j| aux.t[k].entry(i, j),
            bmat,
            &w[k],
        )?;
        p.add_hermitian_lmi(2 * mn + n, &lmi);
    }
    let lmi = schur_lmi_blocks(
        mn,
        |i, j| aux.u.entry(i, j),
        |i, j| aux.y.entry(i, j),
        |i, j| aux.v.entry(i, j),
        bmat,
        &r,
    )?;
    p.add_hermitian_lmi(2 * mn + n, &lmi);

    Ok(P2Program {
        program: p,
        handles: P2Handles::Schur { b: b0, phi: phi0, aux },
        power_unit: unit,
        antennas: n,
        candidates: m,
    })
}

/// Solves the position subproblem and reads back the relaxed placement.
pub fn solve_p2(
    sc: &Scenario,
    beams: &FixedBeams,
    point: &LinearizationPoint,
    tau: [f64; 4],
    formulation: P2Formulation,
    settings: &SolverSettings,
) -> Result<P2Result> {
    let prog = assemble_p2(sc, beams, point, tau, formulation)?;
    let sol = InteriorPoint::new(*settings).solve(&prog.program)?;
    let (n, m) = (prog.antennas, prog.candidates);
    let layout = GloverLayout::new(n, m);
    let unit = prog.power_unit;
    if sol.status != SolveStatus::Optimal {
        return Ok(P2Result {
            status: sol.status,
            b: point.b.clone(),
            phi: point.phi.clone(),
            scale: 1.0,
            objective: f64::NAN,
            penalties: [f64::NAN; 4],
            consistency: None,
            iterations: sol.iterations,
        });
    }
    let x = &sol.x;
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    let (b, phi, scale, consistency, trace_pen) = match &prog.handles {
        P2Handles::Lifted { scale, zeta, pairs } => {
            let s = x[*scale];
            if !(s > 0.0) {
                return Err(Error::NumericalFailure("position update returned a zero beam scale".into()));
            }
            let b: Vec<Vec<f64>> = (0..n).map(|a| (0..m).map(|i| clamp(x[zeta + a * m + i] / s)).collect()).collect();
            let mut phi = vec![0.0; layout.len()];
            for pair in pairs {
                let (a, a2) = pair.antennas;
                let p12 = layout.pair_index(a, a2).unwrap();
                let p21 = layout.pair_index(a2, a).unwrap();
                for i in 0..m {
                    for j in 0..m {
                        if let Some(v) = pair.table[i * m + j] {
                            let val = clamp(x[v] / s);
                            phi[layout.index(p12, i, j)] = val;
                            phi[layout.index(p21, j, i)] = val;
                        }
                    }
                }
            }
            (b, phi, s, None, [0.0, 0.0])
        }
        P2Handles::Schur { b: b0, phi: phi0, aux } => {
            let b: Vec<Vec<f64>> = (0..n).map(|a| (0..m).map(|i| clamp(x[b0 + a * m + i])).collect()).collect();
            let phi: Vec<f64> = (0..layout.len()).map(|i| clamp(x[phi0 + i])).collect();
            let bt = LinearizationPoint { b: b.clone(), phi: phi.clone() }.block_matrix().map(|v| C64::new(v, 0.0));
            let mut worst: f64 = 0.0;
            let mut pen = [0.0, 0.0];
            for (k, wk) in beams.w.iter().enumerate() {
                let wk = wk.map(|v| v / unit);
                let target = &bt * &wk * bt.transpose();
                let f = aux.f[k].value(x);
                let denom = wk.norm().max(f64::MIN_POSITIVE);
                worst = worst.max((f - target).norm() / denom);
                pen[0] += aux.s[k].trace().eval(x)
                    - super::taylor::dc_linearized(&gram_diagonal(&wk), &point.b, &b);
            }
            let rr = beams.r.map(|v| v / unit);
            pen[1] = aux.u.trace().eval(x) - super::taylor::dc_linearized(&gram_diagonal(&rr), &point.b, &b);
            (b, phi, 1.0, Some(worst), [pen[0] * unit, pen[1] * unit])
        }
    };
    let flat_b: Vec<f64> = b.iter().flatten().copied().collect();
    let flat_bt: Vec<f64> = point.b.iter().flatten().copied().collect();
    Ok(P2Result {
        status: sol.status,
        penalties: [
            trace_pen[0],
            trace_pen[1],
            linearized_binary_penalty(&flat_b, &flat_bt),
            linearized_binary_penalty(&phi, &point.phi),
        ],
        b,
        phi,
        scale,
        objective: sol.objective * unit,
        consistency,
        iterations: sol.iterations,
    })
}
