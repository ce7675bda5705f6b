//! Covariance design for a fixed antenna placement.
//!
//! With the placement fixed, the user and sensing covariances `W_k`, `R`
//! and the pattern scale `rho0` solve a semidefinite program (rank
//! constraints dropped): minimize `sum tr(W_k) + tr(R)` subject to the SINR
//! rows, the per-target chance-constraint rows and the pattern-MSE cone.
//! Beams are recovered from the dominant eigenpairs, with a Gaussian
//! randomization fallback when a `W_k` is not numerically rank one.

use alloc::vec;
use alloc::vec::Vec;

use log::debug;
use nalgebra::DMatrix;
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{field_response_at, ChannelMatrix, PathSet};
use crate::conic::{
    extract_rank_one, AffineExpr, ConicBackend, ConicProgram, HermitianVar, InteriorPoint, SolveStatus,
    SolverSettings, DEFAULT_RANK_RATIO,
};
use crate::geometry::{Placement, Point};
use crate::linalg::{hermitian_eig, outer, quad_form, trace_re};
use crate::sensing::{BeamGrid, Target};
use crate::{Error, Result, C64};

/// Responses of an `N`-antenna array: user channels, target steering vectors
/// and steering vectors over the beam grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayResponse {
    /// `K x N` effective channel `H = H_hat B`.
    pub users: DMatrix<C64>,
    pub targets: Vec<Vec<C64>>,
    /// Row-major `(l, q)` steering vectors; empty when no pattern is imposed.
    pub grid: Vec<Vec<C64>>,
}

impl ArrayResponse {
    /// Responses of antennas sitting at arbitrary positions.
    pub fn at_positions(paths: &PathSet, positions: &[Point], targets: &[Target], beams: Option<&BeamGrid>) -> Self {
        let lambda = paths.wavelength;
        ArrayResponse {
            users: paths.channel_at(positions),
            targets: targets
                .iter()
                .map(|t| field_response_at(positions, lambda, t.elevation, t.azimuth))
                .collect(),
            grid: beams.map(|b| b.steering(positions, lambda)).unwrap_or_default(),
        }
    }

    /// Responses of a (possibly relaxed) placement over the candidate lattice:
    /// `H_hat B` and `B^T a_hat`.
    pub fn from_placement(
        channel: &ChannelMatrix,
        candidates: &[Point],
        wavelength: f64,
        placement: &Placement,
        targets: &[Target],
        beams: Option<&BeamGrid>,
    ) -> Result<Self> {
        if candidates.len() != placement.candidates() || channel.candidates() != placement.candidates() {
            return Err(Error::DimensionMismatch {
                context: "placement candidates",
                expected: channel.candidates(),
                actual: placement.candidates(),
            });
        }
        let users = crate::channel::effective_channel_of(channel, placement)?;
        let project = |full: Vec<C64>| -> Vec<C64> {
            placement
                .vectors()
                .iter()
                .map(|v| v.as_slice().iter().zip(&full).map(|(&b, &a)| a * b).sum())
                .collect()
        };
        let targets = targets
            .iter()
            .map(|t| project(field_response_at(candidates, wavelength, t.elevation, t.azimuth)))
            .collect();
        let grid = match beams {
            Some(b) => b.steering(candidates, wavelength).into_iter().map(project).collect(),
            None => Vec::new(),
        };
        Ok(ArrayResponse { users, targets, grid })
    }

    pub fn antennas(&self) -> usize {
        self.users.ncols()
    }
}

/// Sensing requirements in deterministic form.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingQos {
    /// Minimum pattern value at each target (chance-constraint threshold, watts).
    pub chance: Vec<f64>,
    /// Ideal pattern values over the beam grid, row-major `(l, q)`.
    pub ideal: Vec<f64>,
    /// MSE cap `delta_d`; `None` disables the pattern constraint.
    pub mse_cap: Option<f64>,
}

/// One instance of the covariance design problem.
#[derive(Debug, Clone, PartialEq)]
pub struct P1Problem {
    pub response: ArrayResponse,
    pub noise: Vec<f64>,
    pub sinr: Vec<f64>,
    pub sensing: SensingQos,
}

impl P1Problem {
    pub fn users(&self) -> usize {
        self.response.users.nrows()
    }

    pub fn uses_pattern(&self) -> bool {
        self.sensing.mse_cap.is_some() && !self.response.grid.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let k = self.users();
        let n = self.response.antennas();
        for (ctx, len) in [("noise", self.noise.len()), ("sinr", self.sinr.len())] {
            if len != k {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: k,
                    actual: len,
                });
            }
        }
        if self.sensing.chance.len() != self.response.targets.len() {
            return Err(Error::DimensionMismatch {
                context: "chance thresholds",
                expected: self.response.targets.len(),
                actual: self.sensing.chance.len(),
            });
        }
        if self.uses_pattern() && self.sensing.ideal.len() != self.response.grid.len() {
            return Err(Error::DimensionMismatch {
                context: "ideal pattern",
                expected: self.response.grid.len(),
                actual: self.sensing.ideal.len(),
            });
        }
        let vecs = self.response.targets.iter().chain(self.response.grid.iter());
        for v in vecs {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "steering vector",
                    expected: n,
                    actual: v.len(),
                });
            }
        }
        Ok(())
    }

    /// Power scale used to normalize the program: the largest single-constraint lower bound.
    pub fn power_unit(&self) -> f64 {
        let n = self.response.antennas() as f64;
        let mut p: f64 = 0.0;
        for k in 0..self.users() {
            let g: f64 = self.response.users.row(k).iter().map(|z| z.norm_sqr()).sum();
            if g > 0.0 {
                p = p.max(self.sinr[k] * self.noise[k] / g);
            }
        }
        for &c in &self.sensing.chance {
            p = p.max(c / n);
        }
        if p > 0.0 { p } else { 1.0 }
    }
}

/// Conic program of a covariance design instance with its variable handles.
#[derive(Debug, Clone)]
pub struct P1Program {
    pub program: ConicProgram,
    pub w: Vec<HermitianVar>,
    pub r: HermitianVar,
    pub rho0: Option<usize>,
    /// Covariances in the program are expressed in multiples of this power (watts).
    pub power_unit: f64,
}

/// Variables, SINR rows and chance rows shared by the relaxation and the
/// pattern calibration.
fn assemble_rows(problem: &P1Problem, unit: f64) -> (ConicProgram, Vec<HermitianVar>, HermitianVar) {
    let k = problem.users();
    let n = problem.response.antennas();
    let mut p = ConicProgram::new();
    let w: Vec<HermitianVar> = (0..k).map(|_| p.add_hermitian_psd("W", n)).collect();
    let r = p.add_hermitian_psd("R", n);

    for u in 0..k {
        let h = problem.response.users.row(u).iter().copied().collect::<Vec<_>>();
        let ht = DMatrix::from_fn(n, n, |i, j| h[i].conj() * h[j]);
        let gamma = problem.sinr[u];
        let mut e = w[u].inner(&ht);
        for (i, wi) in w.iter().enumerate() {
            if i != u {
                e.add_scaled(&wi.inner(&ht), -gamma);
            }
        }
        e.add_scaled(&r.inner(&ht), -gamma);
        e.constant -= gamma * problem.noise[u] / unit;
        p.add_nonneg(e);
    }
    for (a, &thr) in problem.response.targets.iter().zip(&problem.sensing.chance) {
        let mut e = total_pattern(&w, &r, a);
        e.constant -= thr / unit;
        p.add_nonneg(e);
    }
    (p, w, r)
}

fn total_pattern(w: &[HermitianVar], r: &HermitianVar, a: &[C64]) -> AffineExpr {
    let c = outer(a);
    let mut e = r.inner(&c);
    for wk in w {
        e = e + wk.inner(&c);
    }
    e
}

/// Entries `(rho0 d - a^H R_x a) / sqrt(LQ)` of the pattern-error vector.
fn pattern_error(problem: &P1Problem, w: &[HermitianVar], r: &HermitianVar, rho: usize) -> Vec<AffineExpr> {
    let scale = 1.0 / Float::sqrt(problem.response.grid.len() as f64);
    problem
        .response
        .grid
        .iter()
        .zip(&problem.sensing.ideal)
        .map(|(a, &d)| {
            let mut e = -total_pattern(w, r, a);
            e.push(rho, d);
            e * scale
        })
        .collect()
}

/// Builds the semidefinite relaxation.
pub fn assemble_p1(problem: &P1Problem) -> Result<P1Program> {
    problem.validate()?;
    let unit = problem.power_unit();
    let (mut p, w, r) = assemble_rows(problem, unit);
    let mut obj = r.trace();
    for wk in &w {
        obj = obj + wk.trace();
    }
    p.minimize(obj);

    let mut rho0 = None;
    if problem.uses_pattern() {
        let cap = problem.sensing.mse_cap.unwrap();
        let rho = p.add_scalar("rho0");
        p.add_nonneg(AffineExpr::var(rho));
        let u = pattern_error(problem, &w, &r, rho);
        p.add_soc(AffineExpr::constant(Float::sqrt(cap) / unit), u);
        rho0 = Some(rho);
    }
    Ok(P1Program {
        program: p,
        w,
        r,
        rho0,
        power_unit: unit,
    })
}

/// Smallest pattern MSE any design meeting the SINR and chance rows reaches
/// (the cap in `problem.sensing` is ignored). `None` when the rows are
/// infeasible or the problem has no pattern grid.
pub fn min_pattern_mse(problem: &P1Problem, solver: &SolverSettings) -> Result<Option<f64>> {
    problem.validate()?;
    if problem.response.grid.is_empty() {
        return Ok(None);
    }
    let unit = problem.power_unit();
    let (mut p, w, r) = assemble_rows(problem, unit);
    let rho = p.add_scalar("rho0");
    p.add_nonneg(AffineExpr::var(rho));
    let t = p.add_scalar("t");
    p.minimize(AffineExpr::var(t));
    let u = pattern_error(problem, &w, &r, rho);
    p.add_soc(AffineExpr::var(t), u);
    let sol = InteriorPoint::new(*solver).solve(&p)?;
    Ok((sol.status == SolveStatus::Optimal).then(|| Float::powi(sol.objective * unit, 2)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1Settings {
    pub solver: SolverSettings,
    pub rank_ratio: f64,
    pub randomization_draws: usize,
    pub seed: u64,
}

impl Default for P1Settings {
    fn default() -> Self {
        P1Settings {
            solver: SolverSettings::default(),
            rank_ratio: DEFAULT_RANK_RATIO,
            randomization_draws: 200,
            seed: 0x5eed,
        }
    }
}

/// Solved covariance design.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    /// Relaxed user covariances (watts).
    pub w_cov: Vec<DMatrix<C64>>,
    /// Sensing covariance (watts).
    pub r: DMatrix<C64>,
    pub rho0: f64,
    /// User beams actually used (rank-one extraction or randomization).
    pub beams: Vec<Vec<C64>>,
    pub sensing_beams: Vec<Vec<C64>>,
    pub rank_one: Vec<bool>,
    pub fallback_used: bool,
    /// Optimal value of the relaxation (watts).
    pub relaxed_power: f64,
    /// `sum ||w_k||^2 + tr(R)` of the reported beams (watts).
    pub power: f64,
    pub iterations: usize,
}

impl BeamformingSolution {
    /// `R_x = sum w_k w_k^H + R`.
    pub fn transmit_covariance(&self) -> DMatrix<C64> {
        let mut rx = self.r.clone();
        for w in &self.beams {
            rx += outer(w);
        }
        rx
    }

    pub fn rank_one_all(&self) -> bool {
        self.rank_one.iter().all(|&b| b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum P1Outcome {
    Solved(BeamformingSolution),
    Infeasible,
    Failed(SolveStatus),
}

impl P1Outcome {
    pub fn solution(&self) -> Option<&BeamformingSolution> {
        match self {
            P1Outcome::Solved(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_solution(self) -> Option<BeamformingSolution> {
        match self {
            P1Outcome::Solved(s) => Some(s),
            _ => None,
        }
    }

    pub fn power(&self) -> Option<f64> {
        self.solution().map(|s| s.power)
    }
}

/// Solves the relaxation and recovers beams.
pub fn solve_p1(problem: &P1Problem, settings: &P1Settings) -> Result<P1Outcome> {
    let prog = assemble_p1(problem)?;
    let sol = InteriorPoint::new(settings.solver).solve(&prog.program)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Ok(P1Outcome::Infeasible),
        s => return Ok(P1Outcome::Failed(s)),
    }
    let unit = prog.power_unit;
    let scale_m = |m: DMatrix<C64>| m.map(|z| z * unit);
    let w_cov: Vec<DMatrix<C64>> = prog.w.iter().map(|h| scale_m(h.value(&sol.x))).collect();
    let r = scale_m(prog.r.value(&sol.x));
    let rho0 = prog.rho0.map_or(0.0, |i| sol.x[i] * unit);
    let relaxed_power = sol.objective * unit;

    let mut beams = Vec::with_capacity(w_cov.len());
    let mut rank_one = Vec::with_capacity(w_cov.len());
    for wk in &w_cov {
        let ex = extract_rank_one(wk, settings.rank_ratio)?;
        rank_one.push(ex.is_rank_one);
        beams.push(ex.vector);
    }
    let mut fallback_used = false;
    if rank_one.iter().any(|&b| !b) {
        debug!("relaxation is not rank one; running randomization");
        fallback_used = true;
        match randomize(problem, &w_cov, &r, rho0, settings) {
            Some(b) => beams = b,
            None => return Ok(P1Outcome::Failed(SolveStatus::NumericalFailure)),
        }
    }
    let power = beams.iter().map(|w| w.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() + trace_re(&r);
    Ok(P1Outcome::Solved(BeamformingSolution {
        sensing_beams: extract_sensing_beams(&r),
        w_cov,
        r,
        rho0,
        beams,
        rank_one,
        fallback_used,
        relaxed_power,
        power,
        iterations: sol.iterations,
    }))
}

/// Gaussian randomization: draw `w_k ~ CN(0, W_k)`, rescale all user beams by
/// a common factor to the smallest value restoring every constraint, keep the
/// cheapest candidate. The dominant-eigenvector beams are candidate zero.
fn randomize(
    problem: &P1Problem,
    w_cov: &[DMatrix<C64>],
    r: &DMatrix<C64>,
    rho0: f64,
    settings: &P1Settings,
) -> Option<Vec<Vec<C64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let factors: Vec<DMatrix<C64>> = w_cov
        .iter()
        .map(|w| {
            let (vals, vecs) = hermitian_eig(w);
            let mut f = vecs.clone();
            for (j, &v) in vals.iter().enumerate() {
                f.column_mut(j).scale_mut(Float::sqrt(v.max(0.0)));
            }
            f
        })
        .collect();
    let dominant: Vec<Vec<C64>> = w_cov
        .iter()
        .map(|w| extract_rank_one(w, 1.0).map(|e| e.vector).unwrap_or_else(|_| vec![C64::new(0.0, 0.0); w.nrows()]))
        .collect();
    let mut best: Option<(f64, Vec<Vec<C64>>)> = None;
    for draw in 0..=settings.randomization_draws {
        let cand: Vec<Vec<C64>> = if draw == 0 {
            dominant.clone()
        } else {
            factors
                .iter()
                .map(|f| {
                    let n = f.nrows();
                    let xi: Vec<C64> = (0..n)
                        .map(|_| {
                            let a: f64 = StandardNormal.sample(&mut rng);
                            let b: f64 = StandardNormal.sample(&mut rng);
                            C64::new(a, b) * core::f64::consts::FRAC_1_SQRT_2
                        })
                        .collect();
                    (0..n).map(|i| (0..n).map(|j| f[(i, j)] * xi[j]).sum()).collect()
                })
                .collect()
        };
        if let Some(c2) = min_common_scale(problem, &cand, r, rho0) {
            let s = Float::sqrt(c2);
            let scaled: Vec<Vec<C64>> = cand.iter().map(|w| w.iter().map(|z| z * s).collect()).collect();
            let power = c2 * cand.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
            if best.as_ref().is_none_or(|b| power < b.0) {
                best = Some((power, scaled));
            }
        }
    }
    best.map(|b| b.1)
}

/// Smallest `t = c^2` such that beams `c w_k` with fixed `R` satisfy every constraint.
fn min_common_scale(problem: &P1Problem, w: &[Vec<C64>], r: &DMatrix<C64>, rho0: f64) -> Option<f64> {
    let resp = &problem.response;
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    let k = problem.users();
    for u in 0..k {
        let h: Vec<C64> = resp.users.row(u).iter().copied().collect();
        let g = |v: &[C64]| -> f64 { h.iter().zip(v).map(|(a, b)| a * b).sum::<C64>().norm_sqr() };
        let gamma = problem.sinr[u];
        let bracket = g(&w[u]) - gamma * (0..k).filter(|&i| i != u).map(|i| g(&w[i])).sum::<f64>();
        let rhs = gamma * (quad_form(&conj_vec(&h), r) + problem.noise[u]);
        if bracket <= 0.0 {
            return None;
        }
        lo = lo.max(rhs / bracket);
    }
    let beam_gain = |a: &[C64]| -> f64 { w.iter().map(|v| a.iter().zip(v).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()).sum() };
    for (a, &thr) in resp.targets.iter().zip(&problem.sensing.chance) {
        let base = quad_form(a, r);
        let gain = beam_gain(a);
        if base < thr {
            if gain <= 0.0 {
                return None;
            }
            lo = lo.max((thr - base) / gain);
        }
    }
    if problem.uses_pattern() {
        // (1/LQ) sum (alpha_i - t beta_i)^2 <= cap
        let cap = problem.sensing.mse_cap.unwrap();
        let m = resp.grid.len() as f64;
        let (mut qa, mut qb, mut qc) = (0.0, 0.0, 0.0);
        for (a, &d) in resp.grid.iter().zip(&problem.sensing.ideal) {
            let alpha = rho0 * d - quad_form(a, r);
            let beta = beam_gain(a);
            qa += beta * beta;
            qb += -2.0 * alpha * beta;
            qc += alpha * alpha;
        }
        let (qa, qb, qc) = (qa / m, qb / m, qc / m - cap);
        if qa <= 0.0 {
            if qc > 0.0 {
                return None;
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return None;
            }
            let sq = Float::sqrt(disc);
            let (t1, t2) = ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa));
            lo = lo.max(t1);
            hi = hi.min(t2);
        }
    }
    (lo <= hi && lo.is_finite()).then_some(lo.max(0.0))
}

fn conj_vec(h: &[C64]) -> Vec<C64> {
    h.iter().map(|z| z.conj()).collect()
}

/// Sensing beams `v_n = sqrt(lambda_n) u_n` over the nonzero eigenvalues of `R`.
pub fn extract_sensing_beams(r: &DMatrix<C64>) -> Vec<Vec<C64>> {
    let (vals, vecs) = hermitian_eig(r);
    let top = vals.first().copied().unwrap_or(0.0);
    let floor = (top * 1e-12).max(f64::MIN_POSITIVE);
    vals.iter()
        .enumerate()
        .filter(|(_, &v)| v > floor)
        .map(|(j, &v)| vecs.column(j).iter().map(|z| z * Float::sqrt(v)).collect())
        .collect()
}

/// Per-user SINR `|h_k w_k|^2 / (sum_{i != k} |h_k w_i|^2 + h_k R h_k^H + sigma_k^2)`.
pub fn evaluate_sinr(h: &DMatrix<C64>, beams: &[Vec<C64>], r: &DMatrix<C64>, noise: &[f64]) -> Result<Vec<f64>> {
    let (k, n) = h.shape();
    if beams.len() != k || noise.len() != k || r.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "sinr evaluation",
            expected: k,
            actual: beams.len(),
        });
    }
    let mut out = Vec::with_capacity(k);
    for u in 0..k {
        let hrow: Vec<C64> = h.row(u).iter().copied().collect();
        let g = |w: &[C64]| hrow.iter().zip(w).map(|(a, b)| a * b).sum::<C64>().norm_sqr();
        let interference: f64 = (0..k).filter(|&i| i != u).map(|i| g(&beams[i])).sum();
        let sensing = quad_form(&conj_vec(&hrow), r);
        out.push(g(&beams[u]) / (interference + sensing + noise[u]));
    }
    Ok(out)
}

/// Independent constraint re-check of a committed design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignCheck {
    pub sinr: Vec<f64>,
    pub target_values: Vec<f64>,
    pub mse: Option<f64>,
    pub sinr_ok: bool,
    pub chance_ok: bool,
    pub mse_ok: bool,
}

impl DesignCheck {
    pub fn ok(&self) -> bool {
        self.sinr_ok && self.chance_ok && self.mse_ok
    }
}

/// Relative slack accepted by [`check_design`].
pub const RECHECK_TOL: f64 = 1e-4;

pub fn check_design(problem: &P1Problem, sol: &BeamformingSolution) -> Result<DesignCheck> {
    let resp = &problem.response;
    let sinr = evaluate_sinr(&resp.users, &sol.beams, &sol.r, &problem.noise)?;
    let sinr_ok = sinr.iter().zip(&problem.sinr).all(|(s, g)| *s >= g * (1.0 - RECHECK_TOL));
    let rx = sol.transmit_covariance();
    let target_values: Vec<f64> = resp.targets.iter().map(|a| quad_form(a, &rx)).collect();
    let chance_ok = target_values
        .iter()
        .zip(&problem.sensing.chance)
        .all(|(v, t)| *v >= t * (1.0 - RECHECK_TOL));
    let (mse, mse_ok) = if problem.uses_pattern() {
        let m = crate::sensing::beampattern_mse_flat(sol.rho0, &problem.sensing.ideal, &resp.grid, &rx)?;
        (Some(m), m <= problem.sensing.mse_cap.unwrap() * (1.0 + RECHECK_TOL))
    } else {
        (None, true)
    };
    Ok(DesignCheck {
        sinr,
        target_values,
        mse,
        sinr_ok,
        chance_ok,
        mse_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(h: C64, gamma: f64, noise: f64) -> P1Problem {
        P1Problem {
            response: ArrayResponse {
                users: DMatrix::from_element(1, 1, h),
                targets: Vec::new(),
                grid: Vec::new(),
            },
            noise: vec![noise],
            sinr: vec![gamma],
            sensing: SensingQos {
                chance: Vec::new(),
                ideal: Vec::new(),
                mse_cap: None,
            },
        }
    }

    #[test]
    fn scalar_power_is_analytic() {
        let h = C64::new(3e-4, -1e-4);
        let p = single(h, 10.0, 1e-11);
        let s = solve_p1(&p, &P1Settings::default()).unwrap().into_solution().unwrap();
        let expect = 10.0 * 1e-11 / h.norm_sqr();
        assert_relative_eq!(s.power, expect, max_relative = 1e-6);
        let p2 = single(h, 20.0, 1e-11);
        let s2 = solve_p1(&p2, &P1Settings::default()).unwrap().into_solution().unwrap();
        assert_relative_eq!(s2.power, 2.0 * s.power, max_relative = 1e-6);
    }

    #[test]
    fn sensing_beams_of_diagonal() {
        let r = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(4.0, 0.0), C64::new(0.0, 0.0)]));
        let v = extract_sensing_beams(&r);
        assert_eq!(v.len(), 1);
        assert!((v[0][0].norm() - 2.0).abs() < 1e-12 && v[0][1].norm() < 1e-12);
        assert!(extract_sensing_beams(&DMatrix::zeros(2, 2)).is_empty());
    }

    #[test]
    fn zero_forcing_has_no_interference() {
        let h = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.5, 0.5), C64::new(1.0, 0.0)]);
        // w_1 orthogonal to h_2, w_2 orthogonal to h_1
        let w1 = vec![C64::new(1.0, 0.0), -C64::new(0.5, 0.5)];
        let w2 = vec![C64::new(0.0, 0.0), C64::new(2.0, 0.0)];
        let s = evaluate_sinr(&h, &[w1.clone(), w2.clone()], &DMatrix::zeros(2, 2), &[0.1, 0.2]).unwrap();
        let g = |k: usize, w: &[C64]| (h[(k, 0)] * w[0] + h[(k, 1)] * w[1]).norm_sqr();
        assert_relative_eq!(s[0], g(0, &w1) / 0.1, max_relative = 1e-14);
        assert_relative_eq!(s[1], g(1, &w2) / 0.2, max_relative = 1e-14);
    }
}
