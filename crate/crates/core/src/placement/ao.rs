//! Alternating optimization: covariance design at the current binary
//! placement, then a position update with the beams fixed.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::p2::{solve_p2, FixedBeams};
use super::{AOConfig, LinearizationPoint};
use crate::beamforming::{solve_p1, BeamformingSolution, P1Outcome, P1Settings};
use crate::conic::SolveStatus;
use crate::geometry::{indices_respect_distance, DistanceMatrix, Placement};
use crate::scenario::Scenario;
use crate::{Error, Result};

/// Outcome of one AO iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterateStatus {
    /// Covariance design at the initial placement.
    Initial,
    /// The update returned a binary placement with no higher power; it was committed.
    Accepted,
    /// The update returned the current placement.
    Stationary,
    /// The update returned a binary placement that did not lower the power.
    Rejected,
    /// The update was fractional; penalties were raised and the point relinearized.
    Fractional,
    /// The position solver did not reach optimality.
    SolverFailure,
}

impl IterateStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            IterateStatus::Initial => "initial",
            IterateStatus::Accepted => "accepted",
            IterateStatus::Stationary => "stationary",
            IterateStatus::Rejected => "rejected",
            IterateStatus::Fractional => "fractional",
            IterateStatus::SolverFailure => "solver_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoIterate {
    pub iteration: usize,
    /// Power of the committed placement after this iteration (watts).
    pub objective: f64,
    /// Objective of the position subproblem (watts), NaN when not solved.
    pub update_objective: f64,
    /// `sum (b - b^2)` of the position update.
    pub binary_violation: f64,
    /// Largest distance of an update entry from {0, 1}.
    pub binary_deviation: f64,
    pub penalties: [f64; 4],
    pub status: IterateStatus,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AOTrace {
    pub iterates: Vec<AoIterate>,
    /// Initial placement of the run this trace belongs to.
    pub start: Vec<usize>,
}

impl AOTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.iterates.iter().map(|i| i.objective).collect()
    }

    /// Deviation from binary of the last position update, if any.
    pub fn final_deviation(&self) -> Option<f64> {
        self.iterates
            .iter()
            .rev()
            .find(|i| i.status != IterateStatus::Initial && i.status != IterateStatus::SolverFailure)
            .map(|i| i.binary_deviation)
    }
}

/// Counts of covariance-design solves and how their beams were recovered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct P1Stats {
    pub solves: usize,
    pub rank_one: usize,
    pub fallback: usize,
    pub infeasible: usize,
}

impl P1Stats {
    pub fn record(&mut self, out: &P1Outcome) {
        self.solves += 1;
        match out {
            P1Outcome::Solved(s) if s.rank_one_all() => self.rank_one += 1,
            P1Outcome::Solved(_) => self.fallback += 1,
            _ => self.infeasible += 1,
        }
    }

    pub fn merge(&mut self, o: &P1Stats) {
        self.solves += o.solves;
        self.rank_one += o.rank_one;
        self.fallback += o.fallback;
        self.infeasible += o.infeasible;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoOutcome {
    /// Committed binary placement (canonical antenna order); `None` when no feasible start was found.
    pub placement: Option<Placement>,
    pub solution: Option<BeamformingSolution>,
    /// Trace of the best run.
    pub trace: AOTrace,
    /// Traces of every run, best first excluded.
    pub runs: Vec<AOTrace>,
    pub stats: P1Stats,
}

impl AoOutcome {
    pub fn power(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.power)
    }

    pub fn iterations(&self) -> usize {
        self.trace.iterates.len().saturating_sub(1)
    }
}

/// Greedy farthest-point placement: the first antenna at candidate 0, each
/// next one at the admissible candidate farthest from those already placed.
pub fn farthest_point_init(distances: &DistanceMatrix, antennas: usize, min_distance: f64) -> Option<Vec<usize>> {
    let m = distances.len();
    if antennas == 0 || antennas > m {
        return None;
    }
    let mut chosen = vec![0usize];
    while chosen.len() < antennas {
        let mut best: Option<(f64, usize)> = None;
        for c in 0..m {
            if chosen.contains(&c) {
                continue;
            }
            let dmin = chosen.iter().map(|&q| distances.get(c, q)).fold(f64::INFINITY, f64::min);
            if dmin < min_distance {
                continue;
            }
            if best.is_none_or(|b| dmin > b.0) {
                best = Some((dmin, c));
            }
        }
        chosen.push(best?.1);
    }
    Some(chosen)
}

fn random_init(distances: &DistanceMatrix, antennas: usize, min_distance: f64, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let m = distances.len();
    let mut all: Vec<usize> = (0..m).collect();
    for _ in 0..200 {
        all.shuffle(rng);
        let mut chosen = Vec::with_capacity(antennas);
        for &c in &all {
            if chosen.iter().all(|&q| distances.get(c, q) >= min_distance) {
                chosen.push(c);
                if chosen.len() == antennas {
                    return Some(chosen);
                }
            }
        }
    }
    None
}

fn canonical(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Rounding candidates for relaxed rows: per-antenna argmax with greedy
/// distance repair, then alternatives obtained by moving one antenna at a time
/// to its next-best admissible candidate. At most `count` distinct placements.
pub fn round_and_repair(b: &[Vec<f64>], distances: &DistanceMatrix, min_distance: f64, count: usize) -> Vec<Vec<usize>> {
    let n = b.len();
    let m = distances.len();
    let order_of = |row: &[f64]| {
        let mut o: Vec<usize> = (0..m).collect();
        o.sort_by(|&x, &y| row[y].total_cmp(&row[x]).then(x.cmp(&y)));
        o
    };
    let orders: Vec<Vec<usize>> = b.iter().map(|r| order_of(r)).collect();
    // antennas in decreasing confidence keep their argmax; others are repaired
    let mut by_conf: Vec<usize> = (0..n).collect();
    by_conf.sort_by(|&x, &y| b[y][orders[y][0]].total_cmp(&b[x][orders[x][0]]).then(x.cmp(&y)));
    let repair = |fixed: &[(usize, usize)]| -> Option<Vec<usize>> {
        let mut idx = vec![usize::MAX; n];
        for &(a, c) in fixed {
            idx[a] = c;
        }
        for &a in &by_conf {
            if idx[a] != usize::MAX {
                continue;
            }
            let ok = |c: usize, idx: &[usize]| idx.iter().all(|&q| q == usize::MAX || (q != c && distances.get(c, q) >= min_distance));
            let c = *orders[a].iter().find(|&&c| ok(c, &idx))?;
            idx[a] = c;
        }
        indices_respect_distance(&idx, distances, min_distance).then_some(idx)
    };
    let mut out: Vec<Vec<usize>> = Vec::new();
    let push = |v: Option<Vec<usize>>, out: &mut Vec<Vec<usize>>| {
        if let Some(v) = v {
            let c = canonical(v.clone());
            if !out.iter().any(|o| canonical(o.clone()) == c) {
                out.push(v);
            }
        }
    };
    push(repair(&[]), &mut out);
    'outer: for rank in 1..m {
        for &a in by_conf.iter().rev() {
            if out.len() >= count {
                break 'outer;
            }
            push(repair(&[(a, orders[a][rank])]), &mut out);
        }
    }
    out.truncate(count);
    out
}

struct Run {
    indices: Vec<usize>,
    solution: BeamformingSolution,
    trace: AOTrace,
}

fn solve_at(sc: &Scenario, idx: &[usize], p1: &P1Settings, stats: &mut P1Stats) -> Result<Option<BeamformingSolution>> {
    let out = solve_p1(&sc.problem_at_indices(idx)?, p1)?;
    stats.record(&out);
    Ok(out.into_solution())
}

fn run_from(
    sc: &Scenario,
    start: Vec<usize>,
    initial: Option<BeamformingSolution>,
    cfg: &AOConfig,
    p1: &P1Settings,
    stats: &mut P1Stats,
) -> Result<Option<Run>> {
    let m = sc.candidates();
    let initial = match initial {
        Some(s) => Some(s),
        None => solve_at(sc, &start, p1, stats)?,
    };
    let Some(mut solution) = initial else {
        debug!("start {start:?} infeasible");
        return Ok(None);
    };
    let mut current = start.clone();
    let mut power = solution.power;
    let p0 = power;
    let mut trace = AOTrace {
        iterates: vec![AoIterate {
            iteration: 0,
            objective: power,
            update_objective: f64::NAN,
            binary_violation: 0.0,
            binary_deviation: 0.0,
            penalties: [0.0; 4],
            status: IterateStatus::Initial,
        }],
        start,
    };
    let mut tau_rel = cfg.tau;
    let mut point = LinearizationPoint::binary(m, &current)?;
    for t in 1..=cfg.max_iterations {
        let beams = FixedBeams::from_solution(&solution);
        let tau = tau_rel.map(|r| r * p0);
        let upd = match solve_p2(sc, &beams, &point, tau, cfg.formulation, &cfg.solver) {
            Ok(u) => u,
            Err(Error::SizeGuard(msg)) => {
                warn!("skipping position updates: {msg}");
                break;
            }
            Err(e) => return Err(e),
        };
        let mut it = AoIterate {
            iteration: t,
            objective: power,
            update_objective: upd.objective,
            binary_violation: 0.0,
            binary_deviation: 0.0,
            penalties: upd.penalties,
            status: IterateStatus::SolverFailure,
        };
        let grow = |tau_rel: &mut [f64; 4]| {
            for v in tau_rel.iter_mut() {
                *v = (*v * cfg.tau_growth).min(cfg.tau_max);
            }
        };
        if upd.status != SolveStatus::Optimal {
            debug!("position update failed with {:?}", upd.status);
            trace.iterates.push(it);
            grow(&mut tau_rel);
            point = LinearizationPoint::binary(m, &current)?;
            continue;
        }
        let rp = upd.point();
        it.binary_violation = super::taylor::binary_penalty(&rp.b.iter().flatten().copied().collect::<Vec<_>>());
        it.binary_deviation = rp.binary_deviation();
        let mut stop = false;
        if it.binary_deviation < cfg.rounding_tolerance {
            let idx: Vec<usize> = rp.b.iter().map(|r| argmax(r)).collect();
            if canonical(idx.clone()) == canonical(current.clone()) {
                it.status = IterateStatus::Stationary;
                stop = true;
            } else if !indices_respect_distance(&idx, &sc.distances, sc.min_distance) {
                it.status = IterateStatus::Rejected;
                grow(&mut tau_rel);
            } else {
                match solve_at(sc, &idx, p1, stats)? {
                    Some(s) if s.power <= power => {
                        let prev = power;
                        power = s.power;
                        solution = s;
                        current = idx;
                        it.objective = power;
                        it.status = IterateStatus::Accepted;
                        stop = (prev - power) / prev <= cfg.tolerance;
                    }
                    _ => {
                        it.status = IterateStatus::Rejected;
                        grow(&mut tau_rel);
                    }
                }
            }
            point = LinearizationPoint::binary(m, &current)?;
        } else {
            it.status = IterateStatus::Fractional;
            point = rp;
            grow(&mut tau_rel);
        }
        debug!(
            "iteration {t}: {} power {:.6e} update {:.6e} deviation {:.2e}",
            it.status.as_str(),
            it.objective,
            it.update_objective,
            it.binary_deviation
        );
        trace.iterates.push(it);
        if stop {
            break;
        }
    }
    // a fractional last update still gets its rounding candidates evaluated
    if let Some(last) = trace.iterates.last() {
        if last.status == IterateStatus::Fractional {
            for cand in round_and_repair(&point.b, &sc.distances, sc.min_distance, cfg.rounding_candidates) {
                if canonical(cand.clone()) == canonical(current.clone()) {
                    continue;
                }
                if let Some(s) = solve_at(sc, &cand, p1, stats)? {
                    if s.power < power {
                        power = s.power;
                        solution = s;
                        current = cand;
                    }
                }
            }
            if let Some(last) = trace.iterates.last_mut() {
                last.objective = power;
            }
        }
    }
    Ok(Some(Run {
        indices: current,
        solution,
        trace,
    }))
}

fn argmax(r: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in r.iter().enumerate() {
        if *v > r[best] {
            best = i;
        }
    }
    best
}

/// Alternating optimization over several starts; the lowest-power committed
/// placement is returned.
///
/// The start pool is the farthest-point placement plus seeded random ones.
/// With screening on, the pool is ranked by covariance-design power and the
/// best `1 + restarts` members are run; otherwise every member is run.
pub fn ao_run(sc: &Scenario, cfg: &AOConfig, p1: &P1Settings) -> Result<AoOutcome> {
    ao_run_with_starts(sc, cfg, p1, &[])
}

/// [`ao_run`] with caller-supplied placements added to the start pool.
/// Placements violating the minimum distance or out of range are ignored.
pub fn ao_run_with_starts(sc: &Scenario, cfg: &AOConfig, p1: &P1Settings, extra: &[Vec<usize>]) -> Result<AoOutcome> {
    cfg.validate()?;
    let mut stats = P1Stats::default();
    let mut pool: Vec<Vec<usize>> = Vec::new();
    let add = |s: Vec<usize>, pool: &mut Vec<Vec<usize>>| {
        if !pool.iter().any(|q| canonical(q.clone()) == canonical(s.clone())) {
            pool.push(s);
        }
    };
    if let Some(s) = farthest_point_init(&sc.distances, sc.antennas, sc.min_distance) {
        add(s, &mut pool);
    }
    for s in extra {
        let valid = s.len() == sc.antennas && s.iter().all(|&i| i < sc.candidates());
        if valid && indices_respect_distance(s, &sc.distances, sc.min_distance) {
            add(s.clone(), &mut pool);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws = if cfg.screening > 0 { cfg.screening } else { cfg.restarts };
    for _ in 0..draws {
        if let Some(s) = random_init(&sc.distances, sc.antennas, sc.min_distance, &mut rng) {
            add(s, &mut pool);
        }
    }
    if pool.is_empty() {
        return Err(Error::Infeasible(String::from("no placement satisfies the minimum distance")));
    }
    let mut starts: Vec<(Vec<usize>, Option<BeamformingSolution>)> = Vec::new();
    if cfg.screening > 0 {
        let mut ranked = Vec::new();
        for s in pool {
            if let Some(sol) = solve_at(sc, &s, p1, &mut stats)? {
                ranked.push((s, sol));
            }
        }
        ranked.sort_by(|a, b| a.1.power.total_cmp(&b.1.power));
        debug!("screened {} feasible starts", ranked.len());
        starts.extend(ranked.into_iter().take(1 + cfg.restarts).map(|(s, sol)| (s, Some(sol))));
    } else {
        starts.extend(pool.into_iter().map(|s| (s, None)));
    }
    let mut best: Option<Run> = None;
    let mut runs = Vec::new();
    for (s, sol) in starts {
        if let Some(run) = run_from(sc, s, sol, cfg, p1, &mut stats)? {
            let better = best.as_ref().is_none_or(|b| run.solution.power < b.solution.power);
            if better {
                if let Some(old) = best.replace(run) {
                    runs.push(old.trace);
                }
            } else {
                runs.push(run.trace);
            }
        }
    }
    let Some(best) = best else {
        info!("no feasible initial placement");
        return Ok(AoOutcome {
            placement: None,
            solution: None,
            trace: AOTrace::default(),
            runs,
            stats,
        });
    };
    // canonical antenna order, beams permuted alongside
    let mut perm: Vec<usize> = (0..best.indices.len()).collect();
    perm.sort_by_key(|&a| best.indices[a]);
    let indices: Vec<usize> = perm.iter().map(|&a| best.indices[a]).collect();
    let mut solution = best.solution;
    permute_solution(&mut solution, &perm);
    let placement = Placement::from_indices(sc.candidates(), &indices, sc.min_distance)?;
    Ok(AoOutcome {
        placement: Some(placement),
        solution: Some(solution),
        trace: best.trace,
        runs,
        stats,
    })
}

/// Reorders antenna-indexed entries of a solution: new antenna `a` is old `perm[a]`.
fn permute_solution(s: &mut BeamformingSolution, perm: &[usize]) {
    let pv = |v: &Vec<crate::C64>| perm.iter().map(|&a| v[a]).collect::<Vec<_>>();
    let pm = |m: &nalgebra::DMatrix<crate::C64>| nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(perm[i], perm[j])]);
    s.beams = s.beams.iter().map(pv).collect();
    s.sensing_beams = s.sensing_beams.iter().map(pv).collect();
    s.w_cov = s.w_cov.iter().map(pm).collect();
    s.r = pm(&s.r);
}
