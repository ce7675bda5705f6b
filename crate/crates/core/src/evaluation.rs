//! Instances from seeds, the two fixed-array baselines, the exhaustive
//! placement oracle, Monte Carlo outage estimation, constraint re-checks and
//! sweeps.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beamforming::{check_design, min_pattern_mse, solve_p1, BeamformingSolution, P1Problem, P1Settings};
use crate::channel::{sample_paths, ChannelParams, PathSet};
use crate::config::{ExperimentConfig, Scheme};
use crate::geometry::{build_grid, distance, indices_respect_distance, Point};
use crate::linalg::quad_form;
use crate::placement::{ao_run_with_starts, AOTrace, P1Stats};
use crate::scenario::Scenario;
use crate::sensing::{sample_rcs, sensing_snr, BeamGrid, Target, TargetSpec};
use crate::units::watt_to_dbm;
use crate::{Error, Result};

/// Random quantities of one seed. They do not depend on any swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    pub user_distances: Vec<f64>,
    pub target_ranges: Vec<f64>,
    pub paths: PathSet,
}

pub fn draw(cfg: &ExperimentConfig, seed: u64) -> Result<Draws> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
    let user_distances: Vec<f64> = (0..cfg.users).map(|_| uniform(&mut rng, cfg.user_distance)).collect();
    let target_ranges: Vec<f64> = (0..cfg.targets.len()).map(|_| uniform(&mut rng, cfg.target_range)).collect();
    let params = ChannelParams {
        users: cfg.users,
        paths: cfg.paths,
        reference_loss: cfg.reference_loss,
        exponent: cfg.path_loss_exponent,
    };
    let paths = sample_paths(&params, cfg.wavelength, &user_distances, &mut rng)?;
    Ok(Draws {
        user_distances,
        target_ranges,
        paths,
    })
}

fn targets_of(cfg: &ExperimentConfig, draws: &Draws) -> Result<TargetSpec> {
    let targets = cfg
        .targets
        .iter()
        .zip(&draws.target_ranges)
        .map(|(t, &range)| Target {
            elevation: t.elevation,
            azimuth: t.azimuth,
            range,
            snr_threshold: cfg.snr_threshold,
            noise: cfg.target_noise,
        })
        .collect();
    TargetSpec::new(targets, cfg.rcs_mean, cfg.outage)
}

/// Half-wavelength linear array along the first lattice axis.
pub fn reference_positions(cfg: &ExperimentConfig) -> Vec<Point> {
    (0..cfg.antennas).map(|n| [n as f64 * cfg.wavelength / 2.0, 0.0]).collect()
}

/// `2 x N` half-wavelength planar array.
pub fn upa_positions(cfg: &ExperimentConfig) -> Vec<Point> {
    let h = cfg.wavelength / 2.0;
    (0..2)
        .flat_map(|row| (0..cfg.antennas).map(move |col| [col as f64 * h, row as f64 * h]))
        .collect()
}

/// Smallest pattern MSE the reference array reaches while meeting every
/// SINR and chance row, with `rho0` free. `sc` supplies channels and targets;
/// its own cap is ignored.
pub fn reference_pattern_mse(sc: &Scenario, cfg: &ExperimentConfig) -> Result<f64> {
    let problem = sc.problem_at_positions(&reference_positions(cfg));
    min_pattern_mse(&problem, &cfg.p1.solver)?
        .ok_or_else(|| Error::Infeasible(String::from("the reference array cannot meet the SINR and chance rows")))
}

/// Instance of one seed under `cfg`. `delta_d` comes from `calibration`
/// (see [`ExperimentConfig::calibration`]) unless `cfg.mse_cap` is set.
pub fn build_scenario_with(cfg: &ExperimentConfig, calibration: &ExperimentConfig, seed: u64) -> Result<Scenario> {
    let draws = draw(cfg, seed)?;
    let targets = targets_of(cfg, &draws)?;
    let grid = build_grid(cfg.normalized_size, cfg.spacing, cfg.wavelength)?;
    let assemble = |c: &ExperimentConfig, targets: TargetSpec, beams: Option<BeamGrid>| {
        Scenario::new(
            grid.clone(),
            c.min_distance,
            c.antennas,
            draws.paths.clone(),
            vec![c.noise; c.users],
            vec![c.sinr_threshold; c.users],
            targets,
            beams,
        )
    };
    let beams = if targets.is_empty() {
        None
    } else {
        let cap = match cfg.mse_cap {
            Some(c) => c,
            None => {
                let ct = targets_of(calibration, &draws)?;
                let probe = BeamGrid::new(&calibration.beam_grid, &ct.targets, 0.0)?;
                let csc = assemble(calibration, ct, Some(probe))?;
                cfg.mse_factor * reference_pattern_mse(&csc, calibration)?
            }
        };
        Some(BeamGrid::new(&cfg.beam_grid, &targets.targets, cap)?)
    };
    assemble(cfg, targets, beams)
}

pub fn build_scenario(cfg: &ExperimentConfig, seed: u64) -> Result<Scenario> {
    build_scenario_with(cfg, &cfg.calibration(), seed)
}

/// A committed design of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub positions: Vec<Point>,
    /// Lattice indices when the antennas sit on the candidate lattice.
    pub indices: Option<Vec<usize>>,
    pub problem: Option<P1Problem>,
    pub solution: Option<BeamformingSolution>,
    pub iterations: usize,
    pub stats: P1Stats,
    pub trace: Option<AOTrace>,
}

impl SchemeResult {
    pub fn power(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.power)
    }
}

fn fixed_array_result(scheme: Scheme, sc: &Scenario, positions: Vec<Point>, p1: &P1Settings) -> Result<SchemeResult> {
    let problem = sc.problem_at_positions(&positions);
    let out = solve_p1(&problem, p1)?;
    let mut stats = P1Stats::default();
    stats.record(&out);
    Ok(SchemeResult {
        scheme,
        positions,
        indices: None,
        problem: Some(problem),
        solution: out.into_solution(),
        iterations: 0,
        stats,
        trace: None,
    })
}

/// Covariance design on the fixed half-wavelength linear array.
pub fn baseline_fixed(sc: &Scenario, cfg: &ExperimentConfig) -> Result<SchemeResult> {
    fixed_array_result(Scheme::Fixed, sc, reference_positions(cfg), &cfg.p1)
}

/// All `N`-subsets of `n` items in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        if c[i] == i + n - k {
            return out;
        }
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Best `N`-subset of the `2 x N` half-wavelength planar array.
pub fn baseline_antenna_selection(sc: &Scenario, cfg: &ExperimentConfig) -> Result<SchemeResult> {
    let upa = upa_positions(cfg);
    let mut best: Option<SchemeResult> = None;
    let mut stats = P1Stats::default();
    for subset in combinations(upa.len(), cfg.antennas) {
        let pos: Vec<Point> = subset.iter().map(|&i| upa[i]).collect();
        let r = fixed_array_result(Scheme::Selection, sc, pos, &cfg.p1)?;
        stats.merge(&r.stats);
        if let Some(p) = r.power() {
            if best.as_ref().and_then(|b| b.power()).is_none_or(|bp| p < bp) {
                best = Some(r);
            }
        }
    }
    Ok(match best {
        Some(mut b) => {
            b.stats = stats;
            b
        }
        None => SchemeResult {
            scheme: Scheme::Selection,
            positions: Vec::new(),
            indices: None,
            problem: None,
            solution: None,
            iterations: 0,
            stats,
            trace: None,
        },
    })
}

/// Lattice placements of the `N`-subsets of the half-wavelength planar
/// array that fall exactly on candidates.
pub fn conventional_starts(sc: &Scenario, cfg: &ExperimentConfig) -> Vec<Vec<usize>> {
    let upa = upa_positions(cfg);
    combinations(upa.len(), cfg.antennas)
        .into_iter()
        .filter_map(|c| map_positions(sc, &c.iter().map(|&i| upa[i]).collect::<Vec<_>>()))
        .collect()
}

/// Alternating optimization over the lattice. The conventional-array
/// placements join the start pool.
pub fn proposed(sc: &Scenario, cfg: &ExperimentConfig) -> Result<SchemeResult> {
    let out = ao_run_with_starts(sc, &cfg.ao, &cfg.p1, &conventional_starts(sc, cfg))?;
    let iterations = out.iterations();
    let indices = out.placement.as_ref().and_then(|p| p.indices());
    let positions = indices
        .as_ref()
        .map(|idx| idx.iter().map(|&i| sc.grid.positions()[i]).collect())
        .unwrap_or_default();
    let problem = indices.as_ref().map(|idx| sc.problem_at_indices(idx)).transpose()?;
    Ok(SchemeResult {
        scheme: Scheme::Proposed,
        positions,
        indices,
        problem,
        solution: out.solution,
        iterations,
        stats: out.stats,
        trace: Some(out.trace),
    })
}

/// Upper bound on placements the exhaustive oracle will enumerate, counted as `C(M, N) N!`.
pub const ORACLE_LIMIT: u128 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub indices: Vec<usize>,
    pub solution: BeamformingSolution,
    /// Distance-feasible placements evaluated.
    pub evaluated: usize,
    pub stats: P1Stats,
}

fn assignment_count(m: usize, n: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 0..n as u128 {
        c = c.saturating_mul(m as u128 - i);
    }
    c
}

/// Exhaustive search over unordered distance-feasible placements.
pub fn oracle_exhaustive(sc: &Scenario, p1: &P1Settings) -> Result<Option<OracleResult>> {
    let (m, n) = (sc.candidates(), sc.antennas);
    let count = assignment_count(m, n);
    if count > ORACLE_LIMIT {
        return Err(Error::SizeGuard(alloc::format!(
            "{count} ordered placements exceed the oracle limit of {ORACLE_LIMIT}"
        )));
    }
    let mut best: Option<OracleResult> = None;
    let mut evaluated = 0;
    let mut stats = P1Stats::default();
    for c in combinations(m, n) {
        if !indices_respect_distance(&c, &sc.distances, sc.min_distance) {
            continue;
        }
        evaluated += 1;
        let out = solve_p1(&sc.problem_at_indices(&c)?, p1)?;
        stats.record(&out);
        if let Some(s) = out.into_solution() {
            if best.as_ref().is_none_or(|b| s.power < b.solution.power) {
                best = Some(OracleResult {
                    indices: c,
                    solution: s,
                    evaluated: 0,
                    stats: P1Stats::default(),
                });
            }
        }
    }
    Ok(best.map(|mut b| {
        b.evaluated = evaluated;
        b.stats = stats;
        b
    }))
}

/// Pattern values `a^H R_x a` of a design at every target.
pub fn target_values(sc: &Scenario, problem: &P1Problem, sol: &BeamformingSolution) -> Vec<f64> {
    let rx = sol.transmit_covariance();
    debug_assert_eq!(problem.response.targets.len(), sc.targets.len());
    problem.response.targets.iter().map(|a| quad_form(a, &rx)).collect()
}

/// Fraction of exponential RCS draws for which the sensing SNR does not exceed its threshold.
pub fn monte_carlo_outage<R: Rng + ?Sized>(
    targets: &TargetSpec,
    reference_loss: f64,
    values: &[f64],
    samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    targets
        .targets
        .iter()
        .zip(values)
        .map(|(t, &v)| {
            let hits = (0..samples)
                .filter(|_| sensing_snr(sample_rcs(targets.rcs_mean, rng), reference_loss, t, v) <= t.snr_threshold)
                .count();
            hits as f64 / samples.max(1) as f64
        })
        .collect()
}

/// Independent re-check of SINR, chance rows, pattern MSE and antenna spacing.
pub fn recheck(sc: &Scenario, r: &SchemeResult) -> Result<bool> {
    let (Some(problem), Some(sol)) = (&r.problem, &r.solution) else {
        return Ok(false);
    };
    let design = check_design(problem, sol)?;
    let spacing_ok = r.positions.iter().enumerate().all(|(i, &p)| {
        r.positions[i + 1..].iter().all(|&q| distance(p, q) >= sc.min_distance - 1e-12)
    });
    Ok(design.ok() && spacing_ok)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub scheme: Scheme,
    pub seed: u64,
    pub sweep_name: String,
    pub sweep_value: f64,
    /// Committed power (watts); `None` when infeasible.
    pub power_w: Option<f64>,
    pub feasible: bool,
    pub iterations: usize,
    pub rank_one_all: bool,
    pub outage_hat: Vec<f64>,
    pub runtime_s: f64,
}

impl ResultRecord {
    pub fn power_dbm(&self) -> Option<f64> {
        self.power_w.map(watt_to_dbm)
    }
}

/// Everything produced for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedReport {
    pub records: Vec<ResultRecord>,
    /// AO traces keyed by sweep point index.
    pub traces: Vec<(usize, AOTrace)>,
    pub stats: P1Stats,
    /// Number of P1 solves that used the randomization fallback and still passed the re-check.
    pub fallback_rechecked: usize,
}

fn mc_seed(seed: u64, scheme: Scheme, point: usize) -> u64 {
    let s = scheme as u64;
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (s << 56) ^ ((point as u64) << 40) ^ 0x0dd_ba11
}

/// Maps lattice positions of another lattice onto this scenario's candidates, if all are present.
fn map_positions(sc: &Scenario, pos: &[Point]) -> Option<Vec<usize>> {
    pos.iter()
        .map(|&p| {
            let i = sc.grid.nearest(p);
            (distance(sc.grid.positions()[i], p) < 1e-9).then_some(i)
        })
        .collect()
}

/// Runs every scheme at every sweep point for one seed.
///
/// Placements committed by the alternating optimization at any sweep point
/// are also evaluated at the other points (when they exist on that lattice),
/// and the best design is kept. `clock` returns seconds and is only used for
/// the runtime column.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64, clock: &dyn Fn() -> f64) -> Result<SeedReport> {
    cfg.validate()?;
    let calibration = cfg.calibration();
    let points = cfg.sweep_points()?;
    let mut results: Vec<(usize, SchemeResult, f64, Scenario)> = Vec::new();
    let mut stats = P1Stats::default();
    let mut traces = Vec::new();
    for (pi, (_, _, pcfg)) in points.iter().enumerate() {
        let sc = build_scenario_with(pcfg, &calibration, seed)?;
        for &scheme in &cfg.schemes {
            let t0 = clock();
            let r = match scheme {
                Scheme::Proposed => proposed(&sc, pcfg)?,
                Scheme::Fixed => baseline_fixed(&sc, pcfg)?,
                Scheme::Selection => baseline_antenna_selection(&sc, pcfg)?,
            };
            stats.merge(&r.stats);
            if let Some(t) = &r.trace {
                traces.push((pi, t.clone()));
            }
            results.push((pi, r, clock() - t0, sc.clone()));
        }
    }
    // share committed lattice placements across sweep points
    if points.len() > 1 && cfg.schemes.contains(&Scheme::Proposed) {
        let committed: Vec<Vec<Point>> = results
            .iter()
            .filter(|(_, r, ..)| r.scheme == Scheme::Proposed && r.solution.is_some())
            .map(|(_, r, ..)| r.positions.clone())
            .collect();
        for (pi, r, rt, sc) in results.iter_mut() {
            if r.scheme != Scheme::Proposed {
                continue;
            }
            let t0 = clock();
            for pos in &committed {
                let Some(idx) = map_positions(sc, pos) else { continue };
                if r.indices.as_ref().is_some_and(|c| {
                    let (mut a, mut b) = (c.clone(), idx.clone());
                    a.sort_unstable();
                    b.sort_unstable();
                    a == b
                }) {
                    continue;
                }
                let problem = sc.problem_at_indices(&idx)?;
                let out = solve_p1(&problem, &points[*pi].2.p1)?;
                stats.record(&out);
                if let Some(s) = out.into_solution() {
                    if r.power().is_none_or(|p| s.power < p) {
                        debug!("seed {seed}: shared placement {idx:?} improves sweep point {pi}");
                        r.positions = pos.clone();
                        r.indices = Some(idx);
                        r.problem = Some(problem);
                        r.solution = Some(s);
                    }
                }
            }
            *rt += clock() - t0;
        }
    }
    let mut records = Vec::with_capacity(results.len());
    let mut fallback_rechecked = 0;
    for (pi, r, rt, sc) in &results {
        let (name, value, pcfg) = &points[*pi];
        let ok = recheck(sc, r)?;
        if r.solution.is_some() && !ok {
            warn!("seed {seed} {} point {pi}: design failed the constraint re-check", r.scheme.id());
        }
        let (outage_hat, rank_one_all) = match (&r.problem, &r.solution) {
            (Some(p), Some(s)) if ok => {
                if !s.rank_one_all() {
                    fallback_rechecked += 1;
                }
                let vals = target_values(sc, p, s);
                let mut rng = ChaCha8Rng::seed_from_u64(mc_seed(seed, r.scheme, *pi));
                (
                    monte_carlo_outage(&sc.targets, sc.reference_loss, &vals, pcfg.samples, &mut rng),
                    s.rank_one_all(),
                )
            }
            _ => (vec![f64::NAN; sc.targets.len()], false),
        };
        records.push(ResultRecord {
            scheme: r.scheme,
            seed,
            sweep_name: name.clone(),
            sweep_value: *value,
            power_w: r.power().filter(|_| ok),
            feasible: ok,
            iterations: r.iterations,
            rank_one_all,
            outage_hat,
            runtime_s: *rt,
        });
    }
    Ok(SeedReport {
        records,
        traces,
        stats,
        fallback_rechecked,
    })
}

/// Deterministic record order: scheme (as configured), seed, sweep point.
pub fn sort_records(cfg: &ExperimentConfig, records: &mut [ResultRecord]) {
    let scheme_pos = |s: Scheme| cfg.schemes.iter().position(|&x| x == s).unwrap_or(usize::MAX);
    let seed_pos = |s: u64| cfg.seeds.iter().position(|&x| x == s).unwrap_or(usize::MAX);
    let point_pos = |v: f64| {
        cfg.sweep
            .as_ref()
            .and_then(|sw| sw.values.iter().position(|&x| x == v))
            .unwrap_or(0)
    };
    records.sort_by_key(|r| (scheme_pos(r.scheme), seed_pos(r.seed), point_pos(r.sweep_value)));
}

/// All seeds, sequentially, in deterministic order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let mut all = Vec::new();
    for &seed in &cfg.seeds {
        all.extend(run_seed(cfg, seed, &|| 0.0)?.records);
    }
    sort_records(cfg, &mut all);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_counts() {
        assert_eq!(combinations(8, 4).len(), 70);
        assert_eq!(combinations(2, 1).len(), 2);
        assert_eq!(combinations(9, 2).len(), 36);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert!(combinations(2, 3).is_empty());
    }
}
