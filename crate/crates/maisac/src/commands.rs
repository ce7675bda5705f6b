//! Subcommand orchestration.
//!
//! Seeds fan out over a rayon pool; results are collected in seed order and
//! written from the calling thread, so output files do not depend on the
//! worker count.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use log::{debug, info, warn};
use maisac_core::beamforming::assemble_p1;
use maisac_core::config::{ExperimentConfig, Profile, Scheme};
use maisac_core::conic::dump::to_text;
use maisac_core::evaluation::{
    baseline_antenna_selection, baseline_fixed, build_scenario, build_scenario_with, monte_carlo_outage,
    oracle_exhaustive, proposed, recheck, reference_positions, run_seed, sort_records, target_values, ResultRecord,
    SchemeResult, SeedReport,
};
use maisac_core::scenario::Scenario;
use maisac_core::sensing::outage_closed_form;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config_file::config_hash;
use crate::output::{
    trace_name, write_channel_dump, write_manifest, write_results, write_trace, RunManifest, SeedStatus,
    MANIFEST_FILE, RESULTS_FILE,
};

pub const ORACLE_FILE: &str = "oracle.csv";
pub const VERIFY_FILE: &str = "verify_chance.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Sweep,
    Baseline,
    Oracle,
    VerifyChance,
}

impl Command {
    pub fn id(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Sweep => "sweep",
            Command::Baseline => "baseline",
            Command::Oracle => "oracle",
            Command::VerifyChance => "verify-chance",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Options {
    pub out: PathBuf,
    pub workers: usize,
    /// Fill the runtime column with wall-clock seconds (breaks byte-identical reruns).
    pub timing: bool,
    pub dump_channels: bool,
    /// Write the P1 conic program of each seed at the reference array.
    pub dump_programs: bool,
}

impl Options {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Options {
            out: out.into(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timing: false,
            dump_channels: false,
            dump_programs: false,
        }
    }
}

/// Outcome of a completed command.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub outputs: Vec<PathBuf>,
    /// Flagged problems (failed seeds, infeasible designs, out-of-band outages).
    pub failures: Vec<String>,
}

impl Summary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Config the command actually evaluates.
pub fn effective_config(cmd: Command, cfg: &ExperimentConfig) -> anyhow::Result<ExperimentConfig> {
    let mut c = cfg.clone();
    match cmd {
        Command::Run | Command::Oracle | Command::VerifyChance => c.sweep = None,
        Command::Sweep => {
            anyhow::ensure!(c.sweep.is_some(), "the sweep command needs a [sweep] section with an axis and values");
        }
        Command::Baseline => c.schemes.retain(|s| *s != Scheme::Proposed),
    }
    if cmd == Command::Baseline && c.schemes.is_empty() {
        c.schemes = vec![Scheme::Fixed, Scheme::Selection];
    }
    c.validate()?;
    Ok(c)
}

pub fn execute(cmd: Command, cfg: &ExperimentConfig, opts: &Options) -> anyhow::Result<Summary> {
    let cfg = effective_config(cmd, cfg)?;
    std::fs::create_dir_all(&opts.out).with_context(|| format!("cannot create {}", opts.out.display()))?;
    if cfg.profile == Profile::Paper {
        warn!("paper profile: each seed solves large conic programs and can take a long time");
    }
    let started = unix_now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers.max(1)).build()?;
    info!("{} over {} seed(s) with {} worker(s)", cmd.id(), cfg.seeds.len(), opts.workers.max(1));

    let mut summary = Summary::default();
    let mut statuses = Vec::new();
    match cmd {
        Command::Run | Command::Sweep | Command::Baseline => {
            let reports: Vec<_> = pool.install(|| {
                cfg.seeds.par_iter().map(|&s| seed_report(&cfg, s, opts.timing)).collect()
            });
            let mut records = Vec::new();
            for (&seed, rep) in cfg.seeds.iter().zip(reports) {
                match rep {
                    Ok(rep) => {
                        statuses.push(SeedStatus { seed, ok: true, error: None });
                        flag_infeasible(&rep.records, &mut summary.failures);
                        write_traces(&cfg, seed, &rep, &opts.out, &mut summary.outputs)?;
                        records.extend(rep.records);
                    }
                    Err(e) => {
                        statuses.push(SeedStatus { seed, ok: false, error: Some(e.to_string()) });
                        summary.failures.push(format!("seed {seed}: {e}"));
                    }
                }
            }
            sort_records(&cfg, &mut records);
            let path = opts.out.join(RESULTS_FILE);
            write_results(&path, cfg.targets.len(), &records)
                .with_context(|| format!("cannot write {}", path.display()))?;
            summary.outputs.push(path);
        }
        Command::Oracle => {
            let rows: Vec<_> = pool.install(|| cfg.seeds.par_iter().map(|&s| oracle_row(&cfg, s)).collect());
            let mut ok_rows = Vec::new();
            for (&seed, row) in cfg.seeds.iter().zip(rows) {
                match row {
                    Ok(r) => {
                        if r.oracle_power_w.is_none() {
                            summary.failures.push(format!("seed {seed}: no feasible placement"));
                        }
                        statuses.push(SeedStatus { seed, ok: true, error: None });
                        ok_rows.push(r);
                    }
                    Err(maisac_core::Error::SizeGuard(m)) => anyhow::bail!("oracle refused: {m}"),
                    Err(e) => {
                        statuses.push(SeedStatus { seed, ok: false, error: Some(e.to_string()) });
                        summary.failures.push(format!("seed {seed}: {e}"));
                    }
                }
            }
            let path = opts.out.join(ORACLE_FILE);
            write_oracle(&path, &ok_rows).with_context(|| format!("cannot write {}", path.display()))?;
            summary.outputs.push(path);
        }
        Command::VerifyChance => {
            let rows: Vec<_> = pool.install(|| cfg.seeds.par_iter().map(|&s| verify_rows(&cfg, s)).collect());
            let mut all = Vec::new();
            for (&seed, r) in cfg.seeds.iter().zip(rows) {
                match r {
                    Ok(r) => {
                        for v in r.iter().filter(|v| !v.within_band) {
                            summary.failures.push(format!(
                                "seed {seed} {} target {}: empirical outage {} above {} + {}",
                                v.scheme.id(),
                                v.target + 1,
                                v.empirical,
                                cfg.outage,
                                v.band
                            ));
                        }
                        statuses.push(SeedStatus { seed, ok: true, error: None });
                        all.extend(r);
                    }
                    Err(e) => {
                        statuses.push(SeedStatus { seed, ok: false, error: Some(e.to_string()) });
                        summary.failures.push(format!("seed {seed}: {e}"));
                    }
                }
            }
            let path = opts.out.join(VERIFY_FILE);
            write_verify(&path, &all).with_context(|| format!("cannot write {}", path.display()))?;
            summary.outputs.push(path);
        }
    }

    for &seed in &cfg.seeds {
        if opts.dump_channels || opts.dump_programs {
            dumps(&cfg, seed, opts, &mut summary.outputs)?;
        }
    }

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cmd.id().into(),
        profile: cfg.profile.id().into(),
        config_hash: config_hash(&cfg),
        started_unix_s: started,
        finished_unix_s: unix_now(),
        workers: opts.workers.max(1),
        seeds: statuses,
        outputs: summary.outputs.clone(),
        failures: summary.failures.clone(),
    };
    let path = opts.out.join(MANIFEST_FILE);
    write_manifest(&path, &manifest)?;
    summary.outputs.push(path);
    Ok(summary)
}

fn seed_report(cfg: &ExperimentConfig, seed: u64, timing: bool) -> maisac_core::Result<SeedReport> {
    let t0 = Instant::now();
    let wall = move || t0.elapsed().as_secs_f64();
    let zero = || 0.0;
    let clock: &dyn Fn() -> f64 = if timing { &wall } else { &zero };
    let rep = run_seed(cfg, seed, clock)?;
    debug!("seed {seed}: {} records, {} P1 solves", rep.records.len(), rep.stats.solves);
    Ok(rep)
}

fn flag_infeasible(records: &[ResultRecord], failures: &mut Vec<String>) {
    for r in records.iter().filter(|r| !r.feasible) {
        let at = if r.sweep_name.is_empty() { String::new() } else { format!(" at {}={}", r.sweep_name, r.sweep_value) };
        failures.push(format!("seed {} {}{at}: no design passed the constraint re-check", r.seed, r.scheme.id()));
    }
}

fn write_traces(
    cfg: &ExperimentConfig,
    seed: u64,
    rep: &SeedReport,
    out: &Path,
    outputs: &mut Vec<PathBuf>,
) -> anyhow::Result<()> {
    for (point, trace) in &rep.traces {
        let path = out.join(trace_name(seed, cfg.sweep.as_ref().map(|_| *point)));
        write_trace(&path, trace).with_context(|| format!("cannot write {}", path.display()))?;
        outputs.push(path);
    }
    Ok(())
}

fn first_scenario(cfg: &ExperimentConfig, seed: u64) -> maisac_core::Result<Scenario> {
    let points = cfg.sweep_points()?;
    build_scenario_with(&points[0].2, &cfg.calibration(), seed)
}

fn dumps(cfg: &ExperimentConfig, seed: u64, opts: &Options, outputs: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let sc = first_scenario(cfg, seed)?;
    if opts.dump_channels {
        let path = opts.out.join(format!("channel_{seed}.txt"));
        write_channel_dump(&path, &sc, seed).with_context(|| format!("cannot write {}", path.display()))?;
        outputs.push(path);
    }
    if opts.dump_programs {
        let problem = sc.problem_at_positions(&reference_positions(cfg));
        let prog = assemble_p1(&problem)?;
        let path = opts.out.join(format!("program_{seed}.txt"));
        std::fs::write(&path, to_text(&prog.program)).with_context(|| format!("cannot write {}", path.display()))?;
        outputs.push(path);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct OracleRow {
    pub seed: u64,
    pub candidates: usize,
    pub evaluated: usize,
    pub oracle_power_w: Option<f64>,
    pub proposed_power_w: Option<f64>,
}

impl OracleRow {
    pub fn relative_gap(&self) -> Option<f64> {
        Some((self.proposed_power_w? - self.oracle_power_w?) / self.oracle_power_w?)
    }
}

fn oracle_row(cfg: &ExperimentConfig, seed: u64) -> maisac_core::Result<OracleRow> {
    let sc = build_scenario(cfg, seed)?;
    let oracle = oracle_exhaustive(&sc, &cfg.p1)?;
    let prop = proposed(&sc, cfg)?;
    let prop_ok = recheck(&sc, &prop)?;
    Ok(OracleRow {
        seed,
        candidates: sc.candidates(),
        evaluated: oracle.as_ref().map_or(0, |o| o.evaluated),
        oracle_power_w: oracle.map(|o| o.solution.power),
        proposed_power_w: prop.power().filter(|_| prop_ok),
    })
}

fn cell(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map(|x| format!("{x}")).unwrap_or_default()
}

fn write_oracle(path: &Path, rows: &[OracleRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["seed", "candidates", "evaluated", "oracle_power_w", "proposed_power_w", "relative_gap"])?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.candidates.to_string(),
            r.evaluated.to_string(),
            cell(r.oracle_power_w),
            cell(r.proposed_power_w),
            cell(r.relative_gap()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ChanceRow {
    pub scheme: Scheme,
    pub seed: u64,
    /// Zero-based target index.
    pub target: usize,
    pub pattern_value: f64,
    pub threshold: f64,
    pub closed_form: f64,
    pub empirical: f64,
    /// Three binomial standard deviations around the tolerated outage.
    pub band: f64,
    pub within_band: bool,
}

fn scheme_result(sc: &Scenario, cfg: &ExperimentConfig, scheme: Scheme) -> maisac_core::Result<SchemeResult> {
    match scheme {
        Scheme::Proposed => proposed(sc, cfg),
        Scheme::Fixed => baseline_fixed(sc, cfg),
        Scheme::Selection => baseline_antenna_selection(sc, cfg),
    }
}

fn verify_rows(cfg: &ExperimentConfig, seed: u64) -> maisac_core::Result<Vec<ChanceRow>> {
    let sc = build_scenario(cfg, seed)?;
    let nu = cfg.outage;
    let band = 3.0 * (nu * (1.0 - nu) / cfg.samples as f64).sqrt();
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        let r = scheme_result(&sc, cfg, scheme)?;
        let (Some(problem), Some(sol)) = (&r.problem, &r.solution) else {
            warn!("seed {seed} {}: no design to verify", scheme.id());
            continue;
        };
        if !recheck(&sc, &r)? {
            warn!("seed {seed} {}: design failed the constraint re-check", scheme.id());
            continue;
        }
        let values = target_values(&sc, problem, sol);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((scheme as u64 + 1) << 48) ^ 0x5eed_c4a1);
        let emp = monte_carlo_outage(&sc.targets, sc.reference_loss, &values, cfg.samples, &mut rng);
        for (e, t) in sc.targets.targets.iter().enumerate() {
            rows.push(ChanceRow {
                scheme,
                seed,
                target: e,
                pattern_value: values[e],
                threshold: sc.chance[e],
                closed_form: outage_closed_form(t, sc.targets.rcs_mean, sc.reference_loss, values[e]),
                empirical: emp[e],
                band,
                within_band: emp[e] <= nu + band,
            });
        }
    }
    Ok(rows)
}

fn write_verify(path: &Path, rows: &[ChanceRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "scheme",
        "seed",
        "target",
        "pattern_value",
        "threshold",
        "closed_form",
        "empirical",
        "band",
        "within_band",
    ])?;
    for r in rows {
        w.write_record([
            r.scheme.id().to_string(),
            r.seed.to_string(),
            (r.target + 1).to_string(),
            format!("{}", r.pattern_value),
            format!("{}", r.threshold),
            format!("{}", r.closed_form),
            format!("{}", r.empirical),
            format!("{}", r.band),
            r.within_band.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
