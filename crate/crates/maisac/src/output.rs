//! Result files: results and trace CSVs, channel and program dumps, the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use maisac_core::evaluation::ResultRecord;
use maisac_core::placement::AOTrace;
use maisac_core::scenario::Scenario;
use serde::Serialize;

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Results CSV columns; `outage_hat_1..E` follow `rank_one_all`.
pub fn results_header(targets: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "scheme",
        "seed",
        "sweep_name",
        "sweep_value",
        "power_w",
        "power_dbm",
        "feasible",
        "iterations",
        "rank_one_all",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=targets).map(|e| format!("outage_hat_{e}")));
    h.push("runtime_s".into());
    h
}

pub fn write_results(path: &Path, targets: usize, records: &[ResultRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(results_header(targets))?;
    for r in records {
        let mut row = vec![
            r.scheme.id().to_string(),
            r.seed.to_string(),
            r.sweep_name.clone(),
            num(r.sweep_value),
            opt(r.power_w),
            opt(r.power_dbm()),
            r.feasible.to_string(),
            r.iterations.to_string(),
            r.rank_one_all.to_string(),
        ];
        row.extend((0..targets).map(|e| r.outage_hat.get(e).copied().map(num).unwrap_or_default()));
        row.push(num(r.runtime_s));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-iteration trace; penalty values are `;`-separated.
pub fn write_trace(path: &Path, trace: &AOTrace) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "objective_watts", "binary_violation", "penalty_values", "solver_status"])?;
    for it in &trace.iterates {
        let pen = it.penalties.iter().map(|&p| num(p)).collect::<Vec<_>>().join(";");
        w.write_record([
            it.iteration.to_string(),
            num(it.objective),
            num(it.binary_violation),
            pen,
            it.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Trace file name; sweeps add the sweep point index.
pub fn trace_name(seed: u64, point: Option<usize>) -> String {
    match point {
        Some(p) => format!("trace_{seed}_{p}.csv"),
        None => format!("trace_{seed}.csv"),
    }
}

/// Channel dump:
///
/// ```text
/// # channel K=<K> M=<M> N=<N> L_p=<L_p> seed=<seed>
/// h <k> <re_1> <im_1> ... <re_M> <im_M>
/// path <k> <l> <weight_re> <weight_im> <elevation> <azimuth> <distance>
/// ```
///
/// `h` lines hold row `k` of the per-candidate channel block (shared by all antennas).
pub fn write_channel_dump(path: &Path, sc: &Scenario, seed: u64) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let block = sc.channel.block();
    writeln!(
        w,
        "# channel K={} M={} N={} L_p={} seed={seed}",
        sc.users(),
        sc.candidates(),
        sc.antennas,
        sc.paths.users.first().map_or(0, |u| u.len())
    )?;
    for k in 0..block.nrows() {
        write!(w, "h {k}")?;
        for m in 0..block.ncols() {
            let z = block[(k, m)];
            write!(w, " {:e} {:e}", z.re, z.im)?;
        }
        writeln!(w)?;
    }
    for (k, u) in sc.paths.users.iter().enumerate() {
        for l in 0..u.len() {
            writeln!(
                w,
                "path {k} {l} {:e} {:e} {:e} {:e} {:e}",
                u.weights[l].re, u.weights[l].im, u.elevations[l], u.azimuths[l], u.distances[l]
            )?;
        }
    }
    w.flush()
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedStatus {
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Run manifest, written as TOML.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub profile: String,
    pub config_hash: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub workers: usize,
    pub seeds: Vec<SeedStatus>,
    pub outputs: Vec<PathBuf>,
    pub failures: Vec<String>,
}

pub fn write_manifest(path: &Path, m: &RunManifest) -> anyhow::Result<()> {
    std::fs::write(path, toml::to_string(m)?)?;
    Ok(())
}
