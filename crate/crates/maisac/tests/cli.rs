use std::path::{Path, PathBuf};
use std::process::Command as Process;

use maisac::commands::{execute, Command, Options};
use maisac::config_file::{config_hash, parse_config, parse_str, to_toml, ConfigError};
use maisac::parse_seeds;
use maisac_core::config::{ExperimentConfig, Profile, Scheme, SweepAxis};
use maisac_core::units::{db_to_linear, dbm_to_watt, deg_to_rad};

fn repo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn opts(dir: &Path, workers: usize) -> Options {
    Options {
        workers,
        ..Options::new(dir)
    }
}

#[test]
fn empty_file_is_the_desk_profile() {
    let c = parse_str("", None).unwrap();
    assert_eq!(config_hash(&c), config_hash(&ExperimentConfig::desk()));
    let p = parse_str("", Some(Profile::Paper)).unwrap();
    assert_eq!(config_hash(&p), config_hash(&ExperimentConfig::paper()));
}

#[test]
fn shipped_config_matches_the_desk_profile() {
    let mut c = parse_config(&repo_config(), None).unwrap();
    assert_eq!(c.sweep.take().unwrap().axis, SweepAxis::SensingSnr);
    assert_eq!(to_toml(&c), to_toml(&ExperimentConfig::desk()));
}

#[test]
fn system_parameters_round_trip() {
    let cfg = ExperimentConfig::paper();
    let text = to_toml(&cfg);
    let back = parse_str(&text, None).unwrap();
    assert_eq!(back.profile, Profile::Paper);
    assert_eq!((back.antennas, back.users, back.targets.len()), (4, 2, 2));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
    assert!(close(back.carrier_frequency, 5e9));
    assert!(close(back.wavelength, 0.06));
    assert!(close(back.spacing, 0.01));
    assert!(close(back.min_distance, 0.015));
    assert!(close(back.normalized_size, 2.0));
    assert!(close(back.path_loss_exponent, 2.2));
    assert!(close(back.reference_loss, db_to_linear(-30.0)));
    assert!(close(back.noise, dbm_to_watt(-80.0)));
    assert!(close(back.outage, 0.01));
    assert!(close(back.sinr_threshold, 10.0));
    assert!(close(back.snr_threshold, 10.0));
    for (a, b) in back.targets.iter().zip(&cfg.targets) {
        assert!((a.elevation - b.elevation).abs() < 1e-12);
        assert!((a.azimuth - b.azimuth).abs() < 1e-12);
    }
    assert!((back.targets[1].elevation - deg_to_rad(30.0)).abs() < 1e-12);
    // a second pass is exact
    assert_eq!(to_toml(&back), text);
}

#[test]
fn decibel_strings_are_converted() {
    let c = parse_str("sinr_threshold = \"10 dB\"\nnoise = \"-80 dBm\"\nreference_loss = 0.001", None).unwrap();
    assert_eq!(c.sinr_threshold, 10f64.powf(10.0 / 10.0));
    assert_eq!(c.noise, dbm_to_watt(-80.0));
    let c = parse_str("snr_threshold = \"3 dB\"\ntarget_noise = \"2 mW\"", None).unwrap();
    assert!((c.snr_threshold - 10f64.powf(0.3)).abs() < 1e-15);
    assert!((c.target_noise - 2e-3).abs() < 1e-18);
    assert!(parse_str("sinr_threshold = \"10 dBm\"", None).is_err());
}

#[test]
fn unknown_keys_are_rejected() {
    let err = parse_str("antenas = 3", None).unwrap_err();
    assert!(matches!(err, ConfigError::Syntax(_)));
    assert!(err.to_string().contains("antenas"), "{err}");
    let err = parse_str("[ao]\ntau_grwth = 2", None).unwrap_err();
    assert!(err.to_string().contains("tau_grwth"), "{err}");
}

#[test]
fn outage_outside_the_unit_interval_is_rejected() {
    for v in ["0.0", "1.0", "-0.5", "1.5"] {
        let err = parse_str(&format!("outage = {v}"), None).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)), "{v}: {err}");
        assert!(err.to_string().contains("outage"), "{err}");
    }
    assert!(parse_str("antennas = \"two\"", None).is_err());
}

#[test]
fn hash_ignores_layout() {
    let a = "antennas = 2\nsinr_threshold = \"10 dB\"\n[ao]\ntau_growth = 4.0\nrestarts = 2\n";
    let b = "ao.restarts = 2\nsinr_threshold = 10.0\nao.tau_growth = 4.0\nantennas = 2\n";
    let (ca, cb) = (parse_str(a, None).unwrap(), parse_str(b, None).unwrap());
    assert_eq!(config_hash(&ca), config_hash(&cb));
    let c = parse_str("ao.tau_growth = 3.0", None).unwrap();
    assert_ne!(config_hash(&ca), config_hash(&c));
    assert_eq!(config_hash(&ca).len(), 64);
}

#[test]
fn seed_lists_expand() {
    assert_eq!(parse_seeds("0-3,7").unwrap(), vec![0, 1, 2, 3, 7]);
    assert_eq!(parse_seeds("5").unwrap(), vec![5]);
    assert!(parse_seeds("3-1").is_err());
    assert!(parse_seeds("x").is_err());
}

#[test]
fn forced_placement_run_is_quick() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::desk();
    cfg.antennas = 4;
    cfg.normalized_size = 1.0 / 3.0;
    cfg.spacing = 0.02;
    cfg.seeds = vec![0];
    cfg.schemes = vec![Scheme::Proposed];
    cfg.samples = 1000;
    let t0 = std::time::Instant::now();
    let s = execute(Command::Run, &cfg, &opts(dir.path(), 1)).unwrap();
    assert!(t0.elapsed().as_secs_f64() < 10.0, "{:?}", t0.elapsed());
    assert!(s.ok(), "{:?}", s.failures);
    let (_, rows) = read_csv(&dir.path().join("results.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "proposed");
    assert_eq!(rows[0][6], "true");
    assert!(dir.path().join("trace_0.csv").exists());
    assert!(dir.path().join("manifest.toml").exists());
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(&repo_config(), None).unwrap();
    cfg.seeds = vec![0, 1];
    cfg.samples = 1000;
    let s = execute(Command::Sweep, &cfg, &opts(dir.path(), 2)).unwrap();
    assert!(s.ok(), "{:?}", s.failures);
    let (header, rows) = read_csv(&dir.path().join("results.csv"));
    assert_eq!(
        header,
        [
            "scheme",
            "seed",
            "sweep_name",
            "sweep_value",
            "power_w",
            "power_dbm",
            "feasible",
            "iterations",
            "rank_one_all",
            "outage_hat_1",
            "runtime_s"
        ]
    );
    assert_eq!(rows.len(), 3 * 2 * 3);
    // scheme-major, then seed, then sweep point
    let keys: Vec<(String, String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone(), r[3].clone())).collect();
    assert_eq!(keys[0], ("proposed".into(), "0".into(), "0".into()));
    assert_eq!(keys[2], ("proposed".into(), "0".into(), "10".into()));
    assert_eq!(keys[3].1, "1");
    assert_eq!(keys[6].0, "fixed");
    assert!(rows.iter().all(|r| r[2] == "sensing_snr_db" && r[10] == "0"));
    for k in 0..3 {
        assert!(dir.path().join(format!("trace_0_{k}.csv")).exists());
    }
    let manifest: toml::Value = toml::from_str(&std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest["command"].as_str(), Some("sweep"));
    assert_eq!(manifest["config_hash"].as_str().unwrap(), config_hash(&cfg));
}

#[test]
fn sweep_without_values_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::desk();
    cfg.sweep = None;
    assert!(execute(Command::Sweep, &cfg, &opts(dir.path(), 1)).is_err());
}

#[test]
fn chance_check_is_within_the_binomial_band() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::desk();
    cfg.seeds = vec![0];
    cfg.samples = 100_000;
    let s = execute(Command::VerifyChance, &cfg, &opts(dir.path(), 1)).unwrap();
    assert!(s.ok(), "{:?}", s.failures);
    let (header, rows) = read_csv(&dir.path().join("verify_chance.csv"));
    assert_eq!(header[0], "scheme");
    assert_eq!(rows.len(), 3);
    let nu = cfg.outage;
    let band = 3.0 * (nu * (1.0 - nu) / 1e5f64).sqrt();
    let mut boundary = 0;
    for r in &rows {
        let closed: f64 = r[5].parse().unwrap();
        let emp: f64 = r[6].parse().unwrap();
        assert!(closed <= nu * (1.0 + 1e-4), "{r:?}");
        assert!(emp <= nu + band, "{r:?}");
        if (closed - nu).abs() <= 1e-3 * nu {
            boundary += 1;
            assert!((emp - nu).abs() <= band, "{r:?}");
        }
    }
    assert!(boundary > 0, "no design sits on the chance boundary: {rows:?}");
}

#[test]
fn results_are_byte_identical_across_runs_and_worker_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = ExperimentConfig::desk();
    cfg.seeds = vec![0, 1, 2];
    cfg.samples = 2000;
    execute(Command::Run, &cfg, &opts(a.path(), 1)).unwrap();
    execute(Command::Run, &cfg, &opts(b.path(), 3)).unwrap();
    for f in ["results.csv", "trace_0.csv", "trace_2.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn oracle_writes_gaps_and_refuses_large_lattices() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::desk();
    cfg.seeds = vec![0, 1];
    let s = execute(Command::Oracle, &cfg, &opts(dir.path(), 1)).unwrap();
    assert!(s.ok(), "{:?}", s.failures);
    let (header, rows) = read_csv(&dir.path().join("oracle.csv"));
    assert_eq!(header, ["seed", "candidates", "evaluated", "oracle_power_w", "proposed_power_w", "relative_gap"]);
    for r in &rows {
        let gap: f64 = r[5].parse().unwrap();
        assert!(gap >= -1e-6, "{r:?}");
    }
    let mut big = ExperimentConfig::paper();
    big.seeds = vec![0];
    let err = execute(Command::Oracle, &big, &opts(dir.path(), 1)).unwrap_err();
    assert!(err.to_string().contains("oracle"), "{err}");
}

#[test]
fn binary_reports_exit_codes_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_maisac");
    let status = Process::new(bin)
        .args(["baseline", "--seeds", "0", "--samples", "500", "--log", "debug", "--dump-channels", "--out"])
        .arg(dir.path())
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    let (_, rows) = read_csv(&dir.path().join("results.csv"));
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["fixed", "selection"]);
    let channel = std::fs::read_to_string(dir.path().join("channel_0.txt")).unwrap();
    assert!(channel.starts_with("# channel K=2 M=16 N=2 L_p=8 seed=0"), "{channel}");
    assert_eq!(channel.lines().filter(|l| l.starts_with("h ")).count(), 2);
    assert_eq!(channel.lines().filter(|l| l.starts_with("path ")).count(), 16);
    assert!(dir.path().join("program_0.txt").exists());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "outage = 2.0\n").unwrap();
    let status = Process::new(bin).args(["run", "--config"]).arg(&bad).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let status = Process::new(bin)
        .args(["oracle", "--profile", "paper", "--seeds", "0", "--log", "quiet", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
