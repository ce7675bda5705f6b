//! TOML experiment configuration.
//!
//! Every key is optional; missing keys keep the value of the selected
//! profile. Top-level keys mirror the system-parameter names, grouped
//! knobs live in tables (`channel`, `beam_grid`, `run`, `sweep`, `ao`, `p1`,
//! `solver`) and may equally be written as dotted keys (`ao.tau_growth = 4`).
//! Unknown keys are rejected.
//!
//! Ratios accept a plain linear number or a string with a `dB` suffix; powers
//! accept watts or a string in `dBm`, `W` or `mW`.

use std::fmt;
use std::path::Path;

use maisac_core::config::{ExperimentConfig, Profile, Scheme, Sweep, SweepAxis, TargetDirection};
use maisac_core::placement::P2Formulation;
use maisac_core::units::{db_to_linear, dbm_to_watt, deg_to_rad, rad_to_deg};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("key `{key}`: {reason}")]
    Value { key: String, reason: String },
    #[error(transparent)]
    Invalid(#[from] maisac_core::Error),
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// A number, or a string carrying a unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Number(v) => write!(f, "{v}"),
            Quantity::Text(s) => write!(f, "{s:?}"),
        }
    }
}

fn split_unit(s: &str) -> Option<(f64, String)> {
    let s = s.trim();
    let at = s
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(s.len());
    let v: f64 = s[..at].trim().parse().ok()?;
    Some((v, s[at..].trim().to_string()))
}

impl Quantity {
    /// Linear power ratio.
    pub fn ratio(&self, key: &str) -> Result<f64, ConfigError> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(s) => match split_unit(s) {
                Some((v, u)) if u.eq_ignore_ascii_case("db") => Ok(db_to_linear(v)),
                Some((v, u)) if u.is_empty() => Ok(v),
                _ => Err(bad(key, format!("expected a number or \"<x> dB\", got {s:?}"))),
            },
        }
    }

    /// Power in watts.
    pub fn power(&self, key: &str) -> Result<f64, ConfigError> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(s) => match split_unit(s) {
                Some((v, u)) if u.eq_ignore_ascii_case("dbm") => Ok(dbm_to_watt(v)),
                Some((v, u)) if u == "W" || u.is_empty() => Ok(v),
                Some((v, u)) if u == "mW" => Ok(v * 1e-3),
                _ => Err(bad(key, format!("expected watts or \"<x> dBm\", got {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub paths: Option<usize>,
    pub user_distance: Option<[f64; 2]>,
    pub target_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamGridSection {
    /// `L`
    pub elevations: Option<usize>,
    /// `Q`
    pub azimuths: Option<usize>,
    pub half_width_elevation_deg: Option<f64>,
    pub half_width_azimuth_deg: Option<f64>,
    /// `delta_d` in W^2; overrides `mse_factor`.
    pub mse_cap: Option<f64>,
    pub mse_factor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seeds: Option<Vec<u64>>,
    pub schemes: Option<Vec<String>>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AoSection {
    pub tau: Option<[f64; 4]>,
    pub tau_growth: Option<f64>,
    pub tau_max: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub restarts: Option<usize>,
    pub screening: Option<usize>,
    pub seed: Option<u64>,
    pub rounding_tolerance: Option<f64>,
    pub rounding_candidates: Option<usize>,
    /// `lifted` or `schur`.
    pub formulation: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct P1Section {
    pub rank_ratio: Option<f64>,
    pub randomization_draws: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub feasibility_tol: Option<f64>,
    pub internal_tol: Option<f64>,
    pub abs_gap_tol: Option<f64>,
    pub rel_gap_tol: Option<f64>,
    pub reduced_tol: Option<f64>,
    pub max_iterations: Option<usize>,
    pub refinement_steps: Option<usize>,
    pub equilibrate: Option<bool>,
}

/// File representation; see the module docs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub profile: Option<String>,
    pub antennas: Option<usize>,
    pub users: Option<usize>,
    pub carrier_frequency: Option<f64>,
    pub wavelength: Option<f64>,
    pub normalized_size: Option<f64>,
    pub spacing: Option<f64>,
    pub path_loss_exponent: Option<f64>,
    pub reference_loss: Option<Quantity>,
    pub min_distance: Option<f64>,
    pub noise: Option<Quantity>,
    pub target_noise: Option<Quantity>,
    pub outage: Option<f64>,
    pub sinr_threshold: Option<Quantity>,
    pub snr_threshold: Option<Quantity>,
    pub rcs_mean: Option<f64>,
    pub targets: Option<Vec<TargetEntry>>,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub beam_grid: BeamGridSection,
    #[serde(default)]
    pub run: RunSection,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub ao: AoSection,
    #[serde(default)]
    pub p1: P1Section,
    #[serde(default)]
    pub solver: SolverSection,
}

fn set<T>(dst: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *dst = v;
    }
}

pub fn parse_profile(s: &str) -> Result<Profile, ConfigError> {
    Profile::from_id(s).ok_or_else(|| bad("profile", format!("unknown profile {s:?} (desk, paper)")))
}

fn formulation_id(f: P2Formulation) -> &'static str {
    match f {
        P2Formulation::Lifted => "lifted",
        P2Formulation::Schur => "schur",
    }
}

impl FileConfig {
    /// Applies the file on top of a profile. `profile` overrides the file's own `profile` key.
    pub fn resolve(&self, profile: Option<Profile>) -> Result<ExperimentConfig, ConfigError> {
        let base = match (profile, &self.profile) {
            (Some(p), _) => p,
            (None, Some(s)) => parse_profile(s)?,
            (None, None) => Profile::Desk,
        };
        let mut c = ExperimentConfig::for_profile(base);
        set(&mut c.antennas, self.antennas);
        set(&mut c.users, self.users);
        set(&mut c.carrier_frequency, self.carrier_frequency);
        set(&mut c.wavelength, self.wavelength);
        set(&mut c.normalized_size, self.normalized_size);
        set(&mut c.spacing, self.spacing);
        set(&mut c.path_loss_exponent, self.path_loss_exponent);
        set(&mut c.min_distance, self.min_distance);
        set(&mut c.outage, self.outage);
        set(&mut c.rcs_mean, self.rcs_mean);
        if let Some(q) = &self.reference_loss {
            c.reference_loss = q.ratio("reference_loss")?;
        }
        if let Some(q) = &self.noise {
            c.noise = q.power("noise")?;
        }
        if let Some(q) = &self.target_noise {
            c.target_noise = q.power("target_noise")?;
        }
        if let Some(q) = &self.sinr_threshold {
            c.sinr_threshold = q.ratio("sinr_threshold")?;
        }
        if let Some(q) = &self.snr_threshold {
            c.snr_threshold = q.ratio("snr_threshold")?;
        }
        if let Some(ts) = &self.targets {
            c.targets = ts
                .iter()
                .map(|t| TargetDirection {
                    elevation: deg_to_rad(t.elevation_deg),
                    azimuth: deg_to_rad(t.azimuth_deg),
                })
                .collect();
        }

        let ch = &self.channel;
        set(&mut c.paths, ch.paths);
        set(&mut c.user_distance, ch.user_distance.map(|[a, b]| (a, b)));
        set(&mut c.target_range, ch.target_range.map(|[a, b]| (a, b)));

        let bg = &self.beam_grid;
        set(&mut c.beam_grid.elevations, bg.elevations);
        set(&mut c.beam_grid.azimuths, bg.azimuths);
        set(&mut c.beam_grid.half_width_elevation, bg.half_width_elevation_deg.map(deg_to_rad));
        set(&mut c.beam_grid.half_width_azimuth, bg.half_width_azimuth_deg.map(deg_to_rad));
        if bg.mse_cap.is_some() {
            c.mse_cap = bg.mse_cap;
        }
        set(&mut c.mse_factor, bg.mse_factor);

        set(&mut c.seeds, self.run.seeds.clone());
        set(&mut c.samples, self.run.samples);
        if let Some(ids) = &self.run.schemes {
            c.schemes = ids
                .iter()
                .map(|s| Scheme::from_id(s).ok_or_else(|| bad("run.schemes", format!("unknown scheme {s:?}"))))
                .collect::<Result<_, _>>()?;
        }
        if let Some(sw) = &self.sweep {
            let axis = SweepAxis::from_id(&sw.axis).ok_or_else(|| {
                bad(
                    "sweep.axis",
                    format!("unknown axis {:?} (sensing_snr_db, outage, normalized_size, sinr_threshold_db)", sw.axis),
                )
            })?;
            c.sweep = Some(Sweep {
                axis,
                values: sw.values.clone(),
            });
        }

        let ao = &self.ao;
        set(&mut c.ao.tau, ao.tau);
        set(&mut c.ao.tau_growth, ao.tau_growth);
        set(&mut c.ao.tau_max, ao.tau_max);
        set(&mut c.ao.tolerance, ao.tolerance);
        set(&mut c.ao.max_iterations, ao.max_iterations);
        set(&mut c.ao.restarts, ao.restarts);
        set(&mut c.ao.screening, ao.screening);
        set(&mut c.ao.seed, ao.seed);
        set(&mut c.ao.rounding_tolerance, ao.rounding_tolerance);
        set(&mut c.ao.rounding_candidates, ao.rounding_candidates);
        if let Some(f) = &ao.formulation {
            c.ao.formulation = match f.as_str() {
                "lifted" => P2Formulation::Lifted,
                "schur" => P2Formulation::Schur,
                _ => return Err(bad("ao.formulation", format!("unknown formulation {f:?} (lifted, schur)"))),
            };
        }

        set(&mut c.p1.rank_ratio, self.p1.rank_ratio);
        set(&mut c.p1.randomization_draws, self.p1.randomization_draws);
        set(&mut c.p1.seed, self.p1.seed);

        let s = &self.solver;
        for sv in [&mut c.p1.solver, &mut c.ao.solver] {
            set(&mut sv.feasibility_tol, s.feasibility_tol);
            set(&mut sv.internal_tol, s.internal_tol);
            set(&mut sv.abs_gap_tol, s.abs_gap_tol);
            set(&mut sv.rel_gap_tol, s.rel_gap_tol);
            set(&mut sv.reduced_tol, s.reduced_tol);
            set(&mut sv.max_iterations, s.max_iterations);
            set(&mut sv.refinement_steps, s.refinement_steps);
            set(&mut sv.equilibrate, s.equilibrate);
        }

        c.validate()?;
        Ok(c)
    }

    /// Fully populated file form of a configuration, in linear units and degrees.
    pub fn from_experiment(c: &ExperimentConfig) -> Self {
        let sv = &c.p1.solver;
        FileConfig {
            profile: Some(c.profile.id().to_string()),
            antennas: Some(c.antennas),
            users: Some(c.users),
            carrier_frequency: Some(c.carrier_frequency),
            wavelength: Some(c.wavelength),
            normalized_size: Some(c.normalized_size),
            spacing: Some(c.spacing),
            path_loss_exponent: Some(c.path_loss_exponent),
            reference_loss: Some(Quantity::Number(c.reference_loss)),
            min_distance: Some(c.min_distance),
            noise: Some(Quantity::Number(c.noise)),
            target_noise: Some(Quantity::Number(c.target_noise)),
            outage: Some(c.outage),
            sinr_threshold: Some(Quantity::Number(c.sinr_threshold)),
            snr_threshold: Some(Quantity::Number(c.snr_threshold)),
            rcs_mean: Some(c.rcs_mean),
            targets: Some(
                c.targets
                    .iter()
                    .map(|t| TargetEntry {
                        elevation_deg: rad_to_deg(t.elevation),
                        azimuth_deg: rad_to_deg(t.azimuth),
                    })
                    .collect(),
            ),
            channel: ChannelSection {
                paths: Some(c.paths),
                user_distance: Some([c.user_distance.0, c.user_distance.1]),
                target_range: Some([c.target_range.0, c.target_range.1]),
            },
            beam_grid: BeamGridSection {
                elevations: Some(c.beam_grid.elevations),
                azimuths: Some(c.beam_grid.azimuths),
                half_width_elevation_deg: Some(rad_to_deg(c.beam_grid.half_width_elevation)),
                half_width_azimuth_deg: Some(rad_to_deg(c.beam_grid.half_width_azimuth)),
                mse_cap: c.mse_cap,
                mse_factor: Some(c.mse_factor),
            },
            run: RunSection {
                seeds: Some(c.seeds.clone()),
                schemes: Some(c.schemes.iter().map(|s| s.id().to_string()).collect()),
                samples: Some(c.samples),
            },
            sweep: c.sweep.as_ref().map(|s| SweepSection {
                axis: s.axis.id().to_string(),
                values: s.values.clone(),
            }),
            ao: AoSection {
                tau: Some(c.ao.tau),
                tau_growth: Some(c.ao.tau_growth),
                tau_max: Some(c.ao.tau_max),
                tolerance: Some(c.ao.tolerance),
                max_iterations: Some(c.ao.max_iterations),
                restarts: Some(c.ao.restarts),
                screening: Some(c.ao.screening),
                seed: Some(c.ao.seed),
                rounding_tolerance: Some(c.ao.rounding_tolerance),
                rounding_candidates: Some(c.ao.rounding_candidates),
                formulation: Some(formulation_id(c.ao.formulation).to_string()),
            },
            p1: P1Section {
                rank_ratio: Some(c.p1.rank_ratio),
                randomization_draws: Some(c.p1.randomization_draws),
                seed: Some(c.p1.seed),
            },
            solver: SolverSection {
                feasibility_tol: Some(sv.feasibility_tol),
                internal_tol: Some(sv.internal_tol),
                abs_gap_tol: Some(sv.abs_gap_tol),
                rel_gap_tol: Some(sv.rel_gap_tol),
                reduced_tol: Some(sv.reduced_tol),
                max_iterations: Some(sv.max_iterations),
                refinement_steps: Some(sv.refinement_steps),
                equilibrate: Some(sv.equilibrate),
            },
        }
    }
}

pub fn parse_str(text: &str, profile: Option<Profile>) -> Result<ExperimentConfig, ConfigError> {
    let file: FileConfig = toml::from_str(text)?;
    file.resolve(profile)
}

pub fn parse_config(path: &Path, profile: Option<Profile>) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text, profile)
}

/// TOML text of the fully populated configuration.
pub fn to_toml(c: &ExperimentConfig) -> String {
    toml::to_string(&FileConfig::from_experiment(c)).expect("configuration serializes")
}

/// SHA-256 of the effective configuration. Computed from the parsed values,
/// so key order, dotted versus table syntax and unit spelling do not matter.
pub fn config_hash(c: &ExperimentConfig) -> String {
    let v = serde_json::to_value(FileConfig::from_experiment(c)).expect("configuration serializes");
    // serde_json maps keep their keys sorted
    let canonical = serde_json::to_string(&v).expect("json value serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
