//! Experiment configuration: system parameters, sweep axis, schemes and
//! algorithm knobs. Values are stored in linear units and radians; parsing
//! from text lives in the `maisac` crate.

use alloc::string::String;
use alloc::vec::Vec;

use crate::beamforming::P1Settings;
use crate::placement::AOConfig;
use crate::sensing::BeamGridParams;
use crate::units::{db_to_linear, dbm_to_watt, deg_to_rad};
use crate::{Error, Result};

/// Direction of a sensing target (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetDirection {
    pub elevation: f64,
    pub azimuth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    /// Alternating optimization over the movable-antenna lattice.
    Proposed,
    /// Fixed half-wavelength linear array.
    Fixed,
    /// Best `N` of a `2 x N` half-wavelength planar array.
    Selection,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::Fixed, Scheme::Selection];

    pub fn id(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Fixed => "fixed",
            Scheme::Selection => "selection",
        }
    }

    pub fn from_id(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.id() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Sensing SNR threshold, values in dB.
    SensingSnr,
    /// Tolerated outage probability.
    Outage,
    /// Normalized transmitter size `a`.
    NormalizedSize,
    /// Communication SINR threshold, values in dB.
    SinrThreshold,
}

impl SweepAxis {
    pub fn id(&self) -> &'static str {
        match self {
            SweepAxis::SensingSnr => "sensing_snr_db",
            SweepAxis::Outage => "outage",
            SweepAxis::NormalizedSize => "normalized_size",
            SweepAxis::SinrThreshold => "sinr_threshold_db",
        }
    }

    pub fn from_id(s: &str) -> Option<SweepAxis> {
        [
            SweepAxis::SensingSnr,
            SweepAxis::Outage,
            SweepAxis::NormalizedSize,
            SweepAxis::SinrThreshold,
        ]
        .into_iter()
        .find(|x| x.id() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    /// Values in the axis' display unit (dB for thresholds).
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

impl Profile {
    pub fn id(&self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }

    pub fn from_id(s: &str) -> Option<Profile> {
        match s {
            "desk" => Some(Profile::Desk),
            "paper" => Some(Profile::Paper),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub profile: Profile,
    /// `N`
    pub antennas: usize,
    /// `K`
    pub users: usize,
    /// One entry per target (`E`).
    pub targets: Vec<TargetDirection>,
    /// Hz; informational, the wavelength is used directly.
    pub carrier_frequency: f64,
    /// `lambda` (m)
    pub wavelength: f64,
    /// `a`
    pub normalized_size: f64,
    /// `d` (m)
    pub spacing: f64,
    /// `alpha`
    pub path_loss_exponent: f64,
    /// `L_0`, linear
    pub reference_loss: f64,
    /// `D_min` (m)
    pub min_distance: f64,
    /// `sigma_k^2` (W)
    pub noise: f64,
    /// `sigma_e^2` (W)
    pub target_noise: f64,
    /// `nu`
    pub outage: f64,
    /// `gamma^th`, linear
    pub sinr_threshold: f64,
    /// `Gamma^th`, linear
    pub snr_threshold: f64,
    /// `Omega_av` (m^2)
    pub rcs_mean: f64,
    /// `L_p`
    pub paths: usize,
    /// User distance range (m).
    pub user_distance: (f64, f64),
    /// Target range `Psi_e` (m).
    pub target_range: (f64, f64),
    pub beam_grid: BeamGridParams,
    /// Explicit `delta_d` (W^2); derived from `mse_factor` when absent.
    pub mse_cap: Option<f64>,
    /// `delta_d` as a multiple of the least-squares pattern MSE of the reference array.
    pub mse_factor: f64,
    pub seeds: Vec<u64>,
    pub sweep: Option<Sweep>,
    pub schemes: Vec<Scheme>,
    /// Monte Carlo RCS draws per committed design.
    pub samples: usize,
    pub ao: AOConfig,
    pub p1: P1Settings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::desk()
    }
}

impl ExperimentConfig {
    /// Small instances for routine runs: `N = 2`, `M = 16`, `K = 2`, `E = 1`.
    pub fn desk() -> Self {
        ExperimentConfig {
            profile: Profile::Desk,
            antennas: 2,
            users: 2,
            targets: alloc::vec![TargetDirection {
                elevation: 0.0,
                azimuth: 0.0
            }],
            carrier_frequency: 5e9,
            wavelength: 0.06,
            normalized_size: 0.5,
            spacing: 0.01,
            path_loss_exponent: 2.2,
            reference_loss: db_to_linear(-30.0),
            min_distance: 0.015,
            noise: dbm_to_watt(-80.0),
            target_noise: dbm_to_watt(-80.0),
            outage: 0.01,
            sinr_threshold: db_to_linear(10.0),
            snr_threshold: db_to_linear(10.0),
            rcs_mean: 1.0,
            paths: 8,
            user_distance: (10.0, 50.0),
            target_range: (10.0, 25.0),
            beam_grid: BeamGridParams {
                elevations: 31,
                azimuths: 31,
                half_width_elevation: deg_to_rad(10.0),
                half_width_azimuth: deg_to_rad(10.0),
            },
            mse_cap: None,
            mse_factor: 10.0,
            seeds: (0..20).collect(),
            sweep: None,
            schemes: Scheme::ALL.to_vec(),
            samples: 100_000,
            ao: AOConfig::default(),
            p1: P1Settings::default(),
        }
    }

    /// Full-size parameters: `N = 4`, `a = 2` (`M = 169`), two targets.
    pub fn paper() -> Self {
        ExperimentConfig {
            profile: Profile::Paper,
            antennas: 4,
            targets: alloc::vec![
                TargetDirection {
                    elevation: 0.0,
                    azimuth: 0.0
                },
                TargetDirection {
                    elevation: deg_to_rad(30.0),
                    azimuth: deg_to_rad(30.0)
                },
            ],
            normalized_size: 2.0,
            ..ExperimentConfig::desk()
        }
    }

    pub fn for_profile(p: Profile) -> Self {
        match p {
            Profile::Desk => ExperimentConfig::desk(),
            Profile::Paper => ExperimentConfig::paper(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("normalized_size", self.normalized_size),
            ("spacing", self.spacing),
            ("path_loss_exponent", self.path_loss_exponent),
            ("reference_loss", self.reference_loss),
            ("min_distance", self.min_distance),
            ("noise", self.noise),
            ("target_noise", self.target_noise),
            ("sinr_threshold", self.sinr_threshold),
            ("snr_threshold", self.snr_threshold),
            ("rcs_mean", self.rcs_mean),
            ("mse_factor", self.mse_factor),
            ("carrier_frequency", self.carrier_frequency),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, alloc::format!("must be positive, got {v}")));
            }
        }
        if self.antennas == 0 {
            return Err(Error::param("antennas", "at least one antenna is required"));
        }
        if self.users == 0 {
            return Err(Error::param("users", "at least one user is required"));
        }
        if self.paths == 0 {
            return Err(Error::param("paths", "at least one path is required"));
        }
        if !(self.outage > 0.0 && self.outage < 1.0) {
            return Err(Error::param("outage", "must lie strictly between 0 and 1"));
        }
        for (name, (lo, hi)) in [("user_distance", self.user_distance), ("target_range", self.target_range)] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::param(name, "range must satisfy 0 < min <= max"));
            }
        }
        if let Some(c) = self.mse_cap {
            if !(c > 0.0) {
                return Err(Error::param("mse_cap", "must be positive"));
            }
        }
        if self.beam_grid.elevations == 0 || self.beam_grid.azimuths == 0 {
            return Err(Error::param("beam_grid", "L and Q must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::param("schemes", "at least one scheme is required"));
        }
        if self.seeds.is_empty() {
            return Err(Error::param("seeds", "at least one seed is required"));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::param("sweep.values", "must not be empty"));
            }
            for &v in &s.values {
                self.with_axis(s.axis, v)?;
            }
        }
        self.ao.validate()
    }

    /// Copy with one sweep axis set to `value` (display units).
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match axis {
            SweepAxis::SensingSnr => c.snr_threshold = db_to_linear(value),
            SweepAxis::SinrThreshold => c.sinr_threshold = db_to_linear(value),
            SweepAxis::Outage => {
                if !(value > 0.0 && value < 1.0) {
                    return Err(Error::param("sweep.values", "outage values must lie in (0, 1)"));
                }
                c.outage = value
            }
            SweepAxis::NormalizedSize => {
                if !(value > 0.0) {
                    return Err(Error::param("sweep.values", "normalized sizes must be positive"));
                }
                c.normalized_size = value
            }
        }
        Ok(c)
    }

    /// Sweep points as `(name, value, config)`; a single point named `none` without a sweep.
    pub fn sweep_points(&self) -> Result<Vec<(String, f64, ExperimentConfig)>> {
        match &self.sweep {
            None => Ok(alloc::vec![(String::from("none"), 0.0, self.clone())]),
            Some(s) => s
                .values
                .iter()
                .map(|&v| Ok((String::from(s.axis.id()), v, self.with_axis(s.axis, v)?)))
                .collect(),
        }
    }

    /// Parameters used to derive `delta_d`: the most demanding SINR and
    /// sensing requirement over the sweep, so every sweep point shares one cap.
    pub fn calibration(&self) -> ExperimentConfig {
        let mut c = self.clone();
        if let Some(s) = &self.sweep {
            for &v in &s.values {
                match s.axis {
                    SweepAxis::SensingSnr => c.snr_threshold = c.snr_threshold.max(db_to_linear(v)),
                    SweepAxis::Outage => c.outage = c.outage.min(v),
                    SweepAxis::SinrThreshold => c.sinr_threshold = c.sinr_threshold.max(db_to_linear(v)),
                    SweepAxis::NormalizedSize => {}
                }
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate() {
        ExperimentConfig::desk().validate().unwrap();
        ExperimentConfig::paper().validate().unwrap();
        let mut c = ExperimentConfig::desk();
        c.outage = 1.0;
        assert!(c.validate().is_err());
        c.outage = 0.01;
        c.users = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn calibration_takes_the_hardest_point() {
        let mut c = ExperimentConfig::desk();
        c.sweep = Some(Sweep {
            axis: SweepAxis::SensingSnr,
            values: alloc::vec![0.0, 5.0, 15.0],
        });
        assert!((c.calibration().snr_threshold - db_to_linear(15.0)).abs() < 1e-9);
        let pts = c.sweep_points().unwrap();
        assert_eq!(pts.len(), 3);
        assert!((pts[1].2.snr_threshold - db_to_linear(5.0)).abs() < 1e-12);
    }
}
