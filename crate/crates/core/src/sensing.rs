//! Sensing side: ideal beampattern, pattern MSE, the Swerling-I chance
//! constraint and its deterministic threshold.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::channel::field_response_at;
use crate::geometry::Point;
use crate::linalg::quad_form;
use crate::{Error, Result, C64};

/// Angular slack used when testing grid points against beam boxes.
const ANGLE_EPS: f64 = 1e-9;

/// One point target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub elevation: f64,
    pub azimuth: f64,
    /// Range `Psi_e` in meters.
    pub range: f64,
    /// Linear SNR threshold `Gamma_e^th`.
    pub snr_threshold: f64,
    /// Echo noise variance in watts.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub targets: Vec<Target>,
    /// Mean RCS `Omega_av` in m^2.
    pub rcs_mean: f64,
    /// Tolerated outage probability `nu`.
    pub outage: f64,
}

impl TargetSpec {
    pub fn new(targets: Vec<Target>, rcs_mean: f64, outage: f64) -> Result<Self> {
        if !(outage > 0.0 && outage < 1.0) {
            return Err(Error::param("outage", "must lie strictly between 0 and 1"));
        }
        if !(rcs_mean > 0.0) {
            return Err(Error::param("rcs_mean", "must be positive"));
        }
        for t in &targets {
            if !(t.range > 0.0) || !(t.snr_threshold > 0.0) || !(t.noise > 0.0) {
                return Err(Error::param("target", "range, SNR threshold and noise must be positive"));
            }
        }
        Ok(TargetSpec {
            targets,
            rcs_mean,
            outage,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Angular sampling and beam half-widths of the ideal pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGridParams {
    pub elevations: usize,
    pub azimuths: usize,
    pub half_width_elevation: f64,
    pub half_width_azimuth: f64,
}

/// Sampled angle grid with its ideal pattern and MSE cap.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGrid {
    pub elevations: Vec<f64>,
    pub azimuths: Vec<f64>,
    /// `L x Q` matrix of zeros and ones.
    pub pattern: DMatrix<f64>,
    /// Cap `delta_d` on the pattern MSE.
    pub mse_cap: f64,
}

/// `n` uniform samples over `[-pi/2, pi/2]`; a single sample sits at 0.
pub fn uniform_angles(n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![0.0];
    }
    (0..n)
        .map(|i| -FRAC_PI_2 + PI * i as f64 / (n - 1) as f64)
        .collect()
}

fn in_box(theta: f64, phi: f64, t: &Target, dt: f64, dp: f64) -> bool {
    Float::abs(theta - t.elevation) <= dt + ANGLE_EPS && Float::abs(phi - t.azimuth) <= dp + ANGLE_EPS
}

/// Ideal pattern: one inside the union of the per-target beam boxes, zero elsewhere.
pub fn ideal_pattern(params: &BeamGridParams, targets: &[Target]) -> Result<DMatrix<f64>> {
    if params.elevations == 0 || params.azimuths == 0 {
        return Err(Error::param("beam grid", "L and Q must be at least 1"));
    }
    if params.half_width_elevation < 0.0 || params.half_width_azimuth < 0.0 {
        return Err(Error::param("beam grid", "half-widths must be non-negative"));
    }
    let el = uniform_angles(params.elevations);
    let az = uniform_angles(params.azimuths);
    Ok(DMatrix::from_fn(el.len(), az.len(), |l, q| {
        let hit = targets
            .iter()
            .any(|t| in_box(el[l], az[q], t, params.half_width_elevation, params.half_width_azimuth));
        if hit { 1.0 } else { 0.0 }
    }))
}

impl BeamGrid {
    pub fn new(params: &BeamGridParams, targets: &[Target], mse_cap: f64) -> Result<Self> {
        let pattern = ideal_pattern(params, targets)?;
        Ok(BeamGrid {
            elevations: uniform_angles(params.elevations),
            azimuths: uniform_angles(params.azimuths),
            pattern,
            mse_cap,
        })
    }

    pub fn points(&self) -> usize {
        self.elevations.len() * self.azimuths.len()
    }

    /// Grid points in row-major `(l, q)` order with their ideal values.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.elevations.iter().enumerate().flat_map(move |(l, &th)| {
            self.azimuths
                .iter()
                .enumerate()
                .map(move |(q, &ph)| (th, ph, self.pattern[(l, q)]))
        })
    }

    /// Steering vectors at every grid point for the given antenna positions.
    pub fn steering(&self, positions: &[Point], wavelength: f64) -> Vec<Vec<C64>> {
        self.samples()
            .map(|(th, ph, _)| field_response_at(positions, wavelength, th, ph))
            .collect()
    }

    pub fn ideal_values(&self) -> Vec<f64> {
        self.samples().map(|s| s.2).collect()
    }
}

/// `a^H C a` for a transmit covariance `C` (either `sum F_k + Y` over all
/// candidates with the concatenated response, or `R_x` with the steering vector).
pub fn beampattern_value(a: &[C64], covariance: &DMatrix<C64>) -> Result<f64> {
    if covariance.nrows() != a.len() || covariance.ncols() != a.len() {
        return Err(Error::DimensionMismatch {
            context: "beampattern covariance",
            expected: a.len(),
            actual: covariance.nrows(),
        });
    }
    Ok(quad_form(a, covariance))
}

/// Mean over the grid of `|rho0 * D - a^H C a|^2`; `steering` is row-major `(l, q)`.
pub fn beampattern_mse(rho0: f64, pattern: &DMatrix<f64>, steering: &[Vec<C64>], covariance: &DMatrix<C64>) -> Result<f64> {
    let (l, q) = pattern.shape();
    if steering.len() != l * q {
        return Err(Error::DimensionMismatch {
            context: "steering table",
            expected: l * q,
            actual: steering.len(),
        });
    }
    let mut acc = 0.0;
    for li in 0..l {
        for qi in 0..q {
            let v = beampattern_value(&steering[li * q + qi], covariance)?;
            let r = rho0 * pattern[(li, qi)] - v;
            acc += r * r;
        }
    }
    Ok(acc / (l * q) as f64)
}

/// Same as [`beampattern_mse`] with the ideal pattern flattened row-major.
pub fn beampattern_mse_flat(rho0: f64, ideal: &[f64], steering: &[Vec<C64>], covariance: &DMatrix<C64>) -> Result<f64> {
    if steering.len() != ideal.len() || ideal.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "steering table",
            expected: ideal.len(),
            actual: steering.len(),
        });
    }
    let mut acc = 0.0;
    for (a, &d) in steering.iter().zip(ideal) {
        let r = rho0 * d - beampattern_value(a, covariance)?;
        acc += r * r;
    }
    Ok(acc / ideal.len() as f64)
}

/// `16 pi Psi^4 sigma^2 Gamma^th / L_0^2`, the RCS-pattern product needed for `Gamma = Gamma^th`.
fn snr_scale(t: &Target, reference_loss: f64) -> f64 {
    16.0 * PI * Float::powi(t.range, 4) * t.noise * t.snr_threshold / (reference_loss * reference_loss)
}

/// Minimum pattern value at the target such that `Pr{Gamma <= Gamma^th} <= nu`.
pub fn chance_threshold(t: &Target, rcs_mean: f64, outage: f64, reference_loss: f64) -> Result<f64> {
    if !(outage > 0.0 && outage < 1.0) {
        return Err(Error::param("outage", "must lie strictly between 0 and 1"));
    }
    Ok(-snr_scale(t, reference_loss) / (Float::ln(1.0 - outage) * rcs_mean))
}

/// Sensing SNR `Omega L_0^2 value / (16 pi Psi^4 sigma^2)`.
pub fn sensing_snr(rcs: f64, reference_loss: f64, t: &Target, value: f64) -> f64 {
    rcs * reference_loss * reference_loss * value / (16.0 * PI * Float::powi(t.range, 4) * t.noise)
}

/// RCS value at which the SNR equals its threshold for a given pattern value.
pub fn critical_rcs(t: &Target, reference_loss: f64, value: f64) -> f64 {
    snr_scale(t, reference_loss) / value
}

/// Closed-form outage `1 - exp(-c / Omega_av)`.
pub fn outage_closed_form(t: &Target, rcs_mean: f64, reference_loss: f64, value: f64) -> f64 {
    if value <= 0.0 {
        return 1.0;
    }
    -Float::exp_m1(-critical_rcs(t, reference_loss, value) / rcs_mean)
}

/// Exponential RCS draw with mean `rcs_mean`.
pub fn sample_rcs<R: Rng + ?Sized>(rcs_mean: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    rcs_mean * e
}
