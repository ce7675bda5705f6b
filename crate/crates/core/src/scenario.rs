//! One channel realization with everything the subproblems need: lattice,
//! distances, user paths and channels, targets and their thresholds, and the
//! beam grid. Candidate-level steering vectors are cached.

use alloc::vec::Vec;

use crate::beamforming::{ArrayResponse, P1Problem, SensingQos};
use crate::channel::{field_response_at, ChannelMatrix, PathSet};
use crate::geometry::{distance_matrix, DistanceMatrix, GridSpec, Placement, Point};
use crate::sensing::{chance_threshold, BeamGrid, TargetSpec};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: GridSpec,
    pub distances: DistanceMatrix,
    pub min_distance: f64,
    pub antennas: usize,
    pub paths: PathSet,
    pub channel: ChannelMatrix,
    pub targets: TargetSpec,
    pub reference_loss: f64,
    /// Deterministic pattern thresholds, one per target (watts).
    pub chance: Vec<f64>,
    pub beams: Option<BeamGrid>,
    target_steering: Vec<Vec<C64>>,
    grid_steering: Vec<Vec<C64>>,
    ideal: Vec<f64>,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: GridSpec,
        min_distance: f64,
        antennas: usize,
        paths: PathSet,
        noise: Vec<f64>,
        sinr: Vec<f64>,
        targets: TargetSpec,
        beams: Option<BeamGrid>,
    ) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::param("antennas", "at least one antenna is required"));
        }
        if antennas > grid.len() {
            return Err(Error::param("antennas", "more antennas than candidate positions"));
        }
        let channel = ChannelMatrix::new(paths.channel_at(grid.positions()), antennas, noise, sinr)?;
        let reference_loss = paths.reference_loss;
        let chance = targets
            .targets
            .iter()
            .map(|t| chance_threshold(t, targets.rcs_mean, targets.outage, reference_loss))
            .collect::<Result<Vec<_>>>()?;
        let lambda = grid.wavelength();
        let target_steering = targets
            .targets
            .iter()
            .map(|t| field_response_at(grid.positions(), lambda, t.elevation, t.azimuth))
            .collect();
        let (grid_steering, ideal) = match &beams {
            Some(b) => (b.steering(grid.positions(), lambda), b.ideal_values()),
            None => (Vec::new(), Vec::new()),
        };
        Ok(Scenario {
            distances: distance_matrix(&grid),
            grid,
            min_distance,
            antennas,
            paths,
            channel,
            targets,
            reference_loss,
            chance,
            beams,
            target_steering,
            grid_steering,
            ideal,
        })
    }

    /// Same realization over another lattice (same wavelength).
    pub fn with_grid(&self, grid: GridSpec) -> Result<Self> {
        Scenario::new(
            grid,
            self.min_distance,
            self.antennas,
            self.paths.clone(),
            self.channel.noise().to_vec(),
            self.channel.sinr_threshold().to_vec(),
            self.targets.clone(),
            self.beams.clone(),
        )
    }

    pub fn candidates(&self) -> usize {
        self.grid.len()
    }

    pub fn users(&self) -> usize {
        self.channel.users()
    }

    /// Target steering vectors over all candidates (`E x M`).
    pub fn target_steering(&self) -> &[Vec<C64>] {
        &self.target_steering
    }

    /// Beam-grid steering vectors over all candidates (`LQ x M`), empty without a pattern.
    pub fn grid_steering(&self) -> &[Vec<C64>] {
        &self.grid_steering
    }

    pub fn ideal(&self) -> &[f64] {
        &self.ideal
    }

    pub fn mse_cap(&self) -> Option<f64> {
        self.beams.as_ref().map(|b| b.mse_cap).filter(|_| !self.targets.is_empty())
    }

    fn problem(&self, response: ArrayResponse) -> P1Problem {
        P1Problem {
            response,
            noise: self.channel.noise().to_vec(),
            sinr: self.channel.sinr_threshold().to_vec(),
            sensing: SensingQos {
                chance: self.chance.clone(),
                ideal: self.ideal.clone(),
                mse_cap: self.mse_cap(),
            },
        }
    }

    /// Covariance-design instance for antennas on the given candidates.
    pub fn problem_at_indices(&self, indices: &[usize]) -> Result<P1Problem> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.candidates()) {
            return Err(Error::param("placement", alloc::format!("candidate {bad} out of range")));
        }
        let pick = |v: &Vec<C64>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let block = self.channel.block();
        let users = nalgebra::DMatrix::from_fn(self.users(), indices.len(), |k, n| block[(k, indices[n])]);
        let grid = if self.mse_cap().is_some() {
            self.grid_steering.iter().map(pick).collect()
        } else {
            Vec::new()
        };
        Ok(self.problem(ArrayResponse {
            users,
            targets: self.target_steering.iter().map(pick).collect(),
            grid,
        }))
    }

    /// Instance for a (possibly relaxed) placement over the lattice.
    pub fn problem_at(&self, placement: &Placement) -> Result<P1Problem> {
        if let Some(idx) = placement.indices() {
            return self.problem_at_indices(&idx);
        }
        let beams = self.beams.as_ref().filter(|_| self.mse_cap().is_some());
        let resp = ArrayResponse::from_placement(
            &self.channel,
            self.grid.positions(),
            self.grid.wavelength(),
            placement,
            &self.targets.targets,
            beams,
        )?;
        Ok(self.problem(resp))
    }

    /// Instance for antennas at arbitrary positions (fixed arrays).
    pub fn problem_at_positions(&self, positions: &[Point]) -> P1Problem {
        let beams = self.beams.as_ref().filter(|_| self.mse_cap().is_some());
        self.problem(ArrayResponse::at_positions(&self.paths, positions, &self.targets.targets, beams))
    }
}
