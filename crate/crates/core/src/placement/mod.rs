//! Position subproblem and the alternating-optimization driver.
//!
//! Two formulations of the position subproblem are available:
//!
//! - [`P2Formulation::Lifted`] (default): with the beams fixed, every quantity
//!   the constraints need is a quadratic form in the selection vectors. At
//!   binary points `b_n[i] b_n[j] = delta_ij b_n[i]` and the cross products are
//!   the Glover variables, so the forms are linear in `(b, phi)`. The program is
//!   homogenized with a beam scale `s` (covariances `s W_k`, `s R`), which makes
//!   the power itself a decision variable, and tightened with a Gram LMI and
//!   product (RLT) cuts.
//! - [`P2Formulation::Schur`]: auxiliary matrices `F_k`, `Y`, `S_k`, `T_k`,
//!   `U`, `V`, Schur-complement LMIs and linearized trace penalties. Its
//!   objective is the constant power of the fixed beams plus penalties; the
//!   LMIs have dimension `2MN + N`, so it is only practical on small lattices.

mod ao;
mod glover;
mod p2;
mod schur;
mod taylor;

pub use ao::{ao_run, ao_run_with_starts, farthest_point_init, round_and_repair, AOTrace, AoIterate, AoOutcome, IterateStatus, P1Stats};
pub use glover::{emit_glover, glover_constraints, glover_satisfied, GloverLayout, GloverRow, GloverTerm};
pub use p2::{assemble_p2, p2_variables, solve_p2, P2_VARIABLE_LIMIT, FixedBeams, P2Handles, P2Program, P2Result};
pub use schur::{schur_block_value, schur_lmi_blocks, AuxiliaryBlocks};
pub use taylor::{
    binary_penalty, binary_penalty_expr, dc_exact, dc_linearized, dc_linearized_expr, gram_diagonal,
    linearized_binary_penalty,
};

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::conic::SolverSettings;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum P2Formulation {
    #[default]
    Lifted,
    Schur,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AOConfig {
    /// Initial penalty factors `tau_1..tau_4`, relative to the power of the initial placement.
    pub tau: [f64; 4],
    /// Factor applied to every `tau_i` after a non-binary or rejected position update.
    pub tau_growth: f64,
    /// Cap on `tau_i`, relative to the initial power.
    pub tau_max: f64,
    /// Relative objective change `epsilon_AO` that stops the iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Additional starts: the best screened placements (or seeded random
    /// ones when screening is off) run besides the best start.
    pub restarts: usize,
    /// Random feasible placements ranked by covariance-design power before
    /// the runs; 0 disables screening.
    pub screening: usize,
    pub seed: u64,
    /// Entries within this distance of 0 or 1 count as binary.
    pub rounding_tolerance: f64,
    /// Rounding candidates tried when the last position update is fractional.
    pub rounding_candidates: usize,
    pub formulation: P2Formulation,
    pub solver: SolverSettings,
}

impl Default for AOConfig {
    fn default() -> Self {
        AOConfig {
            tau: [0.05; 4],
            tau_growth: 2.0,
            tau_max: 1e6,
            tolerance: 1e-3,
            max_iterations: 30,
            restarts: 1,
            screening: 64,
            seed: 0,
            rounding_tolerance: 1e-3,
            rounding_candidates: 5,
            formulation: P2Formulation::Lifted,
            solver: SolverSettings::default(),
        }
    }
}

impl AOConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::param("tau", "penalty factors must be positive"));
        }
        if !(self.tau_growth >= 1.0) || !(self.tau_max > 0.0) {
            return Err(Error::param("tau_growth", "growth must be >= 1 and the cap positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        if !(self.rounding_tolerance > 0.0 && self.rounding_tolerance < 0.5) {
            return Err(Error::param("rounding_tolerance", "must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

/// Point `B^(t)`, `phi^(t)` at which the penalties and trace bounds are linearized.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationPoint {
    /// `N` rows of `M` selection weights.
    pub b: Vec<Vec<f64>>,
    /// Products over ordered antenna pairs, laid out by [`GloverLayout`].
    pub phi: Vec<f64>,
}

impl LinearizationPoint {
    pub fn binary(candidates: usize, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= candidates) {
            return Err(Error::param("indices", alloc::format!("candidate {bad} out of range")));
        }
        let b = indices
            .iter()
            .map(|&i| {
                let mut r = alloc::vec![0.0; candidates];
                r[i] = 1.0;
                r
            })
            .collect();
        let phi = GloverLayout::new(indices.len(), candidates).binary_phi(indices);
        Ok(LinearizationPoint { b, phi })
    }

    pub fn antennas(&self) -> usize {
        self.b.len()
    }

    pub fn candidates(&self) -> usize {
        self.b.first().map_or(0, |r| r.len())
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.candidates();
        let layout = GloverLayout::new(self.antennas(), m);
        if self.b.iter().any(|r| r.len() != m) || self.phi.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                context: "linearization point",
                expected: layout.len(),
                actual: self.phi.len(),
            });
        }
        let bad = |v: &f64| !(*v >= -1e-9 && *v <= 1.0 + 1e-9);
        if self.b.iter().flatten().any(bad) || self.phi.iter().any(bad) {
            return Err(Error::param("linearization point", "entries must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Block selection matrix `B^(t)` (`MN x N`).
    pub fn block_matrix(&self) -> DMatrix<f64> {
        let (n, m) = (self.antennas(), self.candidates());
        let mut b = DMatrix::zeros(m * n, n);
        for (a, row) in self.b.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                b[(a * m + i, a)] = v;
            }
        }
        b
    }

    /// Largest distance of any selection entry from {0, 1}.
    pub fn binary_deviation(&self) -> f64 {
        self.b.iter().flatten().map(|&v| v.min(1.0 - v).max(0.0)).fold(0.0, f64::max)
    }
}
