//! Joint movable-antenna placement and communication/sensing beamforming for
//! transmit-power minimization in integrated sensing and communication (ISAC)
//! systems, with a chance constraint on the sensing SNR under an exponentially
//! distributed (Swerling-I) radar cross-section.
//!
//! The crate is `no_std` (with `alloc`): it carries the models, the conic
//! program representation and interior-point backend, the alternating
//! optimization driver and the evaluation routines. File formats, the
//! command line and parallel orchestration live in the `maisac` crate.
//!
//! Module map:
//!
//! - [`geometry`]: candidate lattice, distance matrix, selection vectors.
//! - [`channel`]: multipath user channels and field-response vectors.
//! - [`sensing`]: ideal beampattern, pattern MSE, chance-constraint threshold.
//! - [`conic`]: solver-agnostic conic programs and the dense interior-point backend.
//! - [`beamforming`]: the covariance-design subproblem for a fixed placement.
//! - [`placement`]: the position subproblem and the alternating driver.
//! - [`evaluation`]: baselines, exhaustive oracle, Monte Carlo outage, sweeps.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod beamforming;
pub mod channel;
pub mod config;
pub mod conic;
mod error;
pub mod evaluation;
pub mod geometry;
pub mod linalg;
pub mod placement;
pub mod scenario;
pub mod sensing;
pub mod units;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
