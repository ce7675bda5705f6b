//! Multipath user channels over the candidate positions.
//!
//! Each user sees `L_p` far-field paths. Path `l` carries a complex Gaussian
//! weight with variance `L_0 * D^-alpha` and departs at elevation `theta`,
//! azimuth `phi`. The channel at position `p` is the weight-sum of the
//! per-path phase factors `exp(j 2pi/lambda (x cos(theta) sin(phi) + y sin(theta)))`,
//! with phases referenced to the lattice origin.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{GridSpec, Placement, Point};
use crate::{Error, Result, C64};

/// Draws one departure direction `(theta, phi)`.
///
/// `phi` is uniform on `[-pi/2, pi/2]`; `theta = asin(2u - 1)` has density
/// `cos(theta) / 2`, so the pair has joint density `cos(theta) / (2 pi)`.
pub fn sample_aod<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    aod_from_uniforms(u, v)
}

/// Deterministic map from two uniforms in `[0, 1]` to `(theta, phi)`.
pub fn aod_from_uniforms(u: f64, v: f64) -> (f64, f64) {
    let theta = Float::asin((2.0 * u - 1.0).clamp(-1.0, 1.0));
    let phi = -FRAC_PI_2 + PI * v;
    (theta, phi)
}

/// Phase of a plane wave at `p` relative to the origin.
#[inline]
pub fn phase(p: Point, wavelength: f64, theta: f64, phi: f64) -> f64 {
    let k = 2.0 * PI / wavelength;
    k * (p[0] * Float::cos(theta) * Float::sin(phi) + p[1] * Float::sin(theta))
}

/// Field response over arbitrary positions.
pub fn field_response_at(positions: &[Point], wavelength: f64, theta: f64, phi: f64) -> Vec<C64> {
    positions
        .iter()
        .map(|&p| C64::from_polar(1.0, phase(p, wavelength, theta, phi)))
        .collect()
}

/// Field response over every candidate of the lattice.
pub fn field_response(grid: &GridSpec, theta: f64, phi: f64) -> Vec<C64> {
    field_response_at(grid.positions(), grid.wavelength(), theta, phi)
}

/// Path parameters of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPaths {
    pub weights: Vec<C64>,
    pub elevations: Vec<f64>,
    pub azimuths: Vec<f64>,
    pub distances: Vec<f64>,
}

impl UserPaths {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `sum_l sigma_l * exp(j rho_l(p))`.
    pub fn response(&self, p: Point, wavelength: f64) -> C64 {
        let mut h = C64::new(0.0, 0.0);
        for l in 0..self.len() {
            let rho = phase(p, wavelength, self.elevations[l], self.azimuths[l]);
            h += self.weights[l] * C64::from_polar(1.0, rho);
        }
        h
    }
}

/// Multipath parameters of all users.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub users: Vec<UserPaths>,
    pub reference_loss: f64,
    pub exponent: f64,
    pub wavelength: f64,
}

impl PathSet {
    pub fn users(&self) -> usize {
        self.users.len()
    }

    pub fn paths(&self) -> usize {
        self.users.first().map_or(0, |u| u.len())
    }

    /// `K x P` channel matrix at arbitrary positions.
    pub fn channel_at(&self, positions: &[Point]) -> DMatrix<C64> {
        DMatrix::from_fn(self.users(), positions.len(), |k, m| {
            self.users[k].response(positions[m], self.wavelength)
        })
    }
}

/// Generation parameters shared by all users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub users: usize,
    pub paths: usize,
    pub reference_loss: f64,
    pub exponent: f64,
}

/// Per-candidate user channels `H_hat`, stored as one `K x M` block shared by
/// all antennas, plus the per-user noise variances and SINR targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    block: DMatrix<C64>,
    antennas: usize,
    noise: Vec<f64>,
    sinr_threshold: Vec<f64>,
}

impl ChannelMatrix {
    pub fn new(block: DMatrix<C64>, antennas: usize, noise: Vec<f64>, sinr_threshold: Vec<f64>) -> Result<Self> {
        let k = block.nrows();
        if k == 0 {
            return Err(Error::param("users", "at least one user is required"));
        }
        if antennas == 0 {
            return Err(Error::param("antennas", "at least one antenna is required"));
        }
        for (ctx, len) in [("noise variances", noise.len()), ("sinr thresholds", sinr_threshold.len())] {
            if len != k {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: k,
                    actual: len,
                });
            }
        }
        if block.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalFailure("non-finite channel entry".into()));
        }
        if noise.iter().chain(sinr_threshold.iter()).any(|&v| !(v > 0.0)) {
            return Err(Error::param("noise/sinr", "noise variances and SINR thresholds must be positive"));
        }
        Ok(ChannelMatrix {
            block,
            antennas,
            noise,
            sinr_threshold,
        })
    }

    pub fn users(&self) -> usize {
        self.block.nrows()
    }

    pub fn candidates(&self) -> usize {
        self.block.ncols()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// The shared `K x M` block `H_hat_n`.
    pub fn block(&self) -> &DMatrix<C64> {
        &self.block
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn sinr_threshold(&self) -> &[f64] {
        &self.sinr_threshold
    }

    /// Full `K x MN` matrix `[H_hat_1, ..., H_hat_N]`.
    pub fn full(&self) -> DMatrix<C64> {
        let (k, m) = self.block.shape();
        let mut out = DMatrix::zeros(k, m * self.antennas);
        for n in 0..self.antennas {
            out.view_mut((0, n * m), (k, m)).copy_from(&self.block);
        }
        out
    }

    /// Channel of user `k` at the antenna positions selected by a binary placement.
    pub fn user_at(&self, k: usize, indices: &[usize]) -> Vec<C64> {
        indices.iter().map(|&m| self.block[(k, m)]).collect()
    }

    /// Same channel with replaced thresholds.
    pub fn with_sinr_threshold(&self, sinr_threshold: Vec<f64>) -> Result<Self> {
        ChannelMatrix::new(self.block.clone(), self.antennas, self.noise.clone(), sinr_threshold)
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = Float::sqrt(variance / 2.0);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// Draws a path set for `params.users` users at the given distances.
///
/// Every path of user `k` uses the user distance as its scatterer distance.
pub fn sample_paths<R: Rng + ?Sized>(
    params: &ChannelParams,
    wavelength: f64,
    user_distances: &[f64],
    rng: &mut R,
) -> Result<PathSet> {
    if params.users == 0 {
        return Err(Error::param("users", "at least one user is required"));
    }
    if params.paths == 0 {
        return Err(Error::param("paths", "at least one path is required"));
    }
    if user_distances.len() != params.users {
        return Err(Error::DimensionMismatch {
            context: "user distances",
            expected: params.users,
            actual: user_distances.len(),
        });
    }
    if let Some(d) = user_distances.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::param("user_distances", format!("must be positive, got {d}")));
    }
    if !(params.reference_loss > 0.0) {
        return Err(Error::param("reference_loss", "must be positive"));
    }
    let mut users = Vec::with_capacity(params.users);
    for &dist in user_distances {
        let variance = params.reference_loss * Float::powf(dist, -params.exponent);
        let mut up = UserPaths {
            weights: Vec::with_capacity(params.paths),
            elevations: Vec::with_capacity(params.paths),
            azimuths: Vec::with_capacity(params.paths),
            distances: Vec::with_capacity(params.paths),
        };
        for _ in 0..params.paths {
            let (theta, phi) = sample_aod(rng);
            up.elevations.push(theta);
            up.azimuths.push(phi);
            up.weights.push(complex_gaussian(rng, variance));
            up.distances.push(dist);
        }
        users.push(up);
    }
    Ok(PathSet {
        users,
        reference_loss: params.reference_loss,
        exponent: params.exponent,
        wavelength,
    })
}

/// Draws paths and evaluates them over the lattice.
pub fn generate_channels<R: Rng + ?Sized>(
    grid: &GridSpec,
    params: &ChannelParams,
    antennas: usize,
    user_distances: &[f64],
    noise: Vec<f64>,
    sinr_threshold: Vec<f64>,
    rng: &mut R,
) -> Result<(PathSet, ChannelMatrix)> {
    let paths = sample_paths(params, grid.wavelength(), user_distances, rng)?;
    let block = paths.channel_at(grid.positions());
    let ch = ChannelMatrix::new(block, antennas, noise, sinr_threshold)?;
    Ok((paths, ch))
}

/// Effective channel `H = H_hat B` (`K x N`).
pub fn effective_channel(h_hat: &DMatrix<C64>, b: &DMatrix<f64>) -> Result<DMatrix<C64>> {
    if h_hat.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch {
            context: "effective channel",
            expected: h_hat.ncols(),
            actual: b.nrows(),
        });
    }
    let bc = b.map(|x| C64::new(x, 0.0));
    Ok(h_hat * bc)
}

/// Effective channel of a placement, using the shared block directly.
pub fn effective_channel_of(ch: &ChannelMatrix, p: &Placement) -> Result<DMatrix<C64>> {
    if p.candidates() != ch.candidates() {
        return Err(Error::DimensionMismatch {
            context: "placement vs channel candidates",
            expected: ch.candidates(),
            actual: p.candidates(),
        });
    }
    let k = ch.users();
    let mut h = DMatrix::zeros(k, p.antennas());
    for (n, v) in p.vectors().iter().enumerate() {
        for (m, &bm) in v.as_slice().iter().enumerate() {
            if bm != 0.0 {
                for u in 0..k {
                    h[(u, n)] += ch.block()[(u, m)] * bm;
                }
            }
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn aod_endpoints() {
        assert_eq!(aod_from_uniforms(0.5, 0.5), (0.0, 0.0));
        assert_relative_eq!(aod_from_uniforms(1.0, 0.0).0, FRAC_PI_2);
        assert_relative_eq!(aod_from_uniforms(0.0, 1.0).1, FRAC_PI_2);
    }

    #[test]
    fn broadside_response_is_all_ones() {
        let g = build_grid(1.0, 0.01, 0.06).unwrap();
        for z in field_response(&g, 0.0, 0.0) {
            assert_eq!(z, C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn half_wavelength_offset_flips_sign() {
        let lambda = 0.06;
        let r = field_response_at(&[[0.0, 0.0], [lambda / 2.0, 0.0]], lambda, 0.0, FRAC_PI_2);
        assert!((r[1] - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn variance_example() {
        let v: f64 = 1e-3 * 10f64.powf(-2.2);
        assert_relative_eq!(v, 6.3096e-6, max_relative = 1e-4);
    }

    #[test]
    fn single_unit_path_reproduces_frv() {
        let g = build_grid(0.5, 0.01, 0.06).unwrap();
        let up = UserPaths {
            weights: alloc::vec![C64::new(1.0, 0.0)],
            elevations: alloc::vec![0.3],
            azimuths: alloc::vec![-0.7],
            distances: alloc::vec![10.0],
        };
        let ps = PathSet {
            users: alloc::vec![up],
            reference_loss: 1e-3,
            exponent: 2.2,
            wavelength: 0.06,
        };
        let h = ps.channel_at(g.positions());
        let frv = field_response(&g, 0.3, -0.7);
        for m in 0..g.len() {
            assert_eq!(h[(0, m)], frv[m]);
        }
    }

    #[test]
    fn same_seed_same_channels() {
        let g = build_grid(0.5, 0.01, 0.06).unwrap();
        let params = ChannelParams {
            users: 2,
            paths: 8,
            reference_loss: 1e-3,
            exponent: 2.2,
        };
        let mk = || {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            generate_channels(&g, &params, 2, &[12.0, 30.0], alloc::vec![1e-11; 2], alloc::vec![10.0; 2], &mut rng).unwrap()
        };
        assert_eq!(mk(), mk());
    }

    #[test]
    fn rejects_bad_distance() {
        let params = ChannelParams {
            users: 1,
            paths: 1,
            reference_loss: 1e-3,
            exponent: 2.2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_paths(&params, 0.06, &[0.0], &mut rng).is_err());
    }
}
