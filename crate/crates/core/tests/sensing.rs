use maisac_core::channel::field_response_at;
use maisac_core::geometry::Point;
use maisac_core::sensing::{
    beampattern_mse, beampattern_value, chance_threshold, ideal_pattern, outage_closed_form, sample_rcs, sensing_snr,
    BeamGrid, BeamGridParams, Target,
};
use maisac_core::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn target(el_deg: f64, az_deg: f64) -> Target {
    Target {
        elevation: el_deg.to_radians(),
        azimuth: az_deg.to_radians(),
        range: 10.0,
        snr_threshold: 10.0,
        noise: 1e-11,
    }
}

fn params(n: usize, half_deg: f64) -> BeamGridParams {
    BeamGridParams {
        elevations: n,
        azimuths: n,
        half_width_elevation: half_deg.to_radians(),
        half_width_azimuth: half_deg.to_radians(),
    }
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, rank, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    &g * g.adjoint()
}

fn positions() -> Vec<Point> {
    vec![[0.0, 0.0], [0.01, 0.0], [0.0, 0.01], [0.02, 0.02]]
}

#[test]
fn pattern_fraction_matches_box_count() {
    // 61 samples over [-90, 90] degrees: 3 degree steps
    let ts = [target(0.0, 0.0), target(30.0, 30.0), target(-45.0, 12.0)];
    let p = params(61, 7.0);
    let d = ideal_pattern(&p, &ts).unwrap();
    let mut count = 0;
    for l in 0..61 {
        for q in 0..61 {
            let (el, az) = (-90.0 + 3.0 * l as f64, -90.0 + 3.0 * q as f64);
            let inside = ts.iter().any(|t| {
                (el - t.elevation.to_degrees()).abs() <= 7.0 + 1e-7 && (az - t.azimuth.to_degrees()).abs() <= 7.0 + 1e-7
            });
            count += inside as usize;
        }
    }
    assert!(count > 0);
    assert_eq!(d.sum() / 3721.0, count as f64 / 3721.0);
}

#[test]
fn value_is_trace_of_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pos = positions();
    for _ in 0..50 {
        let c = random_psd(&mut rng, 4, 2);
        let a = field_response_at(&pos, 0.06, rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let av = nalgebra::DVector::from_vec(a.clone());
        let tr = (&c * &av * av.adjoint()).trace().re;
        let v = beampattern_value(&a, &c).unwrap();
        assert!((v - tr).abs() <= 1e-10 * tr.abs());
    }
}

#[test]
fn mse_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = BeamGrid::new(&params(9, 20.0), &[target(0.0, 0.0), target(40.0, -20.0)], 1.0).unwrap();
    let pos = positions();
    let st = g.steering(&pos, 0.06);
    let c = random_psd(&mut rng, 4, 3);
    let rho0 = 0.7;
    let mut acc = 0.0;
    for (l, &el) in g.elevations.iter().enumerate() {
        for (q, &az) in g.azimuths.iter().enumerate() {
            let a = field_response_at(&pos, 0.06, el, az);
            let mut v = C64::new(0.0, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    v += a[i].conj() * c[(i, j)] * a[j];
                }
            }
            let r = rho0 * g.pattern[(l, q)] - v.re;
            acc += r * r;
        }
    }
    let expect = acc / 81.0;
    let got = beampattern_mse(rho0, &g.pattern, &st, &c).unwrap();
    assert!((got - expect).abs() <= 1e-10 * expect);
}

#[test]
fn threshold_at_table_values() {
    let t = target(0.0, 0.0);
    let thr = chance_threshold(&t, 1.0, 0.01, 1e-3).unwrap();
    // -ln(0.99) from its alternating-free series sum_k 0.01^k / k
    let mut log = 0.0;
    let mut pow = 1.0;
    for k in 1..30 {
        pow *= 0.01;
        log += pow / k as f64;
    }
    let expect = 16.0 * PI * 1e-6 / (log * 1e-6);
    assert!((thr / expect - 1.0).abs() < 1e-14, "{thr} vs {expect}");
    // monotone decreasing in the outage
    let mut prev = f64::INFINITY;
    for nu in [1e-6, 1e-4, 1e-2, 0.1, 0.5] {
        let v = chance_threshold(&t, 1.0, nu, 1e-3).unwrap();
        assert!(v < prev);
        prev = v;
    }
}

#[test]
fn snr_matches_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let t = Target {
            elevation: 0.0,
            azimuth: 0.0,
            range: rng.random_range(1.0..100.0),
            snr_threshold: 10.0,
            noise: rng.random_range(1e-13..1e-9),
        };
        let (rcs, l0, v) = (rng.random_range(0.0..5.0), rng.random_range(1e-4..1e-2), rng.random_range(0.0..1e5));
        let expect = rcs * l0 * l0 * v / (16.0 * PI * t.range.powi(4) * t.noise);
        let got = sensing_snr(rcs, l0, &t, v);
        assert!((got - expect).abs() <= 1e-12 * expect.abs().max(f64::MIN_POSITIVE));
    }
}

#[test]
fn rcs_draws_have_the_configured_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 1_000_000;
    let mut sum = 0.0;
    let mut below = 0usize;
    for _ in 0..n {
        let w = sample_rcs(1.0, &mut rng);
        sum += w;
        below += (w <= 2f64.ln()) as usize;
    }
    assert!((sum / n as f64 - 1.0).abs() < 0.01);
    assert!((below as f64 / n as f64 - 0.5).abs() < 0.01);
}

#[test]
fn empirical_outage_matches_closed_form() {
    let t = target(0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let samples = 100_000;
    for value in [3e4, 9e4, 4e5] {
        let p = outage_closed_form(&t, 1.0, 1e-3, value);
        let hits = (0..samples)
            .filter(|_| sensing_snr(sample_rcs(1.0, &mut rng), 1e-3, &t, value) <= t.snr_threshold)
            .count();
        let emp = hits as f64 / samples as f64;
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        assert!((emp - p).abs() <= 3.0 * se, "value {value}: {emp} vs {p}");
    }
}

proptest! {
    #[test]
    fn value_is_monotone_under_psd_increments(seed in any::<u64>(), th in -1.5f64..1.5, ph in -1.5f64..1.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_psd(&mut rng, 4, 2);
        let inc = random_psd(&mut rng, 4, 1);
        let a = field_response_at(&positions(), 0.06, th, ph);
        let v0 = beampattern_value(&a, &c).unwrap();
        let v1 = beampattern_value(&a, &(&c + inc)).unwrap();
        prop_assert!(v1 >= v0 - 1e-12 * v0.abs());
    }

    #[test]
    fn mse_is_zero_only_on_the_scaled_pattern(seed in any::<u64>(), rho0 in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = BeamGrid::new(&params(7, 15.0), &[target(0.0, 0.0)], 1.0).unwrap();
        let st = g.steering(&positions(), 0.06);
        let c = random_psd(&mut rng, 4, 2);
        let m = beampattern_mse(rho0, &g.pattern, &st, &c).unwrap();
        prop_assert!(m > 0.0);
        // a single-element array with C = rho0 reproduces rho0 everywhere: exact on an all-ones pattern
        let ones = DMatrix::from_element(7, 7, 1.0);
        let one_pos = g.steering(&[[0.0, 0.0]], 0.06);
        let exact = DMatrix::from_element(1, 1, C64::new(rho0, 0.0));
        prop_assert_eq!(beampattern_mse(rho0, &ones, &one_pos, &exact).unwrap(), 0.0);
    }

    #[test]
    fn pattern_is_union_of_single_targets(
        e1 in -60.0f64..60.0, a1 in -60.0f64..60.0, e2 in -60.0f64..60.0, a2 in -60.0f64..60.0, w in 0.0f64..15.0
    ) {
        let p = params(31, w);
        let ts = [target(e1, a1), target(e2, a2)];
        let both = ideal_pattern(&p, &ts).unwrap();
        let s1 = ideal_pattern(&p, &ts[..1]).unwrap();
        let s2 = ideal_pattern(&p, &ts[1..]).unwrap();
        prop_assert_eq!(both, s1.zip_map(&s2, f64::max));
    }
}
