mod common;

use std::f64::consts::PI;

use common::RandomPotential;
use proptest::prelude::*;
use trispectral::gl_inverse::{norming_constants, potential_from_kernel, solve_gl};
use trispectral::pipeline::potential_error;
use trispectral::{
    find_spectrum, reconstruct_potential_two_spectra, Branch, Error, PotentialGrid, SolverOptions,
    SpectralSequence,
};

const L: f64 = PI / 2.0;

fn spectra(q: &PotentialGrid, count: usize) -> (SpectralSequence, SpectralSequence) {
    let opts = SolverOptions::default();
    (
        find_spectrum(q, Branch::HalfDDLeft, count, &opts).unwrap(),
        find_spectrum(q, Branch::HalfDNLeft, count, &opts).unwrap(),
    )
}

/// `int_0^l y^2` for `y'' = (q - z) y`, `y(0) = 0`, `y'(0) = 1`, by RK4 and Simpson.
fn norm_squared(q: &dyn Fn(f64) -> f64, z: f64, steps: usize) -> f64 {
    let h = L / steps as f64;
    let f = |x: f64, y: f64, p: f64| (p, (q(x) - z) * y);
    let (mut y, mut p) = (0.0, 1.0);
    let mut ys = vec![0.0];
    for i in 0..steps {
        let x = h * i as f64;
        let (k1y, k1p) = f(x, y, p);
        let (k2y, k2p) = f(x + h / 2.0, y + h / 2.0 * k1y, p + h / 2.0 * k1p);
        let (k3y, k3p) = f(x + h / 2.0, y + h / 2.0 * k2y, p + h / 2.0 * k2p);
        let (k4y, k4p) = f(x + h, y + h * k3y, p + h * k3p);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        ys.push(y);
    }
    let inner: f64 = (1..steps)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * ys[i] * ys[i])
        .sum();
    (ys[0] * ys[0] + ys[steps] * ys[steps] + inner) * h / 3.0
}

#[test]
fn norming_constants_match_quadrature() {
    let p = RandomPotential::new(21, L);
    let q = PotentialGrid::from_fn(0.0, L, 1000, |x| p.eval(x)).unwrap();
    let (nu, mu) = spectra(&q, 60);
    let nc = norming_constants(&nu, &mu).unwrap();
    for k in 0..15 {
        let want = norm_squared(&|x| p.eval(x), nu.values()[k], 4000);
        assert!(
            (nc.alpha[k] - want).abs() < 1e-6 * want,
            "k={}: {} vs {want}",
            k + 1,
            nc.alpha[k]
        );
    }
}

#[test]
fn free_data_is_a_fixed_point() {
    for (k, m_g) in [(10, 64), (40, 200), (80, 128)] {
        let nu = SpectralSequence::constant_potential(Branch::HalfDDLeft, L, k, 0.0);
        let mu = SpectralSequence::constant_potential(Branch::HalfDNLeft, L, k, 0.0);
        let q = reconstruct_potential_two_spectra(&nu, &mu, m_g).unwrap();
        assert_eq!(q.intervals(), m_g);
        assert!(q.samples.iter().all(|v| v.abs() <= 1e-6));
    }
}

#[test]
fn smooth_fixtures_round_trip() {
    for seed in [0u64, 4, 17] {
        let p = RandomPotential::new(seed, L);
        let q = PotentialGrid::from_fn(0.0, L, 1000, |x| p.eval(x)).unwrap();
        let (nu, mu) = spectra(&q, 40);
        let r = reconstruct_potential_two_spectra(&nu, &mu, 200).unwrap();
        let (l2, max) = potential_error(&q, &r);
        assert!(
            l2 < 5e-3 && max < 5e-2,
            "seed {seed}: L2 {l2:.3e} max {max:.3e}"
        );
    }
}

#[test]
fn tail_model_removes_endpoint_spikes() {
    let q = PotentialGrid::from_fn(0.0, L, 1000, |x| x).unwrap();
    let (nu, mu) = spectra(&q, 40);
    let mut nc = norming_constants(&nu, &mu).unwrap();
    let tail = nc.tail.expect("fitted tail");
    // alpha_k (z_k - c) 2/l - 1 ~ -(q(l) - q(0)) l^2 / (4 pi^2 k^2)
    assert!((tail.r + PI / 32.0).abs() < 1e-3, "{}", tail.r);
    let with = potential_from_kernel(&solve_gl(&nc, 200).unwrap()).unwrap();
    nc.tail = None;
    let without = potential_from_kernel(&solve_gl(&nc, 200).unwrap()).unwrap();
    let (l2_with, max_with) = potential_error(&q, &with);
    let (l2_without, max_without) = potential_error(&q, &without);
    assert!(
        max_without > 0.5 && max_with < 1e-2,
        "{max_without} {max_with}"
    );
    assert!(l2_with < 0.05 * l2_without);
}

#[test]
fn small_grids_and_bad_data_are_rejected() {
    let nu = SpectralSequence::constant_potential(Branch::HalfDDLeft, L, 10, 0.0);
    let mu = SpectralSequence::constant_potential(Branch::HalfDNLeft, L, 10, 0.0);
    assert!(matches!(
        reconstruct_potential_two_spectra(&nu, &mu, 32),
        Err(Error::InvalidInput(_))
    ));
    let short = mu.truncated(9);
    assert!(matches!(
        norming_constants(&nu, &short),
        Err(Error::MismatchedLength(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn shifting_the_data_shifts_the_potential(c in -1.0f64..3.0) {
        let p = RandomPotential::new(8, L);
        let q = PotentialGrid::from_fn(0.0, L, 600, |x| p.eval(x)).unwrap();
        let (nu, mu) = spectra(&q, 40);
        let base = reconstruct_potential_two_spectra(&nu, &mu, 128).unwrap();
        let moved = reconstruct_potential_two_spectra(&nu.shifted(c), &mu.shifted(c), 128).unwrap();
        for (a, b) in base.samples.iter().zip(&moved.samples) {
            prop_assert!((b - a - c).abs() < 1e-3, "{} vs {} + {}", b, a, c);
        }
    }

    #[test]
    fn interlacing_data_gives_positive_norming(seed in 0u64..500) {
        let p = RandomPotential::new(seed, L);
        let q = PotentialGrid::from_fn(0.0, L, 400, |x| p.eval(x)).unwrap();
        let (nu, mu) = spectra(&q, 20);
        let nc = norming_constants(&nu, &mu).unwrap();
        prop_assert!(nc.alpha.iter().all(|&a| a > 0.0));
    }
}
