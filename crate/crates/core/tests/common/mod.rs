//! Independent reference computations used only by tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use trispectral::special::{cosine_kernel, sine_kernel};
use trispectral::{Branch, SpectraSet, SpectralSequence};

/// Eigenvalues of a symmetric tridiagonal matrix below `x` (negative LDL^T pivots).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = diag[0] - x;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let pivot = if d == 0.0 {
            f64::EPSILON * off[i - 1].abs().max(1.0)
        } else {
            d
        };
        d = diag[i] - x - off[i - 1] * off[i - 1] / pivot;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..diag.len() {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i < off.len() { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Second-order finite differences for `-y'' + q y` on `[0, length]`,
/// Dirichlet at 0, Dirichlet or Neumann (ghost point) at `length`.
pub fn fd_eigenvalues(
    q: &dyn Fn(f64) -> f64,
    length: f64,
    neumann: bool,
    count: usize,
    m: usize,
) -> Vec<f64> {
    let h = length / m as f64;
    let n = if neumann { m } else { m - 1 };
    let diag: Vec<f64> = (1..=n).map(|i| 2.0 / (h * h) + q(h * i as f64)).collect();
    let mut off = vec![-1.0 / (h * h); n - 1];
    if neumann {
        off[n - 2] = -(2f64).sqrt() / (h * h);
    }
    (1..=count)
        .map(|k| kth_eigenvalue(&diag, &off, k))
        .collect()
}

/// Finite differences on `m`, `2m`, `4m` intervals with the `h^2` and `h^4` terms eliminated.
pub fn oracle_eigenvalues(
    q: &dyn Fn(f64) -> f64,
    length: f64,
    neumann: bool,
    count: usize,
    m: usize,
) -> Vec<f64> {
    let e1 = fd_eigenvalues(q, length, neumann, count, m);
    let e2 = fd_eigenvalues(q, length, neumann, count, 2 * m);
    let e4 = fd_eigenvalues(q, length, neumann, count, 4 * m);
    (0..count)
        .map(|i| {
            let r1 = (4.0 * e2[i] - e1[i]) / 3.0;
            let r2 = (4.0 * e4[i] - e2[i]) / 3.0;
            (16.0 * r2 - r1) / 15.0
        })
        .collect()
}

/// Classical RK4 for `y'' = (q - z) y`, `y(0) = 0`, `y'(0) = 1`; returns `(y, y')` at `length`.
pub fn rk4_shoot(q: &dyn Fn(f64) -> f64, length: f64, z: f64, steps: usize) -> (f64, f64) {
    let h = length / steps as f64;
    let f = |x: f64, y: f64, p: f64| (p, (q(x) - z) * y);
    let (mut y, mut p) = (0.0, 1.0);
    for i in 0..steps {
        let x = h * i as f64;
        let (k1y, k1p) = f(x, y, p);
        let (k2y, k2p) = f(x + h / 2.0, y + h / 2.0 * k1y, p + h / 2.0 * k1p);
        let (k3y, k3p) = f(x + h / 2.0, y + h / 2.0 * k2y, p + h / 2.0 * k2p);
        let (k4y, k4p) = f(x + h, y + h * k3y, p + h * k3p);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    }
    (y, p)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// A smooth random potential on `[0, a]`: a few cosine modes plus a mean.
#[derive(Debug, Clone)]
pub struct RandomPotential {
    pub a: f64,
    pub mean: f64,
    pub modes: Vec<(f64, f64)>,
}

impl RandomPotential {
    pub fn new(seed: u64, a: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mean = rng.gen_range(-1.0..2.0);
        let modes = (1..=4)
            .map(|_| {
                (
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        Self { a, mean, modes }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.mean
            + self
                .modes
                .iter()
                .enumerate()
                .map(|(j, &(c, phase))| {
                    c * ((j + 1) as f64 * std::f64::consts::PI * x / self.a + phase).cos()
                })
                .sum::<f64>()
    }
}

/// `q = 0` on the left half and `1` on the right: half spectra in closed form,
/// full spectrum from the transmission condition by bisection.
pub fn split_spectra(count: usize) -> SpectraSet {
    let l = PI / 2.0;
    let s = |z: f64| sine_kernel(z, l);
    let c = |z: f64| cosine_kernel(z, l);
    let g = |z: f64| s(z) * c(z - 1.0) + c(z) * s(z - 1.0);
    let mut lambda = Vec::new();
    let mut z = 0.0;
    while lambda.len() < 2 * count {
        let (a, b) = (z, z + 0.01);
        if g(a) * g(b) < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if g(lo) * g(m) <= 0.0 {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            lambda.push(0.5 * (lo + hi));
        }
        z = b;
    }
    let mk = |b: Branch, v: Vec<f64>| {
        SpectralSequence::new(b, if b == Branch::FullDD { PI } else { l }, v).unwrap()
    };
    SpectraSet {
        a: PI,
        lambda: mk(Branch::FullDD, lambda),
        nu1: mk(
            Branch::HalfDDLeft,
            (1..=count).map(|k| (4 * k * k) as f64).collect(),
        ),
        nu2: mk(
            Branch::HalfDDRight,
            (1..=count).map(|k| (4 * k * k) as f64 + 1.0).collect(),
        ),
        mu1: mk(
            Branch::HalfDNLeft,
            (1..=count)
                .map(|k| ((2 * k - 1) * (2 * k - 1)) as f64)
                .collect(),
        ),
        mu2: mk(
            Branch::HalfDNRight,
            (1..=count)
                .map(|k| ((2 * k - 1) * (2 * k - 1)) as f64 + 1.0)
                .collect(),
        ),
    }
}
