//! Forward problem: shooting for `-y'' + q y = z y` and eigenvalue search.
//!
//! The integrator is the fourth-order Magnus method with two Gauss points per
//! step. For constant `q` it is exact at any step size, so the free and
//! constant-shift spectra come out to rounding error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_data::{Branch, SpectraSet, SpectralSequence};

/// A potential sampled at `M + 1` equispaced points of `[x0, x1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialGrid {
    pub x0: f64,
    pub x1: f64,
    pub samples: Vec<f64>,
}

impl PotentialGrid {
    pub const MIN_INTERVALS: usize = 16;

    pub fn new(x0: f64, x1: f64, samples: Vec<f64>) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite() && x1 > x0) {
            return Err(Error::InvalidInput(format!(
                "bad potential interval [{x0}, {x1}]"
            )));
        }
        if samples.len() < Self::MIN_INTERVALS + 1 {
            return Err(Error::InvalidInput(format!(
                "potential needs at least {} samples, got {}",
                Self::MIN_INTERVALS + 1,
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "potential has non-finite samples".into(),
            ));
        }
        Ok(Self { x0, x1, samples })
    }

    /// Samples `f` at `m + 1` points.
    pub fn from_fn(x0: f64, x1: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = (x1 - x0) / m as f64;
        Self::new(x0, x1, (0..=m).map(|i| f(x0 + h * i as f64)).collect())
    }

    pub fn constant(x0: f64, x1: f64, m: usize, c: f64) -> Result<Self> {
        Self::new(x0, x1, vec![c; m + 1])
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn step(&self) -> f64 {
        self.length() / self.intervals() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.step() * i as f64
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cubic Lagrange interpolation on the four nearest samples.
    pub fn value(&self, x: f64) -> f64 {
        let m = self.intervals();
        let t = ((x - self.x0) / self.step()).clamp(0.0, m as f64);
        let i = (t.floor() as usize).min(m - 1);
        let start = i.saturating_sub(1).min(m - 3);
        let s = t - start as f64;
        let y = &self.samples[start..start + 4];
        let (l0, l1, l2, l3) = (
            -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
            s * (s - 2.0) * (s - 3.0) / 2.0,
            -s * (s - 1.0) * (s - 3.0) / 2.0,
            s * (s - 1.0) * (s - 2.0) / 6.0,
        );
        l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3]
    }

    /// Trapezoid rule for `int q`.
    pub fn integral(&self) -> f64 {
        let n = self.samples.len();
        let inner: f64 = self.samples[1..n - 1].iter().sum();
        self.step() * (inner + 0.5 * (self.samples[0] + self.samples[n - 1]))
    }

    /// Resamples onto `m + 1` points of the same interval.
    pub fn resample(&self, m: usize) -> Result<Self> {
        Self::from_fn(self.x0, self.x1, m, |x| self.value(x))
    }

    fn check_even(&self) -> Result<usize> {
        let m = self.intervals();
        if !m.is_multiple_of(2) || m / 2 < Self::MIN_INTERVALS {
            return Err(Error::InvalidInput(format!(
                "full grid needs an even number >= 32 of intervals, got {m}"
            )));
        }
        Ok(m / 2)
    }

    /// `q_1(x) = q(x0 + x)` on `[0, l]`.
    pub fn left_half(&self) -> Result<Self> {
        let h = self.check_even()?;
        Self::new(0.0, 0.5 * self.length(), self.samples[..=h].to_vec())
    }

    /// `q_2(x) = q(x1 - x)` on `[0, l]`.
    pub fn right_half_reflected(&self) -> Result<Self> {
        let h = self.check_even()?;
        Self::new(
            0.0,
            0.5 * self.length(),
            self.samples[h..].iter().rev().copied().collect(),
        )
    }

    /// Inverse of the split: `q = q_1` on `[0, l]`, `q(x) = q_2(a - x)` on `[l, a]`.
    ///
    /// Both halves must share the step; the midpoint value is averaged.
    pub fn join_halves(q1: &Self, q2: &Self) -> Result<Self> {
        if q1.samples.len() != q2.samples.len()
            || (q1.length() - q2.length()).abs() > 1e-12 * q1.length()
        {
            return Err(Error::InvalidInput(
                "halves must have matching grids".into(),
            ));
        }
        let m = q1.intervals();
        let mut samples = q1.samples[..m].to_vec();
        samples.push(0.5 * (q1.samples[m] + q2.samples[m]));
        samples.extend(q2.samples[..m].iter().rev());
        Self::new(0.0, 2.0 * q1.length(), samples)
    }

    /// `(x, q)` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,q\n");
        for (i, q) in self.samples.iter().enumerate() {
            s.push_str(&format!("{},{}\n", self.x(i), q));
        }
        s
    }
}

/// `s(end)` and `s'(end)` for the solution with `s(x0) = 0`, `s'(x0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingResult {
    pub s_end: f64,
    pub s_prime_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative root tolerance in `z`.
    pub tol_root: f64,
    /// Upper bound on `h * sqrt(|z - q|)` per integration step.
    pub max_phase_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_root: 1e-13,
            max_phase_step: 0.4,
        }
    }
}

struct Sweep {
    y: f64,
    dy: f64,
    sign_changes: usize,
}

/// `(cosh(sqrt(k)), sinh(sqrt(k))/sqrt(k))` continued to `k < 0`.
fn exp_coefficients(k: f64) -> (f64, f64) {
    if k.abs() < 1e-6 {
        (1.0 + k / 2.0 + k * k / 24.0, 1.0 + k / 6.0 + k * k / 120.0)
    } else if k > 0.0 {
        let r = k.sqrt();
        (r.cosh(), r.sinh() / r)
    } else {
        let r = (-k).sqrt();
        (r.cos(), r.sin() / r)
    }
}

fn substeps(q: &PotentialGrid, z: f64, max_phase: f64, refine: usize) -> usize {
    let worst = (z - q.min()).abs().max((z - q.max()).abs());
    let per_cell = (q.step() * worst.sqrt() / max_phase).ceil().max(1.0) as usize;
    per_cell * refine
}

fn sweep(q: &PotentialGrid, z: f64, opts: &SolverOptions, refine: usize) -> Result<Sweep> {
    const G: f64 = 0.288_675_134_594_812_9; // sqrt(3)/6
    let n = substeps(q, z, opts.max_phase_step, refine) * q.intervals();
    let h = q.length() / n as f64;
    let (mut y, mut dy) = (0.0f64, 1.0f64);
    let mut sign_changes = 0;
    let mut last_sign = 1.0f64;
    for i in 0..n {
        let x = q.x0 + h * i as f64;
        let p1 = q.value(x + (0.5 - G) * h) - z;
        let p2 = q.value(x + (0.5 + G) * h) - z;
        let pbar = 0.5 * (p1 + p2);
        let d = 3f64.sqrt() * h * h / 12.0 * (p1 - p2);
        let kappa = d * d + h * h * pbar;
        let (ch, sh) = exp_coefficients(kappa);
        let ny = (ch + sh * d) * y + sh * h * dy;
        let ndy = sh * h * pbar * y + (ch - sh * d) * dy;
        y = ny;
        dy = ndy;
        // y > 0 just right of x0; a zero exactly at x1 is not counted
        if y != 0.0 && y.signum() != last_sign {
            sign_changes += 1;
            last_sign = y.signum();
        }
    }
    if !(y.is_finite() && dy.is_finite()) {
        return Err(Error::Overflow { z });
    }
    Ok(Sweep {
        y,
        dy,
        sign_changes,
    })
}

/// Integrates from `x0` to `x1` with `s(x0) = 0`, `s'(x0) = 1`.
pub fn shoot(q: &PotentialGrid, z: f64) -> Result<ShootingResult> {
    shoot_with(q, z, &SolverOptions::default())
}

pub fn shoot_with(q: &PotentialGrid, z: f64, opts: &SolverOptions) -> Result<ShootingResult> {
    let s = sweep(q, z, opts, 1)?;
    Ok(ShootingResult {
        s_end: s.y,
        s_prime_end: s.dy,
    })
}

/// Shooting result plus a step-doubling error estimate `(|ds|, |ds'|)`.
pub fn shoot_with_error(
    q: &PotentialGrid,
    z: f64,
    opts: &SolverOptions,
) -> Result<(ShootingResult, f64, f64)> {
    let coarse = sweep(q, z, opts, 1)?;
    let fine = sweep(q, z, opts, 2)?;
    // fourth order: error of the fine run is ~ difference / 15
    Ok((
        ShootingResult {
            s_end: fine.y,
            s_prime_end: fine.dy,
        },
        (fine.y - coarse.y).abs() / 15.0,
        (fine.dy - coarse.dy).abs() / 15.0,
    ))
}

/// Number of eigenvalues strictly below `z` (oscillation count).
fn count_below(
    q: &PotentialGrid,
    z: f64,
    neumann: bool,
    opts: &SolverOptions,
) -> Result<(usize, f64)> {
    let s = sweep(q, z, opts, 1)?;
    let mut n = s.sign_changes;
    if neumann && s.y * s.dy < 0.0 {
        n += 1;
    }
    let f = if neumann { s.dy } else { s.y };
    Ok((n, f))
}

fn characteristic(q: &PotentialGrid, z: f64, neumann: bool, opts: &SolverOptions) -> Result<f64> {
    let s = sweep(q, z, opts, 1)?;
    Ok(if neumann { s.dy } else { s.y })
}

fn find_eigenvalue(
    q: &PotentialGrid,
    k: usize,
    neumann: bool,
    opts: &SolverOptions,
) -> Result<f64> {
    let l = q.length();
    let slot = if neumann {
        std::f64::consts::PI * (k as f64 - 0.5) / l
    } else {
        std::f64::consts::PI * k as f64 / l
    };
    let margin = 1e-6 * (1.0 + slot * slot) + 1e-3 * (q.max() - q.min() + 1.0);
    let mut lo = slot * slot + q.min() - margin;
    let mut hi = slot * slot + q.max() + margin;
    let miss = |detail: String| Error::MissedEigenvalue { index: k, detail };

    let (mut n_lo, mut f_lo) = count_below(q, lo, neumann, opts)?;
    let (mut n_hi, mut f_hi) = count_below(q, hi, neumann, opts)?;
    if n_lo > k - 1 || n_hi < k {
        return Err(miss(format!(
            "counts {n_lo}..{n_hi} on [{lo}, {hi}] do not bracket index {k}"
        )));
    }
    // isolate: exactly one eigenvalue in (lo, hi]
    let mut guard = 0;
    while n_lo != k - 1 || n_hi != k {
        guard += 1;
        if guard > 200 {
            return Err(miss("oscillation-count bisection did not converge".into()));
        }
        let mid = 0.5 * (lo + hi);
        let (n, f) = count_below(q, mid, neumann, opts)?;
        if n >= k {
            hi = mid;
            n_hi = n;
            f_hi = f;
        } else {
            lo = mid;
            n_lo = n;
            f_lo = f;
        }
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo * f_hi > 0.0 {
        return Err(miss(format!(
            "no sign change of the characteristic function on [{lo}, {hi}]"
        )));
    }
    // Illinois iteration on the bracket
    let tol = |z: f64| opts.tol_root * z.abs().max(1.0);
    let mut side = 0i32;
    let mut root = 0.5 * (lo + hi);
    for _ in 0..200 {
        if hi - lo <= tol(root) {
            break;
        }
        let mut z = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(z > lo && z < hi) {
            z = 0.5 * (lo + hi);
        }
        let f = characteristic(q, z, neumann, opts)?;
        root = z;
        if f == 0.0 {
            return Ok(z);
        }
        if f * f_hi < 0.0 {
            lo = z;
            f_lo = f;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = z;
            f_hi = f;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    // one Newton step, derivative by central difference
    let dz = 1e-6 * root.abs().max(1.0);
    let f0 = characteristic(q, root, neumann, opts)?;
    let fp = characteristic(q, root + dz, neumann, opts)?;
    let fm = characteristic(q, root - dz, neumann, opts)?;
    let deriv = (fp - fm) / (2.0 * dz);
    if deriv != 0.0 {
        let polished = root - f0 / deriv;
        if (polished - root).abs() <= 4.0 * tol(root).max(hi - lo) {
            root = polished;
        }
    }
    Ok(root)
}

/// The first `count` eigenvalue squares of `branch` for the potential on `q`'s interval.
pub fn find_spectrum(
    q: &PotentialGrid,
    branch: Branch,
    count: usize,
    opts: &SolverOptions,
) -> Result<SpectralSequence> {
    if count == 0 {
        return Err(Error::InvalidInput(
            "eigenvalue count must be positive".into(),
        ));
    }
    let neumann = branch.is_neumann();
    let values: Vec<f64> = (1..=count)
        .into_par_iter()
        .map(|k| find_eigenvalue(q, k, neumann, opts))
        .collect::<Result<_>>()?;
    for (i, w) in values.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::MissedEigenvalue {
                index: i + 2,
                detail: "eigenvalues not increasing".into(),
            });
        }
    }
    SpectralSequence::new(branch, q.length(), values)
}

/// The five spectra of `q` on `[0, a]`.
#[derive(Debug, Clone)]
pub struct ForwardResult {
    pub spectra: SpectraSet,
    /// `|s1 s2' + s2 s1'|` at each full-interval eigenvalue, relative to `|s1 s2'| + |s2 s1'|`.
    pub omega_residuals: Vec<f64>,
}

/// `count` eigenvalues per half-interval problem and `full_count` on the full interval.
pub fn forward_all(
    q: &PotentialGrid,
    count: usize,
    full_count: usize,
    opts: &SolverOptions,
) -> Result<ForwardResult> {
    let q1 = q.left_half()?;
    let q2 = q.right_half_reflected()?;
    let lambda = find_spectrum(q, Branch::FullDD, full_count, opts)?;
    let nu1 = find_spectrum(&q1, Branch::HalfDDLeft, count, opts)?;
    let nu2 = find_spectrum(&q2, Branch::HalfDDRight, count, opts)?;
    let mu1 = find_spectrum(&q1, Branch::HalfDNLeft, count, opts)?;
    let mu2 = find_spectrum(&q2, Branch::HalfDNRight, count, opts)?;
    let omega_residuals = lambda
        .values()
        .par_iter()
        .map(|&z| {
            let a = shoot_with(&q1, z, opts)?;
            let b = shoot_with(&q2, z, opts)?;
            let (t1, t2) = (a.s_end * b.s_prime_end, b.s_end * a.s_prime_end);
            Ok((t1 + t2).abs() / (t1.abs() + t2.abs()).max(f64::MIN_POSITIVE))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(worst) = omega_residuals.iter().copied().reduce(f64::max) {
        log::debug!("forward: worst transmission residual {worst:.3e}");
    }
    Ok(ForwardResult {
        spectra: SpectraSet {
            a: q.length(),
            lambda,
            nu1,
            nu2,
            mu1,
            mu2,
        },
        omega_residuals,
    })
}
