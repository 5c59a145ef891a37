//! The functional equation `X phi1 + Y phi2 = omega` and completion of the half spectra.
//!
//! `phi1` is the Dirichlet characteristic function of the left half with the
//! withheld zeros replaced by the substituted Neumann values, `phi2` likewise
//! on the right. At a zero `z_n` of `phi2` the equation gives
//! `X(z_n) = omega(z_n) / phi1(z_n)`, and `X` is rebuilt from those values by
//! Lagrange interpolation in `z`:
//!
//! ```text
//! X(z) = R(z) + phi2(z) * sum_n v_n / (phi2'(z_n) (z - z_n)),   v_n = X(z_n) - R(z_n)
//! ```
//!
//! with a reference `R` carrying the known asymptotics. `v_n = tau_n / lambda_n`
//! where `tau_n` is the remainder sequence of the `lambda`-form series.
//! The zeros of `X` are the Neumann eigenvalues of the right half, except that
//! the withheld Dirichlet eigenvalues of the left half take the places of the
//! substituted ones.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::entire_products::{Baseline, EntireProduct};
use crate::error::{Error, Result};
use crate::special::{cosine_kernel, sine_kernel};
use crate::spectral_data::{
    classify_regular_intervals, coincide, estimate_mean_potential, estimate_mean_potential_indexed,
    validate_interlacing, Branch, InterlacingReport, PartialSequence, RegularCase,
    RegularIntervalMap, SpectraSet, SpectralSequence, ThreeSpectraInput, DEFAULT_COINCIDENCE_TOL,
};

/// Which asymptotic reference `R` the interpolation subtracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceKind {
    /// `cos(lambda l) + A sin(lambda l)/lambda`.
    Leading,
    /// `cos(mu l) + D (cos(mu l) - sin(mu l)/(mu l)) / mu^2` with `mu^2 = z - 2A/l`, `D` fitted
    /// from the node values. Removes the next order of the remainder, which makes
    /// the truncated series converge like `K^-2` instead of `K^-1`.
    #[default]
    Refined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub kind: ReferenceKind,
    pub half_length: f64,
    /// Asymptotic mean coefficient `A` (half the integral of the potential).
    pub a_coef: f64,
    /// Second-order coefficient, zero for [`ReferenceKind::Leading`].
    pub d_coef: f64,
}

/// `(cos(lambda l) - sin(lambda l)/(lambda l)) / z`, entire in `z`.
fn second_order_shape(z: f64, l: f64) -> f64 {
    let w = z * l * l;
    if w.abs() < 1e-3 {
        l * l * (-1.0 / 3.0 + w / 30.0 - w * w / 840.0)
    } else {
        (cosine_kernel(z, l) - sine_kernel(z, l) / l) / z
    }
}

impl Reference {
    pub fn eval(&self, z: f64) -> f64 {
        let l = self.half_length;
        match self.kind {
            ReferenceKind::Leading => cosine_kernel(z, l) + self.a_coef * sine_kernel(z, l),
            ReferenceKind::Refined => {
                let zt = z - 2.0 * self.a_coef / l;
                cosine_kernel(zt, l) + self.d_coef * second_order_shape(zt, l)
            }
        }
    }
}

/// Interpolation data for one of `X`, `Y`.
#[derive(Debug, Clone)]
pub struct InterpolationProblem {
    nodes: EntireProduct,
    derivatives: Vec<f64>,
    values: Vec<f64>,
    reference: Reference,
    shift: f64,
}

impl InterpolationProblem {
    /// Builds from node values `v_n = X(z_n) - R(z_n)` at the zeros of `nodes`.
    pub fn from_values(
        nodes: EntireProduct,
        values: Vec<f64>,
        reference: Reference,
        shift: f64,
    ) -> Result<Self> {
        if values.len() != nodes.order() {
            return Err(Error::MismatchedLength(format!(
                "{} node values for {} nodes",
                values.len(),
                nodes.order()
            )));
        }
        let derivatives = (1..=nodes.order())
            .map(|k| nodes.derivative_z_at_zero(k))
            .collect::<Result<Vec<_>>>()?;
        if let Some(i) = derivatives.iter().position(|d| *d == 0.0 || !d.is_finite()) {
            return Err(Error::NearCoincidentSpectra {
                z: nodes.zeros()[i],
            });
        }
        Ok(Self {
            nodes,
            derivatives,
            values,
            reference,
            shift,
        })
    }

    /// Builds from `lambda`-form data: positive node `lambda_n` and remainder `tau_n`.
    pub fn from_tau(
        nodes: EntireProduct,
        tau: &[f64],
        reference: Reference,
        shift: f64,
    ) -> Result<Self> {
        let values = nodes
            .zeros()
            .iter()
            .zip(tau)
            .map(|(&z, &t)| {
                if z > 0.0 {
                    Ok(t / z.sqrt())
                } else {
                    Err(Error::ShiftRequired { z })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(nodes, values, reference, shift)
    }

    pub fn node_squares(&self) -> &[f64] {
        self.nodes.zeros()
    }

    /// `v_n`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `tau_n = lambda_n v_n` (positive nodes only).
    pub fn tau(&self) -> Vec<f64> {
        self.node_squares()
            .iter()
            .zip(&self.values)
            .map(|(&z, &v)| z.max(0.0).sqrt() * v)
            .collect()
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    /// Spectral shift already applied to the data.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn node_product(&self) -> &EntireProduct {
        &self.nodes
    }

    /// `sum_n v_n phi2(z) / (phi2'(z_n) (z - z_n))`; equals `v_n` at `z = z_n`.
    pub fn series(&self, z: f64) -> f64 {
        let zs = self.nodes.zeros();
        if let Some(n) = zs
            .iter()
            .position(|&w| (z - w).abs() <= 1e-15 * w.abs().max(1.0))
        {
            return self.values[n];
        }
        let p = self.nodes.value(z);
        let sum: f64 = zs
            .iter()
            .zip(&self.values)
            .zip(&self.derivatives)
            .map(|((&w, &v), &d)| v / (d * (z - w)))
            .sum();
        p * sum
    }

    /// `tau(lambda) = lambda (X(lambda) - R(lambda))`, odd in `lambda`.
    pub fn tau_eval(&self, lambda: f64) -> f64 {
        lambda * self.series(lambda * lambda)
    }

    /// `X(z)`.
    pub fn eval(&self, z: f64) -> f64 {
        self.reference.eval(z) + self.series(z)
    }
}

/// Closure form of [`InterpolationProblem::eval`] in `lambda`.
pub fn reconstruct_x(prob: &InterpolationProblem) -> impl Fn(f64) -> f64 + '_ {
    move |lambda| prob.eval(lambda * lambda)
}

/// Node values of `X` at the zeros of `nodes` (the right-hand product), dividing by `divisor`.
pub fn node_values(
    nodes: &EntireProduct,
    omega: &EntireProduct,
    divisor: &EntireProduct,
    a_coef: f64,
    kind: ReferenceKind,
    shift: f64,
    tol: f64,
) -> Result<InterpolationProblem> {
    let l = nodes.length();
    let zs = nodes.zeros();
    for (i, &z) in zs.iter().enumerate() {
        if z.abs() <= tol {
            return Err(Error::ShiftRequired { z });
        }
        if divisor.zeros().iter().any(|&w| coincide(w, z, tol))
            || zs[..i].iter().any(|&w| coincide(w, z, tol))
        {
            return Err(Error::NearCoincidentSpectra { z });
        }
    }
    let x_at = zs
        .iter()
        .map(|&z| {
            let d = divisor.eval(z)?;
            let o = omega.eval(z)?;
            if d == 0.0 || !(o / d).is_finite() {
                return Err(Error::NearCoincidentSpectra { z });
            }
            Ok(o / d)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reference = Reference {
        kind,
        half_length: l,
        a_coef,
        d_coef: 0.0,
    };
    if kind == ReferenceKind::Refined {
        reference.d_coef = fit_second_order(zs, &x_at, &reference);
    }
    let values = zs
        .iter()
        .zip(&x_at)
        .map(|(&z, &x)| x - reference.eval(z))
        .collect();
    InterpolationProblem::from_values(nodes.clone(), values, reference, shift)
}

/// Average of `(X(z_n) - cos(sqrt(z_n - c) l)) / E(z_n)` over the middle nodes.
///
/// The lowest nodes still carry higher-order terms; the highest ones inherit
/// the truncation error of the products, amplified by `z_n`.
fn fit_second_order(zs: &[f64], x_at: &[f64], base: &Reference) -> f64 {
    let mut order: Vec<usize> = (0..zs.len()).collect();
    order.sort_by(|&i, &j| zs[i].total_cmp(&zs[j]));
    let n = order.len();
    let (lo, hi) = ((n / 8).max(1), (n / 2).max(2).min(n));
    let shapes = order[lo.min(n - 1)..hi].iter().filter_map(|&i| {
        let l = base.half_length;
        let e = second_order_shape(zs[i] - 2.0 * base.a_coef / l, l);
        (zs[i] > 0.0 && e != 0.0).then(|| (x_at[i] - base.eval(zs[i])) / e)
    });
    let (sum, count) = shapes.fold((0.0, 0usize), |(s, c), d| (s + d, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// `omega`, `phi1`, `phi2` and the mean coefficients, built from the data.
#[derive(Debug, Clone)]
pub struct CharacteristicProducts {
    pub omega: EntireProduct,
    pub phi1: EntireProduct,
    pub phi2: EntireProduct,
    /// `A_0 = A_1 + A_2` from the full spectrum.
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl CharacteristicProducts {
    pub fn build(input: &ThreeSpectraInput) -> Result<Self> {
        let l = input.half_length();
        let a0 = estimate_mean_potential(&input.lambda)?.value;
        let partial_mean = |p: &PartialSequence| {
            let known: Vec<(usize, f64)> = p.known().collect();
            estimate_mean_potential_indexed(p.branch(), p.length(), &known).map(|m| m.value)
        };
        let a1 = partial_mean(&input.nu1)?;
        let a2 = partial_mean(&input.nu2)?;
        let filled = |p: &PartialSequence, subst: &BTreeMap<usize, f64>| -> Vec<f64> {
            (1..=p.len())
                .map(|k| {
                    p.get(k)
                        .or_else(|| subst.get(&k).copied())
                        .unwrap_or(f64::NAN)
                })
                .collect()
        };
        let omega = EntireProduct::new(
            Baseline::SineFull,
            input.a,
            input.lambda.values().to_vec(),
            2.0 * a0 / input.a,
        )?;
        let phi1 = EntireProduct::new(
            Baseline::SineHalf,
            l,
            filled(&input.nu1, &input.mu2_subst),
            2.0 * a1 / l,
        )?;
        let phi2 = EntireProduct::new(
            Baseline::SineHalf,
            l,
            filled(&input.nu2, &input.mu1_subst),
            2.0 * a2 / l,
        )?;
        Ok(Self {
            omega,
            phi1,
            phi2,
            a0,
            a1,
            a2,
        })
    }
}

/// The four half-interval spectra after completion.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedSpectra {
    pub nu1: SpectralSequence,
    pub nu2: SpectralSequence,
    pub mu1: SpectralSequence,
    pub mu2: SpectralSequence,
}

impl CompletedSpectra {
    pub fn with_full(&self, a: f64, lambda: &SpectralSequence) -> SpectraSet {
        SpectraSet {
            a,
            lambda: lambda.clone(),
            nu1: self.nu1.clone(),
            nu2: self.nu2.clone(),
            mu1: self.mu1.clone(),
            mu2: self.mu2.clone(),
        }
    }

    fn shifted(&self, c: f64) -> Self {
        Self {
            nu1: self.nu1.shifted(c),
            nu2: self.nu2.shifted(c),
            mu1: self.mu1.shifted(c),
            mu2: self.mu2.shifted(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionOptions {
    pub reference: ReferenceKind,
    pub coincidence_tol: f64,
    /// Scan points per `pi / l` in `lambda` when searching for zeros.
    pub scan_resolution: usize,
    /// Half-width of the Neumann search windows as a fraction of the slot spacing.
    pub window_fraction: f64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            reference: ReferenceKind::default(),
            coincidence_tol: DEFAULT_COINCIDENCE_TOL,
            scan_resolution: 64,
            window_fraction: 0.4,
        }
    }
}

fn signed_root(z: f64) -> f64 {
    z.signum() * z.abs().sqrt()
}

/// Sign-change scan in `u = sign(z) sqrt(|z|)` followed by bisection in `z`.
fn scan_zeros(f: &dyn Fn(f64) -> f64, z_lo: f64, z_hi: f64, du: f64) -> Vec<f64> {
    let (u_lo, u_hi) = (signed_root(z_lo), signed_root(z_hi));
    let steps = ((u_hi - u_lo) / du).ceil().max(1.0) as usize;
    let z_of = |i: usize| {
        let u = u_lo + (u_hi - u_lo) * i as f64 / steps as f64;
        u.signum() * u * u
    };
    let mut out = Vec::new();
    let (mut za, mut fa) = (z_of(0), f(z_of(0)));
    for i in 1..=steps {
        let zb = z_of(i);
        let fb = f(zb);
        if fa == 0.0 {
            out.push(za);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (za, zb, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        za = zb;
        fa = fb;
    }
    out
}

/// Labels the zeros of one evaluator.
///
/// `nu` are the known Dirichlet values of one half, `subst` the Neumann values
/// of the other half that replaced the withheld ones. Returns the completed
/// `(nu, mu)` squares.
#[allow(clippy::too_many_arguments)]
fn complete_side(
    zeros: &[f64],
    lambda: &[f64],
    nu: &PartialSequence,
    subst: &BTreeMap<usize, f64>,
    mu_branch: Branch,
    tail_shift: f64,
    opts: &ReconstructionOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let count = nu.len();
    let l = nu.length();
    let spacing = PI / l;
    let mut taken = vec![false; zeros.len()];
    let mut found_nu = BTreeMap::new();

    for (&k, &m) in subst {
        let host = lambda.windows(2).find(|w| w[0] < m && m < w[1]);
        let inside: Vec<usize> = match host {
            Some(w) => (0..zeros.len())
                .filter(|&i| !taken[i] && zeros[i] > w[0] && zeros[i] < w[1])
                .collect(),
            None => Vec::new(),
        };
        let pick = match inside.len() {
            1 => inside[0],
            0 => {
                // the Dirichlet value can sit one gap away from its substitute; take
                // the free zero nearest the shifted Dirichlet slot
                let target = (Branch::HalfDDLeft.slot(k, l).powi(2) + tail_shift)
                    .max(0.0)
                    .sqrt();
                (0..zeros.len())
                    .filter(|&i| !taken[i])
                    .min_by(|&i, &j| {
                        (signed_root(zeros[i]) - target)
                            .abs()
                            .total_cmp(&(signed_root(zeros[j]) - target).abs())
                    })
                    .ok_or_else(|| {
                        Error::ZeroNotFound(format!("no zero left for withheld index {k}"))
                    })?
            }
            _ => {
                let w = host.unwrap_or(&[0.0, 0.0]);
                return Err(Error::ExtraZero {
                    lower: w[0],
                    upper: w[1],
                });
            }
        };
        if coincide(zeros[pick], m, opts.coincidence_tol) {
            return Err(Error::NearCoincidentSpectra { z: m });
        }
        taken[pick] = true;
        found_nu.insert(k, zeros[pick]);
    }

    let free: Vec<f64> = zeros
        .iter()
        .zip(&taken)
        .filter(|(_, &t)| !t)
        .map(|(&z, _)| z)
        .collect();
    let mu_indices: Vec<usize> = (1..=count).filter(|k| !subst.contains_key(k)).collect();
    if free.len() < mu_indices.len() {
        return Err(Error::ZeroNotFound(format!(
            "{mu_branch}: found {} zeros, need {}",
            free.len(),
            mu_indices.len()
        )));
    }
    let mut mu = vec![0.0; count];
    for (&k, &m) in subst {
        mu[k - 1] = m;
    }
    for (&k, &z) in mu_indices.iter().zip(&free) {
        let target = signed_root(mu_branch.slot(k, l).powi(2) + tail_shift);
        if (signed_root(z) - target).abs() > opts.window_fraction * spacing && z > 0.0 && k > 1 {
            return Err(Error::ZeroNotFound(format!(
                "{mu_branch} index {k}: zero at {z} outside the window around {}",
                target * target
            )));
        }
        mu[k - 1] = z;
    }
    let nu_full: Vec<f64> = (1..=count)
        .map(|k| nu.get(k).or_else(|| found_nu.get(&k).copied()).unwrap())
        .collect();
    for (name, seq) in [("nu", &nu_full), ("mu", &mu)] {
        if let Some(i) = seq.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::ZeroNotFound(format!(
                "completed {name} sequence not increasing at index {}",
                i + 2
            )));
        }
    }
    Ok((nu_full, mu))
}

/// Assigns the zeros of `X` and `Y` to the four half spectra.
pub fn complete_spectra(
    x: &InterpolationProblem,
    y: &InterpolationProblem,
    input: &ThreeSpectraInput,
    opts: &ReconstructionOptions,
) -> Result<CompletedSpectra> {
    let l = input.half_length();
    let du = PI / l / opts.scan_resolution as f64;
    let lambda = input.lambda.values();
    let lowest = x
        .node_squares()
        .iter()
        .chain(y.node_squares())
        .chain(lambda)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let z_lo = lowest - 2.0 * (PI / l).powi(2);
    let top = |p: &InterpolationProblem| {
        p.node_squares()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    };

    let fx = |z: f64| x.eval(z);
    let fy = |z: f64| y.eval(z);
    let (zx, zy) = rayon::join(
        || scan_zeros(&fx, z_lo, top(x), du),
        || scan_zeros(&fy, z_lo, top(y), du),
    );
    log::debug!(
        "complete_spectra: {} zeros of X, {} zeros of Y",
        zx.len(),
        zy.len()
    );

    let c2 = 2.0 * x.reference().a_coef / l;
    let c1 = 2.0 * y.reference().a_coef / l;
    let (nu1, mu2) = complete_side(
        &zx,
        lambda,
        &input.nu1,
        &input.mu2_subst,
        Branch::HalfDNRight,
        c2,
        opts,
    )?;
    let (nu2, mu1) = complete_side(
        &zy,
        lambda,
        &input.nu2,
        &input.mu1_subst,
        Branch::HalfDNLeft,
        c1,
        opts,
    )?;
    Ok(CompletedSpectra {
        nu1: SpectralSequence::new(Branch::HalfDDLeft, l, nu1)?,
        nu2: SpectralSequence::new(Branch::HalfDDRight, l, nu2)?,
        mu1: SpectralSequence::new(Branch::HalfDNLeft, l, mu1)?,
        mu2: SpectralSequence::new(Branch::HalfDNRight, l, mu2)?,
    })
}

/// Requires every substituted value to sit in a regular gap of the completed data.
pub fn check_regularity(
    set: &SpectraSet,
    n1: &[usize],
    n2: &[usize],
    tol: f64,
) -> Result<RegularIntervalMap> {
    let map = classify_regular_intervals(set, tol)?;
    if n1.is_empty() && n2.is_empty() {
        return Ok(map);
    }
    if map.regular_count() == 0 {
        return Err(Error::NoRegularIntervals);
    }
    let checks = n1
        .iter()
        .map(|&k| ("mu2", k, set.mu2.get(k), RegularCase::Mu2Nu1))
        .chain(
            n2.iter()
                .map(|&k| ("mu1", k, set.mu1.get(k), RegularCase::Mu1Nu2)),
        );
    for (sequence, index, value, case) in checks {
        let ok = value
            .and_then(|v| map.host(v))
            .is_some_and(|g| g.case == Some(case));
        if !ok {
            return Err(Error::NotRegular { sequence, index });
        }
    }
    Ok(map)
}

/// `(z, |X phi1 + Y phi2 - omega|, max(1, |omega|))` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub rows: Vec<(f64, f64, f64)>,
}

impl ResidualReport {
    /// `max residual / scale`.
    pub fn worst_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.1 / r.2).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("z,residual,scale\n");
        for (z, r, m) in &self.rows {
            s.push_str(&format!("{z},{r},{m}\n"));
        }
        s
    }
}

/// Residual of the functional equation on `points` equispaced `z` in `[z_lo, z_hi]` (unshifted units).
pub fn functional_residual(
    products: &CharacteristicProducts,
    x: &InterpolationProblem,
    y: &InterpolationProblem,
    z_lo: f64,
    z_hi: f64,
    points: usize,
) -> ResidualReport {
    let shift = x.shift();
    let rows = (0..points)
        .map(|i| {
            let z = z_lo + (z_hi - z_lo) * i as f64 / (points.max(2) - 1) as f64;
            let zs = z + shift;
            let w = products.omega.value(zs);
            let r = x.eval(zs) * products.phi1.value(zs) + y.eval(zs) * products.phi2.value(zs) - w;
            (z, r.abs(), w.abs().max(1.0))
        })
        .collect();
    ResidualReport { rows }
}

/// Everything produced by the three-spectra step.
#[derive(Debug, Clone)]
pub struct ThreeSpectraSolution {
    pub completed: CompletedSpectra,
    pub products: CharacteristicProducts,
    pub x: InterpolationProblem,
    pub y: InterpolationProblem,
    /// Spectral shift used internally (0 if none).
    pub shift: f64,
    pub residuals: ResidualReport,
    pub interlacing: InterlacingReport,
    pub regular: RegularIntervalMap,
}

impl ThreeSpectraSolution {
    pub fn spectra(&self, input: &ThreeSpectraInput) -> SpectraSet {
        self.completed.with_full(input.a, &input.lambda)
    }
}

/// Solves the functional equation, completes the spectra and checks the result.
pub fn solve_three_spectra(
    input: &ThreeSpectraInput,
    opts: &ReconstructionOptions,
) -> Result<ThreeSpectraSolution> {
    let raw = CharacteristicProducts::build(input)?;
    let near_origin = raw
        .phi1
        .zeros()
        .iter()
        .chain(raw.phi2.zeros())
        .any(|z| z.abs() <= opts.coincidence_tol);
    let shift = if near_origin {
        1.0 + input.min_square().abs()
    } else {
        0.0
    };
    let work = if shift != 0.0 {
        log::info!("shifting the spectral parameter by {shift}");
        input.shifted(shift)
    } else {
        input.clone()
    };
    let products = if shift != 0.0 {
        CharacteristicProducts::build(&work)?
    } else {
        raw
    };
    let tol = opts.coincidence_tol;
    let x = node_values(
        &products.phi2,
        &products.omega,
        &products.phi1,
        products.a2,
        opts.reference,
        shift,
        tol,
    )?;
    let y = node_values(
        &products.phi1,
        &products.omega,
        &products.phi2,
        products.a1,
        opts.reference,
        shift,
        tol,
    )?;
    let completed = complete_spectra(&x, &y, &work, opts)?.shifted(-shift);

    let set = completed.with_full(input.a, &input.lambda);
    let interlacing = validate_interlacing(&set, tol)?;
    let regular = check_regularity(&set, &input.n1(), &input.n2(), tol)?;

    let lambda = input.lambda.values();
    let k = input.nu1.len().min(lambda.len());
    let residuals = functional_residual(&products, &x, &y, lambda[0] - 1.0, lambda[k - 1], 100);
    Ok(ThreeSpectraSolution {
        completed,
        products,
        x,
        y,
        shift,
        residuals,
        interlacing,
        regular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_nodes(n: usize) -> EntireProduct {
        EntireProduct::baseline_only(Baseline::SineHalf, PI / 2.0, n)
    }

    fn leading(a: f64) -> Reference {
        Reference {
            kind: ReferenceKind::Leading,
            half_length: PI / 2.0,
            a_coef: a,
            d_coef: 0.0,
        }
    }

    #[test]
    fn zero_values_give_zero_tau() {
        let p = InterpolationProblem::from_values(free_nodes(40), vec![0.0; 40], leading(0.0), 0.0)
            .unwrap();
        for &l in &[0.0, 0.3, 1.7, 5.5] {
            assert_eq!(p.tau_eval(l), 0.0);
        }
        // X = cos(lambda a/2) vanishes at pi/a
        let x = reconstruct_x(&p);
        assert!(x(1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_property() {
        let mut tau = vec![0.0; 40];
        tau[0] = 0.37;
        let p = InterpolationProblem::from_tau(free_nodes(40), &tau, leading(0.0), 0.0).unwrap();
        assert!((p.tau_eval(2.0) - 0.37).abs() < 1e-15);
        assert_eq!(p.tau_eval(4.0), 0.0);
        assert!((p.tau_eval(-2.0) + 0.37).abs() < 1e-15);
        assert_eq!(p.tau_eval(0.0), 0.0);
        // off-node values are finite and continuous
        let a = p.tau_eval(2.0 + 1e-7);
        assert!((a - 0.37).abs() < 1e-5);
    }

    #[test]
    fn second_order_shape_is_continuous_at_origin() {
        let l = PI / 2.0;
        let a = second_order_shape(1e-3 * (1.0 - 1e-12) / (l * l), l);
        let b = second_order_shape(1e-3 * (1.0 + 1e-12) / (l * l), l);
        assert!((a - b).abs() < 1e-10, "{a} {b}");
        assert!((second_order_shape(0.0, l) + l * l / 3.0).abs() < 1e-15);
    }

    #[test]
    fn free_regularity_check_reports_absence() {
        let set = SpectraSet::constant_potential(PI, 10, 20, 0.0);
        assert!(matches!(
            check_regularity(&set, &[1], &[], 1e-9),
            Err(Error::NoRegularIntervals)
        ));
        assert!(check_regularity(&set, &[], &[], 1e-9).is_ok());
    }

    #[test]
    fn scan_finds_cosine_zeros() {
        let f = |z: f64| cosine_kernel(z, PI / 2.0);
        let zs = scan_zeros(&f, -3.0, 50.0, 2.0 / 64.0);
        assert_eq!(zs.len(), 4);
        for (k, z) in zs.iter().enumerate() {
            assert!((z - (2.0 * k as f64 + 1.0).powi(2)).abs() < 1e-10);
        }
    }
}
