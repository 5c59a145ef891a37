//! Spectral sequences, their validation, and the spectral-data JSON document.
//!
//! Every eigenvalue is stored as its square `z_k = lambda_k^2`, `k >= 1`. The
//! symmetric partners `lambda_{-k} = -lambda_k` are never stored; they are
//! implied wherever a formula needs them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for deciding that two squares coincide.
pub const DEFAULT_COINCIDENCE_TOL: f64 = 1e-9;

/// `|x - y| <= tol * max(1, |x|, |y|)`.
pub fn coincide(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * 1f64.max(x.abs()).max(y.abs())
}

/// Which boundary-value problem a sequence comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Dirichlet at both ends of `[0, a]`.
    #[serde(rename = "FullDD")]
    FullDD,
    /// Dirichlet at `0` and `a/2`, left half.
    #[serde(rename = "HalfDD_left")]
    HalfDDLeft,
    /// Dirichlet at `a/2` and `a`, right half.
    #[serde(rename = "HalfDD_right")]
    HalfDDRight,
    /// Dirichlet at `0`, Neumann at `a/2`.
    #[serde(rename = "HalfDN_left")]
    HalfDNLeft,
    /// Neumann at `a/2`, Dirichlet at `a`.
    #[serde(rename = "HalfDN_right")]
    HalfDNRight,
}

impl Branch {
    pub const ALL: [Branch; 5] = [
        Branch::FullDD,
        Branch::HalfDDLeft,
        Branch::HalfDDRight,
        Branch::HalfDNLeft,
        Branch::HalfDNRight,
    ];

    /// True when the far end carries a Neumann condition.
    pub fn is_neumann(self) -> bool {
        matches!(self, Branch::HalfDNLeft | Branch::HalfDNRight)
    }

    /// Interval length for a problem on `[0, a]`.
    pub fn interval_length(self, a: f64) -> f64 {
        match self {
            Branch::FullDD => a,
            _ => 0.5 * a,
        }
    }

    /// Unperturbed eigenvalue `lambda_k` (not squared) on an interval of `length`.
    pub fn slot(self, k: usize, length: f64) -> f64 {
        if self.is_neumann() {
            PI * (k as f64 - 0.5) / length
        } else {
            PI * k as f64 / length
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::FullDD => "FullDD",
            Branch::HalfDDLeft => "HalfDD_left",
            Branch::HalfDDRight => "HalfDD_right",
            Branch::HalfDNLeft => "HalfDN_left",
            Branch::HalfDNRight => "HalfDN_right",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A finite prefix `z_1 < z_2 < ... < z_K` of one spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSequence {
    branch: Branch,
    length: f64,
    values: Vec<f64>,
}

impl SpectralSequence {
    pub fn new(branch: Branch, length: f64, values: Vec<f64>) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidInput(format!(
                "{branch}: length must be positive, got {length}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidInput(format!("{branch}: empty sequence")));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{branch}: non-finite value {v}"
            )));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!(
                "{branch}: squares must be strictly increasing (index {} -> {})",
                i + 1,
                i + 2
            )));
        }
        Ok(Self {
            branch,
            length,
            values,
        })
    }

    /// Spectrum of the constant potential `q = shift`.
    pub fn constant_potential(branch: Branch, length: f64, count: usize, shift: f64) -> Self {
        let values = (1..=count)
            .map(|k| {
                let s = branch.slot(k, length);
                s * s + shift
            })
            .collect();
        Self {
            branch,
            length,
            values,
        }
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `z_k`, 1-based.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    pub fn slot(&self, k: usize) -> f64 {
        self.branch.slot(k, self.length)
    }

    /// Returns a copy with every square shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            branch: self.branch,
            length: self.length,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn truncated(&self, count: usize) -> Self {
        Self {
            branch: self.branch,
            length: self.length,
            values: self.values[..count.min(self.values.len())].to_vec(),
        }
    }
}

/// A sequence with some indices withheld.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSequence {
    branch: Branch,
    length: f64,
    entries: Vec<Option<f64>>,
}

impl PartialSequence {
    /// Withholds the 1-based indices in `missing` from `seq`.
    pub fn withhold(seq: &SpectralSequence, missing: &[usize]) -> Result<Self> {
        for &k in missing {
            if k == 0 || k > seq.len() {
                return Err(Error::InvalidInput(format!(
                    "{}: missing index {k} outside 1..={}",
                    seq.branch,
                    seq.len()
                )));
            }
        }
        let entries = seq
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if missing.contains(&(i + 1)) {
                    None
                } else {
                    Some(v)
                }
            })
            .collect();
        Ok(Self {
            branch: seq.branch,
            length: seq.length,
            entries,
        })
    }

    /// Builds from known values listed in index order, skipping `missing`.
    pub fn from_known(
        branch: Branch,
        length: f64,
        known: &[f64],
        missing: &[usize],
    ) -> Result<Self> {
        let total = known.len() + missing.len();
        let mut entries = Vec::with_capacity(total);
        let mut it = known.iter();
        for k in 1..=total {
            if missing.contains(&k) {
                entries.push(None);
            } else {
                entries.push(it.next().copied());
            }
        }
        if entries.iter().any(|e| e.is_none())
            && entries.iter().filter(|e| e.is_none()).count() != missing.len()
        {
            return Err(Error::InvalidInput(format!(
                "{branch}: missing indices exceed the sequence length"
            )));
        }
        let out = Self {
            branch,
            length,
            entries,
        };
        let known: Vec<f64> = out.known().map(|(_, v)| v).collect();
        if known.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!(
                "{branch}: squares must be strictly increasing"
            )));
        }
        Ok(out)
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total index range, including withheld entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1)
            .and_then(|i| self.entries.get(i).copied().flatten())
    }

    pub fn missing(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_none())
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// `(k, z_k)` for every known entry.
    pub fn known(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.map(|v| (i + 1, v)))
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            branch: self.branch,
            length: self.length,
            entries: self.entries.iter().map(|e| e.map(|v| v + c)).collect(),
        }
    }
}

/// The five spectra of one potential.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraSet {
    pub a: f64,
    pub lambda: SpectralSequence,
    pub nu1: SpectralSequence,
    pub nu2: SpectralSequence,
    pub mu1: SpectralSequence,
    pub mu2: SpectralSequence,
}

impl SpectraSet {
    /// Spectra of `q = shift` on `[0, a]`; the full sequence gets `full_count` terms.
    pub fn constant_potential(a: f64, count: usize, full_count: usize, shift: f64) -> Self {
        let l = 0.5 * a;
        Self {
            a,
            lambda: SpectralSequence::constant_potential(Branch::FullDD, a, full_count, shift),
            nu1: SpectralSequence::constant_potential(Branch::HalfDDLeft, l, count, shift),
            nu2: SpectralSequence::constant_potential(Branch::HalfDDRight, l, count, shift),
            mu1: SpectralSequence::constant_potential(Branch::HalfDNLeft, l, count, shift),
            mu2: SpectralSequence::constant_potential(Branch::HalfDNRight, l, count, shift),
        }
    }

    pub fn get(&self, branch: Branch) -> &SpectralSequence {
        match branch {
            Branch::FullDD => &self.lambda,
            Branch::HalfDDLeft => &self.nu1,
            Branch::HalfDDRight => &self.nu2,
            Branch::HalfDNLeft => &self.mu1,
            Branch::HalfDNRight => &self.mu2,
        }
    }

    /// The five sequences in [`Branch::ALL`] order.
    pub fn sequences(&self) -> impl Iterator<Item = &SpectralSequence> {
        Branch::ALL.iter().map(move |&b| self.get(b))
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            a: self.a,
            lambda: self.lambda.shifted(c),
            nu1: self.nu1.shifted(c),
            nu2: self.nu2.shifted(c),
            mu1: self.mu1.shifted(c),
            mu2: self.mu2.shifted(c),
        }
    }
}

/// Data of the generalized three-spectra problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeSpectraInput {
    pub a: f64,
    pub lambda: SpectralSequence,
    pub nu1: PartialSequence,
    pub nu2: PartialSequence,
    /// `(mu_k^{(2)})^2` for `k` in the missing set of `nu1`.
    pub mu2_subst: BTreeMap<usize, f64>,
    /// `(mu_k^{(1)})^2` for `k` in the missing set of `nu2`.
    pub mu1_subst: BTreeMap<usize, f64>,
}

impl ThreeSpectraInput {
    pub fn new(
        a: f64,
        lambda: SpectralSequence,
        nu1: PartialSequence,
        nu2: PartialSequence,
        mu2_subst: BTreeMap<usize, f64>,
        mu1_subst: BTreeMap<usize, f64>,
        tol: f64,
    ) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidInput(format!(
                "interval length must be positive, got {a}"
            )));
        }
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidInput(what.to_string()))
            }
        };
        check(
            lambda.branch() == Branch::FullDD,
            "full spectrum must have branch FullDD",
        )?;
        check(
            nu1.branch() == Branch::HalfDDLeft,
            "nu1 must have branch HalfDD_left",
        )?;
        check(
            nu2.branch() == Branch::HalfDDRight,
            "nu2 must have branch HalfDD_right",
        )?;
        let l = 0.5 * a;
        check(
            coincide(lambda.length(), a, 1e-12),
            "full spectrum length must equal a",
        )?;
        check(
            coincide(nu1.length(), l, 1e-12) && coincide(nu2.length(), l, 1e-12),
            "half spectra length must equal a/2",
        )?;
        let n1: Vec<usize> = mu2_subst.keys().copied().collect();
        let n2: Vec<usize> = mu1_subst.keys().copied().collect();
        if nu1.missing() != n1 {
            return Err(Error::InvalidInput(format!(
                "missing nu1 indices {:?} must match substituted mu2 indices {:?}",
                nu1.missing(),
                n1
            )));
        }
        if nu2.missing() != n2 {
            return Err(Error::InvalidInput(format!(
                "missing nu2 indices {:?} must match substituted mu1 indices {:?}",
                nu2.missing(),
                n2
            )));
        }
        if mu2_subst
            .values()
            .chain(mu1_subst.values())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("non-finite substituted value".into()));
        }
        // {nu^(1)} and {nu^(2)} must be disjoint.
        for (_, x) in nu1.known() {
            for (_, y) in nu2.known() {
                if coincide(x, y, tol) {
                    return Err(Error::NearCoincidentSpectra { z: x });
                }
            }
        }
        Ok(Self {
            a,
            lambda,
            nu1,
            nu2,
            mu2_subst,
            mu1_subst,
        })
    }

    /// Withholds `nu1` at `n1` and `nu2` at `n2`, substituting the matching `mu2`, `mu1` values.
    pub fn from_spectra(set: &SpectraSet, n1: &[usize], n2: &[usize], tol: f64) -> Result<Self> {
        let pick = |seq: &SpectralSequence, idx: &[usize]| -> Result<BTreeMap<usize, f64>> {
            idx.iter()
                .map(|&k| {
                    seq.get(k).map(|v| (k, v)).ok_or_else(|| {
                        Error::InvalidInput(format!("{}: no entry {k}", seq.branch()))
                    })
                })
                .collect()
        };
        Self::new(
            set.a,
            set.lambda.clone(),
            PartialSequence::withhold(&set.nu1, n1)?,
            PartialSequence::withhold(&set.nu2, n2)?,
            pick(&set.mu2, n1)?,
            pick(&set.mu1, n2)?,
            tol,
        )
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.a
    }

    pub fn n1(&self) -> Vec<usize> {
        self.mu2_subst.keys().copied().collect()
    }

    pub fn n2(&self) -> Vec<usize> {
        self.mu1_subst.keys().copied().collect()
    }

    /// Shifts every square by `c` (the spectral-parameter shift `lambda^2 -> lambda^2 + c`).
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            a: self.a,
            lambda: self.lambda.shifted(c),
            nu1: self.nu1.shifted(c),
            nu2: self.nu2.shifted(c),
            mu2_subst: self.mu2_subst.iter().map(|(&k, &v)| (k, v + c)).collect(),
            mu1_subst: self.mu1_subst.iter().map(|(&k, &v)| (k, v + c)).collect(),
        }
    }

    /// Smallest square anywhere in the data.
    pub fn min_square(&self) -> f64 {
        self.lambda
            .values()
            .iter()
            .copied()
            .chain(self.nu1.known().map(|(_, v)| v))
            .chain(self.nu2.known().map(|(_, v)| v))
            .chain(self.mu2_subst.values().copied())
            .chain(self.mu1_subst.values().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

// ---------------------------------------------------------------------------
// Interlacing

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// `lambda_1 < theta_1 <= lambda_2 <= theta_2 <= ...`
    ThetaInterlacing,
    /// `lambda_k = theta_k` iff `lambda_k = theta_{k-1}`.
    ThetaMultiplicity,
    /// `mu_1 < nu_1 < mu_2 < ...` on the left half.
    MuNuLeft,
    /// Same on the right half.
    MuNuRight,
    /// `tau_1 <= lambda_1 <= tau_2 <= ...`
    TauInterlacing,
    /// `lambda_k = tau_k` iff `lambda_k = tau_{k+1}`.
    TauMultiplicity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// 1-based index of the offending element.
    pub index: usize,
    /// Gap `(lambda_g, lambda_{g+1})` the violation refers to, when meaningful.
    pub gap: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at index {}", self.kind, self.index)?;
        if let Some(g) = self.gap {
            write!(f, " (gap {g})")?;
        }
        write!(f, ": {} vs {}", self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InterlacingReport {
    pub violations: Vec<Violation>,
}

impl InterlacingReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sorted union of two prefixes, cut where either prefix ends.
fn merged_prefix(a: &[f64], b: &[f64]) -> Vec<f64> {
    let cutoff = a
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY)
        .min(b.last().copied().unwrap_or(f64::NEG_INFINITY));
    let mut out: Vec<f64> = a
        .iter()
        .chain(b.iter())
        .copied()
        .filter(|&v| v <= cutoff)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Checks every interlacing statement that the supplied prefixes can witness.
pub fn validate_interlacing(set: &SpectraSet, tol: f64) -> Result<InterlacingReport> {
    for seq in [&set.lambda, &set.nu1, &set.nu2, &set.mu1, &set.mu2] {
        if seq.is_empty() {
            return Err(Error::MismatchedLength(format!(
                "{} is empty",
                seq.branch()
            )));
        }
    }
    if set.mu1.len() != set.nu1.len() || set.mu2.len() != set.nu2.len() {
        return Err(Error::MismatchedLength(format!(
            "mu/nu counts differ: left {}/{}, right {}/{}",
            set.mu1.len(),
            set.nu1.len(),
            set.mu2.len(),
            set.nu2.len()
        )));
    }

    let scale = |x: f64, y: f64| tol * 1f64.max(x.abs()).max(y.abs());
    let mut out = Vec::new();
    let mut le = |kind, index, gap, x: f64, y: f64| {
        if x > y + scale(x, y) {
            out.push(Violation {
                kind,
                index,
                gap,
                lhs: x,
                rhs: y,
            });
        }
    };

    let lam = set.lambda.values();
    let theta = merged_prefix(set.nu1.values(), set.nu2.values());
    let tau = merged_prefix(set.mu1.values(), set.mu2.values());

    // theta chain
    for (i, &t) in theta.iter().enumerate() {
        if let Some(&l) = lam.get(i) {
            le(ViolationKind::ThetaInterlacing, i + 1, Some(i + 1), l, t);
        }
        if let Some(&l) = lam.get(i + 1) {
            le(ViolationKind::ThetaInterlacing, i + 1, Some(i + 1), t, l);
        }
    }
    // tau chain
    for (i, &t) in tau.iter().enumerate() {
        if let Some(&l) = lam.get(i) {
            le(ViolationKind::TauInterlacing, i + 1, Some(i + 1), t, l);
        }
        if i > 0 {
            if let Some(&l) = lam.get(i - 1) {
                le(ViolationKind::TauInterlacing, i + 1, Some(i), l, t);
            }
        }
    }
    // mu/nu per branch
    for (kind, mu, nu) in [
        (ViolationKind::MuNuLeft, set.mu1.values(), set.nu1.values()),
        (ViolationKind::MuNuRight, set.mu2.values(), set.nu2.values()),
    ] {
        for i in 0..nu.len() {
            if mu[i] >= nu[i] - scale(mu[i], nu[i]) {
                out.push(Violation {
                    kind,
                    index: i + 1,
                    gap: None,
                    lhs: mu[i],
                    rhs: nu[i],
                });
            }
            if let Some(&m) = mu.get(i + 1) {
                if nu[i] >= m - scale(nu[i], m) {
                    out.push(Violation {
                        kind,
                        index: i + 1,
                        gap: None,
                        lhs: nu[i],
                        rhs: m,
                    });
                }
            }
        }
    }
    // strictness of the first theta inequality and the multiplicity rules
    if let (Some(&l), Some(&t)) = (lam.first(), theta.first()) {
        if coincide(l, t, tol) {
            out.push(Violation {
                kind: ViolationKind::ThetaInterlacing,
                index: 1,
                gap: Some(1),
                lhs: l,
                rhs: t,
            });
        }
    }
    for i in 1..lam.len().min(theta.len()) {
        if coincide(lam[i], theta[i], tol) != coincide(lam[i], theta[i - 1], tol) {
            out.push(Violation {
                kind: ViolationKind::ThetaMultiplicity,
                index: i + 1,
                gap: Some(i),
                lhs: lam[i],
                rhs: theta[i],
            });
        }
    }
    for i in 0..lam.len().min(tau.len().saturating_sub(1)) {
        if coincide(lam[i], tau[i], tol) != coincide(lam[i], tau[i + 1], tol) {
            out.push(Violation {
                kind: ViolationKind::TauMultiplicity,
                index: i + 1,
                gap: Some(i + 1),
                lhs: lam[i],
                rhs: tau[i],
            });
        }
    }

    out.sort_by_key(|v| (v.gap.unwrap_or(usize::MAX), v.index));
    out.dedup();
    Ok(InterlacingReport { violations: out })
}

// ---------------------------------------------------------------------------
// Regular intervals

/// Which of the four half-interval spectra a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Nu1,
    Nu2,
    Mu1,
    Mu2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularCase {
    /// One `mu^(1)` and one `nu^(2)`.
    Mu1Nu2,
    /// One `mu^(2)` and one `nu^(1)`.
    Mu2Nu1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// 1-based: the gap `(lambda_index, lambda_{index+1})`.
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    /// Points strictly inside the gap.
    pub contents: Vec<(Source, f64)>,
    pub case: Option<RegularCase>,
}

impl Gap {
    pub fn is_regular(&self) -> bool {
        self.case.is_some()
    }

    pub fn count(&self, source: Source) -> usize {
        self.contents.iter().filter(|(s, _)| *s == source).count()
    }

    pub fn contains(&self, z: f64) -> bool {
        z > self.lower && z < self.upper
    }
}

fn regular_case(counts: [usize; 4]) -> Option<RegularCase> {
    match counts {
        [0, 1, 1, 0] => Some(RegularCase::Mu1Nu2),
        [1, 0, 0, 1] => Some(RegularCase::Mu2Nu1),
        _ => None,
    }
}

/// Gap-by-gap classification of the full spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularIntervalMap {
    pub gaps: Vec<Gap>,
}

impl RegularIntervalMap {
    pub fn regular_count(&self) -> usize {
        self.gaps.iter().filter(|g| g.is_regular()).count()
    }

    /// The gap strictly containing `z`, if classified.
    pub fn host(&self, z: f64) -> Option<&Gap> {
        self.gaps.iter().find(|g| g.contains(z))
    }

    /// One row per gap.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gap,lower,upper,nu1,nu2,mu1,mu2,regular,case\n");
        for g in &self.gaps {
            let case = match g.case {
                Some(RegularCase::Mu1Nu2) => "mu1_nu2",
                Some(RegularCase::Mu2Nu1) => "mu2_nu1",
                None => "",
            };
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                g.index,
                g.lower,
                g.upper,
                g.count(Source::Nu1),
                g.count(Source::Nu2),
                g.count(Source::Mu1),
                g.count(Source::Mu2),
                g.is_regular(),
                case
            ));
        }
        s
    }
}

/// Classifies every gap of `lambda` that lies below the end of all four half spectra.
pub fn classify_regular_intervals(set: &SpectraSet, tol: f64) -> Result<RegularIntervalMap> {
    let sources = [
        (Source::Nu1, set.nu1.values()),
        (Source::Nu2, set.nu2.values()),
        (Source::Mu1, set.mu1.values()),
        (Source::Mu2, set.mu2.values()),
    ];
    let cutoff = sources
        .iter()
        .map(|(_, v)| v.last().copied().unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    let lam = set.lambda.values();
    let mut gaps = Vec::new();
    for (i, w) in lam.windows(2).enumerate() {
        let (lower, upper) = (w[0], w[1]);
        if upper > cutoff {
            break;
        }
        let mut contents = Vec::new();
        let mut open = [0usize; 4];
        let mut closed = [0usize; 4];
        for (slot, (source, values)) in sources.iter().enumerate() {
            for &v in values.iter() {
                let on_edge = coincide(v, lower, tol) || coincide(v, upper, tol);
                if on_edge {
                    closed[slot] += 1;
                } else if v > lower && v < upper {
                    open[slot] += 1;
                    closed[slot] += 1;
                    contents.push((*source, v));
                }
            }
        }
        let case = regular_case(open);
        if case != regular_case(closed) {
            return Err(Error::AmbiguousGap { gap: i + 1 });
        }
        contents.sort_by(|x, y| x.1.total_cmp(&y.1));
        gaps.push(Gap {
            index: i + 1,
            lower,
            upper,
            contents,
            case,
        });
    }
    Ok(RegularIntervalMap { gaps })
}

// ---------------------------------------------------------------------------
// Mean potential from eigenvalue asymptotics

/// Extrapolated `A = (1/2) * integral of q` together with the remainders `a_k - A`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPotential {
    pub value: f64,
    /// `(k, a_k - A)` for every supplied index.
    pub residuals: Vec<(usize, f64)>,
}

impl MeanPotential {
    /// Asymptotic shift of the squares, `z_k - slot_k^2 -> 2A / length`.
    pub fn square_shift(&self, length: f64) -> f64 {
        2.0 * self.value / length
    }
}

/// `pi k (sqrt(z_k) - slot_k)`, continued linearly to negative squares.
fn asymptotic_term(branch: Branch, length: f64, k: usize, z: f64) -> f64 {
    let s = branch.slot(k, length);
    let d = if z >= 0.0 {
        (z - s * s) / (z.sqrt() + s)
    } else {
        (z - s * s) / (2.0 * s)
    };
    PI * k as f64 * d
}

/// Estimates `A` from a full sequence.
pub fn estimate_mean_potential(seq: &SpectralSequence) -> Result<MeanPotential> {
    let entries: Vec<(usize, f64)> = seq
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| (i + 1, v))
        .collect();
    estimate_mean_potential_indexed(seq.branch(), seq.length(), &entries)
}

/// Estimates `A` from `(k, z_k)` pairs, some of which may be absent.
///
/// The terms `a_k` are extrapolated with two Richardson levels over
/// `k0, 2 k0, 4 k0`, eliminating `c1/k` and then `c2/k^2`.
pub fn estimate_mean_potential_indexed(
    branch: Branch,
    length: f64,
    entries: &[(usize, f64)],
) -> Result<MeanPotential> {
    let kmax = entries.iter().map(|e| e.0).max().unwrap_or(0);
    if entries.len() < 8 || kmax < 8 {
        return Err(Error::InvalidInput(format!(
            "mean-potential estimate needs at least 8 eigenvalues, got {}",
            entries.len()
        )));
    }
    let lookup: BTreeMap<usize, f64> = entries.iter().copied().collect();
    let mut k0 = kmax / 4;
    while k0 >= 2
        && !(lookup.contains_key(&k0)
            && lookup.contains_key(&(2 * k0))
            && lookup.contains_key(&(4 * k0)))
    {
        k0 -= 1;
    }
    if k0 < 2 {
        return Err(Error::InvalidInput(
            "not enough indices for Richardson extrapolation".into(),
        ));
    }
    if let Some(&(index, value)) = entries.iter().find(|&&(k, z)| k >= k0 && z < 0.0) {
        return Err(Error::NegativeSquareTail { index, value });
    }
    let term = |k: usize| asymptotic_term(branch, length, k, lookup[&k]);
    let (a1, a2, a4) = (term(k0), term(2 * k0), term(4 * k0));
    let r1 = 2.0 * a2 - a1;
    let r2 = 2.0 * a4 - a2;
    let value = (4.0 * r2 - r1) / 3.0;
    let residuals = entries
        .iter()
        .map(|&(k, z)| (k, asymptotic_term(branch, length, k, z) - value))
        .collect();
    Ok(MeanPotential { value, residuals })
}

// ---------------------------------------------------------------------------
// JSON document

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub branch: Branch,
    pub squares: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MissingIndices {
    #[serde(default)]
    pub nu1: Vec<usize>,
    #[serde(default)]
    pub nu2: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Substituted {
    #[serde(default)]
    pub mu2: BTreeMap<usize, f64>,
    #[serde(default)]
    pub mu1: BTreeMap<usize, f64>,
}

/// On-disk spectral data.
///
/// For `HalfDD_left` / `HalfDD_right`, `squares` lists the known values in index
/// order and skips the indices named in `missing_indices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDocument {
    pub a: f64,
    pub sequences: Vec<SequenceRecord>,
    #[serde(default)]
    pub missing_indices: MissingIndices,
    #[serde(default)]
    pub substituted: Substituted,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interlacing: Option<InterlacingReport>,
}

impl SpectralDocument {
    pub fn from_spectra(set: &SpectraSet) -> Self {
        let sequences = Branch::ALL
            .iter()
            .map(|&b| SequenceRecord {
                branch: b,
                squares: set.get(b).values().to_vec(),
            })
            .collect();
        Self {
            a: set.a,
            sequences,
            missing_indices: MissingIndices::default(),
            substituted: Substituted::default(),
            interlacing: None,
        }
    }

    pub fn from_input(input: &ThreeSpectraInput) -> Self {
        let known = |p: &PartialSequence| p.known().map(|(_, v)| v).collect::<Vec<_>>();
        Self {
            a: input.a,
            sequences: vec![
                SequenceRecord {
                    branch: Branch::FullDD,
                    squares: input.lambda.values().to_vec(),
                },
                SequenceRecord {
                    branch: Branch::HalfDDLeft,
                    squares: known(&input.nu1),
                },
                SequenceRecord {
                    branch: Branch::HalfDDRight,
                    squares: known(&input.nu2),
                },
            ],
            missing_indices: MissingIndices {
                nu1: input.nu1.missing(),
                nu2: input.nu2.missing(),
            },
            substituted: Substituted {
                mu2: input.mu2_subst.clone(),
                mu1: input.mu1_subst.clone(),
            },
            interlacing: None,
        }
    }

    fn record(&self, branch: Branch) -> Option<&SequenceRecord> {
        self.sequences.iter().find(|r| r.branch == branch)
    }

    fn sequence(&self, branch: Branch) -> Result<SpectralSequence> {
        let r = self
            .record(branch)
            .ok_or_else(|| Error::InvalidInput(format!("document has no {branch} sequence")))?;
        SpectralSequence::new(branch, branch.interval_length(self.a), r.squares.clone())
    }

    pub fn has_missing(&self) -> bool {
        !(self.missing_indices.nu1.is_empty() && self.missing_indices.nu2.is_empty())
    }

    /// All five complete sequences; fails if any index is withheld.
    pub fn to_spectra_set(&self) -> Result<SpectraSet> {
        if self.has_missing() {
            return Err(Error::InvalidInput(
                "document withholds eigenvalues; five complete spectra required".into(),
            ));
        }
        Ok(SpectraSet {
            a: self.a,
            lambda: self.sequence(Branch::FullDD)?,
            nu1: self.sequence(Branch::HalfDDLeft)?,
            nu2: self.sequence(Branch::HalfDDRight)?,
            mu1: self.sequence(Branch::HalfDNLeft)?,
            mu2: self.sequence(Branch::HalfDNRight)?,
        })
    }

    /// The three-spectra data described by the document.
    pub fn to_input(&self, tol: f64) -> Result<ThreeSpectraInput> {
        let l = 0.5 * self.a;
        let partial = |branch: Branch, missing: &[usize]| -> Result<PartialSequence> {
            let r = self
                .record(branch)
                .ok_or_else(|| Error::InvalidInput(format!("document has no {branch} sequence")))?;
            PartialSequence::from_known(branch, l, &r.squares, missing)
        };
        ThreeSpectraInput::new(
            self.a,
            self.sequence(Branch::FullDD)?,
            partial(Branch::HalfDDLeft, &self.missing_indices.nu1)?,
            partial(Branch::HalfDDRight, &self.missing_indices.nu2)?,
            self.substituted.mu2.clone(),
            self.substituted.mu1.clone(),
            tol,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_set(count: usize) -> SpectraSet {
        SpectraSet::constant_potential(PI, count, count, 0.0)
    }

    #[test]
    fn constant_potential_spectra_are_shifted_slots() {
        let set = SpectraSet::constant_potential(PI, 3, 3, 0.0);
        assert_eq!(set.lambda.values(), &[1.0, 4.0, 9.0]);
        assert_eq!(set.nu1.values(), &[4.0, 16.0, 36.0]);
        assert_eq!(set.mu2.values(), &[1.0, 9.0, 25.0]);
    }

    #[test]
    fn free_spectra_interlace() {
        let report = validate_interlacing(&free_set(10), DEFAULT_COINCIDENCE_TOL).unwrap();
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn displaced_nu_is_flagged_at_gap_one() {
        let mut set = free_set(3);
        set.nu1 =
            SpectralSequence::new(Branch::HalfDDLeft, PI / 2.0, vec![5.0, 16.0, 36.0]).unwrap();
        let report = validate_interlacing(&set, DEFAULT_COINCIDENCE_TOL).unwrap();
        assert!(report.violations.iter().any(|v| matches!(
            v.kind,
            ViolationKind::ThetaInterlacing | ViolationKind::ThetaMultiplicity
        ) && v.gap == Some(1)));
    }

    #[test]
    fn mismatched_counts_are_errors() {
        let mut set = free_set(4);
        set.mu1 = set.mu1.truncated(2);
        assert!(matches!(
            validate_interlacing(&set, 1e-9),
            Err(Error::MismatchedLength(_))
        ));
    }

    #[test]
    fn free_spectra_have_no_regular_gap() {
        let map = classify_regular_intervals(&free_set(12), DEFAULT_COINCIDENCE_TOL).unwrap();
        assert!(!map.gaps.is_empty());
        assert_eq!(map.regular_count(), 0);
    }

    #[test]
    fn single_gap_definition_instance() {
        let seq =
            |b: Branch, v: Vec<f64>| SpectralSequence::new(b, b.interval_length(PI), v).unwrap();
        let set = SpectraSet {
            a: PI,
            lambda: seq(Branch::FullDD, vec![1.0, 4.0]),
            nu1: seq(Branch::HalfDDLeft, vec![4.6, 10.0]),
            nu2: seq(Branch::HalfDDRight, vec![3.1, 10.0]),
            mu1: seq(Branch::HalfDNLeft, vec![2.2, 10.0]),
            mu2: seq(Branch::HalfDNRight, vec![4.4, 10.0]),
        };
        let map = classify_regular_intervals(&set, DEFAULT_COINCIDENCE_TOL).unwrap();
        assert_eq!(map.gaps.len(), 1);
        assert_eq!(map.gaps[0].case, Some(RegularCase::Mu1Nu2));
        assert!(map.to_csv().contains("1,1,4,0,1,1,0,true,mu1_nu2"));
    }

    #[test]
    fn endpoint_coincidence_that_matters_is_ambiguous() {
        let seq =
            |b: Branch, v: Vec<f64>| SpectralSequence::new(b, b.interval_length(PI), v).unwrap();
        // mu1 inside, nu2 exactly on the upper edge: open says "not regular", closed says "regular".
        let set = SpectralSequence::new;
        let _ = set;
        let set = SpectraSet {
            a: PI,
            lambda: seq(Branch::FullDD, vec![1.0, 4.0]),
            nu1: seq(Branch::HalfDDLeft, vec![5.0, 10.0]),
            nu2: seq(Branch::HalfDDRight, vec![4.0, 10.0]),
            mu1: seq(Branch::HalfDNLeft, vec![2.2, 10.0]),
            mu2: seq(Branch::HalfDNRight, vec![4.4, 10.0]),
        };
        assert!(matches!(
            classify_regular_intervals(&set, DEFAULT_COINCIDENCE_TOL),
            Err(Error::AmbiguousGap { gap: 1 })
        ));
    }

    #[test]
    fn mean_potential_of_free_spectrum_is_zero() {
        let seq = SpectralSequence::constant_potential(Branch::HalfDDLeft, PI / 2.0, 40, 0.0);
        let est = estimate_mean_potential(&seq).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.residuals.iter().all(|r| r.1 == 0.0));
    }

    #[test]
    fn mean_potential_of_unit_shift() {
        let seq = SpectralSequence::constant_potential(Branch::HalfDDLeft, PI / 2.0, 100, 1.0);
        let first = asymptotic_term(Branch::HalfDDLeft, PI / 2.0, 1, 5.0);
        assert!((first - PI * (5f64.sqrt() - 2.0)).abs() < 1e-14);
        assert!((first - 0.74163).abs() < 1e-5);
        let est = estimate_mean_potential(&seq).unwrap();
        assert!((est.value - PI / 4.0).abs() < 1e-3, "{}", est.value);
    }

    #[test]
    fn negative_tail_is_rejected() {
        let mut v: Vec<f64> = (1..=16).map(|k| (2 * k * k) as f64).collect();
        for x in v.iter_mut() {
            *x -= 1000.0;
        }
        let seq = SpectralSequence::new(Branch::HalfDDLeft, PI / 2.0, v).unwrap();
        assert!(matches!(
            estimate_mean_potential(&seq),
            Err(Error::NegativeSquareTail { .. })
        ));
    }

    #[test]
    fn too_short_for_extrapolation() {
        let seq = SpectralSequence::constant_potential(Branch::HalfDNLeft, 1.0, 5, 0.0);
        assert!(matches!(
            estimate_mean_potential(&seq),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn document_round_trips_partial_data() {
        let set = SpectraSet::constant_potential(PI, 10, 20, 0.0);
        let mut set2 = set.clone();
        set2.nu2 = set.nu2.shifted(0.5);
        let input = ThreeSpectraInput::from_spectra(&set2, &[1], &[2, 3], 1e-9).unwrap();
        let doc = SpectralDocument::from_input(&input);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains("\"HalfDD_left\""));
        let back: SpectralDocument = serde_json::from_str(&text).unwrap();
        let input2 = back.to_input(1e-9).unwrap();
        assert_eq!(input, input2);
        assert_eq!(input2.nu2.missing(), vec![2, 3]);
        assert_eq!(input2.mu1_subst[&3], 25.0);
    }

    #[test]
    fn coinciding_nu_sequences_are_rejected() {
        let set = SpectraSet::constant_potential(PI, 10, 20, 0.0);
        assert!(matches!(
            ThreeSpectraInput::from_spectra(&set, &[1], &[], 1e-9),
            Err(Error::NearCoincidentSpectra { .. })
        ));
    }
}
