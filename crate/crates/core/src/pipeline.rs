//! Orchestration: forward spectra, reconstruction, round trips, validation, file I/O.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::direct_solver::{forward_all, PotentialGrid, SolverOptions};
use crate::error::{Error, Result};
use crate::functional_eq::{
    solve_three_spectra, ReconstructionOptions, ReferenceKind, ThreeSpectraSolution,
};
use crate::gl_inverse::reconstruct_potential_two_spectra;
use crate::spectral_data::{
    classify_regular_intervals, validate_interlacing, Branch, InterlacingReport, SpectraSet,
    SpectralDocument, ThreeSpectraInput, DEFAULT_COINCIDENCE_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Eigenvalues per half-interval sequence.
    pub count: usize,
    /// Full-interval eigenvalues; `None` means `2 * count`.
    pub full_count: Option<usize>,
    /// Direct-solver grid intervals on `[0, a]`.
    pub grid: usize,
    /// Gelfand–Levitan grid intervals per half.
    pub gl_grid: usize,
    /// Eigenvalues per sequence fed to the Gelfand–Levitan step.
    pub gl_count: usize,
    pub tol_root: f64,
    pub coincidence_tol: f64,
    pub reference: ReferenceKind,
    pub missing_nu1: Vec<usize>,
    pub missing_nu2: Vec<usize>,
    pub format: OutputFormat,
    /// Include wall-clock times in round-trip reports (makes them non-reproducible).
    pub timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            count: 100,
            full_count: None,
            grid: 2000,
            gl_grid: 200,
            gl_count: 40,
            tol_root: SolverOptions::default().tol_root,
            coincidence_tol: DEFAULT_COINCIDENCE_TOL,
            reference: ReferenceKind::default(),
            missing_nu1: Vec::new(),
            missing_nu2: Vec::new(),
            format: OutputFormat::Json,
            timings: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.count == 0 || self.grid == 0 || self.gl_grid == 0 || self.gl_count == 0 {
            return bad("counts and grids must be positive".into());
        }
        if self.full_count == Some(0) {
            return bad("full-interval count must be positive".into());
        }
        if !(self.tol_root > 0.0 && self.coincidence_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.gl_count > self.count {
            return bad(format!(
                "GL count {} exceeds eigenvalue count {}",
                self.gl_count, self.count
            ));
        }
        for &k in self.missing_nu1.iter().chain(&self.missing_nu2) {
            if k == 0 || k > self.count {
                return bad(format!("missing index {k} outside 1..={}", self.count));
            }
        }
        Ok(())
    }

    pub fn full_count(&self) -> usize {
        self.full_count.unwrap_or(2 * self.count)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol_root: self.tol_root,
            ..SolverOptions::default()
        }
    }

    pub fn reconstruction_options(&self) -> ReconstructionOptions {
        ReconstructionOptions {
            reference: self.reference,
            coincidence_tol: self.coincidence_tol,
            ..ReconstructionOptions::default()
        }
    }
}

/// Five spectra of `q` plus their interlacing report.
pub fn run_forward(config: &PipelineConfig, q: &PotentialGrid) -> Result<SpectralDocument> {
    config.validate()?;
    let q = if q.intervals() == config.grid {
        q.clone()
    } else {
        q.resample(config.grid)?
    };
    let fwd = forward_all(
        &q,
        config.count,
        config.full_count(),
        &config.solver_options(),
    )?;
    let mut doc = SpectralDocument::from_spectra(&fwd.spectra);
    doc.interlacing = Some(validate_interlacing(&fwd.spectra, config.coincidence_tol)?);
    Ok(doc)
}

/// Result of the inverse pipeline.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub input: ThreeSpectraInput,
    pub solution: ThreeSpectraSolution,
    pub q1: PotentialGrid,
    pub q2: PotentialGrid,
    /// `q` on `[0, a]`.
    pub potential: PotentialGrid,
}

impl Reconstruction {
    pub fn completed(&self) -> SpectraSet {
        self.solution.spectra(&self.input)
    }

    /// Completed spectra with their interlacing report.
    pub fn completed_document(&self) -> SpectralDocument {
        let mut doc = SpectralDocument::from_spectra(&self.completed());
        doc.interlacing = Some(self.solution.interlacing.clone());
        doc
    }
}

/// Three-spectra data from a document; withholds per `config` if the document is complete.
pub fn three_spectra_input(
    config: &PipelineConfig,
    doc: &SpectralDocument,
) -> Result<ThreeSpectraInput> {
    if doc.has_missing() || config.missing_nu1.is_empty() && config.missing_nu2.is_empty() {
        if doc.has_missing() && !(config.missing_nu1.is_empty() && config.missing_nu2.is_empty()) {
            log::warn!("document already withholds eigenvalues; ignoring --missing-* flags");
        }
        doc.to_input(config.coincidence_tol)
    } else {
        ThreeSpectraInput::from_spectra(
            &doc.to_spectra_set()?,
            &config.missing_nu1,
            &config.missing_nu2,
            config.coincidence_tol,
        )
    }
}

pub fn run_reconstruct(
    config: &PipelineConfig,
    input: &ThreeSpectraInput,
) -> Result<Reconstruction> {
    config.validate()?;
    let solution = solve_three_spectra(input, &config.reconstruction_options())?;
    let c = &solution.completed;
    let k = config.gl_count.min(c.nu1.len());
    let (q1, q2) = rayon::join(
        || {
            reconstruct_potential_two_spectra(
                &c.nu1.truncated(k),
                &c.mu1.truncated(k),
                config.gl_grid,
            )
        },
        || {
            reconstruct_potential_two_spectra(
                &c.nu2.truncated(k),
                &c.mu2.truncated(k),
                config.gl_grid,
            )
        },
    );
    let (q1, q2) = (q1?, q2?);
    let potential = PotentialGrid::join_halves(&q1, &q2)?;
    Ok(Reconstruction {
        input: input.clone(),
        solution,
        q1,
        q2,
        potential,
    })
}

/// `(L2, max)` distance between two potentials on the grid of `approx`.
pub fn potential_error(exact: &PotentialGrid, approx: &PotentialGrid) -> (f64, f64) {
    let diffs: Vec<f64> = (0..approx.samples.len())
        .map(|i| approx.samples[i] - exact.value(approx.x(i)))
        .collect();
    let n = diffs.len();
    let sq: f64 = diffs[1..n - 1].iter().map(|d| d * d).sum::<f64>()
        + 0.5 * (diffs[0].powi(2) + diffs[n - 1].powi(2));
    let max = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    ((sq * approx.step()).sqrt(), max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredEigenvalue {
    pub branch: Branch,
    pub index: usize,
    pub exact: f64,
    pub recovered: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub forward_s: f64,
    pub reconstruct_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripReport {
    pub l2_error: f64,
    pub max_error: f64,
    /// The withheld Dirichlet values and their recovered counterparts.
    pub withheld: Vec<RecoveredEigenvalue>,
    /// Largest deviation of any completed half-interval square from the forward value.
    pub max_completion_error: f64,
    /// `max |X phi1 + Y phi2 - omega| / max(1, |omega|)` on the residual grid.
    pub functional_residual: f64,
    pub interlacing: InterlacingReport,
    pub regular_gaps: usize,
    pub shift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Forward → withhold → reconstruct → compare.
pub fn run_roundtrip(
    config: &PipelineConfig,
    q: &PotentialGrid,
) -> Result<(RoundtripReport, Reconstruction)> {
    config.validate()?;
    let t0 = Instant::now();
    let doc = run_forward(config, q)?;
    let truth = doc.to_spectra_set()?;
    let forward_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let input = ThreeSpectraInput::from_spectra(
        &truth,
        &config.missing_nu1,
        &config.missing_nu2,
        config.coincidence_tol,
    )?;
    let rec = run_reconstruct(config, &input)?;
    let reconstruct_s = t1.elapsed().as_secs_f64();

    let c = &rec.solution.completed;
    let mut withheld = Vec::new();
    for (branch, idx, exact, got) in [
        (Branch::HalfDDLeft, &config.missing_nu1, &truth.nu1, &c.nu1),
        (Branch::HalfDDRight, &config.missing_nu2, &truth.nu2, &c.nu2),
    ] {
        for &k in idx.iter() {
            let (e, r) = (exact.values()[k - 1], got.values()[k - 1]);
            withheld.push(RecoveredEigenvalue {
                branch,
                index: k,
                exact: e,
                recovered: r,
                error: (r - e).abs(),
            });
        }
    }
    let max_completion_error = [
        (&truth.nu1, &c.nu1),
        (&truth.nu2, &c.nu2),
        (&truth.mu1, &c.mu1),
        (&truth.mu2, &c.mu2),
    ]
    .iter()
    .flat_map(|(a, b)| {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).abs())
    })
    .fold(0.0, f64::max);
    let (l2_error, max_error) = potential_error(q, &rec.potential);
    let report = RoundtripReport {
        l2_error,
        max_error,
        withheld,
        max_completion_error,
        functional_residual: rec.solution.residuals.worst_ratio(),
        interlacing: rec.solution.interlacing.clone(),
        regular_gaps: rec.solution.regular.regular_count(),
        shift: rec.solution.shift,
        timings: config.timings.then_some(Timings {
            forward_s,
            reconstruct_s,
        }),
    };
    Ok((report, rec))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub interlacing: Option<InterlacingReport>,
    pub regular_gaps: Option<usize>,
    pub gaps_classified: Option<usize>,
    pub missing_nu1: Vec<usize>,
    pub missing_nu2: Vec<usize>,
}

/// Checks a document: interlacing and gap classification for complete data,
/// structural checks for three-spectra data.
pub fn validate(config: &PipelineConfig, doc: &SpectralDocument) -> Result<ValidationReport> {
    if doc.has_missing() {
        let input = doc.to_input(config.coincidence_tol)?;
        return Ok(ValidationReport {
            interlacing: None,
            regular_gaps: None,
            gaps_classified: None,
            missing_nu1: input.n1(),
            missing_nu2: input.n2(),
        });
    }
    let set = doc.to_spectra_set()?;
    let interlacing = validate_interlacing(&set, config.coincidence_tol)?;
    let map = classify_regular_intervals(&set, config.coincidence_tol)?;
    Ok(ValidationReport {
        interlacing: Some(interlacing),
        regular_gaps: Some(map.regular_count()),
        gaps_classified: Some(map.gaps.len()),
        missing_nu1: Vec::new(),
        missing_nu2: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// File I/O

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_potential(path: &Path) -> Result<PotentialGrid> {
    let raw: PotentialGrid = read_json(path)?;
    PotentialGrid::new(raw.x0, raw.x1, raw.samples)
}

/// `branch,k,square` rows.
pub fn spectra_csv(doc: &SpectralDocument) -> String {
    let mut s = String::from("branch,k,square\n");
    for r in &doc.sequences {
        for (i, v) in r.squares.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", r.branch, i + 1, v));
        }
    }
    s
}

pub fn format_spectra(doc: &SpectralDocument, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(doc),
        OutputFormat::Csv => Ok(spectra_csv(doc)),
    }
}

pub fn format_potential(q: &PotentialGrid, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(q),
        OutputFormat::Csv => Ok(q.to_csv()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn config_checks() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_ok());
        c.missing_nu1 = vec![0];
        assert!(c.validate().is_err());
        c.missing_nu1 = vec![101];
        assert!(c.validate().is_err());
        c = PipelineConfig {
            gl_count: 200,
            ..PipelineConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn forward_free_is_slot_spectra() {
        let c = PipelineConfig {
            count: 3,
            full_count: Some(3),
            grid: 64,
            gl_count: 3,
            ..PipelineConfig::default()
        };
        let q = PotentialGrid::constant(0.0, PI, 64, 0.0).unwrap();
        let doc = run_forward(&c, &q).unwrap();
        let set = doc.to_spectra_set().unwrap();
        for (got, want) in set.lambda.values().iter().zip([1.0, 4.0, 9.0]) {
            assert!((got - want).abs() < 1e-10);
        }
        assert!(doc.interlacing.unwrap().is_clean());
        assert!(spectra_csv(&SpectralDocument::from_spectra(&set)).contains("HalfDN_right,2,9"));
    }

    #[test]
    fn free_roundtrip_is_rejected() {
        let c = PipelineConfig {
            count: 16,
            grid: 128,
            missing_nu1: vec![1],
            ..PipelineConfig::default()
        };
        let c = PipelineConfig { gl_count: 16, ..c };
        let q = PotentialGrid::constant(0.0, PI, 128, 0.0).unwrap();
        let err = run_roundtrip(&c, &q).unwrap_err();
        assert!(matches!(err, Error::NearCoincidentSpectra { .. }), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn potential_error_of_identical_grids_is_zero() {
        let q = PotentialGrid::from_fn(0.0, 1.0, 50, |x| x * x).unwrap();
        let (l2, max) = potential_error(&q, &q);
        assert!(l2 < 1e-14 && max < 1e-14);
    }
}
