use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use trispectral::pipeline::{
    self, format_potential, format_spectra, read_json, read_potential, run_forward,
    run_reconstruct, run_roundtrip, three_spectra_input, to_json, write_text, OutputFormat,
    PipelineConfig,
};
use trispectral::{Error, ReferenceKind, SpectralDocument};

#[derive(Parser)]
#[command(
    name = "trispectral",
    version,
    about = "Potential recovery from a full spectrum and partial half-interval spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the five spectra of a potential.
    Forward(Common),
    /// Recover the potential from spectral data.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Print the first K factors of omega, phi1 and phi2 as CSV to stderr.
        #[arg(long, value_name = "K")]
        dump_product: Option<usize>,
    },
    /// Forward solve, withhold, reconstruct, and compare.
    Roundtrip {
        #[command(flatten)]
        common: Common,
        /// Include wall-clock timings in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Check interlacing and regularity of spectral data.
    Validate(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reference {
    Leading,
    Refined,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    input: PathBuf,
    /// Output file; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Eigenvalues per half-interval sequence.
    #[arg(long = "num-eigenvalues", default_value_t = 100)]
    num_eigenvalues: usize,
    /// Full-interval eigenvalues (default: twice the half-interval count).
    #[arg(long)]
    num_full: Option<usize>,
    /// Direct-solver grid intervals.
    #[arg(long, default_value_t = 2000)]
    grid: usize,
    /// Gelfand–Levitan grid intervals per half.
    #[arg(long = "gl-grid", default_value_t = 200)]
    gl_grid: usize,
    /// Eigenvalues per sequence used by the Gelfand–Levitan step.
    #[arg(long = "gl-count", default_value_t = 40)]
    gl_count: usize,
    #[arg(long = "missing-nu1", value_delimiter = ',')]
    missing_nu1: Vec<usize>,
    #[arg(long = "missing-nu2", value_delimiter = ',')]
    missing_nu2: Vec<usize>,
    #[arg(long = "tol-root", default_value_t = 1e-13)]
    tol_root: f64,
    #[arg(long = "tol-coincidence", default_value_t = 1e-9)]
    tol_coincidence: f64,
    #[arg(long, value_enum, default_value = "refined")]
    reference: Reference,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

impl Common {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            count: self.num_eigenvalues,
            full_count: self.num_full,
            grid: self.grid,
            gl_grid: self.gl_grid,
            gl_count: self.gl_count.min(self.num_eigenvalues),
            tol_root: self.tol_root,
            coincidence_tol: self.tol_coincidence,
            reference: match self.reference {
                Reference::Leading => ReferenceKind::Leading,
                Reference::Refined => ReferenceKind::Refined,
            },
            missing_nu1: self.missing_nu1.clone(),
            missing_nu2: self.missing_nu2.clone(),
            format: match self.format {
                Format::Json => OutputFormat::Json,
                Format::Csv => OutputFormat::Csv,
            },
            timings: false,
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Error> {
    match output {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `dir/name.ext` → `dir/name.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Forward(c) => {
            let cfg = c.config();
            let q = read_potential(&c.input)?;
            let doc = run_forward(&cfg, &q)?;
            if let Some(r) = &doc.interlacing {
                for v in &r.violations {
                    log::warn!("interlacing: {v}");
                }
            }
            emit(c.output.as_deref(), &format_spectra(&doc, cfg.format)?)
        }
        Command::Reconstruct {
            common: c,
            dump_product,
        } => {
            let cfg = c.config();
            let doc: SpectralDocument = read_json(&c.input)?;
            let input = three_spectra_input(&cfg, &doc)?;
            let rec = run_reconstruct(&cfg, &input)?;
            if let Some(k) = dump_product {
                let p = &rec.solution.products;
                for (name, prod) in [("omega", &p.omega), ("phi1", &p.phi1), ("phi2", &p.phi2)] {
                    eprintln!("# {name}");
                    eprint!("{}", prod.factor_table_csv(0.0, k));
                }
            }
            log::info!(
                "functional residual {:.3e}, {} regular gaps",
                rec.solution.residuals.worst_ratio(),
                rec.solution.regular.regular_count()
            );
            if let Some(out) = &c.output {
                write_text(
                    &sibling(out, "completed.json"),
                    &to_json(&rec.completed_document())?,
                )?;
                write_text(
                    &sibling(out, "residuals.csv"),
                    &rec.solution.residuals.to_csv(),
                )?;
            }
            emit(
                c.output.as_deref(),
                &format_potential(&rec.potential, cfg.format)?,
            )
        }
        Command::Roundtrip { common: c, timings } => {
            let cfg = PipelineConfig {
                timings,
                ..c.config()
            };
            let q = read_potential(&c.input)?;
            let (report, _) = run_roundtrip(&cfg, &q)?;
            emit(c.output.as_deref(), &to_json(&report)?)
        }
        Command::Validate(c) => {
            let cfg = c.config();
            let doc: SpectralDocument = read_json(&c.input)?;
            let report = pipeline::validate(&cfg, &doc)?;
            let clean = report.interlacing.as_ref().is_none_or(|r| r.is_clean());
            emit(c.output.as_deref(), &to_json(&report)?)?;
            if clean {
                Ok(())
            } else {
                Err(Error::InvalidInput("interlacing violated".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRISPECTRAL_LOG", "warn"))
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
