//! Recovery of a real potential `q` on `[0, a]` from the Dirichlet spectrum of
//! `-y'' + q y = lambda^2 y` together with partial Dirichlet spectra of the two
//! halves, where the withheld half-interval eigenvalues are replaced by
//! Dirichlet–Neumann eigenvalues of the opposite half.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral_data`]: sequences, validation, JSON documents;
//! - [`direct_solver`]: the forward problem (shooting and eigenvalue search);
//! - [`entire_products`]: characteristic functions from their zeros;
//! - [`functional_eq`]: interpolation of `X`, `Y` and completion of the half spectra;
//! - [`gl_inverse`]: the classical two-spectra step via the Gelfand–Levitan equation;
//! - [`pipeline`]: orchestration used by the command line tool.

pub mod direct_solver;
pub mod entire_products;
pub mod error;
pub mod functional_eq;
pub mod gl_inverse;
pub mod pipeline;
pub mod special;
pub mod spectral_data;

pub use direct_solver::{
    find_spectrum, forward_all, shoot, PotentialGrid, ShootingResult, SolverOptions,
};
pub use entire_products::{Baseline, EntireProduct};
pub use error::{Error, Result};
pub use functional_eq::{
    solve_three_spectra, CompletedSpectra, ReconstructionOptions, ReferenceKind,
};
pub use gl_inverse::{reconstruct_potential_two_spectra, NormingConstants};
pub use pipeline::PipelineConfig;
pub use spectral_data::{
    Branch, PartialSequence, RegularIntervalMap, SpectraSet, SpectralDocument, SpectralSequence,
    ThreeSpectraInput,
};
