use thiserror::Error;

/// Everything that can go wrong between reading spectra and writing a potential.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mismatched sequence lengths: {0}")]
    MismatchedLength(String),

    #[error("ambiguous gap {gap}: a point coincides with a gap endpoint and changes the regularity verdict")]
    AmbiguousGap { gap: usize },

    #[error("negative eigenvalue square {value} at index {index} in the asymptotic tail")]
    NegativeSquareTail { index: usize, value: f64 },

    #[error("shooting overflowed at z = {z}")]
    Overflow { z: f64 },

    #[error("could not isolate eigenvalue {index}: {detail}")]
    MissedEigenvalue { index: usize, detail: String },

    #[error("z = {z} sits on a truncated-tail baseline zero; increase the truncation order")]
    PoleAtBaselineZero { z: f64 },

    #[error("log-derivative requested at a zero (z = {z})")]
    AtZero { z: f64 },

    #[error("zero index {index} outside truncation order {order}")]
    IndexOutOfTruncation { index: usize, order: usize },

    #[error("interpolation node z = {z} coincides with a zero of the dividing product (disjointness violated)")]
    NearCoincidentSpectra { z: f64 },

    #[error("interpolation node z = {z} lies at the origin; a spectral shift is required")]
    ShiftRequired { z: f64 },

    #[error("zero not found: {0}")]
    ZeroNotFound(String),

    #[error("more than one zero in regular interval ({lower}, {upper})")]
    ExtraZero { lower: f64, upper: f64 },

    #[error("non-positive norming constant {value} at index {index}")]
    NonPositiveNorming { index: usize, value: f64 },

    #[error("Gelfand-Levitan system ill-conditioned at x = {x} (estimate {condition:.3e})")]
    IllConditionedGL { x: f64, condition: f64 },

    #[error("no regular intervals in the supplied data")]
    NoRegularIntervals,

    #[error("substituted {sequence} value at index {index} does not lie in a regular interval")]
    NotRegular {
        sequence: &'static str,
        index: usize,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 4,
            Error::Json(_)
            | Error::InvalidInput(_)
            | Error::MismatchedLength(_)
            | Error::AmbiguousGap { .. }
            | Error::NegativeSquareTail { .. }
            | Error::NearCoincidentSpectra { .. }
            | Error::NoRegularIntervals
            | Error::NotRegular { .. } => 2,
            _ => 3,
        }
    }

    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::MismatchedLength(_) => "MismatchedLength",
            Error::AmbiguousGap { .. } => "AmbiguousGap",
            Error::NegativeSquareTail { .. } => "NegativeSquareTail",
            Error::Overflow { .. } => "Overflow",
            Error::MissedEigenvalue { .. } => "MissedEigenvalue",
            Error::PoleAtBaselineZero { .. } => "PoleAtBaselineZero",
            Error::AtZero { .. } => "AtZero",
            Error::IndexOutOfTruncation { .. } => "IndexOutOfTruncation",
            Error::NearCoincidentSpectra { .. } => "NearCoincidentSpectra",
            Error::ShiftRequired { .. } => "ShiftRequired",
            Error::ZeroNotFound(_) => "ZeroNotFound",
            Error::ExtraZero { .. } => "ExtraZero",
            Error::NonPositiveNorming { .. } => "NonPositiveNorming",
            Error::IllConditionedGL { .. } => "IllConditionedGL",
            Error::NoRegularIntervals => "NoRegularIntervals",
            Error::NotRegular { .. } => "NotRegular",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
