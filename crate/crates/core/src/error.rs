use thiserror::Error;

/// Every failure the library can report.
///
/// Variants carry the numeric defect that tripped the check where one exists,
/// so callers can print which invariant failed and by how much.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has {len} entries, expected {expected}")]
    BadEntryCount { len: usize, expected: usize },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPSD(f64),

    #[error("eigendecomposition did not converge")]
    ConvergenceFailure,

    #[error("state is not normalized (trace {0})")]
    NotNormalized(f64),

    #[error("trace {0} exceeds 1")]
    TraceAboveOne(f64),

    #[error("cannot condition on a zero-probability event (trace {0:e})")]
    ZeroTrace(f64),

    #[error("vector is not a unit vector (norm {0})")]
    NotUnitVector(f64),

    #[error("map is not completely positive (min Choi eigenvalue {0:e})")]
    NotCP(f64),

    #[error("map is trace-increasing (max eigenvalue of Tr_out(Choi) exceeds 1 by {0:e})")]
    NotTraceNonIncreasing(f64),

    #[error("Kraus set is trace-increasing (max eigenvalue of sum K^dag K exceeds 1 by {0:e})")]
    InvalidKraus(f64),

    #[error("map is not a channel (trace-preservation defect {0:e})")]
    NotChannel(f64),

    #[error("instrument has no branches")]
    EmptyInstrument,

    #[error("instrument is invalid: {0}")]
    InvalidInstrument(String),

    #[error(
        "operation is not time-symmetric (defect_in {defect_in:e}, defect_out {defect_out:e}); \
         outside the time-symmetric set the scaled reversal leaves the set of quantum operations"
    )]
    NotTimeSymmetric { defect_in: f64, defect_out: f64 },

    #[error("support mismatch: output of the reference state leaks {0:e} outside supp(omega_B)")]
    SupportMismatch(f64),

    #[error("complement c0 - q is not completely positive (min Choi eigenvalue {0:e})")]
    NotComplementary(f64),

    #[error("state symmetries of mixed kinds (one unitary, one antiunitary) do not form an operation symmetry")]
    MixedKinds,

    #[error("not a symmetry (failed stage `{stage}`: {detail})")]
    NotASymmetry { stage: String, detail: String },

    #[error("vectors are not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),

    #[error("basis is incomplete: {got} vectors for dimension {dim}")]
    Incomplete { got: usize, dim: usize },

    #[error("operator {index} is not an orthogonal projector (defect {defect:e})")]
    NotProjector { index: usize, defect: f64 },

    #[error("projectors {first} and {second} are not mutually orthogonal (defect {defect:e})")]
    NotOrthogonal {
        first: usize,
        second: usize,
        defect: f64,
    },

    #[error("projectors do not sum to the identity (defect {0:e})")]
    NotComplete(f64),

    #[error("effect {index} is not a valid effect (0 <= P <= I violated by {defect:e})")]
    NotPSDEffect { index: usize, defect: f64 },

    #[error("effects do not sum to the identity (defect {0:e})")]
    NotNormalizedPOVM(f64),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    /// Stable short name of the variant, used in CLI reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonSquare { .. } => "NonSquare",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::BadEntryCount { .. } => "BadEntryCount",
            Error::NonFinite => "NonFinite",
            Error::NotHermitian(_) => "NotHermitian",
            Error::NotPSD(_) => "NotPSD",
            Error::ConvergenceFailure => "ConvergenceFailure",
            Error::NotNormalized(_) => "NotNormalized",
            Error::TraceAboveOne(_) => "TraceAboveOne",
            Error::ZeroTrace(_) => "ZeroTrace",
            Error::NotUnitVector(_) => "NotUnitVector",
            Error::NotCP(_) => "NotCP",
            Error::NotTraceNonIncreasing(_) => "NotTraceNonIncreasing",
            Error::InvalidKraus(_) => "InvalidKraus",
            Error::NotChannel(_) => "NotChannel",
            Error::EmptyInstrument => "EmptyInstrument",
            Error::InvalidInstrument(_) => "InvalidInstrument",
            Error::NotTimeSymmetric { .. } => "NotTimeSymmetric",
            Error::SupportMismatch(_) => "SupportMismatch",
            Error::NotComplementary(_) => "NotComplementary",
            Error::MixedKinds => "MixedKinds",
            Error::NotASymmetry { .. } => "NotASymmetry",
            Error::NotOrthonormal(_) => "NotOrthonormal",
            Error::Incomplete { .. } => "Incomplete",
            Error::NotProjector { .. } => "NotProjector",
            Error::NotOrthogonal { .. } => "NotOrthogonal",
            Error::NotComplete(_) => "NotComplete",
            Error::NotPSDEffect { .. } => "NotPSDEffect",
            Error::NotNormalizedPOVM(_) => "NotNormalizedPOVM",
            Error::InvariantViolation(_) => "InvariantViolation",
        }
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn not_symmetry(stage: &str, detail: impl Into<String>) -> Self {
        Error::NotASymmetry {
            stage: stage.to_string(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
