use thiserror::Error;

/// Every failure the library can report.
///
/// Variants split into input errors (malformed scenarios, invalid data) and
/// mathematical failures; see [`Error::is_input_error`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("denominator factor {factor} of degree {degree} has no roots in Q(i)")]
    IrreduciblePoleFactor { factor: String, degree: usize },

    #[error("pole at {point} is not in the declared singular set")]
    PoleOutsideD { point: String },

    #[error("pairing is not flat: G' + A^T G + G A = {residual}")]
    FlatnessViolation { residual: String },

    #[error("pairing matrix violates G^T = {sign} G")]
    SymmetryViolation { sign: i32 },

    #[error("pairing matrix is degenerate")]
    DegeneratePairing,

    #[error("unsupported local type at {point}: {reason}")]
    UnsupportedLocalType { point: String, reason: String },

    #[error("formal primitive at {point} is obstructed at level {level}")]
    Obstruction { point: String, level: i64 },

    #[error("truncation {given} at {point} is below the certified bound {needed}")]
    TruncationTooSmall { point: String, given: i64, needed: i64 },

    #[error("cohomology dimension is not stable in the pole bound: {dims:?} for bounds starting at {bound}")]
    UnstableDimension { bound: i64, dims: Vec<usize> },

    #[error("cannot certify: {0}")]
    CannotCertify(String),

    #[error("connection has {dim} global flat sections")]
    ConstantSubbundle { dim: usize },

    #[error("cycle condition fails at vertex {vertex} (defect {defect:e})")]
    CycleConditionViolated { vertex: String, defect: f64 },

    #[error("endpoint {point} is not admissible: {reason}")]
    InadmissibleEndpoint { point: String, reason: String },

    #[error("cycles are not in general position: {0:?}")]
    NotInGeneralPosition(Vec<String>),

    #[error("step size underflow near {at}")]
    StepUnderflow { at: String },

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("asymptotic tail too large at {point}: estimate {estimate:e}")]
    TailTooLarge { point: String, estimate: f64 },

    #[error("no convergence for {what}: successive values differ by {difference:e}")]
    NoConvergence { what: String, difference: f64 },
}

impl Error {
    /// Input errors map to CLI exit code 1, everything else to 2.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Input(_)
                | Error::IrreduciblePoleFactor { .. }
                | Error::PoleOutsideD { .. }
                | Error::FlatnessViolation { .. }
                | Error::SymmetryViolation { .. }
                | Error::DegeneratePairing
        )
    }

    /// Short machine-readable name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "Parse",
            Error::Input(_) => "Input",
            Error::IrreduciblePoleFactor { .. } => "IrreduciblePoleFactor",
            Error::PoleOutsideD { .. } => "PoleOutsideD",
            Error::FlatnessViolation { .. } => "FlatnessViolation",
            Error::SymmetryViolation { .. } => "SymmetryViolation",
            Error::DegeneratePairing => "DegeneratePairing",
            Error::UnsupportedLocalType { .. } => "UnsupportedLocalType",
            Error::Obstruction { .. } => "Obstruction",
            Error::TruncationTooSmall { .. } => "TruncationTooSmall",
            Error::UnstableDimension { .. } => "UnstableDimension",
            Error::CannotCertify(_) => "CannotCertify",
            Error::ConstantSubbundle { .. } => "ConstantSubbundle",
            Error::CycleConditionViolated { .. } => "CycleConditionViolated",
            Error::InadmissibleEndpoint { .. } => "InadmissibleEndpoint",
            Error::NotInGeneralPosition(_) => "NotInGeneralPosition",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::TailTooLarge { .. } => "TailTooLarge",
            Error::NoConvergence { .. } => "NoConvergence",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
