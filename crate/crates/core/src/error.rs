use thiserror::Error;

use crate::spin::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad class of a failure; the CLI maps each class to an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed or inconsistent input documents.
    Config,
    /// A physical or contract invariant was violated.
    Validation,
    /// A numerical routine failed.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin quantum number {0}: must be a non-negative half-integer")]
    InvalidSpin(f64),

    #[error("electron spin must be at least 1/2, got {0}")]
    ElectronSpinTooSmall(f64),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e}, tolerance {tolerance:e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("levels {first} and {second} both have dominant basis state {label}")]
    LabelAmbiguity {
        first: usize,
        second: usize,
        label: Label,
    },

    #[error("no level with label {0}")]
    UnknownLabel(Label),

    #[error("levels {0} and {1} are not connected by an allowed transition")]
    InvalidTransition(usize, usize),

    #[error("transition index {index} out of range (table has {len})")]
    TransitionOutOfRange { index: usize, len: usize },

    #[error("drive targets mix EPR and NMR transitions")]
    MixedDrive,

    #[error("drive has no targets")]
    EmptyDrive,

    #[error("nuclear projection mI = {0} does not exist for this system")]
    InvalidManifold(f64),

    #[error("no resonance for mI = {mi} at {freq_mhz} MHz in the searched field range")]
    Unreachable { mi: f64, freq_mhz: f64 },

    #[error("rate matrix is not a generator: {0}")]
    InvalidGenerator(String),

    #[error("steady state is not unique: {0} closed classes in the level graph")]
    Multiplicity(usize),

    #[error("population {value:e} at level {level} is below the clipping floor")]
    NegativePopulation { level: usize, value: f64 },

    #[error("populations sum to {0}, expected 1")]
    NotNormalized(f64),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("no NMR transition within {f_start}..{f_end} MHz; the sweep would be inert")]
    InertSweep { f_start: f64, f_end: f64 },

    #[error("line spacing {0} is not above three linewidths of {1}; components are unresolved")]
    Unresolved(f64, f64),

    #[error("line at {0} mT lies outside the spectrum range")]
    LineOutOfRange(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Config(_) | Io { .. } => ErrorClass::Config,
            NoConvergence { .. } | Integrator(_) | NegativePopulation { .. } => {
                ErrorClass::Numerical
            }
            _ => ErrorClass::Validation,
        }
    }

    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Validation => 3,
            ErrorClass::Numerical => 4,
        }
    }

    /// Stable identifier of the variant.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            InvalidSpin(_) => "invalid_spin",
            ElectronSpinTooSmall(_) => "electron_spin_too_small",
            InvalidParameter { .. } => "invalid_parameter",
            DimensionMismatch { .. } => "dimension_mismatch",
            NotHermitian { .. } => "not_hermitian",
            NoConvergence { .. } => "no_convergence",
            LabelAmbiguity { .. } => "label_ambiguity",
            UnknownLabel(_) => "unknown_label",
            InvalidTransition(..) => "invalid_transition",
            TransitionOutOfRange { .. } => "transition_out_of_range",
            MixedDrive => "mixed_drive",
            EmptyDrive => "empty_drive",
            InvalidManifold(_) => "invalid_manifold",
            Unreachable { .. } => "unreachable",
            InvalidGenerator(_) => "invalid_generator",
            Multiplicity(_) => "multiplicity",
            NegativePopulation { .. } => "negative_population",
            NotNormalized(_) => "not_normalized",
            Integrator(_) => "integrator",
            InertSweep { .. } => "inert_sweep",
            Unresolved(..) => "unresolved",
            LineOutOfRange(_) => "line_out_of_range",
            Config(_) => "config",
            Io { .. } => "io",
        }
    }
}

impl ErrorClass {
    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Config => "config",
            ErrorClass::Validation => "validation",
            ErrorClass::Numerical => "numerical",
        }
    }
}
