use thiserror::Error;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
    Data,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("eigensolver failed on a {dim}x{dim} problem: {detail}")]
    Solver { dim: usize, detail: String },

    #[error("truncation not converged in mode `{mode}` at {levels} levels: eigenvalue shift {shift_khz:.3} kHz exceeds {tolerance_khz} kHz")]
    Convergence {
        mode: String,
        levels: usize,
        shift_khz: f64,
        tolerance_khz: f64,
    },

    #[error("range error: {0}")]
    Range(String),

    #[error("unphysical network: {0}")]
    Unphysical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("state identification failed: {0}")]
    Identification(String),

    #[error("resonance not bracketed: {0}")]
    NotBracketed(String),

    #[error("inconsistent data at row {row}: {detail}")]
    InconsistentData { row: usize, detail: String },

    #[error("unbounded amplitude: {0}")]
    UnboundedAmplitude(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("at flux point {flux:.6}: {source}")]
    AtFlux {
        flux: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::Unphysical(_) => ErrorKind::Config,
            Error::Data(_) | Error::InconsistentData { .. } => ErrorKind::Data,
            Error::AtFlux { source, .. } => source.kind(),
            _ => ErrorKind::Numeric,
        }
    }

    /// Attaches the flux point at which a sweep failed.
    pub fn at_flux(self, flux: f64) -> Error {
        match self {
            e @ Error::AtFlux { .. } => e,
            e => Error::AtFlux {
                flux,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
