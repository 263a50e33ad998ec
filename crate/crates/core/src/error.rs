use thiserror::Error;

/// Errors surfaced by the simulation and decoding core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectral grid violates span rule: {0}")]
    GridSpan(String),

    #[error("wavelength-to-time mapping undefined: total dispersion is zero")]
    MappingUndefined,

    #[error("FWHM measurement failed: {0}")]
    MeasurementFailed(String),

    #[error("undecodable event: {0}")]
    UndecodableEvent(String),

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("trace I/O failed: {0}")]
    TraceIo(#[from] std::io::Error),

    #[error("malformed trace: {0}")]
    TraceFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
