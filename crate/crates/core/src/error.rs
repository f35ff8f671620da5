use thiserror::Error;

/// Errors produced anywhere in the denoising pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid cube: {0}")]
    InvalidCube(String),

    #[error("bad magic bytes {0:?}, expected \"CHSC\"")]
    BadMagic([u8; 4]),

    #[error("unsupported CHSC version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("wavelengths are not strictly increasing")]
    NonMonotoneWavelengths,

    #[error("wavelength must be positive, got {0} nm")]
    NonPositiveWavelength(f64),

    #[error("coordinate ({x}, {y}) out of bounds for {rows}x{cols} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        rows: usize,
        cols: usize,
    },

    #[error("at least 3 bands are required, got {0}")]
    TooFewBands(usize),

    #[error("need more pixels ({pixels}) than bands ({bands}) for inter-band regression")]
    TooFewPixels { pixels: usize, bands: usize },

    #[error("inter-band regression is singular even after ridge regularization")]
    SingularRegression,

    #[error("eigen-decomposition failed to converge ({0})")]
    DecompositionFailed(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("reference phase has zero norm in band {0}")]
    ZeroReference(usize),

    #[error("averaging baseline requires a dispersion model")]
    DispersionRequired,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
