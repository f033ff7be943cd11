use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree {0} appears more than once in signature")]
    DuplicateDegree(u32),
    #[error("multiplicity of degree {0} must be positive")]
    InvalidMultiplicity(u32),
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("index out of range: {0}")]
    IndexError(String),
    #[error("degree {0} is not present in the signature")]
    DegreeNotPresent(u32),
    #[error("degree {0} exceeds the supported maximum of {1}")]
    DegreeTooLarge(u32, u32),
    #[error("matrix is not a proper rotation (orthogonality residual {0:.3e})")]
    NotARotation(f64),
    #[error("head counts differ: {0} vs {1}")]
    HeadMismatch(usize, usize),
    #[error("elementwise channel mode needs equal multiplicities: {0}")]
    ChannelMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),
    #[error("signature mismatch between stacked blocks: {0}")]
    SignatureMismatch(String),
    #[error("adjacency matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("node {0} has no incident edges")]
    IsolatedNode(usize),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("graph spectrum is degenerate (smallest eigenvalue gap {0:.3e})")]
    DegenerateSpectrum(f64),
    #[error("quadrature grid supports band limit {grid}, requested {requested}")]
    GridTooCoarse { grid: usize, requested: usize },
    #[error("slope fit refused: {0}")]
    FitRefused(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
