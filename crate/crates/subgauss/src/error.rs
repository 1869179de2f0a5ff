use thiserror::Error;

/// Crate-wide error type. Variants map onto the process exit codes used by
/// the command-line tool: configuration problems exit with 2, numerical
/// failures with 3 and insufficient data with 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unknown vertex {0}")]
    UnknownVertex(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("ball of radius {radius} around vertex {center} touches the graph boundary")]
    Boundary { center: usize, radius: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("annulus too thin: width {width} cannot host {subannuli} sub-annuli{hint}")]
    AnnulusTooThin {
        width: usize,
        subannuli: usize,
        hint: String,
    },

    #[error("perturbation amplitude too large: max |psi| = {max_abs_psi:.3} exceeds cap {cap}; largest safe lambda is {max_safe_lambda:.6}")]
    Amplitude {
        max_abs_psi: f64,
        cap: f64,
        max_safe_lambda: f64,
    },

    #[error("cascade not converged: top-level ratio {ratio:.6} above threshold {threshold:.6}")]
    CascadeNotConverged { ratio: f64, threshold: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 0 success, 2 configuration,
    /// 3 numerical, 4 insufficient data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Configuration(_) | Error::Parse { .. } => 2,
            Error::InsufficientData(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
