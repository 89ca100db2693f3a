use thiserror::Error;

/// Failure taxonomy shared by the library and the CLI.
///
/// The variants map onto the CLI exit codes: `Config`/`Io` are usage errors
/// (exit 2), `NonIntegrable`/`Convergence` are numerical failures (exit 3),
/// and `Precondition` marks inputs that violate a documented domain
/// restriction (exit 4).
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (wrong sign, wrong support,
    /// infeasible polynomial data, point outside the grid, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An integral failed to stabilize under time-band refinement; the
    /// integrand is too singular near the final time slice.
    #[error("integral does not stabilize: {0}")]
    NonIntegrable(String),

    /// An iterative method exhausted its budget without meeting tolerance.
    #[error("{what} did not converge: residual {residual:.3e} after {iterations} iterations")]
    Convergence {
        what: String,
        residual: f64,
        iterations: usize,
    },

    /// Malformed configuration, unknown keys, or inconsistent input files.
    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code for this failure class.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            Error::NonIntegrable(_) | Error::Convergence { .. } => 3,
            Error::Precondition(_) => 4,
        }
    }

    /// Short machine-readable kind tag used on the diagnostic stream.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Precondition(_) => "precondition",
            Error::NonIntegrable(_) => "non-integrable",
            Error::Convergence { .. } => "convergence",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
