use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("unknown phantom `{0}`")]
    UnknownPhantom(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("unstable time stepping: {0}")]
    Unstable(String),

    #[error("Neumann iteration does not contract at k = {k} (update ratio {ratio:.3})")]
    NonContraction { k: f64, ratio: f64 },

    #[error("ill-conditioned fit (condition number {0:.3e})")]
    IllConditioned(f64),

    /// A nonvanishing hypothesis needed to separate speed from source failed.
    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("non-physical estimate: {0}")]
    NonPhysical(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("experiment spec error: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical guard (contraction, nonvanishing
    /// weights, conditioning) as opposed to malformed input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::NonContraction { .. }
                | Error::IllConditioned(_)
                | Error::DegenerateWeights(_)
                | Error::NonPhysical(_)
        )
    }
}
