use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A density matrix that fails Hermiticity, trace or positivity checks.
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("analytic QFI is singular (denominator {denominator:e}) at A={a}, B1={b1}, B2={b2}, phi-theta/2={offset}")]
    Singularity {
        denominator: f64,
        a: f64,
        b1: f64,
        b2: f64,
        offset: f64,
    },

    /// Numerical integration broke a state invariant.
    #[error("integration error at t={t}: {reason}; retry with a smaller dt (current dt={dt})")]
    Integration { t: f64, dt: f64, reason: String },

    /// The derivative has weight outside the support of a rank-deficient state.
    #[error(
        "unresolvable SLD component ({i},{j}): |drho_ij|={magnitude:e} with lambda_i+lambda_j≈0"
    )]
    Unresolvable { i: usize, j: usize, magnitude: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("sweep row {row} ({context}): {source}")]
    Row {
        row: usize,
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singularity { .. } | Error::Integration { .. } | Error::Unresolvable { .. } => {
                true
            }
            Error::Row { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
