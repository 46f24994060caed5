use thiserror::Error;

use crate::diophantine::ContinuedFraction;
use crate::fourier::DualIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible symbol: {0}")]
    IncompatibleSymbol(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// The conjugator D(ℓ) needs (α₁, α₂) ≠ 0; the diagonal case is handled separately.
    #[error("degenerate conjugator: alpha_1 = alpha_2 = 0")]
    DegenerateConjugator,

    #[error("scan too large: about {points:.3e} lattice points (limit 1e8)")]
    ScanTooLarge { points: f64 },

    #[error("precision exhausted after {} partial quotients", .partial.quotients.len())]
    PrecisionExhausted { partial: Box<ContinuedFraction> },

    #[error("undefined quotient: the input has zero L2 norm")]
    UndefinedQuotient,

    #[error("no counterexample found: margins stay bounded below on the scanned range")]
    NoCounterexample,

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("unsupported conjugation: no intertwiner supplied for {0}")]
    UnsupportedConjugation(DualIndex),

    #[error("right-hand side is not in the range of the symbol at {0}")]
    NotInRange(DualIndex),

    #[error("no witness: the solvability gate did not report failure")]
    NoWitness,

    #[error("psi transform requires a diagonal sigma_X block at {0}")]
    RequiresDiagonalization(DualIndex),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(format!("line {} column {}: {err}", err.line(), err.column()))
    }
}
