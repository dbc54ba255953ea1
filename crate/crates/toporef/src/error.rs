use thiserror::Error;

/// Errors shared by every module of the crate.
///
/// The split matters for callers: `InvalidInput` / `Domain` indicate a bad
/// request (exit code 2 in the CLI), `Solver` indicates that a numerical
/// routine gave up (exit code 3), and the remaining variants are structured
/// outcomes that some callers treat as data rather than failure.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} = {value} outside domain [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("solver failure: {0}")]
    Solver(String),

    /// A side pair has no preimage on the reference surface: the second
    /// distance lies outside the range attained on the parallel circle.
    #[error("side pair (d_o = {d_o}, d_p = {d_p}) not representable: {reason}")]
    NotRepresentable { d_o: f64, d_p: f64, reason: String },

    /// Triangle perimeter exceeds the total meridian length bound `2 ell`
    /// of a closed reference surface.
    #[error("perimeter {perimeter} exceeds the bound {bound}")]
    PerimeterViolation { perimeter: f64, bound: f64 },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
