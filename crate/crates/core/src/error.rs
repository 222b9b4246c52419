use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector ({x}, {y}, {z}) is not a unit vector (norm {norm})")]
    NotUnit { x: f64, y: f64, z: f64, norm: f64 },

    #[error("Schmidt parameter p = {0} outside [1/2, 1]")]
    InvalidState(f64),

    /// A protocol or density was asked to run outside its valid parameter range.
    #[error("{what} is only defined for p in {range}, got p = {p}")]
    Domain { what: String, range: String, p: f64 },

    /// An analytic guarantee was violated numerically (e.g. a negative density).
    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("protocol violation in round {round}: {detail}")]
    ProtocolViolation { round: u64, detail: String },

    #[error("transport error: {0}")]
    Transport(#[from] std::io::Error),

    #[error("malformed frame: {0}")]
    Malformed(String),

    #[error("{0}")]
    Invalid(String),
}
