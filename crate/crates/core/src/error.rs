use crate::circuit::text::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("wiring error: {0}")]
    Wiring(String),

    /// An R-polarized amplitude reached a cavity; the circuits only ever
    /// route L into a node, so this means the circuit is mis-built.
    #[error("routing error: R-polarized amplitude {amplitude:.3e} at cavity location '{location}'")]
    Routing { location: String, amplitude: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}
