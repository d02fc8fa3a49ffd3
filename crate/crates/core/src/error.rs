use thiserror::Error;

/// Errors surfaced by configuration loading, allocator construction and the
/// statistics helpers. Simulation divergence is *not* an error: runs record
/// failure in their metrics and keep going.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
