use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range 0..=3")]
    IndexOutOfRange { index: usize },

    #[error("representation defect: basis rank {rank} < 25")]
    RepresentationDefect { rank: usize },

    #[error("grid format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("axis {axis} has extent {extent}; derivatives need extent 1 or >= 3")]
    Stencil { axis: usize, extent: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("off mass shell: |k.k - m^2| = {violation:e}")]
    MassShell { violation: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("every grid point is singular (|Z| below threshold)")]
    EmptyDomain,

    #[error("singular scalar density: |Z| = {modulus:e} below threshold {threshold:e}")]
    SingularZ { modulus: f64, threshold: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
