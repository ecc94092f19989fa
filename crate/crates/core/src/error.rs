use thiserror::Error;

/// Errors raised by the denoising stages.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid point at index {index}: non-finite coordinate")]
    InvalidPoint { index: usize },
    #[error("octree depth exceeded (cap {cap} levels)")]
    DepthExceeded { cap: u32 },
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("triangle {index} references vertex {vertex} out of range")]
    IndexOutOfRange { index: usize, vertex: u32 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("label count {labels} does not match point count {points}")]
    LabelMismatch { points: usize, labels: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
