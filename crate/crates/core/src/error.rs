use thiserror::Error;

/// Errors raised by the geometric and numeric operations of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("degenerate line: points coincide within {eps:e}")]
    DegenerateLine { eps: f64 },

    #[error("lines are parallel; no finite intersection")]
    ParallelLines,

    #[error("degenerate quad: corners {a} and {b} coincide")]
    DegenerateQuad { a: usize, b: usize },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("score list contains no positive pair")]
    NoPositives,

    #[error("vertex {index} is behind the camera (depth {depth:e})")]
    BehindCamera { index: usize, depth: f64 },

    #[error("cuboid is in the {actual} frame, expected {expected}")]
    WrongFrame {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
