use thiserror::Error;

/// Everything that can go wrong across the library.
///
/// Variants fall into two families: malformed or incompatible input
/// (`Malformed`, `Mismatch`, ...) and violated operation preconditions
/// (`Precondition`, `NotDifferentiable`, ...). The CLI maps the first
/// family to exit code 2 and the second to exit code 3.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("incompatible operands: {0}")]
    Mismatch(String),

    #[error("brute-force cap exceeded: Q = {q} > cap {cap}")]
    CapExceeded { q: usize, cap: usize },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("ambiguous clustering: group diameter {diameter} exceeds 2*tol = {bound}")]
    AmbiguousClustering { diameter: f64, bound: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not in neighborhood P(q; r): {0}")]
    OutsideNeighborhood(String),

    #[error("not differentiable: {0}")]
    NotDifferentiable(String),

    #[error("not strongly affinely approximatable: {0}")]
    NotStronglyApproximatable(String),

    #[error("non-monotone comparison cosine at step {step}: {previous} -> {current}")]
    NonMonotone {
        step: usize,
        previous: f64,
        current: f64,
    },

    #[error("grid too coarse at sample {index}: step distance {step_distance} with ambiguous tracking; refine the grid")]
    GridTooCoarse { index: usize, step_distance: f64 },
}

pub type Result<T> = std::result::Result<T, QError>;
