use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A ring or run specification failed validation.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A formula evaluator was called outside its domain.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// State enumeration exceeded the configured cap.
    #[error("state cap exceeded: {count} states enumerated, cap is {cap}")]
    StateCapExceeded { count: usize, cap: usize },

    /// The exact engine ran past its step bound without the
    /// coefficients settling. This signals an engine bug, not a
    /// mathematical possibility.
    #[error("taylor coefficients failed to converge within {max_steps} steps (k = {k})")]
    NoConvergence { k: usize, max_steps: u64 },

    /// A coefficient changed after convergence had been declared.
    #[error("taylor coefficients changed after declared convergence at step {declared_at}")]
    ConvergenceViolated { declared_at: u64 },

    /// Fixed-width integer arithmetic overflowed; retry with big
    /// integers.
    #[error("coefficient arithmetic overflowed i128; use the big-integer engine")]
    CoefficientOverflow,

    /// A state passed to a lookup is not part of the enumeration.
    #[error("state not in enumeration: {0}")]
    UnknownState(String),

    /// The routing matrix is not transient.
    #[error("routing matrix is not transient: {0}")]
    NotTransient(String),

    /// A linear solve hit a singular matrix.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// The queue cap is too small for the requested tolerance.
    #[error("queue cap {cap} too small: {source}")]
    CapTooSmall { cap: usize, source: Box<Error> },

    /// Butterfly routing produced paths that failed verification, or an
    /// internal balancing step had no solution. Either is a bug signal.
    #[error("routing failed verification: {0}")]
    RoutingFailed(String),

    /// The mid-layer connectivity hypothesis of permutation routing
    /// does not hold for this pair; the witness is a disconnected
    /// (left, right) sub-butterfly pair.
    #[error("mid-layer connectivity hypothesis fails: left {left:?} / right {right:?} are not connected")]
    HypothesisFailed { left: String, right: String },

    /// Bad input to a routing call.
    #[error("invalid routing input: {0}")]
    InvalidRouting(String),

    /// Not enough samples or replications for the requested estimate.
    #[error("insufficient replications: {0}")]
    InsufficientReplications(String),
}
