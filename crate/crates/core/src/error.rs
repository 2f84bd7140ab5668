use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building or solving an instance.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Random graph generation exhausted its retry budget without
    /// producing a connected graph.
    #[error("no connected graph after {attempts} sampling attempts (p = {edge_prob})")]
    UnconnectableGraph { attempts: usize, edge_prob: f64 },

    /// The graph handed to the gossip construction is disconnected.
    #[error("graph is not connected: {0}")]
    NotConnected(String),

    /// Every constraint block is zero, so the coupling constraint carries
    /// no information and the derived constants are undefined.
    #[error("degenerate constraints: sum of A_i A_i^T is zero")]
    DegenerateConstraints,

    /// A certified spectral bound failed to hold.
    #[error("{context}: value {value:.12e} violates bound {bound:.12e}")]
    BoundViolated {
        context: String,
        value: f64,
        bound: f64,
    },

    /// Text input (LibSVM data, config files) failed to parse.
    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse {
        line: usize,
        column: usize,
        reason: String,
    },

    /// A vertical feature split disagrees with the data it partitions.
    #[error("column split mismatch: {0}")]
    SplitMismatch(String),

    /// A node attempted to read state owned by a non-neighbor.
    #[error("locality violation: node {reader} read a block owned by non-neighbor {owner}")]
    LocalityViolation { reader: usize, owner: usize },

    /// Vector or matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The instance admits no exactly feasible point.
    #[error("infeasible coupling constraint: least-squares residual {residual:.3e} exceeds {tol:.3e}")]
    Infeasible { residual: f64, tol: f64 },

    /// An iterate left the representable range (overflow or NaN).
    #[error("non-finite iterate at iteration {iter}")]
    NonFiniteIterate { iter: usize },

    /// The saddle-point system could not be factored.
    #[error("KKT system is singular or too ill-conditioned to factor")]
    SingularKkt,

    /// A dense reference computation was asked for on a problem too large
    /// for dense factorization.
    #[error("dimension too large for dense reference computation: {0}")]
    DimensionTooLarge(String),

    /// A required named block is missing from a node's store.
    #[error("node {node} holds no block named \"{name}\"")]
    MissingBlock { node: usize, name: String },

    /// File input or output failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failed.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
