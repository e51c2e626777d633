//! Error types for the engine, one enum per layer.
//!
//! Validation *violations* (stability, connectivity) are ordinary data
//! returned by `validate_stable`; the errors here are hard failures:
//! malformed inputs, non-unit divisions, degenerate parameters, and
//! numerical procedures that could not certify their result.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RingError {
    #[error("not a unit: {0}")]
    NotAUnit(String),
    #[error("incompatible series contexts: {0}")]
    ContextMismatch(String),
    #[error("not divisible: {0}")]
    NotDivisible(String),
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("unknown tail `{0}`")]
    UnknownTail(String),
    #[error("unknown branch `{0}`")]
    UnknownBranch(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("path is not reduced at position {0}")]
    NotReduced(usize),
    #[error("path breaks at position {position}: {detail}")]
    BrokenPath { position: usize, detail: String },
    #[error("cannot split vertex `{vertex}`: {reason}")]
    BadSplit { vertex: String, reason: String },
    #[error("cannot contract edge `{edge}`: {reason}")]
    BadContraction { edge: String, reason: String },
    #[error("malformed graph: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum MoebiusError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("matrix is singular (determinant not a unit)")]
    Singular,
    #[error("degenerate edge parameters: {0}")]
    DegenerateEdge(String),
    #[error("not loxodromic: {0}")]
    NotLoxodromic(String),
    #[error("fixed-point iteration did not stabilize: {0}")]
    NoConvergence(String),
    #[error("degenerate cross-ratio: {0}")]
    DegenerateCrossRatio(String),
    #[error("evaluation at a pole: {0}")]
    AtPole(String),
}

#[derive(Debug, Error)]
pub enum SchottkyError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Moebius(#[from] MoebiusError),
    #[error("missing parameter: {0}")]
    MissingParameter(String),
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error("isometric circles overlap (decrease |y| or respace x): {0}")]
    NotSchottky(String),
    #[error("generator index {0} out of range 1..={1}")]
    BadGeneratorIndex(usize, usize),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("contour passes too close to a pole: {0}")]
    ContourNearPole(String),
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailed(String),
    #[error("linear system is singular: {0}")]
    SingularSystem(String),
    #[error("degenerate factor in period product for word `{0}`")]
    DegenerateFactor(String),
    #[error("degenerate-fiber evaluation failed: {0}")]
    Restriction(String),
}

#[derive(Debug, Error)]
pub enum KzError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph does not have the required shape: {0}")]
    BadShape(String),
    #[error("a tail is required to realize the defining relation")]
    NoTails,
    #[error("bad index data: {0}")]
    BadIndices(String),
    #[error("coincident poles: {0}")]
    CoincidentPoles(String),
    #[error("transport failed: {0}")]
    TransportFailed(String),
    #[error("bad request: {0}")]
    BadRequest(String),
}
