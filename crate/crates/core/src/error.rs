use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Grid node as `(i, j)` with `i` along s and `j` along t.
pub type Node = (usize, usize);

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} is not on the upper hyperboloid sheet (<v,v> = {norm})")]
    NotOnHyperboloid { point: [f64; 3], norm: f64 },

    #[error("matrix is not an orthochronous isometry of H2 (defect {defect:e})")]
    NotAnIsometry { defect: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("metric condition mu^2 - 4|Q0|^2 >= 0 violated at node {node:?} (radicand {radicand:e})")]
    MetricCondition { node: Node, radicand: f64 },

    #[error("Abresch-Rosenberg differential vanishes at node {node:?} (|Q| = {value:e})")]
    VanishingQ { node: Node, value: f64 },

    #[error("singular point of the Gauss map at node {node:?}: |tau^2 - 4|Q|^2| = {value:e}")]
    SingularPoint { node: Node, value: f64 },

    #[error(
        "Gauss map is singular at every node; it is geodesic-valued and the surface is a \
         screw-motion example (use the sa-earp construction)"
    )]
    SingularEverywhere,

    #[error("angle function u = {value:e} below threshold at node {node:?}")]
    Regularity { node: Node, value: f64 },

    #[error("invalid data at node {node:?}: {reason}")]
    Data { node: Node, reason: String },

    #[error("Newton solver did not converge after {iterations} iterations (residual history {history:?})")]
    SolverDiverged { iterations: usize, history: Vec<f64> },

    #[error("linear solver stalled at relative residual {0:e}")]
    LinearSolver(f64),

    #[error("frame drift {drift:e} exceeds limit at node {node:?} ({relation})")]
    FrameDrift { node: Node, relation: &'static str, drift: f64 },

    #[error("input rejected: {0}")]
    Rejected(String),

    #[error("reflection hypotheses fail on axis nodes {nodes:?}: {reason}")]
    AxisHypothesis { nodes: Vec<usize>, reason: String },

    #[error("field format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
