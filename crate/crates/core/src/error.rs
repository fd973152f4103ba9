use std::path::PathBuf;

use crate::eikonal::Solution;
use crate::sparse::SolveStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid mesh topology: {0}")]
    Topology(String),

    #[error("boundary tag error: {0}")]
    Tag(String),

    #[error("degenerate element {element}: area {area:e} below threshold {threshold:e}")]
    DegenerateElement {
        element: usize,
        area: f64,
        threshold: f64,
    },

    #[error("the Dirichlet vertex set is empty")]
    EmptyDirichletSet,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not symmetric positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("linear solver did not converge after {} iterations (relative residual {:e})", stats.iterations, stats.relative_residual)]
    LinearNotConverged { best: Vec<f64>, stats: SolveStats },

    #[error("non-finite value encountered in linear solve")]
    NonFinite,

    #[error("fixed point did not converge after {} outer iterations", .0.report.outer_iterations)]
    FixedPointNotConverged(Box<Solution>),

    #[error("non-positive phi {value:e} at vertex {vertex}: discrete maximum principle failed")]
    NonPositivePhi { vertex: usize, value: f64 },

    #[error("point ({x}, {y}) lies outside the domain of the exact solution")]
    OutsideDomain { x: f64, y: f64 },

    #[error("vertex {0} is unreachable from the source set")]
    UnreachableVertex(usize),

    #[error("field has {actual} values but the mesh has {expected} vertices")]
    MeshMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
