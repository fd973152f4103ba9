//! Approximate distance functions on unstructured triangular meshes.
//!
//! The distance `d` to a boundary part `Γ_D` is recovered from the solution
//! `φ` of the screened Poisson problem `ν²Δφ = φ`, `φ = 1` on `Γ_D`, through
//! `d = -ν log φ`. The remaining boundary `Γ_S` is handled either by a
//! nonlinear fixed point built on the Godunov neighbour relation (the default),
//! by a Robin condition, or by treating it as Dirichlet as well.
//!
//! ```
//! use distviac::{fixtures, eikonal::{self, SolverConfig}};
//!
//! let mesh = fixtures::annulus(1.0, 2.0, 0.2).unwrap();
//! let solution = eikonal::solve(&mesh, &SolverConfig::new(0.1)).unwrap();
//! assert!(solution.report.converged);
//! ```

pub mod assembly;
pub mod eikonal;
mod error;
pub mod fixtures;
pub mod mesh;
pub mod oracles;
pub mod sparse;

pub use assembly::{FemSystem, MassLumping};
pub use eikonal::{
    BcMode, FieldKind, Reducer, ScalarField, Solution, SolveReport, SolverConfig,
};
pub use error::{Error, Result};
pub use mesh::{BoundaryTag, MeshFormat, MeshQualityReport, Point, TriMesh, VertexClass};
pub use oracles::{ErrorReport, ExactCase};
pub use sparse::{SolveStats, SparseSymMatrix};
