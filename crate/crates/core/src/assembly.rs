//! P1 finite element matrices and the global screened Poisson system.
//!
//! The weak form `ν²∫∇φ·∇ψ + ∫φψ = 0` gives `(M + ν²R) φ = 0` with `M` the
//! mass and `R` the stiffness matrix. Fixed vertices are eliminated: the
//! system is restricted to the free vertices and their couplings to fixed
//! values move to the right-hand side.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::{signed_area, BoundaryEdge, BoundaryTag, Point, TriMesh, VertexClass};
use crate::sparse::{CsrMatrix, SparseSymMatrix, TripletBuilder};
use crate::{Error, Result};

/// Relative threshold: an element is degenerate when its area is below
/// `AREA_EPS_FACTOR · diag²`, `diag` being the bounding-box diagonal.
pub const AREA_EPS_FACTOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMatrix {
    pub entries: [[f64; 3]; 3],
    pub element: usize,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassLumping {
    /// Exact integrals of products of hat functions.
    #[default]
    Consistent,
    /// Row-sum lumping; the mass matrix becomes diagonal.
    Lumped,
}

/// How Soner vertices enter the linear system.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SonerTreatment {
    /// Soner vertices carry prescribed values, like Dirichlet ones.
    #[default]
    Fixed,
    /// Soner vertices are unknowns with the natural condition `∇φ·n = 0`.
    Natural,
    /// Soner vertices are unknowns with the boundary term `ν B` added,
    /// the weak form of `∇φ·n = -φ/ν`.
    Robin,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssemblyOptions {
    pub mass: MassLumping,
    pub soner: SonerTreatment,
}

fn bbox_diagonal(points: &[Point]) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi[0] - lo[0]).hypot(hi[1] - lo[1])
}

fn checked_area(points: &[Point; 3], element: usize, area_eps: f64) -> Result<f64> {
    let area = signed_area(&points[0], &points[1], &points[2]);
    if area <= area_eps {
        return Err(Error::DegenerateElement {
            element,
            area,
            threshold: area_eps,
        });
    }
    Ok(area)
}

fn stiffness_entries(points: &[Point; 3], area: f64) -> [[f64; 3]; 3] {
    // ∇θ_i = (a_k - a_j)^⊥ / (2|K|) for (i, j, k) cyclic
    let mut grad = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        grad[i] = [
            (points[j][1] - points[k][1]) / (2.0 * area),
            (points[k][0] - points[j][0]) / (2.0 * area),
        ];
    }
    let mut entries = [[0.0; 3]; 3];
    for p in 0..3 {
        for q in 0..3 {
            entries[p][q] = area * (grad[p][0] * grad[q][0] + grad[p][1] * grad[q][1]);
        }
    }
    entries
}

fn mass_entries(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Element stiffness `R_pq = ∫_K ∇θ_p·∇θ_q` for a counterclockwise triangle.
pub fn element_stiffness(points: &[Point; 3]) -> Result<ElementMatrix> {
    let eps = AREA_EPS_FACTOR * bbox_diagonal(points).powi(2);
    let area = checked_area(points, 0, eps)?;
    Ok(ElementMatrix {
        entries: stiffness_entries(points, area),
        element: 0,
        area,
    })
}

/// Consistent element mass `|K|/12 · [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn element_mass(points: &[Point; 3]) -> Result<ElementMatrix> {
    let eps = AREA_EPS_FACTOR * bbox_diagonal(points).powi(2);
    let area = checked_area(points, 0, eps)?;
    Ok(ElementMatrix {
        entries: mass_entries(area),
        element: 0,
        area,
    })
}

fn assemble_elements<F>(mesh: &TriMesh, local: F) -> Result<SparseSymMatrix>
where
    F: Fn(&[Point; 3], f64) -> [[f64; 3]; 3] + Sync,
{
    let eps = AREA_EPS_FACTOR * mesh.bounding_box_diagonal().powi(2);
    let contributions: Vec<[(usize, usize, f64); 9]> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let pts = mesh.triangle_points(t);
            let area = checked_area(&pts, t, eps)?;
            let m = local(&pts, area);
            let tri = mesh.triangles()[t];
            let mut out = [(0, 0, 0.0); 9];
            for p in 0..3 {
                for q in 0..3 {
                    out[3 * p + q] = (tri[p], tri[q], m[p][q]);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let n = mesh.n_vertices();
    let mut builder = TripletBuilder::with_capacity(n, n, 9 * contributions.len());
    builder.extend(contributions.into_iter().flatten());
    SparseSymMatrix::from_csr(builder.build())
}

/// Global stiffness matrix `R`.
pub fn assemble_stiffness(mesh: &TriMesh) -> Result<SparseSymMatrix> {
    assemble_elements(mesh, stiffness_entries)
}

/// Global mass matrix `M`.
pub fn assemble_mass(mesh: &TriMesh, lumping: MassLumping) -> Result<SparseSymMatrix> {
    let consistent = assemble_elements(mesh, |_, area| mass_entries(area))?;
    Ok(match lumping {
        MassLumping::Consistent => consistent,
        MassLumping::Lumped => consistent.lumped(),
    })
}

/// One-dimensional P1 mass `L/6·[[2,1],[1,2]]` of each edge, accumulated on
/// its two vertices.
pub fn assemble_boundary_mass(mesh: &TriMesh, edges: &[BoundaryEdge]) -> SparseSymMatrix {
    let n = mesh.n_vertices();
    let mut b = TripletBuilder::with_capacity(n, n, 4 * edges.len());
    for e in edges {
        let [i, j] = e.vertices;
        let len = mesh.edge_length(i, j);
        b.push(i, i, len / 3.0);
        b.push(j, j, len / 3.0);
        b.push(i, j, len / 6.0);
        b.push(j, i, len / 6.0);
    }
    SparseSymMatrix::from_csr(b.build()).expect("edge mass is symmetric by construction")
}

/// The reduced system `A x = b` on free vertices.
#[derive(Debug, Clone)]
pub struct FemSystem {
    nu: f64,
    mass: SparseSymMatrix,
    stiffness: SparseSymMatrix,
    boundary_mass: SparseSymMatrix,
    free: Vec<usize>,
    fixed: Vec<usize>,
    matrix: SparseSymMatrix,
    coupling: CsrMatrix,
}

impl FemSystem {
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn mass(&self) -> &SparseSymMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseSymMatrix {
        &self.stiffness
    }

    /// Mass matrix of the Soner edges.
    pub fn boundary_mass(&self) -> &SparseSymMatrix {
        &self.boundary_mass
    }

    /// Free vertices (global indices, ascending); row `k` of the system is
    /// vertex `free()[k]`.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    /// The SPD matrix restricted to free vertices.
    pub fn matrix(&self) -> &SparseSymMatrix {
        &self.matrix
    }

    /// Right-hand side `b_k = -Σ_{j fixed} A_kj g_j` for fixed values `g`,
    /// given as a full per-vertex vector (entries at free vertices ignored).
    /// Only this vector changes when fixed values change.
    pub fn lift(&self, values: &[f64]) -> Result<Vec<f64>> {
        let n = self.mass.dim();
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: values.len(),
            });
        }
        let mut rhs = self.coupling.spmv(values)?;
        for v in &mut rhs {
            *v = -*v;
        }
        Ok(rhs)
    }

    /// Full per-vertex vector from a free-vertex solution and fixed values.
    pub fn expand(&self, solution: &[f64], values: &[f64]) -> Vec<f64> {
        let mut full = values.to_vec();
        for (&g, &v) in self.free.iter().zip(solution) {
            full[g] = v;
        }
        full
    }
}

/// Assembles `M + ν²R` with Dirichlet and Soner vertices fixed and a
/// consistent mass matrix.
pub fn assemble_global(mesh: &TriMesh, nu: f64) -> Result<FemSystem> {
    assemble_with(mesh, nu, &AssemblyOptions::default())
}

pub fn assemble_with(mesh: &TriMesh, nu: f64, options: &AssemblyOptions) -> Result<FemSystem> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidConfig(format!("nu must be positive, got {nu}")));
    }
    if mesh.vertices_of_class(VertexClass::Dirichlet).next().is_none() {
        return Err(Error::EmptyDirichletSet);
    }
    let stiffness = assemble_stiffness(mesh)?;
    let mass = assemble_mass(mesh, options.mass)?;
    let soner_edges: Vec<BoundaryEdge> = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.tag == BoundaryTag::Soner)
        .copied()
        .collect();
    let mut boundary_mass = assemble_boundary_mass(mesh, &soner_edges);
    if options.mass == MassLumping::Lumped {
        boundary_mass = boundary_mass.lumped();
    }

    let mut operator = mass.add_scaled(1.0, &stiffness, nu * nu)?;
    let soner_free = options.soner != SonerTreatment::Fixed;
    if options.soner == SonerTreatment::Robin {
        operator = operator.add_scaled(1.0, &boundary_mass, nu)?;
    }
    let (free, fixed): (Vec<usize>, Vec<usize>) = (0..mesh.n_vertices()).partition(|&v| {
        match mesh.class(v) {
            VertexClass::Interior => true,
            VertexClass::Soner => soner_free,
            VertexClass::Dirichlet => false,
        }
    });
    let (matrix, coupling) = operator.split(&free);
    Ok(FemSystem {
        nu,
        mass,
        stiffness,
        boundary_mass,
        free,
        fixed,
        matrix,
        coupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sparse::spmv;

    const UNIT: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_right_triangle_stiffness() {
        let k = element_stiffness(&UNIT).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for p in 0..3 {
            for q in 0..3 {
                assert!(close(k.entries[p][q], expected[p][q], 1e-12));
            }
        }
    }

    #[test]
    fn equilateral_stiffness() {
        let s = 3f64.sqrt();
        let k = element_stiffness(&[[0.0, 0.0], [1.0, 0.0], [0.5, s / 2.0]]).unwrap();
        for p in 0..3 {
            for q in 0..3 {
                let expected = if p == q { 1.0 / s } else { -0.5 / s };
                assert!(close(k.entries[p][q], expected, 1e-12));
            }
        }
    }

    #[test]
    fn unit_right_triangle_mass() {
        let m = element_mass(&UNIT).unwrap();
        assert!(close(m.area, 0.5, 1e-15));
        for p in 0..3 {
            for q in 0..3 {
                let expected = if p == q { 1.0 / 12.0 } else { 1.0 / 24.0 };
                assert!(close(m.entries[p][q], expected, 1e-15));
            }
        }
        let sum: f64 = m.entries.iter().flatten().sum();
        assert!(close(sum, m.area, 1e-15));
        // diagonal equals |K|/6
        assert!(close(m.entries[1][1], m.area / 6.0, 1e-15));
    }

    #[test]
    fn degenerate_element() {
        let flat = [[0.0, 0.0], [1.0, 0.0], [2.0, 1e-16]];
        assert!(matches!(element_stiffness(&flat), Err(Error::DegenerateElement { .. })));
        assert!(matches!(element_mass(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]), Err(Error::DegenerateElement { .. })));
    }

    #[test]
    fn single_edge_boundary_mass() {
        let mesh = fixtures::unit_square_two_triangles();
        let edge = BoundaryEdge::new(0, 1, BoundaryTag::Soner);
        let b = assemble_boundary_mass(&mesh, &[edge]);
        assert!(close(b.get(0, 0), 1.0 / 3.0, 1e-15));
        assert!(close(b.get(1, 1), 1.0 / 3.0, 1e-15));
        assert!(close(b.get(0, 1), 1.0 / 6.0, 1e-15));
        assert!(close(b.get(1, 0), 1.0 / 6.0, 1e-15));
        assert_eq!(assemble_boundary_mass(&mesh, &[]).nnz(), 0);
    }

    #[test]
    fn collinear_edges_accumulate() {
        // bottom edge of a 2x1 strip split at x = 0.5
        let mesh = fixtures::strip(1.0, 0.5, 0.5, fixtures::StripTags::left_dirichlet()).unwrap();
        let bottom: Vec<_> = mesh
            .boundary_edges()
            .iter()
            .filter(|e| e.vertices.iter().all(|&v| mesh.vertices()[v][1] == 0.0))
            .copied()
            .collect();
        assert_eq!(bottom.len(), 2);
        let middle = (0..mesh.n_vertices())
            .find(|&v| mesh.vertices()[v] == [0.5, 0.0])
            .unwrap();
        let b = assemble_boundary_mass(&mesh, &bottom);
        assert!(close(b.get(middle, middle), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn all_dirichlet_has_no_unknowns() {
        let mesh = fixtures::single_triangle();
        let sys = assemble_global(&mesh, 1.0).unwrap();
        assert!(sys.free().is_empty());
        assert_eq!(sys.matrix().dim(), 0);
    }

    #[test]
    fn two_triangle_square_by_hand() {
        // Left edge Dirichlet (vertices 0, 3), the rest Soner. With Soner
        // vertices free, 1 and 2 are the two unknowns.
        //
        // Triangle (0,1,2) has its right angle at 1, triangle (0,2,3) at 3.
        // R_11 = 1/2 (cot@0 + cot@2) = 1           (triangle 012)
        // R_22 = 1/2 (1 + 0) + 1/2 (1 + 0) = 1      (both triangles)
        // R_12 = -1/2 cot@0 = -1/2, R_10 = -1/2, R_20 = 0, R_23 = -1/2
        // M_11 = 1/12, M_22 = 2/12, M_12 = M_10 = M_23 = 1/24, M_20 = 2/24
        let mesh = fixtures::unit_square_two_triangles();
        let natural = AssemblyOptions {
            soner: SonerTreatment::Natural,
            ..Default::default()
        };
        let sys = assemble_with(&mesh, 1.0, &natural).unwrap();
        assert_eq!(sys.free(), &[1, 2]);
        let a = sys.matrix();
        assert!(close(a.get(0, 0), 1.0 / 12.0 + 1.0, 1e-14));
        assert!(close(a.get(1, 1), 2.0 / 12.0 + 1.0, 1e-14));
        assert!(close(a.get(0, 1), 1.0 / 24.0 - 0.5, 1e-14));
        assert!(close(a.get(1, 0), a.get(0, 1), 0.0));
        let mut g = vec![0.0; 4];
        g[0] = 1.0;
        g[3] = 1.0;
        let b = sys.lift(&g).unwrap();
        assert!(close(b[0], -(1.0 / 24.0 - 0.5), 1e-14));
        assert!(close(b[1], -(2.0 / 24.0 + 1.0 / 24.0 - 0.5), 1e-14));

        // Robin adds ν B over the three unit Soner edges (0,1), (1,2), (2,3):
        // B_11 = B_22 = 2/3, B_12 = B_10 = B_23 = 1/6.
        let robin = AssemblyOptions {
            soner: SonerTreatment::Robin,
            ..Default::default()
        };
        let sys = assemble_with(&mesh, 1.0, &robin).unwrap();
        let a = sys.matrix();
        assert!(close(a.get(0, 0), 1.0 / 12.0 + 1.0 + 2.0 / 3.0, 1e-14));
        assert!(close(a.get(1, 1), 2.0 / 12.0 + 1.0 + 2.0 / 3.0, 1e-14));
        assert!(close(a.get(0, 1), 1.0 / 24.0 - 0.5 + 1.0 / 6.0, 1e-14));
        let b = sys.lift(&g).unwrap();
        assert!(close(b[0], -(1.0 / 24.0 - 0.5 + 1.0 / 6.0), 1e-14));
        assert!(close(b[1], -(2.0 / 24.0 + 1.0 / 24.0 - 0.5 + 1.0 / 6.0), 1e-14));

        // with Soner vertices fixed nothing is left to solve for
        assert!(assemble_global(&mesh, 1.0).unwrap().free().is_empty());
    }

    #[test]
    fn global_invariants_on_annulus() {
        let mesh = fixtures::annulus(1.0, 2.0, 0.25).unwrap();
        let r = assemble_stiffness(&mesh).unwrap();
        let m = assemble_mass(&mesh, MassLumping::Consistent).unwrap();
        let ones = vec![1.0; mesh.n_vertices()];
        for v in spmv(&r, &ones).unwrap() {
            assert!(v.abs() < 1e-10);
        }
        let total: f64 = spmv(&m, &ones).unwrap().iter().sum();
        assert!(close(total, mesh.area(), 1e-12));
        // Delaunay fixture: nonpositive off-diagonal stiffness
        for (i, j, v) in r.iter() {
            if i != j {
                assert!(v <= 1e-14, "R[{i},{j}] = {v}");
            }
        }
        let lumped = assemble_mass(&mesh, MassLumping::Lumped).unwrap();
        assert_eq!(lumped.nnz(), mesh.n_vertices());
        let total: f64 = lumped.diagonal().iter().sum();
        assert!(close(total, mesh.area(), 1e-12));
    }

    #[test]
    fn interior_rows_of_system_match_mass_rows() {
        let mesh = fixtures::strip(1.0, 0.2, 0.05, fixtures::StripTags::left_dirichlet()).unwrap();
        let nu = 0.3;
        let sys = assemble_global(&mesh, nu).unwrap();
        let operator = sys.mass().add_scaled(1.0, sys.stiffness(), nu * nu).unwrap();
        let ones = vec![1.0; mesh.n_vertices()];
        let a1 = spmv(&operator, &ones).unwrap();
        let m1 = spmv(sys.mass(), &ones).unwrap();
        for (a, m) in a1.iter().zip(&m1) {
            assert!(close(*a, *m, 1e-12));
        }
    }

    #[test]
    fn rejects_nonpositive_nu() {
        let mesh = fixtures::single_triangle();
        assert!(matches!(assemble_global(&mesh, 0.0), Err(Error::InvalidConfig(_))));
    }
}
