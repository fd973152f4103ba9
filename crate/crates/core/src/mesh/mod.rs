//! Conforming triangular meshes with tagged boundaries.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod gmsh;
pub mod native;

pub use gmsh::GmshTagMap;

/// A point in the plane.
pub type Point = [f64; 2];

/// Tolerance on the sum of opposite angles before an interior edge is
/// reported as violating the angle condition.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BoundaryTag {
    /// Distance is zero on these edges.
    Dirichlet,
    /// Outflow boundary treated by the Soner condition.
    Soner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VertexClass {
    Interior,
    Dirichlet,
    Soner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

impl BoundaryEdge {
    pub fn new(a: usize, b: usize, tag: BoundaryTag) -> Self {
        Self {
            vertices: [a, b],
            tag,
        }
    }
}

/// Supported mesh file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    /// GMSH MSH 2.2 ASCII.
    Gmsh22,
    /// The `DISTMESH 1` text format.
    Native,
}

impl MeshFormat {
    /// Guess the format from a file extension: `.msh` is GMSH, everything
    /// else is native.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("msh") => MeshFormat::Gmsh22,
            _ => MeshFormat::Native,
        }
    }
}

/// Immutable triangulation with vertex adjacency and boundary classification.
///
/// Triangles are stored counterclockwise. Every edge used by exactly one
/// triangle carries a boundary tag, and the Dirichlet set is never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    neighbors: Vec<Vec<usize>>,
    classes: Vec<VertexClass>,
    reoriented: usize,
}

impl TriMesh {
    /// Builds a mesh and checks every structural invariant.
    ///
    /// Clockwise triangles are reordered; the number of repaired triangles is
    /// available from [`TriMesh::reoriented_count`]. Boundary edges may be
    /// given in either vertex order and are stored sorted.
    pub fn new(
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        tagged_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let n = vertices.len();
        if triangles.is_empty() {
            return Err(Error::Topology("mesh has no triangles".into()));
        }
        if let Some((i, p)) = vertices
            .iter()
            .enumerate()
            .find(|(_, p)| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::Topology(format!(
                "vertex {i} has non-finite coordinates {p:?}"
            )));
        }

        let mut reoriented = 0;
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::Topology(format!(
                    "triangle {t} references a vertex outside 0..{n}"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Topology(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]);
            if area < 0.0 {
                tri.swap(1, 2);
                reoriented += 1;
            } else if area == 0.0 {
                return Err(Error::Topology(format!("triangle {t} has zero area")));
            }
        }

        // Directed use of each undirected edge: +1 for (lo -> hi), -1 otherwise.
        let mut edge_use: HashMap<(usize, usize), (u32, i32)> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let dir = if a < b { 1 } else { -1 };
                let entry = edge_use.entry(key).or_insert((0, 0));
                entry.0 += 1;
                entry.1 += dir;
                if entry.0 > 2 {
                    return Err(Error::Topology(format!(
                        "edge ({}, {}) is shared by more than two triangles (at triangle {t})",
                        key.0, key.1
                    )));
                }
                if entry.0 == 2 && entry.1 != 0 {
                    return Err(Error::Topology(format!(
                        "triangles on edge ({}, {}) overlap (inconsistent orientation)",
                        key.0, key.1
                    )));
                }
            }
        }

        let mut tags: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for e in &tagged_edges {
            let [a, b] = e.vertices;
            let key = (a.min(b), a.max(b));
            match edge_use.get(&key) {
                Some((1, _)) => {}
                Some(_) => {
                    return Err(Error::Topology(format!(
                        "tagged edge ({a}, {b}) is an interior edge"
                    )))
                }
                None => {
                    return Err(Error::Topology(format!(
                        "tagged edge ({a}, {b}) is not an edge of the triangulation"
                    )))
                }
            }
            if let Some(prev) = tags.insert(key, e.tag) {
                if prev != e.tag {
                    return Err(Error::Tag(format!(
                        "edge ({a}, {b}) carries both {prev:?} and {:?} tags",
                        e.tag
                    )));
                }
            }
        }

        let mut boundary_edges = Vec::new();
        for (&(a, b), &(count, _)) in &edge_use {
            if count == 1 {
                match tags.get(&(a, b)) {
                    Some(&tag) => boundary_edges.push(BoundaryEdge::new(a, b, tag)),
                    None => {
                        return Err(Error::Tag(format!(
                            "boundary edge ({a}, {b}) has no recognised tag"
                        )))
                    }
                }
            }
        }
        boundary_edges.sort();

        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in edge_use.keys() {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for (v, nb) in neighbors.iter_mut().enumerate() {
            if nb.is_empty() {
                return Err(Error::Topology(format!("vertex {v} is isolated")));
            }
            nb.sort_unstable();
        }

        let classes = classify(n, &boundary_edges);
        if !classes.contains(&VertexClass::Dirichlet) {
            return Err(Error::Topology(
                "the Dirichlet boundary is empty".to_string(),
            ));
        }

        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            neighbors,
            classes,
            reoriented,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Vertices sharing an edge with `v`, sorted ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn vertex_classes(&self) -> &[VertexClass] {
        &self.classes
    }

    pub fn class(&self, v: usize) -> VertexClass {
        self.classes[v]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Number of input triangles that were listed clockwise and got reordered.
    pub fn reoriented_count(&self) -> usize {
        self.reoriented
    }

    pub fn vertices_of_class(&self, class: VertexClass) -> impl Iterator<Item = usize> + '_ {
        self.classes
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == class)
            .map(|(i, _)| i)
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        distance(&self.vertices[a], &self.vertices[b])
    }

    /// Undirected edges `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sum of the triangle areas.
    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                signed_area(&a, &b, &c)
            })
            .sum()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        distance(&lo, &hi)
    }

    /// Mean edge length.
    pub fn mean_edge_length(&self) -> f64 {
        let (sum, count) = self
            .edges()
            .fold((0.0, 0usize), |(s, c), (a, b)| (s + self.edge_length(a, b), c + 1));
        sum / count as f64
    }

    /// Copy of this mesh with every boundary edge retagged as Dirichlet.
    pub fn with_all_dirichlet(&self) -> TriMesh {
        let mut mesh = self.clone();
        for e in &mut mesh.boundary_edges {
            e.tag = BoundaryTag::Dirichlet;
        }
        mesh.classes = classify(mesh.vertices.len(), &mesh.boundary_edges);
        mesh
    }

    /// Reads a mesh file; GMSH files use the default physical-group mapping.
    pub fn load(path: impl AsRef<Path>, format: MeshFormat) -> Result<Self> {
        load_mesh(path, format)
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriMesh> {
    let path = path.as_ref();
    match format {
        MeshFormat::Gmsh22 => gmsh::read_file(path, &GmshTagMap::default()),
        MeshFormat::Native => native::read_file(path),
    }
}

pub(crate) fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

pub(crate) fn distance(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Angle at `apex` between the rays towards `p` and `q`, in `[0, π]`.
pub(crate) fn angle_at(apex: &Point, p: &Point, q: &Point) -> f64 {
    let u = [p[0] - apex[0], p[1] - apex[1]];
    let v = [q[0] - apex[0], q[1] - apex[1]];
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.abs().atan2(dot)
}

fn classify(n: usize, boundary_edges: &[BoundaryEdge]) -> Vec<VertexClass> {
    let mut classes = vec![VertexClass::Interior; n];
    for e in boundary_edges {
        for &v in &e.vertices {
            classes[v] = match (classes[v], e.tag) {
                (_, BoundaryTag::Dirichlet) | (VertexClass::Dirichlet, _) => VertexClass::Dirichlet,
                _ => VertexClass::Soner,
            };
        }
    }
    classes
}

/// Per-vertex class derived from the boundary tags: a vertex touching any
/// Dirichlet edge is Dirichlet, one touching only Soner edges is Soner.
pub fn vertex_classification(mesh: &TriMesh) -> Vec<VertexClass> {
    classify(mesh.n_vertices(), mesh.boundary_edges())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleViolation {
    pub edge: [usize; 2],
    /// Sum of the two angles opposite the edge, in radians.
    pub opposite_angle_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshQualityReport {
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub min_angle: f64,
    pub max_angle: f64,
    pub violations: Vec<AngleViolation>,
    pub angle_condition_ok: bool,
}

/// Checks the angle condition on every interior edge: the two angles
/// opposite the edge must sum to at most `π` (up to [`ANGLE_TOLERANCE`]).
/// Under this condition the off-diagonal stiffness entries are nonpositive.
pub fn validate_mesh(mesh: &TriMesh) -> MeshQualityReport {
    let pts = mesh.vertices();
    let mut min_angle = f64::INFINITY;
    let mut max_angle: f64 = 0.0;
    let mut opposite: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for tri in mesh.triangles() {
        for k in 0..3 {
            let apex = tri[k];
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let angle = angle_at(&pts[apex], &pts[a], &pts[b]);
            min_angle = min_angle.min(angle);
            max_angle = max_angle.max(angle);
            opposite.entry((a.min(b), a.max(b))).or_default().push(angle);
        }
    }
    let mut violations: Vec<AngleViolation> = opposite
        .into_iter()
        .filter(|(_, angles)| angles.len() == 2)
        .map(|((a, b), angles)| AngleViolation {
            edge: [a, b],
            opposite_angle_sum: angles[0] + angles[1],
        })
        .filter(|v| v.opposite_angle_sum > PI + ANGLE_TOLERANCE)
        .collect();
    violations.sort_by_key(|x| x.edge);
    MeshQualityReport {
        n_vertices: mesh.n_vertices(),
        n_triangles: mesh.n_triangles(),
        min_angle,
        max_angle,
        angle_condition_ok: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryTag::{Dirichlet as D, Soner as S};

    fn unit_square(diagonal_tags: [BoundaryTag; 4]) -> Result<TriMesh> {
        // 3---2
        // | / |
        // 0---1
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let t = vec![[0, 1, 2], [0, 2, 3]];
        let [bottom, right, top, left] = diagonal_tags;
        let e = vec![
            BoundaryEdge::new(0, 1, bottom),
            BoundaryEdge::new(1, 2, right),
            BoundaryEdge::new(2, 3, top),
            BoundaryEdge::new(3, 0, left),
        ];
        TriMesh::new(v, t, e)
    }

    #[test]
    fn single_triangle_all_dirichlet() {
        let mesh = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![
                BoundaryEdge::new(0, 1, D),
                BoundaryEdge::new(1, 2, D),
                BoundaryEdge::new(2, 0, D),
            ],
        )
        .unwrap();
        assert_eq!(mesh.vertices_of_class(VertexClass::Dirichlet).count(), 3);
        assert_eq!(mesh.vertices_of_class(VertexClass::Interior).count(), 0);
        assert_eq!(mesh.reoriented_count(), 0);
    }

    #[test]
    fn clockwise_triangle_is_reordered() {
        let mesh = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            vec![
                BoundaryEdge::new(0, 1, D),
                BoundaryEdge::new(1, 2, D),
                BoundaryEdge::new(2, 0, D),
            ],
        )
        .unwrap();
        assert_eq!(mesh.reoriented_count(), 1);
        let [a, b, c] = mesh.triangle_points(0);
        assert!(signed_area(&a, &b, &c) > 0.0);
    }

    #[test]
    fn two_triangle_square_classes() {
        let mesh = unit_square([S, S, S, D]).unwrap();
        let classes = mesh.vertex_classes();
        assert_eq!(classes, &[VertexClass::Dirichlet, VertexClass::Soner, VertexClass::Soner, VertexClass::Dirichlet]);
        let report = validate_mesh(&mesh);
        // one interior edge, the diagonal (0, 2)
        assert_eq!(mesh.n_edges() - mesh.boundary_edges().len(), 1);
        assert!(report.angle_condition_ok);
    }

    #[test]
    fn class_precedence() {
        let mesh = unit_square([S, S, S, D]).unwrap();
        // vertex 0 touches the Dirichlet left edge and the Soner bottom edge
        assert_eq!(mesh.class(0), VertexClass::Dirichlet);
        // vertex 1 touches two Soner edges
        assert_eq!(mesh.class(1), VertexClass::Soner);
        assert_eq!(vertex_classification(&mesh), mesh.vertex_classes());
    }

    #[test]
    fn interior_vertex_class() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let t = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
        let e = (0..4).map(|i| BoundaryEdge::new(i, (i + 1) % 4, D)).collect();
        let mesh = TriMesh::new(v, t, e).unwrap();
        assert_eq!(mesh.class(4), VertexClass::Interior);
        assert_eq!(mesh.neighbors(4), &[0, 1, 2, 3]);
    }

    #[test]
    fn rejects_missing_tag() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let err = TriMesh::new(
            v,
            vec![[0, 1, 2]],
            vec![BoundaryEdge::new(0, 1, D), BoundaryEdge::new(1, 2, D)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Tag(_)), "{err}");
    }

    #[test]
    fn rejects_empty_dirichlet() {
        let err = unit_square([S, S, S, S]).unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");
    }

    #[test]
    fn rejects_isolated_vertex_and_nonmanifold_edge() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]];
        let e: Vec<_> = (0..3).map(|i| BoundaryEdge::new(i, (i + 1) % 3, D)).collect();
        let err = TriMesh::new(v, vec![[0, 1, 2]], e).unwrap_err();
        assert!(matches!(err, Error::Topology(ref m) if m.contains("isolated")), "{err}");

        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 2.0]];
        let t = vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]];
        let err = TriMesh::new(v, t, vec![]).unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");
    }

    #[test]
    fn rejects_tag_on_interior_edge() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let t = vec![[0, 1, 2], [0, 2, 3]];
        let mut e: Vec<_> = (0..4).map(|i| BoundaryEdge::new(i, (i + 1) % 4, D)).collect();
        e.push(BoundaryEdge::new(0, 2, S));
        assert!(matches!(TriMesh::new(v, t, e), Err(Error::Topology(_))));
    }

    #[test]
    fn needle_triangle_violates_angle_condition() {
        // Edge (0, 1) is shared by two flat triangles whose apex angles are
        // 90.5 degrees each: sum 181 degrees.
        let half = (90.5f64.to_radians() / 2.0).tan();
        let h = 0.5 / half;
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, h], [0.5, -h]];
        let t = vec![[0, 1, 2], [1, 0, 3]];
        let e = vec![
            BoundaryEdge::new(1, 2, D),
            BoundaryEdge::new(2, 0, D),
            BoundaryEdge::new(0, 3, D),
            BoundaryEdge::new(3, 1, D),
        ];
        let mesh = TriMesh::new(v, t, e).unwrap();
        let report = validate_mesh(&mesh);
        assert!(!report.angle_condition_ok);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].edge, [0, 1]);
        let expected = 181f64.to_radians();
        assert!((report.violations[0].opposite_angle_sum - expected).abs() < 1e-12);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(MeshFormat::from_path(Path::new("a/b.MSH")), MeshFormat::Gmsh22);
        assert_eq!(MeshFormat::from_path(Path::new("a/b.mesh")), MeshFormat::Native);
    }
}
