//! Reference distances and error norms.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::assembly::assemble_mass;
use crate::eikonal::ScalarField;
use crate::mesh::{Point, TriMesh, VertexClass};
use crate::{Error, MassLumping, Result};

/// Slack allowed when checking that a point lies in a case's domain.
pub const DOMAIN_TOLERANCE: f64 = 1e-9;

/// A geometry with a closed-form distance to its Dirichlet boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum ExactCase {
    /// `r_in ≤ |x| ≤ r_out`, distance to the inner circle.
    Annulus { r_in: f64, r_out: f64 },
    /// The annulus with the segment `[r_in, r_out] × {0}` as the boundary;
    /// paths may not cross the inner disk.
    SlitAnnulus { r_in: f64, r_out: f64 },
    /// `[0, length] × [0, width]`, distance to `x = 0`, or to both ends when
    /// `two_sided`.
    Strip { length: f64, width: f64, two_sided: bool },
    /// Euclidean distance to a polyline. Exact outside a convex obstacle
    /// bounded by the polyline.
    Polyline { vertices: Vec<Point>, closed: bool },
}

impl ExactCase {
    pub fn annulus() -> Self {
        ExactCase::Annulus { r_in: 1.0, r_out: 2.0 }
    }

    pub fn slit_annulus() -> Self {
        ExactCase::SlitAnnulus { r_in: 1.0, r_out: 2.0 }
    }

    pub fn strip(length: f64, width: f64) -> Self {
        ExactCase::Strip {
            length,
            width,
            two_sided: false,
        }
    }

    /// Boundary of the square `[-half, half]²`.
    pub fn square(half: f64) -> Self {
        ExactCase::Polyline {
            vertices: vec![[-half, -half], [half, -half], [half, half], [-half, half]],
            closed: true,
        }
    }

    pub fn distance(&self, p: Point) -> Result<f64> {
        match self {
            ExactCase::Annulus { r_in, r_out } => annulus_exact(p, *r_in, *r_out),
            ExactCase::SlitAnnulus { r_in, r_out } => slit_annulus_exact(p, *r_in, *r_out),
            ExactCase::Strip {
                length,
                width,
                two_sided,
            } => {
                let d = strip_exact(p, *length, *width)?;
                Ok(if *two_sided { d.min(length - d) } else { d })
            }
            ExactCase::Polyline { vertices, closed } => Ok(polyline_exact(p, vertices, *closed)),
        }
    }

    /// The exact distance at every mesh vertex.
    pub fn field(&self, mesh: &TriMesh) -> Result<ScalarField> {
        let values = mesh.vertices().iter().map(|&p| self.distance(p)).collect::<Result<_>>()?;
        Ok(ScalarField::distance(values))
    }
}

fn outside(p: Point) -> Error {
    Error::OutsideDomain { x: p[0], y: p[1] }
}

fn check_radius(p: Point, r_in: f64, r_out: f64) -> Result<f64> {
    let r = p[0].hypot(p[1]);
    if r < r_in - DOMAIN_TOLERANCE || r > r_out + DOMAIN_TOLERANCE || !r.is_finite() {
        return Err(outside(p));
    }
    Ok(r)
}

/// `|x| - r_in`.
pub fn annulus_exact(p: Point, r_in: f64, r_out: f64) -> Result<f64> {
    Ok((check_radius(p, r_in, r_out)? - r_in).max(0.0))
}

/// Geodesic distance to the slit `[r_in, r_out] × {0}` in the annulus.
///
/// Points with `x ≥ r_in` see the slit straight down or up, giving `|y|`.
/// Other points follow a tangent to the inner circle and then the circle to
/// `(r_in, 0)`, going around whichever side is shorter.
pub fn slit_annulus_exact(p: Point, r_in: f64, r_out: f64) -> Result<f64> {
    let r = check_radius(p, r_in, r_out)?;
    if p[0] >= r_in {
        return Ok(p[1].abs());
    }
    let r = r.max(r_in);
    let tangent = (r * r - r_in * r_in).max(0.0).sqrt();
    let a = (r_in / r).clamp(-1.0, 1.0).acos();
    let mut beta = p[1].atan2(p[0]);
    if beta < 0.0 {
        beta += TAU;
    }
    let mut best = f64::INFINITY;
    // tangent point at angle beta - a, then clockwise to angle 0
    if beta - a >= 0.0 {
        best = best.min(tangent + r_in * (beta - a));
    }
    // tangent point at angle beta + a, then counterclockwise to angle 2π
    if beta + a <= TAU {
        best = best.min(tangent + r_in * (TAU - beta - a));
    }
    debug_assert!(best.is_finite() && best <= tangent + r_in * PI + 1e-12);
    Ok(best)
}

/// `x`, the distance to the left edge of `[0, length] × [0, width]`.
pub fn strip_exact(p: Point, length: f64, width: f64) -> Result<f64> {
    let t = DOMAIN_TOLERANCE;
    if !(p[0] >= -t && p[0] <= length + t && p[1] >= -t && p[1] <= width + t) {
        return Err(outside(p));
    }
    Ok(p[0].clamp(0.0, length))
}

/// Euclidean distance from `p` to a polyline.
pub fn polyline_exact(p: Point, vertices: &[Point], closed: bool) -> f64 {
    let segment = |a: Point, b: Point| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
    };
    let n = vertices.len();
    match n {
        0 => f64::INFINITY,
        1 => segment(vertices[0], vertices[0]),
        _ => {
            let count = if closed { n } else { n - 1 };
            (0..count)
                .map(|k| segment(vertices[k], vertices[(k + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed for a min-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Shortest edge-path length from `sources` to every vertex, with
/// Euclidean edge weights.
pub fn graph_geodesic_oracle(mesh: &TriMesh, sources: &[usize]) -> Result<ScalarField> {
    let n = mesh.n_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if s >= n {
            return Err(Error::DimensionMismatch { expected: n, actual: s });
        }
        dist[s] = 0.0;
        heap.push(Entry(0.0, s));
    }
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &w in mesh.neighbors(v) {
            let candidate = d + mesh.edge_length(v, w);
            if candidate < dist[w] {
                dist[w] = candidate;
                heap.push(Entry(candidate, w));
            }
        }
    }
    if let Some(v) = dist.iter().position(|d| d.is_infinite()) {
        return Err(Error::UnreachableVertex(v));
    }
    Ok(ScalarField::distance(dist))
}

/// [`graph_geodesic_oracle`] from all Dirichlet vertices.
pub fn graph_geodesic_from_dirichlet(mesh: &TriMesh) -> Result<ScalarField> {
    let sources: Vec<usize> = mesh.vertices_of_class(VertexClass::Dirichlet).collect();
    graph_geodesic_oracle(mesh, &sources)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub linf: f64,
    /// `sqrt(eᵀ M e)` with the consistent mass matrix.
    pub l2: f64,
    /// Maximum error over vertices whose reference distance is at most `band`.
    pub near_boundary_linf: f64,
    pub band: f64,
    /// Per-vertex `|d_h - d|`; excluded vertices hold `NaN`.
    pub errors: Vec<f64>,
    /// Vertices with a non-finite computed distance, left out of the norms.
    pub excluded: usize,
    pub max_computed: f64,
    pub max_reference: f64,
}

/// Error of `computed` against `reference`. `band` defaults to 10% of the
/// bounding-box diagonal.
pub fn error_norms(
    mesh: &TriMesh,
    computed: &ScalarField,
    reference: &ScalarField,
    band: Option<f64>,
) -> Result<ErrorReport> {
    computed.check_mesh(mesh)?;
    reference.check_mesh(mesh)?;
    let band = band.unwrap_or(0.1 * mesh.bounding_box_diagonal());
    let mut excluded = 0;
    let errors: Vec<f64> = computed
        .values
        .iter()
        .zip(&reference.values)
        .map(|(c, r)| {
            if c.is_finite() && r.is_finite() {
                (c - r).abs()
            } else {
                excluded += 1;
                f64::NAN
            }
        })
        .collect();
    let finite = |e: &f64| !e.is_nan();
    let linf = errors.iter().copied().filter(finite).fold(0.0, f64::max);
    let near_boundary_linf = errors
        .iter()
        .zip(&reference.values)
        .filter(|(e, r)| finite(e) && **r <= band)
        .map(|(e, _)| *e)
        .fold(0.0, f64::max);

    let mass = assemble_mass(mesh, MassLumping::Consistent)?;
    let e0: Vec<f64> = errors.iter().map(|e| if e.is_nan() { 0.0 } else { *e }).collect();
    let l2 = mass.iter().map(|(i, j, m)| m * e0[i] * e0[j]).sum::<f64>().max(0.0).sqrt();

    let max_of = |f: &ScalarField| f.values.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    Ok(ErrorReport {
        linf,
        l2,
        near_boundary_linf,
        band,
        errors,
        excluded,
        max_computed: max_of(computed),
        max_reference: max_of(reference),
    })
}

/// `‖∇f_h‖` on each triangle for the piecewise-linear interpolant of `field`.
pub fn element_gradient_norms(mesh: &TriMesh, field: &ScalarField) -> Result<Vec<f64>> {
    field.check_mesh(mesh)?;
    Ok(mesh
        .triangles()
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|v| mesh.vertices()[v]);
            let [fa, fb, fc] = t.map(|v| field.values[v]);
            let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            let (g1, g2) = (fb - fa, fc - fa);
            let gx = (g1 * e2[1] - g2 * e1[1]) / det;
            let gy = (g2 * e1[0] - g1 * e2[0]) / det;
            gx.hypot(gy)
        })
        .collect())
}
