//! Reference meshes for the standard test geometries.
//!
//! Each builder lays vertices out on rows or rings about `h` apart, stitches
//! neighbouring rows into triangles and then flips edges until the
//! triangulation is Delaunay, so every fixture satisfies the angle condition.
//! These are fixtures for tests, benchmarks and examples, not a general mesh
//! generator.

use std::f64::consts::{PI, TAU};

use crate::mesh::{angle_at, signed_area, BoundaryEdge, BoundaryTag, Point, TriMesh};
use crate::{Error, Result};

use BoundaryTag::{Dirichlet, Soner};

/// One triangle `(0,0), (1,0), (0,1)` with all edges Dirichlet.
pub fn single_triangle() -> TriMesh {
    TriMesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        (0..3).map(|i| BoundaryEdge::new(i, (i + 1) % 3, Dirichlet)).collect(),
    )
    .expect("valid fixture")
}

/// Unit square split along `(0,0)-(1,1)`: left edge Dirichlet, the other
/// three Soner.
pub fn unit_square_two_triangles() -> TriMesh {
    TriMesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[0, 1, 2], [0, 2, 3]],
        vec![
            BoundaryEdge::new(0, 1, Soner),
            BoundaryEdge::new(1, 2, Soner),
            BoundaryEdge::new(2, 3, Soner),
            BoundaryEdge::new(3, 0, Dirichlet),
        ],
    )
    .expect("valid fixture")
}

/// Boundary tags of the four sides of a strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StripTags {
    pub left: BoundaryTag,
    pub right: BoundaryTag,
    pub bottom: BoundaryTag,
    pub top: BoundaryTag,
}

impl StripTags {
    /// Dirichlet on `x = 0`, Soner elsewhere.
    pub fn left_dirichlet() -> Self {
        Self {
            left: Dirichlet,
            right: Soner,
            bottom: Soner,
            top: Soner,
        }
    }

    /// Dirichlet on `x = 0` and `x = L`, Soner on top and bottom.
    pub fn both_ends_dirichlet() -> Self {
        Self {
            right: Dirichlet,
            ..Self::left_dirichlet()
        }
    }
}

fn check_size(h: f64, extent: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite() && extent > 0.0 && extent.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "fixture needs positive size and spacing, got extent {extent}, h {h}"
        )));
    }
    Ok(())
}

/// The rectangle `[0, length] × [0, width]` with rows of nearly equilateral
/// triangles of side about `h`. Vertices are numbered row by row from the
/// bottom, left to right.
pub fn strip(length: f64, width: f64, h: f64, tags: StripTags) -> Result<TriMesh> {
    check_size(h, length.min(width))?;
    let nx = ((length / h).round() as usize).max(1);
    let ny = ((width / (h * 3f64.sqrt() / 2.0)).round() as usize).max(1);
    let dx = length / nx as f64;

    let mut vertices = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for j in 0..=ny {
        let y = if j == ny { width } else { width * j as f64 / ny as f64 };
        let xs: Vec<f64> = if j % 2 == 0 {
            (0..=nx).map(|k| if k == nx { length } else { k as f64 * dx }).collect()
        } else {
            std::iter::once(0.0)
                .chain((0..nx).map(|k| (k as f64 + 0.5) * dx))
                .chain(std::iter::once(length))
                .collect()
        };
        let row = xs
            .into_iter()
            .map(|x| {
                vertices.push([x, y]);
                (vertices.len() - 1, x)
            })
            .collect();
        rows.push(row);
    }

    let mut triangles = Vec::new();
    for pair in rows.windows(2) {
        stitch(&pair[0], &pair[1], &mut triangles);
    }
    let mut edges = Vec::new();
    let chain = |row: &[(usize, f64)], tag, edges: &mut Vec<BoundaryEdge>| {
        for w in row.windows(2) {
            edges.push(BoundaryEdge::new(w[0].0, w[1].0, tag));
        }
    };
    chain(&rows[0], tags.bottom, &mut edges);
    chain(&rows[ny], tags.top, &mut edges);
    for pair in rows.windows(2) {
        edges.push(BoundaryEdge::new(pair[0][0].0, pair[1][0].0, tags.left));
        edges.push(BoundaryEdge::new(
            pair[0].last().unwrap().0,
            pair[1].last().unwrap().0,
            tags.right,
        ));
    }
    finish(vertices, triangles, edges)
}

fn ring_layout(r_in: f64, r_out: f64, h: f64) -> Result<(usize, Vec<f64>)> {
    check_size(h, r_out - r_in)?;
    if !(r_in > 0.0) {
        return Err(Error::InvalidConfig(format!("inner radius must be positive, got {r_in}")));
    }
    let nr = (((r_out - r_in) / (h * 3f64.sqrt() / 2.0)).round() as usize).max(1);
    let radii = (0..=nr)
        .map(|i| if i == nr { r_out } else { r_in + (r_out - r_in) * i as f64 / nr as f64 })
        .collect();
    Ok((nr, radii))
}

fn ring_count(r: f64, h: f64) -> usize {
    ((TAU * r / h).round() as usize).max(6)
}

/// The annulus `r_in ≤ |x| ≤ r_out`: Dirichlet on the inner circle, Soner on
/// the outer one. Boundary vertices lie exactly on the circles.
pub fn annulus(r_in: f64, r_out: f64, h: f64) -> Result<TriMesh> {
    let (nr, radii) = ring_layout(r_in, r_out, h)?;
    let mut vertices = Vec::new();
    let mut rings: Vec<Vec<(usize, f64)>> = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        let n = ring_count(r, h);
        let shift = if i % 2 == 1 { 0.5 } else { 0.0 };
        let mut ring: Vec<(usize, f64)> = (0..n)
            .map(|k| {
                let t = TAU * (k as f64 + shift) / n as f64;
                vertices.push([r * t.cos(), r * t.sin()]);
                (vertices.len() - 1, t)
            })
            .collect();
        // close the loop for stitching
        ring.push((ring[0].0, ring[0].1 + TAU));
        rings.push(ring);
    }
    let mut triangles = Vec::new();
    for pair in rings.windows(2) {
        stitch(&pair[0], &pair[1], &mut triangles);
    }
    let mut edges = Vec::new();
    for (ring, tag) in [(&rings[0], Dirichlet), (&rings[nr], Soner)] {
        for w in ring.windows(2) {
            edges.push(BoundaryEdge::new(w[0].0, w[1].0, tag));
        }
    }
    finish(vertices, triangles, edges)
}

/// The annulus `r_in ≤ |x| ≤ r_out` cut along the segment
/// `{(s, 0) : r_in ≤ s ≤ r_out}`, which is the Dirichlet boundary on both
/// of its sides. Both circles are Soner. The slit vertices are duplicated:
/// one copy belongs to the upper side (angle 0), the other to the lower side
/// (angle 2π).
pub fn slit_annulus(r_in: f64, r_out: f64, h: f64) -> Result<TriMesh> {
    let (nr, radii) = ring_layout(r_in, r_out, h)?;
    let mut vertices: Vec<Point> = Vec::new();
    let mut rings: Vec<Vec<(usize, f64)>> = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        let n = ring_count(r, h);
        let angles: Vec<f64> = if i % 2 == 0 {
            (0..=n).map(|k| TAU * k as f64 / n as f64).collect()
        } else {
            std::iter::once(0.0)
                .chain((0..n).map(|k| TAU * (k as f64 + 0.5) / n as f64))
                .chain(std::iter::once(TAU))
                .collect()
        };
        let last = angles.len() - 1;
        let ring = angles
            .into_iter()
            .enumerate()
            .map(|(k, t)| {
                let p = if k == 0 || k == last { [r, 0.0] } else { [r * t.cos(), r * t.sin()] };
                vertices.push(p);
                (vertices.len() - 1, t)
            })
            .collect();
        rings.push(ring);
    }
    let mut triangles = Vec::new();
    for pair in rings.windows(2) {
        stitch(&pair[0], &pair[1], &mut triangles);
    }
    let mut edges = Vec::new();
    for ring in [&rings[0], &rings[nr]] {
        for w in ring.windows(2) {
            edges.push(BoundaryEdge::new(w[0].0, w[1].0, Soner));
        }
    }
    for pair in rings.windows(2) {
        edges.push(BoundaryEdge::new(pair[0][0].0, pair[1][0].0, Dirichlet));
        edges.push(BoundaryEdge::new(
            pair[0].last().unwrap().0,
            pair[1].last().unwrap().0,
            Dirichlet,
        ));
    }
    finish(vertices, triangles, edges)
}

/// The square `[-outer, outer]²` with the square obstacle
/// `[-inner, inner]²` removed. The obstacle boundary is Dirichlet and the
/// outer boundary Soner.
pub fn square_obstacle(inner: f64, outer: f64, h: f64) -> Result<TriMesh> {
    check_size(h, outer - inner)?;
    if !(inner > 0.0) {
        return Err(Error::InvalidConfig(format!("obstacle half-width must be positive, got {inner}")));
    }
    let nr = (((outer - inner) / (h * 3f64.sqrt() / 2.0)).round() as usize).max(1);
    let mut vertices = Vec::new();
    let mut rings: Vec<Vec<(usize, f64)>> = Vec::new();
    for i in 0..=nr {
        let s = if i == nr { outer } else { inner + (outer - inner) * i as f64 / nr as f64 };
        let per_side = ((2.0 * s / h).round() as usize).max(1);
        let corners = [[s, -s], [s, s], [-s, s], [-s, -s]];
        let mut ring: Vec<(usize, f64)> = Vec::new();
        for c in 0..4 {
            let (a, b) = (corners[c], corners[(c + 1) % 4]);
            for k in 0..per_side {
                let t = k as f64 / per_side as f64;
                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                // parameter: polar angle measured from the first corner
                let mut theta = p[1].atan2(p[0]) + PI / 4.0;
                if theta < 0.0 {
                    theta += TAU;
                }
                if c == 0 && k == 0 {
                    theta = 0.0;
                }
                vertices.push(p);
                ring.push((vertices.len() - 1, theta));
            }
        }
        ring.push((ring[0].0, TAU));
        rings.push(ring);
    }
    let mut triangles = Vec::new();
    for pair in rings.windows(2) {
        stitch(&pair[0], &pair[1], &mut triangles);
    }
    let mut edges = Vec::new();
    for (ring, tag) in [(&rings[0], Dirichlet), (&rings[nr], Soner)] {
        for w in ring.windows(2) {
            edges.push(BoundaryEdge::new(w[0].0, w[1].0, tag));
        }
    }
    finish(vertices, triangles, edges)
}

/// Unit square on an `n × n` grid whose interior vertices are displaced by
/// `offsets` (in units of the grid spacing, one per interior vertex, row by
/// row). The result is made Delaunay. Left edge Dirichlet, the rest Soner.
pub fn perturbed_square(n: usize, offsets: &[[f64; 2]]) -> Result<TriMesh> {
    if n < 2 || offsets.len() != (n - 1) * (n - 1) {
        return Err(Error::InvalidConfig(format!(
            "need n >= 2 and (n-1)^2 offsets, got n = {n} and {} offsets",
            offsets.len()
        )));
    }
    if offsets.iter().flatten().any(|o| o.abs() >= 0.35) {
        return Err(Error::InvalidConfig("offsets must stay below 0.35 grid spacings".into()));
    }
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let mut p = [i as f64 * h, j as f64 * h];
            if i > 0 && i < n && j > 0 && j < n {
                let o = offsets[(j - 1) * (n - 1) + (i - 1)];
                p[0] += o[0] * h;
                p[1] += o[1] * h;
            }
            vertices.push(p);
        }
    }
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut edges = Vec::new();
    for k in 0..n {
        edges.push(BoundaryEdge::new(id(k, 0), id(k + 1, 0), Soner));
        edges.push(BoundaryEdge::new(id(k, n), id(k + 1, n), Soner));
        edges.push(BoundaryEdge::new(id(0, k), id(0, k + 1), Dirichlet));
        edges.push(BoundaryEdge::new(id(n, k), id(n, k + 1), Soner));
    }
    finish(vertices, triangles, edges)
}

/// Triangulates the band between two polylines whose vertices carry an
/// increasing parameter (x coordinate, angle). Both must start and end at
/// matching parameters.
fn stitch(lower: &[(usize, f64)], upper: &[(usize, f64)], out: &mut Vec<[usize; 3]>) {
    let (mut i, mut j) = (0, 0);
    while i + 1 < lower.len() || j + 1 < upper.len() {
        let advance_lower = if i + 1 == lower.len() {
            false
        } else if j + 1 == upper.len() {
            true
        } else {
            lower[i + 1].1 <= upper[j + 1].1
        };
        if advance_lower {
            out.push([lower[i].0, lower[i + 1].0, upper[j].0]);
            i += 1;
        } else {
            out.push([lower[i].0, upper[j + 1].0, upper[j].0]);
            j += 1;
        }
    }
}

fn finish(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>, edges: Vec<BoundaryEdge>) -> Result<TriMesh> {
    for t in &mut triangles {
        if signed_area(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
    }
    delaunay_flip(&vertices, &mut triangles);
    TriMesh::new(vertices, triangles, edges)
}

/// Flips interior edges until every pair of opposite angles sums to at most
/// `π`. Triangles must be counterclockwise; edges used by a single triangle
/// are never touched. Returns the number of flips.
pub fn delaunay_flip(vertices: &[Point], triangles: &mut [[usize; 3]]) -> usize {
    let mut flips = 0;
    loop {
        // (edge, triangle, local index of the opposite vertex), sorted so the
        // sweep order is reproducible
        let mut uses: Vec<((usize, usize), usize, usize)> = Vec::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                uses.push(((a.min(b), a.max(b)), t, k));
            }
        }
        uses.sort_unstable();
        let mut touched = vec![false; triangles.len()];
        let mut changed = false;
        for w in uses.windows(2) {
            let ((e1, t1, k1), (e2, t2, k2)) = (w[0], w[1]);
            if e1 != e2 || touched[t1] || touched[t2] {
                continue;
            }
            let (a, b) = e1;
            let c = triangles[t1][k1];
            let d = triangles[t2][k2];
            let sum = angle_at(&vertices[c], &vertices[a], &vertices[b])
                + angle_at(&vertices[d], &vertices[a], &vertices[b]);
            if sum <= PI + 1e-12 {
                continue;
            }
            let mut first = [c, d, a];
            let mut second = [d, c, b];
            for tri in [&mut first, &mut second] {
                if signed_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]) < 0.0 {
                    tri.swap(1, 2);
                }
            }
            triangles[t1] = first;
            triangles[t2] = second;
            touched[t1] = true;
            touched[t2] = true;
            changed = true;
            flips += 1;
        }
        if !changed {
            return flips;
        }
    }
}
