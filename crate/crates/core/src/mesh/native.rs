//! The `DISTMESH 1` text format.
//!
//! ```text
//! DISTMESH 1
//! <vertex count>
//! <x> <y>                 one line per vertex
//! <triangle count>
//! <i> <j> <k>             zero-based, one line per triangle
//! <boundary edge count>
//! <i> <j> <tag>           tag 1 = Dirichlet, 2 = Soner
//! ```
//!
//! Fields are whitespace separated and lines end with LF. Blank lines are
//! skipped. Slits are stored as duplicated vertices.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::{BoundaryEdge, BoundaryTag, Point, TriMesh};
use crate::{Error, Result};

pub const HEADER: &str = "DISTMESH 1";

pub fn read_file(path: &Path) -> Result<TriMesh> {
    let text = fs::read_to_string(path)?;
    parse(&text, path)
}

pub fn parse(text: &str, path: &Path) -> Result<TriMesh> {
    let mut lines = Lines::new(text, path);

    let (line, header) = lines.next_line()?;
    if header.split_whitespace().collect::<Vec<_>>() != ["DISTMESH", "1"] {
        return Err(lines.error(line, format!("expected header `{HEADER}`")));
    }

    let n_vertices = lines.count()?;
    let mut vertices: Vec<Point> = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (line, fields) = lines.fields(2)?;
        let x = lines.float(line, fields[0])?;
        let y = lines.float(line, fields[1])?;
        vertices.push([x, y]);
    }

    let n_triangles = lines.count()?;
    let mut triangles = Vec::with_capacity(n_triangles);
    for _ in 0..n_triangles {
        let (line, fields) = lines.fields(3)?;
        let mut tri = [0usize; 3];
        for (slot, field) in tri.iter_mut().zip(&fields) {
            *slot = lines.index(line, field, n_vertices)?;
        }
        triangles.push(tri);
    }

    let n_edges = lines.count()?;
    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let (line, fields) = lines.fields(3)?;
        let a = lines.index(line, fields[0], n_vertices)?;
        let b = lines.index(line, fields[1], n_vertices)?;
        let tag = parse_tag(fields[2])
            .ok_or_else(|| Error::Tag(format!("line {line}: unknown boundary tag `{}`", fields[2])))?;
        edges.push(BoundaryEdge::new(a, b, tag));
    }

    if let Ok((line, _)) = lines.next_line() {
        return Err(lines.error(line, "unexpected trailing data".into()));
    }

    TriMesh::new(vertices, triangles, edges)
}

fn parse_tag(field: &str) -> Option<BoundaryTag> {
    match field.to_ascii_lowercase().as_str() {
        "1" | "d" | "dirichlet" | "gammad" => Some(BoundaryTag::Dirichlet),
        "2" | "s" | "soner" | "gammas" => Some(BoundaryTag::Soner),
        _ => None,
    }
}

/// Serialises a mesh. Coordinates use the shortest decimal form that
/// round-trips, so reading the output back reproduces the mesh exactly.
pub fn to_string(mesh: &TriMesh) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "{}", mesh.n_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:?} {:?}", p[0], p[1]);
    }
    let _ = writeln!(out, "{}", mesh.n_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "{}", mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let tag = match e.tag {
            BoundaryTag::Dirichlet => 1,
            BoundaryTag::Soner => 2,
        };
        let _ = writeln!(out, "{} {} {}", e.vertices[0], e.vertices[1], tag);
    }
    out
}

pub fn write<W: Write>(mesh: &TriMesh, mut w: W) -> io::Result<()> {
    w.write_all(to_string(mesh).as_bytes())
}

pub fn write_file(mesh: &TriMesh, path: &Path) -> Result<()> {
    fs::write(path, to_string(mesh))?;
    Ok(())
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    path: PathBuf,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        Self {
            iter: text.lines().enumerate(),
            path: path.to_path_buf(),
            last_line: 0,
        }
    }

    fn error(&self, line: usize, message: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message,
        }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str)> {
        for (i, l) in self.iter.by_ref() {
            self.last_line = i + 1;
            if !l.trim().is_empty() {
                return Ok((i + 1, l));
            }
        }
        Err(self.error(self.last_line + 1, "unexpected end of file".into()))
    }

    fn fields(&mut self, expected: usize) -> Result<(usize, Vec<&'a str>)> {
        let (line, text) = self.next_line()?;
        let fields: Vec<_> = text.split_whitespace().collect();
        if fields.len() != expected {
            return Err(self.error(
                line,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        Ok((line, fields))
    }

    fn count(&mut self) -> Result<usize> {
        let (line, fields) = self.fields(1)?;
        fields[0]
            .parse()
            .map_err(|_| self.error(line, format!("invalid count `{}`", fields[0])))
    }

    fn float(&self, line: usize, field: &str) -> Result<f64> {
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error(line, format!("invalid coordinate `{field}`"))),
        }
    }

    fn index(&self, line: usize, field: &str, n: usize) -> Result<usize> {
        match field.parse::<usize>() {
            Ok(i) if i < n => Ok(i),
            _ => Err(self.error(line, format!("invalid vertex index `{field}` (vertex count {n})"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "DISTMESH 1\n4\n0 0\n1 0\n1 1\n0 1\n2\n0 1 2\n0 2 3\n4\n0 1 2\n1 2 2\n2 3 2\n3 0 1\n";

    #[test]
    fn parses_two_triangle_square() {
        let mesh = parse(SQUARE, Path::new("square.mesh")).unwrap();
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.n_triangles(), 2);
        assert_eq!(mesh.boundary_edges().len(), 4);
    }

    #[test]
    fn writer_output_reads_back_identically() {
        let mesh = parse(SQUARE, Path::new("square.mesh")).unwrap();
        let text = to_string(&mesh);
        let again = parse(&text, Path::new("again.mesh")).unwrap();
        assert_eq!(mesh, again);
        assert_eq!(text, to_string(&again));
    }

    #[test]
    fn reports_line_numbers() {
        let bad = SQUARE.replace("1 1\n", "1 x\n");
        match parse(&bad, Path::new("bad.mesh")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        match parse("DISTMESH 2\n", Path::new("bad.mesh")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse("DISTMESH 1\n3\n0 0\n", Path::new("short.mesh")) {
            Err(Error::Parse { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_tag_is_a_tag_error() {
        let bad = SQUARE.replace("3 0 1\n", "3 0 7\n");
        assert!(matches!(parse(&bad, Path::new("t.mesh")), Err(Error::Tag(_))));
    }
}
