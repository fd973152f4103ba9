//! Reader for GMSH MSH 2.2 ASCII files.
//!
//! Triangles (element type 2) form the mesh. Line elements (type 1) carry
//! the boundary tags through their physical group; point elements (type 15)
//! are ignored.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{BoundaryEdge, BoundaryTag, Point, TriMesh};
use crate::{Error, Result};

/// Maps GMSH physical groups onto boundary tags.
///
/// A physical group that has a name in `$PhysicalNames` is matched by name
/// (case-insensitive); unnamed groups are matched by number.
#[derive(Debug, Clone, PartialEq)]
pub struct GmshTagMap {
    pub dirichlet_names: Vec<String>,
    pub soner_names: Vec<String>,
    pub dirichlet_tags: Vec<i64>,
    pub soner_tags: Vec<i64>,
}

impl Default for GmshTagMap {
    fn default() -> Self {
        Self {
            dirichlet_names: vec!["GammaD".into()],
            soner_names: vec!["GammaS".into()],
            dirichlet_tags: vec![1],
            soner_tags: vec![2],
        }
    }
}

impl GmshTagMap {
    fn resolve(&self, physical: i64, name: Option<&str>) -> Option<BoundaryTag> {
        let matches = |names: &[String], n: &str| names.iter().any(|m| m.eq_ignore_ascii_case(n));
        match name {
            Some(n) if matches(&self.dirichlet_names, n) => Some(BoundaryTag::Dirichlet),
            Some(n) if matches(&self.soner_names, n) => Some(BoundaryTag::Soner),
            Some(_) if !self.dirichlet_tags.contains(&physical) && !self.soner_tags.contains(&physical) => None,
            _ if self.dirichlet_tags.contains(&physical) => Some(BoundaryTag::Dirichlet),
            _ if self.soner_tags.contains(&physical) => Some(BoundaryTag::Soner),
            _ => None,
        }
    }
}

pub fn read_file(path: &Path, tags: &GmshTagMap) -> Result<TriMesh> {
    let text = fs::read_to_string(path)?;
    parse(&text, path, tags)
}

pub fn parse(text: &str, path: &Path, tags: &GmshTagMap) -> Result<TriMesh> {
    let err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut saw_format = false;
    let mut names: HashMap<(i64, i64), String> = HashMap::new();
    let mut node_index: HashMap<i64, usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut lines_tagged: Vec<(usize, [usize; 2], i64)> = Vec::new();

    let mut last = 0;
    while let Some((line, section)) = lines.next() {
        last = line;
        let mut body = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .ok_or_else(|| err(line, format!("unterminated {what} section")))
        };
        match section {
            "$MeshFormat" => {
                let (l, fmt) = body("$MeshFormat")?;
                let fields: Vec<_> = fmt.split_whitespace().collect();
                if fields.len() < 2 || !fields[0].starts_with("2.") {
                    return Err(err(l, format!("unsupported MSH version `{fmt}` (need 2.2)")));
                }
                if fields[1] != "0" {
                    return Err(err(l, "binary MSH files are not supported".into()));
                }
                let (l, end) = body("$MeshFormat")?;
                if end != "$EndMeshFormat" {
                    return Err(err(l, "expected $EndMeshFormat".into()));
                }
                saw_format = true;
            }
            "$PhysicalNames" => {
                let (l, count) = body("$PhysicalNames")?;
                let count: usize = count.parse().map_err(|_| err(l, "invalid count".into()))?;
                for _ in 0..count {
                    let (l, entry) = body("$PhysicalNames")?;
                    let mut parts = entry.splitn(3, char::is_whitespace);
                    let dim = parts.next().and_then(|s| s.parse::<i64>().ok());
                    let tag = parts.next().and_then(|s| s.trim().parse::<i64>().ok());
                    let name = parts.next().map(|s| s.trim().trim_matches('"').to_string());
                    match (dim, tag, name) {
                        (Some(d), Some(t), Some(n)) => {
                            names.insert((d, t), n);
                        }
                        _ => return Err(err(l, format!("malformed physical name `{entry}`"))),
                    }
                }
                expect_end(&mut body, "$EndPhysicalNames", &err)?;
            }
            "$Nodes" => {
                let (l, count) = body("$Nodes")?;
                let count: usize = count.parse().map_err(|_| err(l, "invalid node count".into()))?;
                vertices.reserve(count);
                for _ in 0..count {
                    let (l, entry) = body("$Nodes")?;
                    let f: Vec<_> = entry.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(err(l, format!("expected `id x y z`, found `{entry}`")));
                    }
                    let id: i64 = f[0].parse().map_err(|_| err(l, format!("invalid node id `{}`", f[0])))?;
                    let x: f64 = f[1].parse().map_err(|_| err(l, format!("invalid coordinate `{}`", f[1])))?;
                    let y: f64 = f[2].parse().map_err(|_| err(l, format!("invalid coordinate `{}`", f[2])))?;
                    if node_index.insert(id, vertices.len()).is_some() {
                        return Err(err(l, format!("duplicate node id {id}")));
                    }
                    vertices.push([x, y]);
                }
                expect_end(&mut body, "$EndNodes", &err)?;
            }
            "$Elements" => {
                let (l, count) = body("$Elements")?;
                let count: usize = count.parse().map_err(|_| err(l, "invalid element count".into()))?;
                for _ in 0..count {
                    let (l, entry) = body("$Elements")?;
                    let f: Vec<i64> = entry
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| err(l, format!("malformed element `{entry}`")))?;
                    if f.len() < 3 {
                        return Err(err(l, format!("malformed element `{entry}`")));
                    }
                    let (kind, ntags) = (f[1], f[2] as usize);
                    let node_count = match kind {
                        1 => 2,
                        2 => 3,
                        15 => 1,
                        other => return Err(err(l, format!("unsupported element type {other}"))),
                    };
                    if f.len() != 3 + ntags + node_count {
                        return Err(err(l, format!("element `{entry}` has the wrong number of fields")));
                    }
                    let physical = if ntags > 0 { f[3] } else { 0 };
                    let mut nodes = [0usize; 3];
                    for (k, &id) in f[3 + ntags..].iter().enumerate() {
                        nodes[k] = *node_index
                            .get(&id)
                            .ok_or_else(|| err(l, format!("element references unknown node {id}")))?;
                    }
                    match kind {
                        1 => lines_tagged.push((l, [nodes[0], nodes[1]], physical)),
                        2 => triangles.push(nodes),
                        _ => {}
                    }
                }
                expect_end(&mut body, "$EndElements", &err)?;
            }
            other if other.starts_with("$") && !other.starts_with("$End") => {
                // Skip unknown sections such as $NodeData.
                let end = format!("$End{}", &other[1..]);
                loop {
                    match lines.next() {
                        Some((_, l)) if l == end => break,
                        Some(_) => {}
                        None => return Err(err(line, format!("unterminated {other} section"))),
                    }
                }
            }
            other => return Err(err(line, format!("unexpected line `{other}`"))),
        }
    }

    if !saw_format {
        return Err(err(1, "missing $MeshFormat section".into()));
    }
    if triangles.is_empty() {
        return Err(err(last, "no triangle elements (type 2) found".into()));
    }

    let mut edges = Vec::with_capacity(lines_tagged.len());
    for (l, [a, b], physical) in lines_tagged {
        let name = names.get(&(1, physical)).map(String::as_str);
        let tag = tags.resolve(physical, name).ok_or_else(|| {
            Error::Tag(format!(
                "line {l}: physical group {physical}{} is neither Dirichlet nor Soner",
                name.map(|n| format!(" (\"{n}\")")).unwrap_or_default()
            ))
        })?;
        edges.push(BoundaryEdge::new(a, b, tag));
    }

    TriMesh::new(vertices, triangles, edges)
}

fn expect_end<'a, F>(body: &mut F, end: &str, err: &dyn Fn(usize, String) -> Error) -> Result<()>
where
    F: FnMut(&str) -> Result<(usize, &'a str)>,
{
    let (l, text) = body(end)?;
    if text != end {
        return Err(err(l, format!("expected {end}, found `{text}`")));
    }
    Ok(())
}
