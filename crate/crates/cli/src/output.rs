//! Result files: legacy VTK, per-vertex CSV, JSON reports and the output
//! directory lock.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use distviac::{SolveReport, TriMesh};
use serde::Serialize;

/// A named per-vertex field.
pub struct PointField<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Legacy ASCII VTK, `UNSTRUCTURED_GRID` of triangles (cell type 5) with
/// point scalars.
pub fn vtk_string(mesh: &TriMesh, title: &str, fields: &[PointField<'_>]) -> String {
    let mut s = String::new();
    let nv = mesh.n_vertices();
    let nt = mesh.n_triangles();
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "{}", title.lines().next().unwrap_or("distviac")).unwrap();
    writeln!(s, "ASCII").unwrap();
    writeln!(s, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {nv} double").unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{} {} 0", p[0], p[1]).unwrap();
    }
    writeln!(s, "CELLS {nt} {}", 4 * nt).unwrap();
    for t in mesh.triangles() {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        writeln!(s, "5").unwrap();
    }
    writeln!(s, "POINT_DATA {nv}").unwrap();
    for field in fields {
        writeln!(s, "SCALARS {} double 1", field.name).unwrap();
        writeln!(s, "LOOKUP_TABLE default").unwrap();
        for v in field.values {
            writeln!(s, "{v}").unwrap();
        }
    }
    s
}

/// CSV with columns `vertex_id,x,y,phi,distance,exact,abs_error`; the last
/// two are empty without a reference solution.
pub fn csv_string(mesh: &TriMesh, phi: &[f64], distance: &[f64], exact: Option<&[f64]>) -> String {
    let mut s = String::from("vertex_id,x,y,phi,distance,exact,abs_error\n");
    for (i, p) in mesh.vertices().iter().enumerate() {
        write!(s, "{i},{},{},{},{}", p[0], p[1], phi[i], distance[i]).unwrap();
        match exact {
            Some(e) => writeln!(s, ",{},{}", e[i], (distance[i] - e[i]).abs()).unwrap(),
            None => writeln!(s, ",,").unwrap(),
        }
    }
    s
}

/// Per outer iteration: change measures and linear solve statistics.
pub fn convergence_csv(report: &SolveReport) -> String {
    let mut s = String::from("iteration,sup_change,distance_change,phi_change,linear_iterations,linear_residual\n");
    for k in 0..report.sup_change.len() {
        let stats = report.linear.get(k).cloned().unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{}",
            k + 1,
            report.sup_change[k],
            report.distance_change[k],
            report.phi_change[k],
            stats.iterations,
            stats.relative_residual
        )
        .unwrap();
    }
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    fs::write(path, text + "\n")
}

/// `prefix` with `suffix` appended to its file name.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

/// Exclusive lock on an output directory, released on drop.
pub struct OutputLock {
    path: PathBuf,
    _file: File,
}

impl OutputLock {
    pub const NAME: &'static str = ".distviac.lock";

    pub fn acquire(prefix: &Path) -> io::Result<Self> {
        let dir = match prefix.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir)?;
        let path = dir.join(Self::NAME);
        let mut file = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == io::ErrorKind::AlreadyExists {
                io::Error::new(e.kind(), format!("output directory is locked by {}", path.display()))
            } else {
                e
            }
        })?;
        writeln!(file, "{}", std::process::id())?;
        Ok(Self { path, _file: file })
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use distviac::fixtures;

    #[test]
    fn vtk_layout() {
        let mesh = fixtures::unit_square_two_triangles();
        let phi = [1.0, 0.5, 0.25, 1.0];
        let s = vtk_string(&mesh, "test", &[PointField { name: "phi", values: &phi }]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
        assert_eq!(lines[4], "POINTS 4 double");
        assert!(s.contains("CELLS 2 8\n3 0 1 2\n3 0 2 3\n"));
        assert!(s.contains("CELL_TYPES 2\n5\n5\n"));
        assert!(s.contains("POINT_DATA 4\nSCALARS phi double 1\nLOOKUP_TABLE default\n1\n0.5\n0.25\n1\n"));
    }

    #[test]
    fn csv_columns() {
        let mesh = fixtures::unit_square_two_triangles();
        let s = csv_string(&mesh, &[1.0; 4], &[0.0, 1.0, 1.0, 0.0], None);
        assert_eq!(s.lines().next().unwrap(), "vertex_id,x,y,phi,distance,exact,abs_error");
        assert_eq!(s.lines().nth(2).unwrap(), "1,1,0,1,1,,");
        let s = csv_string(&mesh, &[1.0; 4], &[0.0, 1.5, 1.0, 0.0], Some(&[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(s.lines().nth(2).unwrap(), "1,1,0,1,1.5,1,0.5");
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("run");
        let lock = OutputLock::acquire(&prefix).unwrap();
        assert!(OutputLock::acquire(&prefix).is_err());
        drop(lock);
        assert!(OutputLock::acquire(&prefix).is_ok());
    }

    #[test]
    fn suffixes() {
        assert_eq!(with_suffix(Path::new("out/run"), ".vtk"), PathBuf::from("out/run.vtk"));
    }
}
