//! Subcommand implementations.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use distviac::eikonal::{self, Solution};
use distviac::fixtures::{self, StripTags};
use distviac::mesh::{self, gmsh, native, GmshTagMap};
use distviac::oracles::{self, ErrorReport};
use distviac::{BcMode, Error, ExactCase, MeshFormat, SolveReport, SolverConfig, TriMesh, VertexClass};
use serde::Serialize;

use crate::output::{self, with_suffix, OutputLock, PointField};
use crate::{CaseArg, CompareArgs, FixtureArgs, FormatArg, InputArgs, SolveArgs, StudyArgs, ValidateArgs};

/// A failure mapped to a process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Parse, configuration or topology problems. Exit 1.
    Config(String),
    /// The solver failed or did not converge. Exit 2.
    Solver(String),
    /// Reading or writing files failed. Exit 3.
    Io(String),
    /// `--strict` found violations. Exit 4.
    Strict(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Io(_) => 3,
            CliError::Strict(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Solver(m) | CliError::Io(m) | CliError::Strict(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Io(_) => CliError::Io(message),
            Error::Parse { .. }
            | Error::Topology(_)
            | Error::Tag(_)
            | Error::DegenerateElement { .. }
            | Error::EmptyDirichletSet
            | Error::DimensionMismatch { .. }
            | Error::OutsideDomain { .. }
            | Error::MeshMismatch { .. }
            | Error::InvalidConfig(_) => CliError::Config(message),
            _ => CliError::Solver(message),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn tag_map(input: &InputArgs) -> GmshTagMap {
    let mut map = GmshTagMap::default();
    let split = |groups: &[String]| {
        let mut names = Vec::new();
        let mut tags = Vec::new();
        for g in groups {
            match g.trim().parse::<i64>() {
                Ok(t) => tags.push(t),
                Err(_) => names.push(g.trim().to_string()),
            }
        }
        (names, tags)
    };
    if !input.gmsh_dirichlet.is_empty() {
        (map.dirichlet_names, map.dirichlet_tags) = split(&input.gmsh_dirichlet);
    }
    if !input.gmsh_soner.is_empty() {
        (map.soner_names, map.soner_tags) = split(&input.gmsh_soner);
    }
    map
}

fn load(path: &Path, input: &InputArgs) -> CliResult<TriMesh> {
    let format = match input.format {
        Some(FormatArg::Gmsh) => MeshFormat::Gmsh22,
        Some(FormatArg::Native) => MeshFormat::Native,
        None => MeshFormat::from_path(path),
    };
    let mesh = match format {
        MeshFormat::Gmsh22 => gmsh::read_file(path, &tag_map(input)),
        MeshFormat::Native => native::read_file(path),
    };
    mesh.map_err(|e| match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn default_prefix(mesh: &Path, given: &Option<PathBuf>) -> PathBuf {
    given.clone().unwrap_or_else(|| mesh.with_extension(""))
}

fn checked_config(cfg: SolverConfig) -> CliResult<SolverConfig> {
    cfg.validate()?;
    Ok(cfg)
}

/// A finished solve, or the last iterate of a solve that hit the iteration cap.
fn run_solver(mesh: &TriMesh, cfg: &SolverConfig) -> CliResult<(Solution, Option<String>)> {
    match eikonal::solve(mesh, cfg) {
        Ok(s) => Ok((s, None)),
        Err(Error::FixedPointNotConverged(s)) => {
            let message = format!(
                "fixed point did not converge after {} outer iterations",
                s.report.outer_iterations
            );
            Ok((*s, Some(message)))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    command: &'a str,
    mesh: String,
    config: &'a SolverConfig,
    report: Option<&'a SolveReport>,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct Norms<'a> {
    case: &'a ExactCase,
    bc_mode: BcMode,
    linf: f64,
    l2: f64,
    near_boundary_linf: f64,
    band: f64,
    excluded: usize,
    max_computed: f64,
    max_reference: f64,
}

impl<'a> Norms<'a> {
    fn new(case: &'a ExactCase, bc_mode: BcMode, e: &ErrorReport) -> Self {
        Self {
            case,
            bc_mode,
            linf: e.linf,
            l2: e.l2,
            near_boundary_linf: e.near_boundary_linf,
            band: e.band,
            excluded: e.excluded,
            max_computed: e.max_computed,
            max_reference: e.max_reference,
        }
    }
}

/// What was run, for the JSON report.
#[derive(Clone, Copy)]
struct Run<'a> {
    command: &'a str,
    mesh_path: &'a Path,
    cfg: &'a SolverConfig,
}

/// VTK, CSV, JSON report and convergence log for one solution.
fn write_solution(
    run: Run<'_>,
    mesh: &TriMesh,
    solution: &Solution,
    failure: Option<&str>,
    reference: Option<(&[f64], &[f64])>,
    prefix: &Path,
) -> CliResult {
    let phi = &solution.phi.values;
    let distance = &solution.distance.values;
    let mut fields = vec![
        PointField { name: "phi", values: phi },
        PointField { name: "distance", values: distance },
    ];
    if let Some((exact, error)) = reference {
        fields.push(PointField { name: "exact", values: exact });
        fields.push(PointField { name: "error", values: error });
    }
    fs::write(with_suffix(prefix, ".vtk"), output::vtk_string(mesh, "distviac", &fields))?;
    fs::write(
        with_suffix(prefix, ".csv"),
        output::csv_string(mesh, phi, distance, reference.map(|r| r.0)),
    )?;
    fs::write(with_suffix(prefix, ".convergence.csv"), output::convergence_csv(&solution.report))?;
    write_report(run, Some(&solution.report), failure, prefix)
}

fn write_report(run: Run<'_>, report: Option<&SolveReport>, error: Option<&str>, prefix: &Path) -> CliResult {
    let json = RunReport {
        command: run.command,
        mesh: run.mesh_path.display().to_string(),
        config: run.cfg,
        report,
        error,
    };
    output::write_json(&with_suffix(prefix, ".json"), &json)?;
    Ok(())
}

fn summary(solution: &Solution) -> String {
    let r = &solution.report;
    let max_d = solution
        .distance
        .values
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max);
    format!(
        "{} vertices, {} outer iterations, converged={}, max distance {max_d:.6}, {:.3}s",
        r.n_vertices, r.outer_iterations, r.converged, r.wall_time
    )
}

pub fn solve(args: &SolveArgs) -> CliResult {
    let cfg = checked_config(args.solver.config())?;
    let mesh = load(&args.mesh.mesh, &args.mesh.input)?;
    let prefix = default_prefix(&args.mesh.mesh, &args.out_prefix);
    let _lock = OutputLock::acquire(&prefix)?;
    let run = Run {
        command: "solve",
        mesh_path: &args.mesh.mesh,
        cfg: &cfg,
    };
    let (solution, failure) = match run_solver(&mesh, &cfg) {
        Ok(r) => r,
        Err(e) => {
            write_report(run, None, Some(&e.to_string()), &prefix)?;
            return Err(e);
        }
    };
    write_solution(run, &mesh, &solution, failure.as_deref(), None, &prefix)?;
    println!("{}", summary(&solution));
    println!("wrote {}.{{vtk,csv,json,convergence.csv}}", prefix.display());
    match failure {
        Some(m) => Err(CliError::Solver(m)),
        None => Ok(()),
    }
}

pub fn validate(args: &ValidateArgs) -> CliResult {
    let mesh = load(&args.mesh.mesh, &args.mesh.input)?;
    let prefix = default_prefix(&args.mesh.mesh, &args.out_prefix);
    let _lock = OutputLock::acquire(&prefix)?;
    let report = mesh::validate_mesh(&mesh);
    println!("mesh: {}", args.mesh.mesh.display());
    println!("vertices: {}  triangles: {}", report.n_vertices, report.n_triangles);
    println!(
        "angles: min {:.4} deg  max {:.4} deg",
        report.min_angle.to_degrees(),
        report.max_angle.to_degrees()
    );
    if report.angle_condition_ok {
        println!("angle condition: ok");
    } else {
        println!("angle condition: violated on {} interior edges", report.violations.len());
        for v in report.violations.iter().take(20) {
            println!(
                "  edge {}-{}: opposite angle sum {:.4} deg",
                v.edge[0],
                v.edge[1],
                v.opposite_angle_sum.to_degrees()
            );
        }
        if report.violations.len() > 20 {
            println!("  ...");
        }
    }
    output::write_json(&with_suffix(&prefix, ".validate.json"), &report)?;
    if args.strict && !report.angle_condition_ok {
        return Err(CliError::Strict(format!(
            "angle condition violated on {} interior edges",
            report.violations.len()
        )));
    }
    Ok(())
}

/// Reference geometry with its parameters read off the mesh.
fn exact_case(case: CaseArg, mesh: &TriMesh) -> CliResult<ExactCase> {
    let radii = || {
        mesh.vertices()
            .iter()
            .map(|p| p[0].hypot(p[1]))
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| (lo.min(r), hi.max(r)))
    };
    Ok(match case {
        CaseArg::Annulus => {
            let (r_in, r_out) = radii();
            ExactCase::Annulus { r_in, r_out }
        }
        CaseArg::SlitAnnulus => {
            let (r_in, r_out) = radii();
            ExactCase::SlitAnnulus { r_in, r_out }
        }
        CaseArg::Strip => {
            let (lo, hi) = mesh.bounding_box();
            let tol = oracles::DOMAIN_TOLERANCE * (1.0 + mesh.bounding_box_diagonal());
            if lo[0].abs() > tol || lo[1].abs() > tol {
                return Err(CliError::Config(format!(
                    "strip case expects the mesh to start at the origin, found lower corner ({}, {})",
                    lo[0], lo[1]
                )));
            }
            let length = hi[0];
            let two_sided = mesh
                .vertices_of_class(VertexClass::Dirichlet)
                .any(|v| mesh.vertices()[v][0] > 0.5 * length);
            ExactCase::Strip {
                length,
                width: hi[1],
                two_sided,
            }
        }
        CaseArg::SquareObstacle => {
            let half = mesh
                .vertices_of_class(VertexClass::Dirichlet)
                .map(|v| {
                    let p = mesh.vertices()[v];
                    p[0].abs().max(p[1].abs())
                })
                .fold(0.0, f64::max);
            ExactCase::square(half)
        }
    })
}

struct Compared {
    solution: Solution,
    failure: Option<String>,
    errors: ErrorReport,
}

fn compare_one(
    args: &CompareArgs,
    mesh: &TriMesh,
    case: &ExactCase,
    exact: &[f64],
    cfg: &SolverConfig,
    prefix: &Path,
) -> CliResult<Compared> {
    let run = Run {
        command: "compare",
        mesh_path: &args.mesh.mesh,
        cfg,
    };
    let (solution, failure) = match run_solver(mesh, cfg) {
        Ok(r) => r,
        Err(e) => {
            write_report(run, None, Some(&e.to_string()), prefix)?;
            return Err(e);
        }
    };
    let reference = distviac::ScalarField::distance(exact.to_vec());
    let errors = oracles::error_norms(mesh, &solution.distance, &reference, None)?;
    write_solution(run, mesh, &solution, failure.as_deref(), Some((exact, &errors.errors)), prefix)?;
    output::write_json(&with_suffix(prefix, ".norms.json"), &Norms::new(case, cfg.bc_mode, &errors))?;
    Ok(Compared {
        solution,
        failure,
        errors,
    })
}

fn norms_line(label: &str, c: &Compared) -> String {
    format!(
        "{label}: L_inf {:.6e}  L2 {:.6e}  near-boundary L_inf {:.6e}  ({})",
        c.errors.linf,
        c.errors.l2,
        c.errors.near_boundary_linf,
        summary(&c.solution)
    )
}

pub fn compare(args: &CompareArgs) -> CliResult {
    let base = checked_config(args.solver.config())?;
    let mesh = load(&args.mesh.mesh, &args.mesh.input)?;
    let case = exact_case(args.case, &mesh)?;
    let exact = case.field(&mesh)?.values;
    let prefix = default_prefix(&args.mesh.mesh, &args.out_prefix);
    let _lock = OutputLock::acquire(&prefix)?;

    let runs: Vec<(&str, BcMode, PathBuf)> = if args.both {
        vec![
            ("soner", BcMode::Soner, with_suffix(&prefix, ".soner")),
            ("robin", BcMode::Robin, with_suffix(&prefix, ".robin")),
        ]
    } else {
        let label = match base.bc_mode {
            BcMode::DirichletOnly => "dirichlet",
            BcMode::Soner => "soner",
            BcMode::Robin => "robin",
        };
        vec![(label, base.bc_mode, prefix.clone())]
    };
    let mut results = Vec::new();
    for (label, mode, run_prefix) in &runs {
        let cfg = base.clone().with_mode(*mode);
        let c = compare_one(args, &mesh, &case, &exact, &cfg, run_prefix)?;
        println!("{}", norms_line(label, &c));
        results.push(c);
    }
    if args.both {
        println!(
            "L_inf comparison: soner {:.6e}  robin {:.6e}",
            results[0].errors.linf, results[1].errors.linf
        );
    }
    match results.iter().find_map(|c| c.failure.clone()) {
        Some(m) => Err(CliError::Solver(m)),
        None => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct StudyRow {
    mesh: String,
    n_vertices: usize,
    mean_edge_length: f64,
    outer_iterations: usize,
    converged: bool,
    linf: Option<f64>,
    l2: Option<f64>,
    near_boundary_linf: Option<f64>,
    wall_time: f64,
    iteration_ratio: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn study_csv(rows: &[StudyRow]) -> String {
    let mut s = String::from(
        "mesh,n_vertices,mean_edge_length,outer_iterations,converged,linf,l2,near_boundary_linf,wall_time,iteration_ratio\n",
    );
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.mesh,
            r.n_vertices,
            r.mean_edge_length,
            r.outer_iterations,
            r.converged,
            opt(r.linf),
            opt(r.l2),
            opt(r.near_boundary_linf),
            r.wall_time,
            opt(r.iteration_ratio)
        ));
    }
    s
}

#[derive(Serialize)]
struct StudyReport<'a> {
    command: &'a str,
    config: &'a SolverConfig,
    case: Option<&'a ExactCase>,
    rows: &'a [StudyRow],
}

pub fn study(args: &StudyArgs) -> CliResult {
    if args.mesh.len() < 2 {
        return Err(CliError::Config("study needs at least two meshes".into()));
    }
    let cfg = checked_config(args.solver.config())?;
    let prefix = default_prefix(&args.mesh[0], &args.out_prefix);
    let _lock = OutputLock::acquire(&prefix)?;
    let mut rows: Vec<StudyRow> = Vec::new();
    let mut cases = Vec::new();
    let mut failure = None;
    for path in &args.mesh {
        let mesh = load(path, &args.input)?;
        let (solution, fail) = run_solver(&mesh, &cfg)?;
        let norms = match args.case {
            Some(c) => {
                let case = exact_case(c, &mesh)?;
                let e = oracles::error_norms(&mesh, &solution.distance, &case.field(&mesh)?, None)?;
                cases.push(case);
                Some(e)
            }
            None => None,
        };
        let iterations = solution.report.outer_iterations;
        let iteration_ratio = rows
            .last()
            .filter(|prev| prev.outer_iterations > 0)
            .map(|prev| iterations as f64 / prev.outer_iterations as f64);
        let row = StudyRow {
            mesh: path.display().to_string(),
            n_vertices: mesh.n_vertices(),
            mean_edge_length: mesh.mean_edge_length(),
            outer_iterations: iterations,
            converged: solution.report.converged,
            linf: norms.as_ref().map(|e| e.linf),
            l2: norms.as_ref().map(|e| e.l2),
            near_boundary_linf: norms.as_ref().map(|e| e.near_boundary_linf),
            wall_time: solution.report.wall_time,
            iteration_ratio,
        };
        println!(
            "{}: {} vertices, {} outer iterations, L_inf {}, ratio {}",
            row.mesh,
            row.n_vertices,
            row.outer_iterations,
            opt(row.linf),
            opt(row.iteration_ratio)
        );
        rows.push(row);
        if failure.is_none() {
            failure = fail.map(|m| format!("{}: {m}", path.display()));
        }
    }
    let csv_path = with_suffix(&prefix, ".study.csv");
    fs::write(&csv_path, study_csv(&rows))?;
    let report = StudyReport {
        command: "study",
        config: &cfg,
        case: cases.last(),
        rows: &rows,
    };
    output::write_json(&with_suffix(&prefix, ".study.json"), &report)?;
    println!("wrote {}", csv_path.display());
    match failure {
        Some(m) => Err(CliError::Solver(m)),
        None => Ok(()),
    }
}

pub fn fixture(args: &FixtureArgs) -> CliResult {
    if !(args.h > 0.0 && args.h.is_finite()) {
        return Err(CliError::Config(format!("h must be positive, got {}", args.h)));
    }
    let mesh = match args.case {
        CaseArg::Annulus => fixtures::annulus(1.0, 2.0, args.h),
        CaseArg::SlitAnnulus => fixtures::slit_annulus(1.0, 2.0, args.h),
        CaseArg::Strip => fixtures::strip(1.0, 0.2, args.h, StripTags::left_dirichlet()),
        CaseArg::SquareObstacle => fixtures::square_obstacle(0.25, 1.0, args.h),
    }?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    native::write_file(&mesh, &args.out)?;
    println!(
        "wrote {} ({} vertices, {} triangles)",
        args.out.display(),
        mesh.n_vertices(),
        mesh.n_triangles()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        assert_eq!(CliError::from(Error::Topology("x".into())).exit_code(), 1);
        assert_eq!(CliError::from(Error::InvalidConfig("x".into())).exit_code(), 1);
        assert_eq!(CliError::from(Error::NonPositivePhi { vertex: 0, value: -1.0 }).exit_code(), 2);
        assert_eq!(CliError::from(Error::Io(std::io::Error::other("x"))).exit_code(), 3);
    }

    #[test]
    fn gmsh_group_flags() {
        let input = InputArgs {
            format: None,
            gmsh_dirichlet: vec!["Wall".into(), "7".into()],
            gmsh_soner: vec![],
        };
        let map = tag_map(&input);
        assert_eq!(map.dirichlet_names, vec!["Wall".to_string()]);
        assert_eq!(map.dirichlet_tags, vec![7]);
        assert_eq!(map.soner_tags, GmshTagMap::default().soner_tags);
    }

    #[test]
    fn cases_from_meshes() {
        let annulus = fixtures::annulus(1.0, 2.0, 0.25).unwrap();
        let ExactCase::Annulus { r_in, r_out } = exact_case(CaseArg::Annulus, &annulus).unwrap() else {
            panic!()
        };
        assert!((r_in - 1.0).abs() < 1e-12 && (r_out - 2.0).abs() < 1e-12);

        let strip = fixtures::strip(1.0, 0.2, 0.05, StripTags::left_dirichlet()).unwrap();
        assert_eq!(
            exact_case(CaseArg::Strip, &strip).unwrap(),
            ExactCase::Strip { length: 1.0, width: 0.2, two_sided: false }
        );
        let both = fixtures::strip(1.0, 0.2, 0.05, StripTags::both_ends_dirichlet()).unwrap();
        assert!(matches!(
            exact_case(CaseArg::Strip, &both).unwrap(),
            ExactCase::Strip { two_sided: true, .. }
        ));

        let square = fixtures::square_obstacle(0.25, 1.0, 0.1).unwrap();
        assert_eq!(exact_case(CaseArg::SquareObstacle, &square).unwrap(), ExactCase::square(0.25));
    }
}
