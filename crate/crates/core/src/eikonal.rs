//! Solve modes for the transformed problem and distance recovery.
//!
//! * [`BcMode::DirichletOnly`]: every boundary vertex gets `φ = 1`.
//! * [`BcMode::Soner`]: fixed point alternating a linear solve with frozen
//!   values on `Γ_S` and the Godunov update
//!   `d_i = min_{j ∈ V(i)} (d_j + |a_i a_j|)` on `Γ_S`.
//! * [`BcMode::Robin`]: one linear solve with the boundary term
//!   `ν ∫_{Γ_S} φ ψ`.
//!
//! The Soner update and the stored boundary values live in the distance
//! variable, so they survive values of `φ` far below the smallest normal
//! float.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_with, AssemblyOptions, FemSystem, MassLumping, SonerTreatment};
use crate::mesh::{TriMesh, VertexClass};
use crate::sparse::{pcg, spmv, EnvelopeCholesky, SolveStats, DEFAULT_TOLERANCE};
use crate::{Error, Result};

/// Slack above 1 tolerated before `φ` counts as a maximum-principle violation.
pub const PHI_UPPER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcMode {
    DirichletOnly,
    #[default]
    Soner,
    Robin,
}

/// How neighbour candidates `d_j + |a_i a_j|` are combined in the Soner update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reducer {
    /// Godunov relation; the distance-consistent choice.
    #[default]
    Min,
    /// Literal maximum over neighbours.
    Max,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolverKind {
    /// Envelope Cholesky factored once per solve.
    #[default]
    Direct,
    /// Jacobi-preconditioned conjugate gradients.
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub solver: LinearSolverKind,
    /// Relative residual target for CG.
    pub tol: f64,
    /// CG iteration cap; `None` means `20·n`.
    pub max_iter: Option<usize>,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            solver: LinearSolverKind::Direct,
            tol: DEFAULT_TOLERANCE,
            max_iter: None,
        }
    }
}

/// Treatment of `φ` values outside `(0, 1]` in [`recover_distance`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampPolicy {
    /// `φ > 1` gives `d = 0`; `φ ≤ 0` gives `d = +∞`. Both are counted.
    #[default]
    Clamp,
    /// `d = -ν log φ` as computed, possibly negative; `φ ≤ 0` still gives `+∞`.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub nu: f64,
    pub bc_mode: BcMode,
    pub reducer: Reducer,
    /// Bound on `sup_{Γ_S} |Δd| / ν`, the relative change of `φ` on `Γ_S`
    /// between outer iterations.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub linear: LinearConfig,
    pub mass: MassLumping,
    pub clamp: ClampPolicy,
    /// Start the Soner iteration from the Robin solution instead of `φ ≡ 1`.
    pub warm_start_robin: bool,
}

impl SolverConfig {
    pub fn new(nu: f64) -> Self {
        Self {
            nu,
            bc_mode: BcMode::Soner,
            reducer: Reducer::Min,
            fp_tol: 1e-12,
            fp_max_iter: 10_000,
            linear: LinearConfig::default(),
            mass: MassLumping::Consistent,
            clamp: ClampPolicy::Clamp,
            warm_start_robin: false,
        }
    }

    pub fn with_mode(mut self, mode: BcMode) -> Self {
        self.bc_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidConfig(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.fp_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("fp_tol must be positive, got {}", self.fp_tol)));
        }
        if self.fp_max_iter == 0 {
            return Err(Error::InvalidConfig("fp_max_iter must be at least 1".into()));
        }
        if !(self.linear.tol > 0.0 && self.linear.tol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "linear tolerance must lie in (0, 1), got {}",
                self.linear.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FieldKind {
    Phi,
    Distance,
}

/// Per-vertex values of `φ` or of the distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub kind: FieldKind,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn phi(values: Vec<f64>) -> Self {
        Self {
            kind: FieldKind::Phi,
            values,
        }
    }

    pub fn distance(values: Vec<f64>) -> Self {
        Self {
            kind: FieldKind::Distance,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_mesh(&self, mesh: &TriMesh) -> Result<()> {
        if self.values.len() != mesh.n_vertices() {
            return Err(Error::MeshMismatch {
                expected: mesh.n_vertices(),
                actual: self.values.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub bc_mode: BcMode,
    pub reducer: Reducer,
    pub nu: f64,
    pub n_vertices: usize,
    pub n_free: usize,
    pub n_soner: usize,
    pub outer_iterations: usize,
    /// `sup_{Γ_S} |Δd| / ν` per outer iteration; the stopping quantity.
    pub sup_change: Vec<f64>,
    /// `sup_{Γ_S} |Δφ|` per outer iteration.
    pub phi_change: Vec<f64>,
    /// `sup_{Γ_S} |Δd|` per outer iteration.
    pub distance_change: Vec<f64>,
    pub linear: Vec<SolveStats>,
    pub converged: bool,
    /// Some linear solve produced `φ > 1 + PHI_UPPER_SLACK` or `φ ≤ 0`.
    pub max_principle_violated: bool,
    pub clamped_vertex_count: usize,
    pub nonpositive_count: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    /// Seconds spent assembling and factoring.
    pub setup_time: f64,
    /// Total wall time in seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub phi: ScalarField,
    pub distance: ScalarField,
    pub report: SolveReport,
}

/// State handed to observers after each outer Soner iteration.
#[derive(Debug)]
pub struct Iterate<'a> {
    /// 1-based outer iteration number.
    pub iteration: usize,
    /// Full `φ̃ⁿ⁺¹` from the linear solve, with `Γ_S` frozen at `φⁿ`.
    pub phi_tilde: &'a [f64],
    /// Soner vertices, in the order of `distance`.
    pub soner: &'a [usize],
    /// Updated distances `dⁿ⁺¹` on the Soner vertices.
    pub distance: &'a [f64],
}

/// Counts from [`recover_distance`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryCounts {
    pub clamped: usize,
    pub nonpositive: usize,
}

/// `d_i = -ν log φ_i` with Dirichlet vertices set to exactly 0.
pub fn recover_distance(
    phi: &ScalarField,
    mesh: &TriMesh,
    nu: f64,
    policy: ClampPolicy,
) -> Result<(ScalarField, RecoveryCounts)> {
    phi.check_mesh(mesh)?;
    let mut counts = RecoveryCounts::default();
    let values = phi
        .values
        .iter()
        .enumerate()
        .map(|(v, &p)| {
            if mesh.class(v) == VertexClass::Dirichlet {
                0.0
            } else if !(p > 0.0) {
                counts.nonpositive += 1;
                f64::INFINITY
            } else if p > 1.0 && policy == ClampPolicy::Clamp {
                counts.clamped += 1;
                0.0
            } else {
                -nu * p.ln()
            }
        })
        .collect();
    Ok((ScalarField::distance(values), counts))
}

/// Soner update in the distance variable.
///
/// `distance_of(j)` gives `d_j` for a neighbour `j`. Returns the new `d_i`
/// for each vertex in `soner`.
fn godunov_update<F>(mesh: &TriMesh, soner: &[usize], reducer: Reducer, mut distance_of: F) -> Result<Vec<f64>>
where
    F: FnMut(usize) -> Result<f64>,
{
    soner
        .iter()
        .map(|&i| {
            let mut best = match reducer {
                Reducer::Min => f64::INFINITY,
                Reducer::Max => f64::NEG_INFINITY,
            };
            for &j in mesh.neighbors(i) {
                let candidate = distance_of(j)? + mesh.edge_length(i, j);
                best = match reducer {
                    Reducer::Min => best.min(candidate),
                    Reducer::Max => best.max(candidate),
                };
            }
            Ok(best)
        })
        .collect()
}

/// Soner update from distances: for each Soner vertex `i`,
/// `reducer_{j ∈ V(i)} (d_j + |a_i a_j|)`. Results follow
/// `mesh.vertices_of_class(VertexClass::Soner)` order.
pub fn soner_update_distance(distance: &ScalarField, mesh: &TriMesh, reducer: Reducer) -> Result<Vec<f64>> {
    distance.check_mesh(mesh)?;
    let soner: Vec<usize> = mesh.vertices_of_class(VertexClass::Soner).collect();
    godunov_update(mesh, &soner, reducer, |j| Ok(distance.values[j]))
}

/// Soner update from `φ̃`: `d_j = -ν log φ̃_j`, then
/// `φ_i = exp(-reducer_j (d_j + |a_i a_j|) / ν)`. Results follow
/// `mesh.vertices_of_class(VertexClass::Soner)` order.
pub fn soner_update(phi_tilde: &ScalarField, mesh: &TriMesh, nu: f64, reducer: Reducer) -> Result<Vec<f64>> {
    phi_tilde.check_mesh(mesh)?;
    let soner: Vec<usize> = mesh.vertices_of_class(VertexClass::Soner).collect();
    let d = godunov_update(mesh, &soner, reducer, |j| {
        let p = phi_tilde.values[j];
        if p > 0.0 {
            Ok(-nu * p.ln())
        } else {
            Err(Error::NonPositivePhi { vertex: j, value: p })
        }
    })?;
    Ok(d.into_iter().map(|d| (-d / nu).exp()).collect())
}

enum Linear<'a> {
    Direct(EnvelopeCholesky),
    Cg(&'a FemSystem, LinearConfig),
}

impl<'a> Linear<'a> {
    fn new(system: &'a FemSystem, config: LinearConfig) -> Result<Self> {
        Ok(match config.solver {
            LinearSolverKind::Direct => Linear::Direct(EnvelopeCholesky::factor(system.matrix())?),
            LinearSolverKind::Cg => Linear::Cg(system, config),
        })
    }

    fn solve(&self, system: &FemSystem, rhs: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        match self {
            Linear::Direct(factor) => {
                let start = Instant::now();
                let x = factor.solve(rhs)?;
                let ax = spmv(system.matrix(), &x)?;
                let b_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                let r_norm = ax.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let stats = SolveStats {
                    iterations: 1,
                    relative_residual: if b_norm > 0.0 { r_norm / b_norm } else { r_norm },
                    wall_time: start.elapsed().as_secs_f64(),
                };
                Ok((x, stats))
            }
            Linear::Cg(sys, config) => pcg(sys.matrix(), rhs, guess, config.tol, config.max_iter, |_, _| {}),
        }
    }
}

fn options(cfg: &SolverConfig, soner: SonerTreatment) -> AssemblyOptions {
    AssemblyOptions {
        mass: cfg.mass,
        soner,
    }
}

/// Dispatches on `cfg.bc_mode`.
pub fn solve(mesh: &TriMesh, cfg: &SolverConfig) -> Result<Solution> {
    match cfg.bc_mode {
        BcMode::DirichletOnly => solve_dirichlet(mesh, cfg),
        BcMode::Soner => solve_soner(mesh, cfg),
        BcMode::Robin => solve_robin(mesh, cfg),
    }
}

/// Single solve with every boundary vertex fixed at `φ = 1`.
pub fn solve_dirichlet(mesh: &TriMesh, cfg: &SolverConfig) -> Result<Solution> {
    let all_dirichlet = mesh.with_all_dirichlet();
    single_solve(mesh, &all_dirichlet, cfg, SonerTreatment::Fixed, BcMode::DirichletOnly)
}

/// Single solve with Soner vertices free and the Robin boundary term.
pub fn solve_robin(mesh: &TriMesh, cfg: &SolverConfig) -> Result<Solution> {
    single_solve(mesh, mesh, cfg, SonerTreatment::Robin, BcMode::Robin)
}

fn single_solve(
    mesh: &TriMesh,
    system_mesh: &TriMesh,
    cfg: &SolverConfig,
    treatment: SonerTreatment,
    mode: BcMode,
) -> Result<Solution> {
    cfg.validate()?;
    let start = Instant::now();
    let system = assemble_with(system_mesh, cfg.nu, &options(cfg, treatment))?;
    let linear = Linear::new(&system, cfg.linear)?;
    let setup_time = start.elapsed().as_secs_f64();

    let fixed_values = fixed_values(system_mesh, |_| 1.0);
    let rhs = system.lift(&fixed_values)?;
    let (x, stats) = linear.solve(&system, &rhs, None)?;
    let phi = system.expand(&x, &fixed_values);

    let mut report = base_report(mesh, cfg, &system, mode);
    report.linear.push(stats);
    report.converged = true;
    report.setup_time = setup_time;
    finish(mesh, cfg, phi, None, report, start)
}

fn fixed_values(mesh: &TriMesh, mut soner_value: impl FnMut(usize) -> f64) -> Vec<f64> {
    (0..mesh.n_vertices())
        .map(|v| match mesh.class(v) {
            VertexClass::Dirichlet => 1.0,
            VertexClass::Soner => soner_value(v),
            VertexClass::Interior => 0.0,
        })
        .collect()
}

fn base_report(mesh: &TriMesh, cfg: &SolverConfig, system: &FemSystem, mode: BcMode) -> SolveReport {
    SolveReport {
        bc_mode: mode,
        reducer: cfg.reducer,
        nu: cfg.nu,
        n_vertices: mesh.n_vertices(),
        n_free: system.free().len(),
        n_soner: mesh.vertices_of_class(VertexClass::Soner).count(),
        ..SolveReport::default()
    }
}

/// Builds the solution, with distances on `soner` taken from `soner_distance`
/// rather than from `φ`.
fn finish(
    mesh: &TriMesh,
    cfg: &SolverConfig,
    phi: Vec<f64>,
    soner_distance: Option<(&[usize], &[f64])>,
    mut report: SolveReport,
    start: Instant,
) -> Result<Solution> {
    let phi = ScalarField::phi(phi);
    let (mut distance, counts) = recover_distance(&phi, mesh, cfg.nu, cfg.clamp)?;
    if let Some((soner, d)) = soner_distance {
        for (&v, &d) in soner.iter().zip(d) {
            distance.values[v] = d;
        }
    }
    report.clamped_vertex_count = counts.clamped;
    report.nonpositive_count = counts.nonpositive;
    report.phi_min = phi.values.iter().copied().fold(f64::INFINITY, f64::min);
    report.phi_max = phi.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report.max_principle_violated |= report.phi_max > 1.0 + PHI_UPPER_SLACK || !(report.phi_min > 0.0);
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(Solution { phi, distance, report })
}

/// Soner fixed point starting from `φ⁰ ≡ 1` (or the Robin solution).
pub fn solve_soner(mesh: &TriMesh, cfg: &SolverConfig) -> Result<Solution> {
    solve_soner_observed(mesh, cfg, |_| {})
}

/// [`solve_soner`] calling `observe` after every outer iteration.
pub fn solve_soner_observed<F>(mesh: &TriMesh, cfg: &SolverConfig, mut observe: F) -> Result<Solution>
where
    F: FnMut(&Iterate<'_>),
{
    cfg.validate()?;
    let soner: Vec<usize> = mesh.vertices_of_class(VertexClass::Soner).collect();
    if soner.is_empty() {
        let mut solution = solve_dirichlet(mesh, cfg)?;
        solution.report.bc_mode = BcMode::Soner;
        return Ok(solution);
    }

    let start = Instant::now();
    let system = assemble_with(mesh, cfg.nu, &options(cfg, SonerTreatment::Fixed))?;
    let linear = Linear::new(&system, cfg.linear)?;
    let mut report = base_report(mesh, cfg, &system, BcMode::Soner);

    let mut d: Vec<f64> = if cfg.warm_start_robin {
        let robin = solve_robin(mesh, cfg)?;
        soner.iter().map(|&v| robin.distance.values[v]).collect()
    } else {
        vec![0.0; soner.len()]
    };
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    report.setup_time = start.elapsed().as_secs_f64();

    let mut slot = vec![usize::MAX; mesh.n_vertices()];
    for (k, &v) in soner.iter().enumerate() {
        slot[v] = k;
    }
    let nu = cfg.nu;
    let mut values = fixed_values(mesh, |_| 1.0);
    let mut guess: Option<Vec<f64>> = None;
    let mut phi_tilde = values.clone();

    for iteration in 1..=cfg.fp_max_iter {
        for (&v, &dv) in soner.iter().zip(&d) {
            values[v] = (-dv / nu).exp();
        }
        let rhs = system.lift(&values)?;
        let (x, stats) = linear.solve(&system, &rhs, guess.as_deref())?;
        report.linear.push(stats);
        phi_tilde = system.expand(&x, &values);
        guess = Some(x);

        for &p in &phi_tilde {
            if p > 1.0 + PHI_UPPER_SLACK || !(p > 0.0) {
                report.max_principle_violated = true;
            }
        }

        let next = godunov_update(mesh, &soner, cfg.reducer, |j| match mesh.class(j) {
            VertexClass::Dirichlet => Ok(0.0),
            VertexClass::Soner => Ok(d[slot[j]]),
            VertexClass::Interior => {
                let p = phi_tilde[j];
                if p > 0.0 {
                    Ok(-nu * p.ln())
                } else {
                    Err(Error::NonPositivePhi { vertex: j, value: p })
                }
            }
        })?;

        let (mut sup_d, mut sup_phi) = (0.0f64, 0.0f64);
        for (old, new) in d.iter().zip(&next) {
            sup_d = sup_d.max((new - old).abs());
            sup_phi = sup_phi.max(((-new / nu).exp() - (-old / nu).exp()).abs());
        }
        let sup_change = sup_d / nu;
        report.sup_change.push(sup_change);
        report.distance_change.push(sup_d);
        report.phi_change.push(sup_phi);
        report.outer_iterations = iteration;
        d = next;

        observe(&Iterate {
            iteration,
            phi_tilde: &phi_tilde,
            soner: &soner,
            distance: &d,
        });

        if !sup_change.is_finite() {
            return Err(Error::NonFinite);
        }
        if sup_change <= cfg.fp_tol {
            report.converged = true;
            break;
        }
    }

    // φⁿ⁺¹ = φ̃ⁿ⁺¹ away from Γ_S, updated values on Γ_S
    let mut phi = phi_tilde;
    for (&v, &dv) in soner.iter().zip(&d) {
        phi[v] = (-dv / nu).exp();
    }
    let solution = finish(mesh, cfg, phi, Some((&soner, &d)), report, start)?;
    if solution.report.converged {
        Ok(solution)
    } else {
        Err(Error::FixedPointNotConverged(Box::new(solution)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, StripTags};
    use crate::mesh::{BoundaryEdge, BoundaryTag};

    #[test]
    fn recover_distance_examples() {
        let mesh = fixtures::unit_square_two_triangles();
        let nu = 0.1;
        let phi = ScalarField::phi(vec![1.0, (-1.0f64).exp(), 1.0 + 1e-9, 0.0]);
        let (d, counts) = recover_distance(&phi, &mesh, nu, ClampPolicy::Clamp).unwrap();
        // vertices 0 and 3 are Dirichlet
        assert_eq!(d.values[0], 0.0);
        assert_eq!(d.values[3], 0.0);
        assert!((d.values[1] - 0.1).abs() < 1e-15);
        assert_eq!(d.values[2], 0.0);
        assert_eq!(counts, RecoveryCounts { clamped: 1, nonpositive: 0 });

        let phi = ScalarField::phi(vec![1.0, 0.0, 1.0 + 1e-9, 1.0]);
        let (d, counts) = recover_distance(&phi, &mesh, nu, ClampPolicy::Raw).unwrap();
        assert_eq!(d.values[1], f64::INFINITY);
        assert!(d.values[2] < 0.0);
        assert_eq!(counts, RecoveryCounts { clamped: 0, nonpositive: 1 });
    }

    /// Soner vertex 0 with neighbours 1 (d = 0.5, length 0.1) and
    /// 2 (d = 0.7, length 0.05).
    fn two_neighbour_fixture() -> (TriMesh, ScalarField) {
        let vertices = vec![[0.0, 0.0], [0.1, 0.0], [0.0, 0.05], [0.1, 0.05]];
        let mesh = TriMesh::new(
            vertices,
            vec![[0, 1, 2], [1, 3, 2]],
            vec![
                BoundaryEdge::new(0, 1, BoundaryTag::Soner),
                BoundaryEdge::new(2, 0, BoundaryTag::Soner),
                BoundaryEdge::new(1, 3, BoundaryTag::Dirichlet),
                BoundaryEdge::new(3, 2, BoundaryTag::Dirichlet),
            ],
        )
        .unwrap();
        (mesh, ScalarField::distance(vec![0.0, 0.5, 0.7, 0.0]))
    }

    #[test]
    fn soner_update_examples() {
        let (mesh, d) = two_neighbour_fixture();
        let nu = 0.1;
        assert_eq!(mesh.vertices_of_class(VertexClass::Soner).collect::<Vec<_>>(), vec![0]);
        let v = soner_update_distance(&d, &mesh, Reducer::Min).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-15);
        let v = soner_update_distance(&d, &mesh, Reducer::Max).unwrap();
        assert!((v[0] - 0.75).abs() < 1e-15);

        let phi = ScalarField::phi(d.values.iter().map(|d| (-d / nu).exp()).collect());
        let p = soner_update(&phi, &mesh, nu, Reducer::Min).unwrap();
        assert!((p[0] / (-0.6f64 / nu).exp() - 1.0).abs() < 1e-12);

        let mut bad = phi.clone();
        bad.values[2] = 0.0;
        assert!(matches!(
            soner_update(&bad, &mesh, nu, Reducer::Min),
            Err(Error::NonPositivePhi { vertex: 2, .. })
        ));
    }

    #[test]
    fn single_dirichlet_neighbour() {
        let mesh = fixtures::unit_square_two_triangles();
        let nu = 0.2;
        // vertex 1 = (1, 0): neighbours 0 (Dirichlet, length 1) and 2 (Soner)
        let phi = ScalarField::phi(vec![1.0, 1.0, 1.0, 1.0]);
        let p = soner_update(&phi, &mesh, nu, Reducer::Min).unwrap();
        let soner: Vec<usize> = mesh.vertices_of_class(VertexClass::Soner).collect();
        assert_eq!(soner, vec![1, 2]);
        assert!((p[0] - (-1.0f64 / nu).exp()).abs() < 1e-15);
    }

    #[test]
    fn all_dirichlet_mesh_is_trivial() {
        let mesh = fixtures::single_triangle();
        for mode in [BcMode::DirichletOnly, BcMode::Soner, BcMode::Robin] {
            let s = solve(&mesh, &SolverConfig::new(0.1).with_mode(mode)).unwrap();
            assert_eq!(s.phi.values, vec![1.0; 3]);
            assert_eq!(s.distance.values, vec![0.0; 3]);
            assert!(s.report.converged);
        }
    }

    #[test]
    fn config_validation() {
        let mesh = fixtures::single_triangle();
        let mut cfg = SolverConfig::new(0.0);
        assert!(matches!(solve(&mesh, &cfg), Err(Error::InvalidConfig(_))));
        cfg.nu = 0.1;
        cfg.fp_tol = 0.0;
        assert!(matches!(solve(&mesh, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn first_iterations_on_square() {
        // every Soner vertex of the fixture touches a Dirichlet vertex
        let mesh = fixtures::unit_square_two_triangles();
        let nu = 0.5;
        let mut cfg = SolverConfig::new(nu);
        cfg.fp_max_iter = 2;
        let mut history = Vec::new();
        let _ = solve_soner_observed(&mesh, &cfg, |it| history.push(it.distance.to_vec()));
        // iteration 1: Soner neighbours are still at d = 0, so the minimum is
        // the shortest edge to any neighbour
        assert_eq!(history[0], vec![1.0, 1.0]);
        let change_1 = 1.0;
        let change_2 = history[1]
            .iter()
            .zip(&history[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(change_2 < change_1);
    }

    #[test]
    fn non_convergence_returns_partial_solution() {
        let mesh = fixtures::strip(1.0, 0.2, 0.05, StripTags::left_dirichlet()).unwrap();
        let mut cfg = SolverConfig::new(0.05);
        cfg.fp_max_iter = 1;
        match solve(&mesh, &cfg) {
            Err(Error::FixedPointNotConverged(s)) => {
                assert_eq!(s.report.outer_iterations, 1);
                assert!(!s.report.converged);
                assert_eq!(s.phi.len(), mesh.n_vertices());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cg_and_direct_agree() {
        let mesh = fixtures::strip(1.0, 0.2, 0.05, StripTags::left_dirichlet()).unwrap();
        let mut cfg = SolverConfig::new(0.1);
        let direct = solve(&mesh, &cfg).unwrap();
        cfg.linear.solver = LinearSolverKind::Cg;
        let cg = solve(&mesh, &cfg).unwrap();
        for (a, b) in direct.distance.values.iter().zip(&cg.distance.values) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn robin_without_soner_edges_matches_dirichlet() {
        let mesh = fixtures::strip(1.0, 0.2, 0.05, StripTags { left: BoundaryTag::Dirichlet, right: BoundaryTag::Dirichlet, bottom: BoundaryTag::Dirichlet, top: BoundaryTag::Dirichlet }).unwrap();
        let cfg = SolverConfig::new(0.05);
        let robin = solve_robin(&mesh, &cfg).unwrap();
        let dirichlet = solve_dirichlet(&mesh, &cfg).unwrap();
        for (a, b) in robin.phi.values.iter().zip(&dirichlet.phi.values) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
