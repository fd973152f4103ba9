//! `distviac`: approximate distance functions on triangular meshes.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use distviac::eikonal::{LinearConfig, LinearSolverKind};
use distviac::{BcMode, MassLumping, Reducer, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "distviac", version, about = "Approximate distance functions via the screened Poisson equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for phi and the distance, write VTK, CSV and a JSON report.
    Solve(SolveArgs),
    /// Check the angle condition of a mesh.
    Validate(ValidateArgs),
    /// Solve and compare against the exact distance of a known geometry.
    Compare(CompareArgs),
    /// Solve on a sequence of refined meshes and tabulate convergence.
    Study(StudyArgs),
    /// Write a built-in test geometry as a native mesh file.
    Fixture(FixtureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Gmsh,
    Native,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BcArg {
    Dirichlet,
    Soner,
    Robin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReducerArg {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Direct,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    Annulus,
    SlitAnnulus,
    Strip,
    SquareObstacle,
}

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    /// Mesh file (`.msh` is read as GMSH 2.2, anything else as native).
    #[arg(long)]
    pub mesh: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Mesh format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// GMSH physical group (name or number) mapped to the Dirichlet boundary.
    #[arg(long = "gmsh-dirichlet", value_name = "GROUP")]
    pub gmsh_dirichlet: Vec<String>,
    /// GMSH physical group (name or number) mapped to the Soner boundary.
    #[arg(long = "gmsh-soner", value_name = "GROUP")]
    pub gmsh_soner: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    #[arg(long, value_enum, default_value_t = BcArg::Soner)]
    pub bc: BcArg,
    #[arg(long, value_enum, default_value_t = ReducerArg::Min)]
    pub reducer: ReducerArg,
    /// Fixed-point tolerance on the relative change of phi on the Soner boundary.
    #[arg(long, default_value_t = 1e-12)]
    pub fp_tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub fp_max_iter: usize,
    /// Relative residual target of the iterative linear solver.
    #[arg(long, default_value_t = 1e-12)]
    pub lin_tol: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::Direct)]
    pub solver: SolverArg,
    /// Use the row-sum lumped mass matrix.
    #[arg(long)]
    pub lumped_mass: bool,
    /// Start the Soner iteration from the Robin solution.
    #[arg(long)]
    pub warm_start_robin: bool,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.nu);
        cfg.bc_mode = match self.bc {
            BcArg::Dirichlet => BcMode::DirichletOnly,
            BcArg::Soner => BcMode::Soner,
            BcArg::Robin => BcMode::Robin,
        };
        cfg.reducer = match self.reducer {
            ReducerArg::Min => Reducer::Min,
            ReducerArg::Max => Reducer::Max,
        };
        cfg.fp_tol = self.fp_tol;
        cfg.fp_max_iter = self.fp_max_iter;
        cfg.linear = LinearConfig {
            solver: match self.solver {
                SolverArg::Direct => LinearSolverKind::Direct,
                SolverArg::Cg => LinearSolverKind::Cg,
            },
            tol: self.lin_tol,
            max_iter: None,
        };
        if self.lumped_mass {
            cfg.mass = MassLumping::Lumped;
        }
        cfg.warm_start_robin = self.warm_start_robin;
        cfg
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output path prefix; defaults to the mesh path without its extension.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
    /// Exit with status 4 when the angle condition fails.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long = "case", value_enum)]
    pub case: CaseArg,
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
    /// Run both the Soner and the Robin treatment and print their L∞ errors.
    #[arg(long)]
    pub both: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    /// Meshes of one geometry, coarse to fine.
    #[arg(long, required = true)]
    pub mesh: Vec<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Reference geometry for the error columns.
    #[arg(long = "case", value_enum)]
    pub case: Option<CaseArg>,
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FixtureArgs {
    #[arg(value_enum)]
    pub case: CaseArg,
    /// Target edge length.
    #[arg(long)]
    pub h: f64,
    /// Output mesh file.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Solve(args) => commands::solve(&args),
        Command::Validate(args) => commands::validate(&args),
        Command::Compare(args) => commands::compare(&args),
        Command::Study(args) => commands::study(&args),
        Command::Fixture(args) => commands::fixture(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("DISTVIAC_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("DISTVIAC_THREADS must be a positive integer, got {value:?}"))?;
    if n == 0 {
        return Err("DISTVIAC_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
