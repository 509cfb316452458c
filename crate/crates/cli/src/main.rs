//! Command-line driver: convergence studies, solver benchmarks, single
//! solves with optional matrix export, and mesh inspection.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::PathBuf;
use vem_core::harness::{
    assemble_case, compute_errors, exact_norms, run_bench, run_convergence, BenchConfig,
    ConvergenceConfig, Gamma, ManufacturedCase, MeshSource,
};
use vem_core::mesh::{compute_geometry, mesh_size, sub_tessellate};
use vem_core::solver::{solve_system, GmresConfig, SolverChoice};
use vem_core::vemspace::dof_counts;

#[derive(Parser)]
#[command(
    name = "vem",
    version,
    about = "Mixed virtual element solver on polyhedral meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study over a mesh sequence
    Convergence(ConvergenceArgs),
    /// Solver benchmark with optional assembly thread sweep
    Bench(BenchArgs),
    /// Assemble and solve one system, printing a summary
    Solve(SolveArgs),
    /// Print mesh statistics
    MeshInfo(MeshInfoArgs),
}

#[derive(Args)]
struct MeshArgs {
    /// Mesh file(s), comma-separated, in study order
    #[arg(long, value_delimiter = ',')]
    mesh: Vec<PathBuf>,
    /// Generated n x n x n unit-cube partitions, comma-separated
    #[arg(long, value_delimiter = ',')]
    gen_cube: Vec<usize>,
}

impl MeshArgs {
    /// Generated cubes first (in the given order), then files.
    fn sources(&self) -> Result<Vec<MeshSource>> {
        let mut out: Vec<MeshSource> = self.gen_cube.iter().map(|&n| MeshSource::Cube(n)).collect();
        out.extend(self.mesh.iter().cloned().map(MeshSource::File));
        if out.is_empty() {
            bail!("no meshes: pass --gen-cube <n,...> and/or --mesh <path,...>");
        }
        Ok(out)
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Polynomial order k (1..=4)
    #[arg(long, default_value_t = 1)]
    order: u32,
    /// Relative GMRES tolerance
    #[arg(long, default_value_t = 1e-8)]
    rtol: f64,
    /// GMRES restart length
    #[arg(long, default_value_t = 30)]
    restart: usize,
    /// GMRES iteration budget
    #[arg(long, default_value_t = 10000)]
    maxit: usize,
    /// Block-Reg regularization: 'auto' (= h^2) or a positive number
    #[arg(long, default_value = "auto")]
    gamma: Gamma,
    /// Manufactured case: builtin | constant-velocity | polynomial
    #[arg(long, default_value = "builtin")]
    case: String,
}

impl SolverArgs {
    fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.order) {
            bail!("--order must be in 1..=4, got {}", self.order);
        }
        Ok(())
    }

    fn gmres(&self) -> GmresConfig {
        GmresConfig {
            rtol: self.rtol,
            restart: self.restart,
            maxit: self.maxit,
        }
    }

    fn case(&self) -> Result<ManufacturedCase> {
        match self.case.as_str() {
            "builtin" => Ok(ManufacturedCase::builtin()),
            "constant-velocity" => Ok(ManufacturedCase::constant_velocity()),
            "polynomial" => Ok(ManufacturedCase::polynomial(self.order)),
            other => bail!(
                "unknown case '{other}' (expected builtin, constant-velocity, or polynomial)"
            ),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Directory for report files (created if missing)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format printed to stdout and written under --out
    #[arg(long, default_value = "csv")]
    format: Format,
}

impl OutputArgs {
    fn emit(&self, stem: &str, csv: &str, json: &str) -> Result<()> {
        let text = match self.format {
            Format::Csv => csv,
            Format::Json => json,
        };
        print!("{text}");
        if !text.ends_with('\n') {
            println!();
        }
        if let Some(dir) = &self.out {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))?;
            let ext = match self.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, text)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    meshes: MeshArgs,
    #[command(flatten)]
    solver_args: SolverArgs,
    /// Solution method
    #[arg(long, default_value = "direct")]
    solver: SolverChoice,
    /// Worker cap for assembly
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    meshes: MeshArgs,
    #[command(flatten)]
    solver_args: SolverArgs,
    /// Solution methods to time, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "direct,block-schur,block-reg")]
    solver: Vec<SolverChoice>,
    /// Worker counts for the assembly thread sweep, comma-separated
    #[arg(long, value_delimiter = ',')]
    threads: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    meshes: MeshArgs,
    #[command(flatten)]
    solver_args: SolverArgs,
    /// Solution method
    #[arg(long, default_value = "direct")]
    solver: SolverChoice,
    /// Worker cap for assembly
    #[arg(long)]
    threads: Option<usize>,
    /// Write the monolithic matrix as 'row col value' triplets
    #[arg(long)]
    export_matrix: Option<PathBuf>,
    /// Write the solution (velocity dofs, pressure dofs, multiplier) as JSON
    #[arg(long)]
    export_solution: Option<PathBuf>,
}

#[derive(Args)]
struct MeshInfoArgs {
    /// Mesh file(s), comma-separated
    #[arg(long, value_delimiter = ',', required = true)]
    mesh: Vec<PathBuf>,
    /// Dof totals are reported for this order
    #[arg(long, default_value_t = 1)]
    order: u32,
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(p) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(p)
                .build()
                .context("building worker pool")?;
            Ok(pool.install(f))
        }
    }
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<()> {
    args.solver_args.validate()?;
    let config = ConvergenceConfig {
        meshes: args.meshes.sources()?,
        order: args.solver_args.order,
        solver: args.solver,
        gamma: args.solver_args.gamma,
        gmres: args.solver_args.gmres(),
        case: args.solver_args.case()?,
    };
    let report = in_pool(args.threads, || run_convergence(&config))??;
    let json = serde_json::to_string_pretty(&report)?;
    args.output.emit("convergence", &report.to_csv(), &json)?;
    if let Some(failed) = report.levels.iter().find(|l| l.error.is_some()) {
        bail!(
            "level {} ({}) failed: {}",
            failed.level,
            failed.mesh,
            failed.error.as_deref().unwrap_or("unknown")
        );
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    args.solver_args.validate()?;
    if args.solver.is_empty() {
        bail!("--solver needs at least one method");
    }
    let config = BenchConfig {
        meshes: args.meshes.sources()?,
        order: args.solver_args.order,
        solvers: args.solver,
        gamma: args.solver_args.gamma,
        gmres: args.solver_args.gmres(),
        threads: args.threads,
        case: args.solver_args.case()?,
    };
    let report = run_bench(&config)?;
    let mut csv = report.to_csv();
    if let Some(sweep) = report.speedup_csv() {
        csv.push('\n');
        csv.push_str(&sweep);
    }
    let json = serde_json::to_string_pretty(&report)?;
    args.output.emit("bench", &csv, &json)?;
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    args.solver_args.validate()?;
    let sources = args.meshes.sources()?;
    if sources.len() != 1 {
        bail!("solve takes exactly one mesh, got {}", sources.len());
    }
    let case = args.solver_args.case()?;
    let order = args.solver_args.order;
    let mesh = sources[0].load()?;
    let geom = compute_geometry(&mesh)?;
    let tess = sub_tessellate(&mesh, &geom)?;
    let (sys, x, report) = in_pool(args.threads, || -> Result<_> {
        let sys = assemble_case(&mesh, &geom, &tess, order, &case)?;
        let gamma = args.solver_args.gamma.resolve(sys.mesh_size());
        let (x, report) = solve_system(&sys, args.solver, gamma, &args.solver_args.gmres())?;
        Ok((sys, x, report))
    })??;

    if let Some(path) = &args.export_matrix {
        let mono = sys.monolithic();
        let mut text = format!("# {} {} {}\n", mono.nrows(), mono.ncols(), mono.nnz());
        for (i, j, v) in mono.triplets() {
            writeln!(text, "{i} {j} {v:.17e}").unwrap();
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }

    let solution = sys.solution(&x);
    if let Some(path) = &args.export_solution {
        std::fs::write(path, serde_json::to_string_pretty(&solution)?)
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }

    let norms = exact_norms(&geom, &tess, &case)?;
    let (e_v, e_q) = compute_errors(&mesh, &geom, &tess, order, &solution, &case, &norms)?;
    let counts = dof_counts(&mesh, order);
    println!("mesh: {}", sources[0].label());
    println!("cells: {}", mesh.n_cells());
    println!("dofs: {}", counts.total);
    println!("h: {:.6e}", sys.mesh_size());
    println!("assembly_seconds: {:.3e}", sys.assembly_seconds());
    println!("solver: {}", args.solver.name());
    println!("iterations: {}", report.iterations);
    println!("converged: {}", report.converged);
    println!("true_residual: {:.3e}", report.true_residual);
    println!("solve_seconds: {:.3e}", report.setup_seconds + report.solve_seconds);
    println!("e_v: {:.6e}", e_v);
    println!("e_q: {:.6e}", e_q);
    if !report.converged {
        bail!(
            "{} did not reach rtol {:.1e} within {} iterations (residual {:.3e})",
            args.solver.name(),
            args.solver_args.rtol,
            report.iterations,
            report.true_residual
        );
    }
    Ok(())
}

fn cmd_mesh_info(args: MeshInfoArgs) -> Result<()> {
    if !(1..=4).contains(&args.order) {
        bail!("--order must be in 1..=4, got {}", args.order);
    }
    for path in &args.mesh {
        let src = MeshSource::File(path.clone());
        let mesh = src.load()?;
        let geom = compute_geometry(&mesh)?;
        let counts = dof_counts(&mesh, args.order);
        let (mut min_area, mut max_area) = (f64::INFINITY, 0.0f64);
        for f in &geom.faces {
            min_area = min_area.min(f.area);
            max_area = max_area.max(f.area);
        }
        let (mut min_vol, mut max_vol) = (f64::INFINITY, 0.0f64);
        for c in &geom.cells {
            min_vol = min_vol.min(c.volume);
            max_vol = max_vol.max(c.volume);
        }
        println!("mesh: {}", src.label());
        println!("cells: {}", mesh.n_cells());
        println!("faces: {}", mesh.n_faces());
        println!("vertices: {}", mesh.n_vertices());
        println!("boundary_faces: {}", mesh.boundary_faces().count());
        println!("h: {:.6e}", mesh_size(&mesh, &geom));
        println!("min_face_area: {:.6e}", min_area);
        println!("max_face_area: {:.6e}", max_area);
        println!("min_cell_volume: {:.6e}", min_vol);
        println!("max_cell_volume: {:.6e}", max_vol);
        println!("dofs_order_{}: {}", args.order, counts.total);
        println!();
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Convergence(args) => cmd_convergence(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Solve(args) => cmd_solve(args),
        Command::MeshInfo(args) => cmd_mesh_info(args),
    }
}
