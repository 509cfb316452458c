//! Experiment driver: manufactured-solution convergence studies, solver
//! benchmark sweeps with optional thread sweeps, and CSV/JSON reports.
//!
//! Velocity error compares the cellwise projection of the discrete solution
//! against the analytic field. Pressure error compares the discrete pressure
//! polynomial against the cellwise L² projection of the mean-adjusted
//! analytic pressure: the discrete space is piecewise P_{k-1}, so the
//! distance to that projection is the quantity that decays at h^{k+1}
//! (the raw distance to the analytic pressure is dominated by the O(h^k)
//! best-approximation floor). Both are normalized by global exact norms
//! computed once on the finest mesh of a run.
//!
//! Convergence CSV reports deliberately exclude wall-clock columns so that
//! reruns with fixed inputs emit byte-identical files; timings live in the
//! JSON mirror and in bench reports.

use crate::assembly::{assemble, AssemblyError, CoefficientField, SaddleSystem, Solution};
use crate::mesh::{
    compute_geometry, gen_cube_mesh, load_mesh, mesh_size, sub_tessellate, Aabb, GeometryCache,
    IngestMode, MeshError, PolyMesh, SubTessellation,
};
use crate::poly::{dim_pk, integrate_cell_fn, QuadratureError};
use crate::solver::{solve_system, GmresConfig, SolverChoice, SolverError};
use crate::vemspace::{dof_counts, DofLayout, ElementOperators, VemError};
use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use thiserror::Error;

/// Quadrature degree for the run-wide exact norms (covers the built-in
/// quintic pair exactly; per-level errors use degree 2k+4).
const NORM_QUAD_DEGREE: u32 = 12;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Vem(#[from] VemError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("empty mesh sequence")]
    NoMeshes,
    #[error("worker pool construction failed: {0}")]
    Threads(String),
}

/// An exact solution pair with the data it induces: `f = div v` and
/// `u_N = v·n`. The model identity `ν v + ∇q = 0` ties the two fields.
pub struct ManufacturedCase {
    pub name: String,
    pub nu: f64,
    pub velocity: Box<dyn Fn(&Point3<f64>) -> Vector3<f64> + Sync>,
    pub pressure: Box<dyn Fn(&Point3<f64>) -> f64 + Sync>,
    /// `f = div v`.
    pub source: Box<dyn Fn(&Point3<f64>) -> f64 + Sync>,
}

impl ManufacturedCase {
    /// The default quartic-velocity / quintic-pressure pair with ν = 1.
    pub fn builtin() -> Self {
        Self {
            name: "builtin".into(),
            nu: 1.0,
            velocity: Box::new(|p| {
                Vector3::new(
                    -5.0 * p.x.powi(4) - p.y * p.y * p.z.powi(3),
                    -24.0 * p.y.powi(3) - 2.0 * p.x * p.y * p.z.powi(3),
                    -27.0 * p.z * p.z - 3.0 * p.x * p.y * p.y * p.z * p.z,
                )
            }),
            pressure: Box::new(|p| {
                p.x.powi(5) + 6.0 * p.y.powi(4) + 9.0 * p.z.powi(3) + p.x * p.y * p.y * p.z.powi(3)
            }),
            source: Box::new(|p| {
                -20.0 * p.x.powi(3)
                    - 72.0 * p.y * p.y
                    - 2.0 * p.x * p.z.powi(3)
                    - 54.0 * p.z
                    - 6.0 * p.x * p.y * p.y * p.z
            }),
        }
    }

    /// Constant velocity (1,0,0) with the linear pressure it forces.
    pub fn constant_velocity() -> Self {
        Self {
            name: "constant-velocity".into(),
            nu: 1.0,
            velocity: Box::new(|_| Vector3::new(1.0, 0.0, 0.0)),
            pressure: Box::new(|p| 0.5 - p.x),
            source: Box::new(|_| 0.0),
        }
    }

    /// `q = x^{k+1} + y^k z` (mean-adjusted), `v = -∇q`, ν = 1: the highest
    /// degree pair both discrete spaces of order `k` reproduce exactly.
    pub fn polynomial(k: u32) -> Self {
        let e = k as i32 + 1;
        let mean = 1.0 / (k as f64 + 2.0) + 1.0 / (2.0 * (k as f64 + 1.0));
        Self {
            name: format!("polynomial-{k}"),
            nu: 1.0,
            velocity: Box::new(move |p| {
                -Vector3::new(
                    e as f64 * p.x.powi(e - 1),
                    (e - 1) as f64 * p.y.powi(e - 2) * p.z,
                    p.y.powi(e - 1),
                )
            }),
            pressure: Box::new(move |p| p.x.powi(e) + p.y.powi(e - 1) * p.z - mean),
            source: Box::new(move |p| {
                -(e as f64 * (e - 1) as f64 * p.x.powi(e - 2)
                    + (e - 1) as f64 * (e - 2).max(0) as f64 * p.y.powi((e - 3).max(0)) * p.z)
            }),
        }
    }
}

/// Assemble the system whose data (ν, f, u_N) a manufactured case induces.
pub fn assemble_case(
    mesh: &PolyMesh,
    geom: &GeometryCache,
    tess: &SubTessellation,
    order: u32,
    case: &ManufacturedCase,
) -> Result<SaddleSystem, AssemblyError> {
    let nu = case.nu;
    let nu_fn = move |_: usize| nu;
    let v = &case.velocity;
    let f = &case.source;
    let src_fn = move |p: &Point3<f64>| f(p);
    let flux_fn = move |p: &Point3<f64>, n: &Vector3<f64>| v(p).dot(n);
    let fields = CoefficientField {
        nu: &nu_fn,
        source: &src_fn,
        normal_flux: &flux_fn,
    };
    assemble(mesh, geom, tess, order, &fields)
}

/// Global exact norms and the domain mean of the exact pressure, fixed once
/// per run so every level is normalized identically.
#[derive(Clone, Copy, Debug)]
pub struct ExactNorms {
    pub v_norm: f64,
    pub q_norm: f64,
    pub q_mean: f64,
}

pub fn exact_norms(
    geom: &GeometryCache,
    tess: &SubTessellation,
    case: &ManufacturedCase,
) -> Result<ExactNorms, HarnessError> {
    let n_cells = geom.cells.len();
    let per_cell: Vec<(f64, f64, f64)> = (0..n_cells)
        .into_par_iter()
        .map(|c| -> Result<_, QuadratureError> {
            let tets = tess.cell_tetrahedra(c);
            let v2 = integrate_cell_fn(&tets, NORM_QUAD_DEGREE, |p| {
                (case.velocity)(p).norm_squared()
            })?;
            let q1 = integrate_cell_fn(&tets, NORM_QUAD_DEGREE, |p| (case.pressure)(p))?;
            let q2 = integrate_cell_fn(&tets, NORM_QUAD_DEGREE, |p| {
                let q = (case.pressure)(p);
                q * q
            })?;
            Ok((v2, q1, q2))
        })
        .collect::<Result<_, _>>()?;
    let volume: f64 = geom.cells.iter().map(|cg| cg.volume).sum();
    let (mut v2, mut q1, mut q2) = (0.0, 0.0, 0.0);
    for (a, b, c) in per_cell {
        v2 += a;
        q1 += b;
        q2 += c;
    }
    let q_mean = q1 / volume;
    Ok(ExactNorms {
        v_norm: v2.sqrt(),
        q_norm: (q2 - q_mean * q_mean * volume).max(0.0).sqrt(),
        q_mean,
    })
}

/// Relative L² errors `(e_v, e_q)` of a solved or injected solution.
pub fn compute_errors(
    mesh: &PolyMesh,
    geom: &GeometryCache,
    tess: &SubTessellation,
    order: u32,
    solution: &Solution,
    case: &ManufacturedCase,
    norms: &ExactNorms,
) -> Result<(f64, f64), HarnessError> {
    let layout = DofLayout::new(mesh, order);
    let degree = 2 * order + 4;
    let n_k = dim_pk(order as i64, 3);
    let pb = layout.pressure_block;
    let per_cell: Vec<(f64, f64)> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| -> Result<(f64, f64), HarnessError> {
            let ops = ElementOperators::build(mesh, geom, tess, c, order)?;
            let u_loc = layout.gather_cell(mesh, c, &solution.velocity);
            let pi = ops.projected_coefficients(&u_loc);
            let idx = ops.basis.indices();
            let ev2 = integrate_cell_fn(&tess.cell_tetrahedra(c), degree, |p| {
                let exact = (case.velocity)(p);
                let mut s = 0.0;
                for comp in 0..3 {
                    let mut val = 0.0;
                    for (i, a) in idx[..n_k].iter().enumerate() {
                        val += pi[comp * n_k + i] * ops.basis.eval_index(*a, p);
                    }
                    let d = val - exact[comp];
                    s += d * d;
                }
                s
            })?;

            // Moment dofs of the mean-adjusted exact pressure, then the
            // coefficient difference against the discrete polynomial.
            let volume = ops.volume;
            let mut w = vec![0.0; pb];
            for (j, a) in idx[..pb].iter().enumerate() {
                w[j] = integrate_cell_fn(&tess.cell_tetrahedra(c), degree, |p| {
                    ((case.pressure)(p) - norms.q_mean) * ops.basis.eval_index(*a, p)
                })? / volume;
            }
            let c_exact = ops.pressure_coefficients(&w);
            let c_h = ops.pressure_coefficients(&solution.pressure[c * pb..(c + 1) * pb]);
            let eq2 = integrate_cell_fn(&tess.cell_tetrahedra(c), degree, |p| {
                let mut val = 0.0;
                for (i, a) in idx[..pb].iter().enumerate() {
                    val += (c_h[i] - c_exact[i]) * ops.basis.eval_index(*a, p);
                }
                val * val
            })?;
            Ok((ev2, eq2))
        })
        .collect::<Result<_, _>>()?;
    let (mut ev2, mut eq2) = (0.0, 0.0);
    for (a, b) in per_cell {
        ev2 += a;
        eq2 += b;
    }
    let dv = if norms.v_norm > 0.0 { norms.v_norm } else { 1.0 };
    let dq = if norms.q_norm > 0.0 { norms.q_norm } else { 1.0 };
    Ok((ev2.sqrt() / dv, eq2.sqrt() / dq))
}

/// Block-Reg regularization parameter: a literal value or `auto` = h².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Gamma {
    Auto,
    Value(f64),
}

impl Gamma {
    pub fn resolve(&self, mesh_size: f64) -> f64 {
        match self {
            Gamma::Auto => mesh_size * mesh_size,
            Gamma::Value(v) => *v,
        }
    }
}

impl std::str::FromStr for Gamma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Gamma::Auto);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| format!("gamma must be 'auto' or a positive number, got '{s}'"))?;
        if v > 0.0 {
            Ok(Gamma::Value(v))
        } else {
            Err(format!("gamma must be positive, got {v}"))
        }
    }
}

/// One mesh of a study: generated cube partition or ingested file.
#[derive(Clone, Debug)]
pub enum MeshSource {
    Cube(usize),
    File(PathBuf),
}

impl MeshSource {
    pub fn label(&self) -> String {
        match self {
            MeshSource::Cube(n) => format!("cube-{n}"),
            MeshSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.to_string_lossy().into_owned()),
        }
    }

    pub fn load(&self) -> Result<PolyMesh, MeshError> {
        match self {
            MeshSource::Cube(n) => gen_cube_mesh(*n, Aabb::unit()),
            // Files may carry relaxed Voronoi geometry; ingest leniently.
            MeshSource::File(p) => load_mesh(p, IngestMode::Lenient),
        }
    }
}

pub struct ConvergenceConfig {
    pub meshes: Vec<MeshSource>,
    pub order: u32,
    pub solver: SolverChoice,
    pub gamma: Gamma,
    pub gmres: GmresConfig,
    pub case: ManufacturedCase,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceLevel {
    pub level: usize,
    pub mesh: String,
    pub h: f64,
    pub cells: usize,
    pub dofs: usize,
    pub e_v: Option<f64>,
    pub e_q: Option<f64>,
    pub rate_v: Option<f64>,
    pub rate_q: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
    /// Per-level failure; the run continues past it.
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub order: u32,
    pub solver: String,
    pub case: String,
    pub levels: Vec<ConvergenceLevel>,
}

pub const CONVERGENCE_CSV_HEADER: &str =
    "level,mesh,h,cells,dofs,e_v,rate_v,e_q,rate_q,iterations,converged,error";

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_num(x: f64) -> String {
    format!("{x:.12e}")
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(csv_num).unwrap_or_default()
}

impl ErrorReport {
    /// Schema v1; excludes timings so fixed inputs give identical bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CONVERGENCE_CSV_HEADER);
        out.push('\n');
        for l in &self.levels {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                l.level,
                csv_escape(&l.mesh),
                csv_num(l.h),
                l.cells,
                l.dofs,
                csv_opt(l.e_v),
                csv_opt(l.rate_v),
                csv_opt(l.e_q),
                csv_opt(l.rate_q),
                l.iterations,
                l.converged,
                csv_escape(l.error.as_deref().unwrap_or("")),
            ));
        }
        out
    }
}

/// `rate_i = ln(e_{i-1}/e_i) / ln(h_{i-1}/h_i)`, defined only between levels
/// with strictly decreasing h and positive finite errors.
pub fn observed_rates(h: &[f64], e: &[Option<f64>]) -> Vec<Option<f64>> {
    assert_eq!(h.len(), e.len());
    let mut rates = vec![None; h.len()];
    for i in 1..h.len() {
        if let (Some(ec), Some(ef)) = (e[i - 1], e[i]) {
            if h[i] < h[i - 1] && ec > 0.0 && ef > 0.0 && ec.is_finite() && ef.is_finite() {
                rates[i] = Some((ec / ef).ln() / (h[i - 1] / h[i]).ln());
            }
        }
    }
    rates
}

struct LoadedMesh {
    label: String,
    mesh: PolyMesh,
    geom: GeometryCache,
    tess: SubTessellation,
    h: f64,
}

fn load_all(sources: &[MeshSource]) -> Result<Vec<LoadedMesh>, HarnessError> {
    if sources.is_empty() {
        return Err(HarnessError::NoMeshes);
    }
    sources
        .iter()
        .map(|src| {
            let mesh = src.load()?;
            let geom = compute_geometry(&mesh)?;
            let tess = sub_tessellate(&mesh, &geom)?;
            let h = mesh_size(&mesh, &geom);
            Ok(LoadedMesh {
                label: src.label(),
                mesh,
                geom,
                tess,
                h,
            })
        })
        .collect()
}

pub fn run_convergence(config: &ConvergenceConfig) -> Result<ErrorReport, HarnessError> {
    let loaded = load_all(&config.meshes)?;
    let finest = loaded
        .iter()
        .min_by(|a, b| a.h.total_cmp(&b.h))
        .expect("load_all rejects empty sequences");
    let norms = exact_norms(&finest.geom, &finest.tess, &config.case)?;

    let mut levels = Vec::with_capacity(loaded.len());
    for (i, lm) in loaded.iter().enumerate() {
        let counts = dof_counts(&lm.mesh, config.order);
        let mut level = ConvergenceLevel {
            level: i,
            mesh: lm.label.clone(),
            h: lm.h,
            cells: lm.mesh.n_cells(),
            dofs: counts.total,
            e_v: None,
            e_q: None,
            rate_v: None,
            rate_q: None,
            iterations: 0,
            converged: false,
            assembly_seconds: 0.0,
            solve_seconds: 0.0,
            error: None,
        };
        match assemble_case(&lm.mesh, &lm.geom, &lm.tess, config.order, &config.case) {
            Err(e) => level.error = Some(e.to_string()),
            Ok(sys) => {
                level.assembly_seconds = sys.assembly_seconds();
                let gamma = config.gamma.resolve(sys.mesh_size());
                match solve_system(&sys, config.solver, gamma, &config.gmres) {
                    Err(e) => level.error = Some(e.to_string()),
                    Ok((x, report)) => {
                        level.iterations = report.iterations;
                        level.converged = report.converged;
                        level.solve_seconds = report.setup_seconds + report.solve_seconds;
                        let sol = sys.solution(&x);
                        match compute_errors(
                            &lm.mesh,
                            &lm.geom,
                            &lm.tess,
                            config.order,
                            &sol,
                            &config.case,
                            &norms,
                        ) {
                            Err(e) => level.error = Some(e.to_string()),
                            Ok((ev, eq)) => {
                                level.e_v = Some(ev);
                                level.e_q = Some(eq);
                            }
                        }
                    }
                }
            }
        }
        levels.push(level);
    }

    let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let ev: Vec<Option<f64>> = levels.iter().map(|l| l.e_v).collect();
    let eq: Vec<Option<f64>> = levels.iter().map(|l| l.e_q).collect();
    for (l, r) in levels.iter_mut().zip(observed_rates(&hs, &ev)) {
        l.rate_v = r;
    }
    for (l, r) in levels.iter_mut().zip(observed_rates(&hs, &eq)) {
        l.rate_q = r;
    }
    Ok(ErrorReport {
        order: config.order,
        solver: config.solver.name().to_string(),
        case: config.case.name.clone(),
        levels,
    })
}

pub struct BenchConfig {
    pub meshes: Vec<MeshSource>,
    pub order: u32,
    pub solvers: Vec<SolverChoice>,
    pub gamma: Gamma,
    pub gmres: GmresConfig,
    /// Worker counts for the assembly thread sweep; empty skips the sweep.
    pub threads: Vec<usize>,
    pub case: ManufacturedCase,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverStat {
    pub solver: String,
    pub iterations: usize,
    pub converged: bool,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    /// Sup-norm distance to the first successful solver's solution, relative
    /// to that solution's sup norm.
    pub max_rel_diff: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThreadTiming {
    pub threads: usize,
    pub assembly_seconds: f64,
    pub speedup: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub mesh: String,
    pub cells: usize,
    pub dofs: usize,
    pub h: f64,
    pub assembly_seconds: f64,
    pub solvers: Vec<SolverStat>,
    pub speedup: Vec<ThreadTiming>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub order: u32,
    pub case: String,
    pub rows: Vec<BenchRow>,
}

pub const BENCH_CSV_HEADER: &str = "mesh,cells,dofs,h,t_assembly,solver,iterations,converged,\
t_setup,t_solve,max_rel_diff,error";

pub const SPEEDUP_CSV_HEADER: &str = "mesh,threads,t_assembly,speedup";

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(BENCH_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            for s in &r.solvers {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    csv_escape(&r.mesh),
                    r.cells,
                    r.dofs,
                    csv_num(r.h),
                    csv_num(r.assembly_seconds),
                    csv_escape(&s.solver),
                    s.iterations,
                    s.converged,
                    csv_num(s.setup_seconds),
                    csv_num(s.solve_seconds),
                    csv_opt(s.max_rel_diff),
                    csv_escape(s.error.as_deref().unwrap_or("")),
                ));
            }
        }
        out
    }

    /// Thread-sweep table; `None` when no sweep was requested.
    pub fn speedup_csv(&self) -> Option<String> {
        if self.rows.iter().all(|r| r.speedup.is_empty()) {
            return None;
        }
        let mut out = String::from(SPEEDUP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            for t in &r.speedup {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    csv_escape(&r.mesh),
                    t.threads,
                    csv_num(t.assembly_seconds),
                    csv_num(t.speedup),
                ));
            }
        }
        Some(out)
    }
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport, HarnessError> {
    let loaded = load_all(&config.meshes)?;
    let mut rows = Vec::with_capacity(loaded.len());
    for lm in &loaded {
        let counts = dof_counts(&lm.mesh, config.order);
        let sys = assemble_case(&lm.mesh, &lm.geom, &lm.tess, config.order, &config.case)?;
        let gamma = config.gamma.resolve(sys.mesh_size());

        let mut solvers = Vec::with_capacity(config.solvers.len());
        let mut reference: Option<Vec<f64>> = None;
        for &choice in &config.solvers {
            match solve_system(&sys, choice, gamma, &config.gmres) {
                Err(e) => solvers.push(SolverStat {
                    solver: choice.name().into(),
                    iterations: 0,
                    converged: false,
                    setup_seconds: 0.0,
                    solve_seconds: 0.0,
                    max_rel_diff: None,
                    error: Some(e.to_string()),
                }),
                Ok((x, report)) => {
                    let max_rel_diff = reference.as_ref().map(|r| {
                        let scale = r.iter().fold(f64::MIN_POSITIVE, |s, v| s.max(v.abs()));
                        x.iter()
                            .zip(r)
                            .fold(0.0f64, |s, (a, b)| s.max((a - b).abs()))
                            / scale
                    });
                    if reference.is_none() {
                        reference = Some(x);
                    }
                    solvers.push(SolverStat {
                        solver: choice.name().into(),
                        iterations: report.iterations,
                        converged: report.converged,
                        setup_seconds: report.setup_seconds,
                        solve_seconds: report.solve_seconds,
                        max_rel_diff,
                        error: None,
                    });
                }
            }
        }

        let mut speedup = Vec::new();
        if !config.threads.is_empty() {
            let mut timings = BTreeMap::new();
            for &p in &config.threads {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(p)
                    .build()
                    .map_err(|e| HarnessError::Threads(e.to_string()))?;
                let timed = pool.install(|| {
                    assemble_case(&lm.mesh, &lm.geom, &lm.tess, config.order, &config.case)
                })?;
                timings.insert(p, timed.assembly_seconds());
            }
            for (p, s) in crate::solver::compute_speedup(&timings)? {
                speedup.push(ThreadTiming {
                    threads: p,
                    assembly_seconds: timings[&p],
                    speedup: s,
                });
            }
        }

        rows.push(BenchRow {
            mesh: lm.label.clone(),
            cells: lm.mesh.n_cells(),
            dofs: counts.total,
            h: lm.h,
            assembly_seconds: sys.assembly_seconds(),
            solvers,
            speedup,
        });
    }
    Ok(BenchReport {
        order: config.order,
        case: config.case.name.clone(),
        rows,
    })
}
