//! Acceptance gate. One test per criterion; each prints a single
//! `criterion N <name>: PASS|FAIL (...)` line with the measured values and
//! then asserts the pinned tolerances, so a red test is an honest miss of
//! the stated bracket, never a skipped check.
//!
//! Environment note: criteria 2 and 6-8 carry desk-scale solves; on one CPU
//! core the whole target runs in roughly a quarter hour.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector, Point3, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use vem_core::mesh::Aabb;
use vem_core::poly::{
    cross_span_rank_on_unit_cube, decompose_vector_monomial, dim_gperp, dim_pk, gperp_generators,
    indices_up_to_3d, kernel_member_check, rewrite_first_component, MonomialBasis3, Poly3,
    VectorMonomial,
};
use vem_core::vemspace::dof_counts;
use vem_core::{
    assemble_case, compute_errors, compute_geometry, exact_norms, gen_cube_mesh, load_mesh,
    run_convergence, solve_system, sub_tessellate, ConvergenceConfig, ElementOperators,
    ErrorReport, Gamma, GeometryCache, GmresConfig, IngestMode, ManufacturedCase, MeshSource,
    PolyMesh, SolverChoice, SubTessellation,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/{name}"))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn loaded_fixture(name: &str) -> (PolyMesh, GeometryCache, SubTessellation) {
    let mesh = load_mesh(&fixture(name), IngestMode::Lenient).unwrap();
    let geom = compute_geometry(&mesh).unwrap();
    let tess = sub_tessellate(&mesh, &geom).unwrap();
    (mesh, geom, tess)
}

fn cube(n: usize) -> (PolyMesh, GeometryCache, SubTessellation) {
    let mesh = gen_cube_mesh(n, Aabb::unit()).unwrap();
    let geom = compute_geometry(&mesh).unwrap();
    let tess = sub_tessellate(&mesh, &geom).unwrap();
    (mesh, geom, tess)
}

#[test]
fn criterion_1_dof_count_oracle() {
    let pinned = [(32usize, 1u32, 435_201usize), (24, 2, 508_033), (20, 3, 612_001)];
    let mut got = Vec::new();
    let mut ok = true;
    for (n, k, want) in pinned {
        let mesh = gen_cube_mesh(n, Aabb::unit()).unwrap();
        let total = dof_counts(&mesh, k).total;
        ok &= total == want;
        got.push(format!("{n}^3 k={k}: {total} (want {want})"));
    }
    println!(
        "criterion 1 dof-count oracle: {} ({})",
        verdict(ok),
        got.join(", ")
    );
    assert!(ok, "dof totals diverge from the pinned table: {got:?}");
}

struct RateCheck {
    label: &'static str,
    meshes: Vec<MeshSource>,
    order: u32,
    solver: SolverChoice,
    rtol: f64,
}

fn run_rates(c: &RateCheck) -> ErrorReport {
    let cfg = ConvergenceConfig {
        meshes: c.meshes.clone(),
        order: c.order,
        solver: c.solver,
        gamma: Gamma::Auto,
        gmres: GmresConfig {
            rtol: c.rtol,
            ..GmresConfig::default()
        },
        case: ManufacturedCase::builtin(),
    };
    run_convergence(&cfg).unwrap()
}

fn voronoi_sequence() -> Vec<MeshSource> {
    ["voronoi-27.json", "voronoi-216.json", "voronoi-1728.json"]
        .iter()
        .map(|n| MeshSource::File(fixture(n)))
        .collect()
}

#[test]
fn criterion_2_convergence_rate_brackets() {
    // Direct factorization of the k=2 n=12 and k=3 n=12 saddle systems
    // exceeds the memory budget here, and at k=3 the default GMRES tolerance
    // leaves solver error above the ~1e-7 discretization error, so the
    // heavier sequences run Block-Schur with a tightened tolerance.
    let checks = [
        RateCheck {
            label: "cube k=1",
            meshes: vec![
                MeshSource::Cube(2),
                MeshSource::Cube(4),
                MeshSource::Cube(8),
                MeshSource::Cube(12),
            ],
            order: 1,
            solver: SolverChoice::Direct,
            rtol: 1e-8,
        },
        RateCheck {
            label: "cube k=2",
            meshes: vec![
                MeshSource::Cube(2),
                MeshSource::Cube(4),
                MeshSource::Cube(8),
                MeshSource::Cube(12),
            ],
            order: 2,
            solver: SolverChoice::BlockSchur,
            rtol: 1e-11,
        },
        RateCheck {
            label: "cube k=3",
            meshes: vec![
                MeshSource::Cube(2),
                MeshSource::Cube(4),
                MeshSource::Cube(8),
                MeshSource::Cube(12),
            ],
            order: 3,
            solver: SolverChoice::BlockSchur,
            rtol: 1e-12,
        },
        RateCheck {
            label: "voronoi k=1",
            meshes: voronoi_sequence(),
            order: 1,
            solver: SolverChoice::Direct,
            rtol: 1e-8,
        },
        RateCheck {
            label: "voronoi k=2",
            meshes: voronoi_sequence(),
            order: 2,
            solver: SolverChoice::BlockSchur,
            rtol: 1e-10,
        },
    ];

    let mut ok = true;
    let mut parts = Vec::new();
    for c in &checks {
        let report = run_rates(c);
        let last = report.levels.last().unwrap();
        assert!(
            report.levels.iter().all(|l| l.converged && l.error.is_none()),
            "{}: a level failed to solve: {:?}",
            c.label,
            report
                .levels
                .iter()
                .filter_map(|l| l.error.clone())
                .collect::<Vec<_>>()
        );
        let (rv, rq) = (last.rate_v.unwrap(), last.rate_q.unwrap());
        let k = c.order as f64;
        let v_ok = (k - 0.25..=k + 0.4).contains(&rv);
        let q_ok = (k + 0.75..=k + 1.4).contains(&rq);
        ok &= v_ok && q_ok;
        parts.push(format!(
            "{}: e_v {:.2} in [{:.2},{:.2}] {}, e_q {:.2} in [{:.2},{:.2}] {}",
            c.label,
            rv,
            k - 0.25,
            k + 0.4,
            verdict(v_ok),
            rq,
            k + 0.75,
            k + 1.4,
            verdict(q_ok),
        ));
    }
    println!(
        "criterion 2 convergence rate brackets: {}\n    {}",
        verdict(ok),
        parts.join("\n    ")
    );
    assert!(
        ok,
        "observed rates leave the pinned brackets (the velocity projection \
         error converges at k+1 and the projected-pressure error at k+2 for \
         k >= 2 on these smooth cases, above the contracted k and k+1):\n{}",
        parts.join("\n")
    );
}

#[test]
fn criterion_3_polynomial_exactness_patch_tests() {
    let grids = [("cube-2", cube(2)), ("voronoi-27", loaded_fixture("voronoi-27.json"))];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for (label, (mesh, geom, tess)) in &grids {
        for k in 1..=4u32 {
            for case in [ManufacturedCase::constant_velocity(), ManufacturedCase::polynomial(k)] {
                let sys = assemble_case(mesh, geom, tess, k, &case).unwrap();
                let (x, _) = solve_system(
                    &sys,
                    SolverChoice::Direct,
                    sys.mesh_size().powi(2),
                    &GmresConfig::default(),
                )
                .unwrap();
                let sol = sys.solution(&x);
                let norms = exact_norms(geom, tess, &case).unwrap();
                let (e_v, e_q) =
                    compute_errors(mesh, geom, tess, k, &sol, &case, &norms).unwrap();
                worst = worst.max(e_v).max(e_q);
                if e_v > 1e-8 || e_q > 1e-8 {
                    ok = false;
                    eprintln!(
                        "patch test miss: {label} k={k} case {}: e_v={e_v:.3e} e_q={e_q:.3e}",
                        case.name
                    );
                }
            }
        }
    }
    println!(
        "criterion 3 polynomial exactness (k <= 4, cube-2 + voronoi-27): {} (worst error {:.3e}, tol 1e-8)",
        verdict(ok),
        worst
    );
    assert!(ok, "a patch test exceeded 1e-8 (worst {worst:.3e})");
}

#[test]
fn criterion_4_decomposition_suite() {
    let basis = MonomialBasis3::new(6, Point3::new(0.3, -0.2, 0.7), 1.3);
    let mut r = ChaCha8Rng::seed_from_u64(0xacce_9a7d);
    let pts: Vec<Point3<f64>> = (0..50)
        .map(|_| {
            Point3::new(
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
            )
        })
        .collect();

    // gradient + m_I-cross decomposition reproduces every vector monomial
    for comp in 0..3 {
        for alpha in indices_up_to_3d(4) {
            let dec = decompose_vector_monomial(comp, alpha, basis.h);
            let vm = VectorMonomial::new(comp, alpha);
            for p in &pts {
                let (got, want) = (dec.eval(&basis, p), vm.eval(&basis, p));
                assert!(
                    (got - want).norm() <= 1e-12 * want.norm().max(1.0),
                    "decomposition fails for comp {comp} {alpha:?}"
                );
            }
        }
    }

    // first-slot cross images rewrite over the other two slots
    for alpha in indices_up_to_3d(4).into_iter().filter(|a| a.0[0] >= 1) {
        let rhs = rewrite_first_component(alpha).unwrap();
        let lhs_m = VectorMonomial::new(0, alpha);
        for p in &pts {
            let lhs = lhs_m.eval_cross(&basis, p);
            let got: Vector3<f64> = rhs.iter().map(|(c, m)| *c * m.eval_cross(&basis, p)).sum();
            assert!(
                (lhs - got).norm() <= 1e-12 * lhs.norm().max(1.0),
                "rewrite fails for {alpha:?}"
            );
        }
    }

    // m_I·P_{k-2} lies in the kernel of m_I cross
    for degree in 0..=2u32 {
        let mut p = Poly3::zero(degree);
        for c in p.coeffs.iter_mut() {
            *c = r.gen_range(-1.0..1.0);
        }
        assert!(
            kernel_member_check(&p, &basis, &pts, 1e-12),
            "kernel field of degree {degree} does not vanish under the cross map"
        );
    }

    // dimension identities and generator spans
    let dims = [3usize, 11, 26, 50, 85];
    for k in 1..=5u32 {
        assert_eq!(dim_gperp(k), dims[k as usize - 1], "dim G^perp at k={k}");
        let kernel = dim_pk(k as i64 - 2, 3);
        assert_eq!(
            3 * dim_pk(k as i64 - 1, 3),
            dim_gperp(k) + kernel,
            "kernel dimension identity at k={k}"
        );
        let gens = gperp_generators(k);
        assert_eq!(gens.len(), dim_gperp(k), "generator count at k={k}");
        if k <= 4 {
            assert_eq!(
                cross_span_rank_on_unit_cube(gens.generators(), k),
                dim_gperp(k),
                "generator images do not span at k={k}"
            );
        }
    }
    println!(
        "criterion 4 decomposition suite: PASS (identities at 50 points to 1e-12 for |alpha| <= 4, dimensions for k <= 5)"
    );
}

#[test]
fn criterion_5_projection_and_divergence_oracles() {
    let grids = [("cube-2", cube(2)), ("voronoi-8", loaded_fixture("voronoi-8.json"))];
    let mut worst: f64 = 0.0;
    for (label, (mesh, geom, tess)) in &grids {
        for k in 1..=4u32 {
            for cell in 0..mesh.n_cells() {
                let ops = ElementOperators::build(mesh, geom, tess, cell, k).unwrap();
                let n = ops.proj.nrows();
                let prod = &ops.proj * &ops.d_pi;
                let eye_err = (&prod - DMatrix::<f64>::identity(n, n)).amax();
                worst = worst.max(eye_err);
                assert!(
                    eye_err <= 1e-9,
                    "{label} cell {cell} k={k}: projection reproduction error {eye_err:.3e}"
                );

                let n_k = dim_pk(k as i64, 3);
                let n_km1 = dim_pk(k as i64 - 1, 3);
                let mut rng = ChaCha8Rng::seed_from_u64(cell as u64 * 31 + k as u64);
                let coeffs = DVector::<f64>::from_fn(3 * n_k, |_, _| rng.gen_range(-1.0..1.0));
                let dofs = &ops.d_pi * &coeffs;
                let got = ops.divergence_coefficients(dofs.as_slice());
                let idx_k = indices_up_to_3d(k);
                let mut want = vec![0.0; n_km1];
                for c in 0..3 {
                    for (bi, beta) in idx_k.iter().enumerate() {
                        if let Some(low) = beta.lowered(c) {
                            want[low.rank()] +=
                                coeffs[c * n_k + bi] * beta.0[c] as f64 / ops.diameter;
                        }
                    }
                }
                for i in 0..n_km1 {
                    let err = (got[i] - want[i]).abs() / want[i].abs().max(1.0);
                    worst = worst.max(err);
                    assert!(
                        err <= 1e-9,
                        "{label} cell {cell} k={k}: divergence row {i} off by {err:.3e}"
                    );
                }
            }
        }
    }
    println!(
        "criterion 5 projection/divergence oracles: PASS (cube + voronoi cells, k <= 4, worst deviation {worst:.3e}, tol 1e-9)"
    );
}

#[test]
fn criterion_6_preconditioner_optimality_trend() {
    let case = ManufacturedCase::builtin();
    let mut bs = Vec::new();
    let mut br = Vec::new();
    for n in [4usize, 8, 12, 16] {
        let (mesh, geom, tess) = cube(n);
        let sys = assemble_case(&mesh, &geom, &tess, 2, &case).unwrap();
        let gamma = sys.mesh_size().powi(2);
        let cfg = GmresConfig::default();
        let (_, rep) = solve_system(&sys, SolverChoice::BlockSchur, gamma, &cfg).unwrap();
        assert!(rep.converged, "Block-Schur did not converge at n={n}");
        bs.push(rep.iterations);
        let (_, rep) = solve_system(&sys, SolverChoice::BlockReg, gamma, &cfg).unwrap();
        assert!(rep.converged, "Block-Reg did not converge at n={n}");
        br.push(rep.iterations);
    }
    let bs_monotone = bs.windows(2).skip(1).all(|w| w[1] <= w[0]) && bs[1] <= bs[0];
    let bs_bounded = bs.iter().all(|&it| it as f64 <= 1.2 * bs[0] as f64);
    let bs_ok = bs_monotone || bs_bounded;
    let br_ratio = br[3] as f64 / br[0] as f64;
    let br_ok = br_ratio <= 3.0;
    println!(
        "criterion 6 preconditioner optimality trend: {} (Block-Schur its {:?}, Block-Reg its {:?}, reg growth {:.2} <= 3)",
        verdict(bs_ok && br_ok),
        bs,
        br,
        br_ratio
    );
    assert!(bs_ok, "Block-Schur iterations grow: {bs:?}");
    assert!(br_ok, "Block-Reg iteration growth {br_ratio:.2} exceeds 3: {br:?}");
}

#[test]
fn criterion_7_cross_solver_consistency() {
    let case = ManufacturedCase::builtin();
    let sources: Vec<(String, MeshSource)> = [2usize, 4, 8, 12]
        .iter()
        .map(|&n| (format!("cube-{n}"), MeshSource::Cube(n)))
        .chain(
            ["voronoi-27.json", "voronoi-216.json", "voronoi-1728.json"]
                .iter()
                .map(|n| (n.to_string(), MeshSource::File(fixture(n)))),
        )
        .collect();
    // tighter than the default so iterative solver error sits well inside
    // the 1e-6 agreement tolerance
    let cfg = GmresConfig {
        rtol: 1e-9,
        ..GmresConfig::default()
    };
    let mut worst: f64 = 0.0;
    for (label, src) in &sources {
        let (mesh, geom, tess) = match src {
            MeshSource::Cube(n) => cube(*n),
            MeshSource::File(p) => {
                loaded_fixture(p.file_name().unwrap().to_str().unwrap())
            }
        };
        let sys = assemble_case(&mesh, &geom, &tess, 1, &case).unwrap();
        let gamma = sys.mesh_size().powi(2);
        let mut sols = Vec::new();
        for choice in [
            SolverChoice::Direct,
            SolverChoice::BlockSchur,
            SolverChoice::BlockReg,
        ] {
            let (x, rep) = solve_system(&sys, choice, gamma, &cfg).unwrap();
            assert!(
                rep.converged,
                "{label}: {} did not converge",
                choice.name()
            );
            let s = sys.solution(&x);
            let mut v = s.velocity;
            v.extend_from_slice(&s.pressure);
            v.push(s.multiplier);
            sols.push(v);
        }
        let norm0 = sols[0].iter().map(|x| x * x).sum::<f64>().sqrt();
        for other in &sols[1..] {
            let diff = sols[0]
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                / norm0;
            worst = worst.max(diff);
        }
    }
    let ok = worst <= 1e-6;
    println!(
        "criterion 7 cross-solver consistency: {} (worst relative difference {:.3e}, tol 1e-6, k=1 cube + voronoi levels)",
        verdict(ok),
        worst
    );
    assert!(ok, "solvers disagree by {worst:.3e} > 1e-6");
}

#[test]
fn criterion_8_parallel_assembly_speedup() {
    let (mesh, geom, tess) = cube(8);
    let case = ManufacturedCase::builtin();
    let assemble_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| assemble_case(&mesh, &geom, &tess, 2, &case).unwrap())
    };

    // best of three to damp scheduler noise
    let mut t1 = f64::INFINITY;
    let mut t4 = f64::INFINITY;
    let mut serial = None;
    let mut parallel = None;
    for _ in 0..3 {
        let sys = assemble_with(1);
        t1 = t1.min(sys.assembly_seconds());
        serial = Some(sys);
        let sys = assemble_with(4);
        t4 = t4.min(sys.assembly_seconds());
        parallel = Some(sys);
    }
    let (serial, parallel) = (serial.unwrap(), parallel.unwrap());

    let mut worst: f64 = 0.0;
    for (sm, pm) in [(&serial.a, &parallel.a), (&serial.b, &parallel.b)] {
        assert_eq!(sm.nnz(), pm.nnz(), "sparsity patterns differ");
        for ((i, j, a), (i2, j2, b)) in sm.triplets().zip(pm.triplets()) {
            assert_eq!((i, j), (i2, j2), "sparsity patterns differ");
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    for (a, b) in serial
        .rhs()
        .iter()
        .zip(parallel.rhs())
        .chain(serial.e.iter().zip(&parallel.e))
    {
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    let deterministic = worst <= 1e-14;

    let s4 = t1 / t4;
    let ok = deterministic && s4 >= 2.0;
    println!(
        "criterion 8 parallel assembly: {} (S_4 = {:.2} vs required 2.0 on {} hardware thread(s); parallel-vs-serial entry agreement {:.3e} <= 1e-14: {})",
        verdict(ok),
        s4,
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        worst,
        verdict(deterministic)
    );
    assert!(
        deterministic,
        "parallel and serial assemblies differ by {worst:.3e}"
    );
    assert!(
        s4 >= 2.0,
        "4-worker assembly speedup {s4:.2} below 2.0 (measured on {} hardware thread(s))",
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    );
}
