//! Saddle-point solvers: sparse direct factorization and right-preconditioned
//! restarted GMRES with two block-diagonal preconditioners.
//!
//! Block-Schur pairs the inverse diagonal of A on the velocity block with an
//! exact factorization of the approximate Schur complement
//! `S = -C - B diag(A)⁻¹ Bᵀ` on the (bordered) pressure block. Block-Reg
//! pairs an exact factorization of `A + (1/γ) BᵀB` with `(1/γ)I` on the
//! pressure block; γ defaults to the squared mesh size upstream.

use crate::assembly::SaddleSystem;
use crate::linalg::CsrMatrix;
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("direct solve residual {residual:.3e} exceeds 1e-10")]
    DirectResidual { residual: f64 },
    #[error("zero or negative diagonal entry in A at row {row}")]
    BadDiagonal { row: usize },
    #[error("empty timing table: no baseline worker count")]
    MissingBaseline,
}

/// Restarted-GMRES parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GmresConfig {
    pub rtol: f64,
    pub restart: usize,
    pub maxit: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            restart: 30,
            maxit: 10000,
        }
    }
}

/// Iteration statistics of one solve.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    /// Total preconditioned matvecs (0 for a direct solve).
    pub iterations: usize,
    /// Relative residual after each iteration (Givens estimate).
    pub residual_history: Vec<f64>,
    /// True relative residual of the returned iterate.
    pub true_residual: f64,
    pub converged: bool,
    /// Preconditioner or factorization construction time.
    pub setup_seconds: f64,
    /// Iteration (or triangular-solve) time.
    pub solve_seconds: f64,
}

/// Square operator exposing only matrix-vector products.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.nrows(), self.ncols());
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        self.matvec_add(x, y);
    }
}

impl LinearOperator for SaddleSystem {
    fn dim(&self) -> usize {
        SaddleSystem::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        SaddleSystem::apply(self, x, y)
    }
}

/// Left factor application `z = M⁻¹ x` for right-preconditioned GMRES.
pub trait Preconditioner {
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

/// No preconditioning.
pub struct IdentityPrecond;

impl Preconditioner for IdentityPrecond {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
}

fn to_faer(m: &CsrMatrix) -> Result<SparseColMat<usize, f64>, SolverError> {
    let triplets: Vec<Triplet<usize, usize, f64>> = m
        .triplets()
        .map(|(i, j, v)| Triplet::new(i, j, v))
        .collect();
    SparseColMat::try_new_from_triplets(m.nrows(), m.ncols(), &triplets)
        .map_err(|e| SolverError::Factorization(format!("{e:?}")))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sparse LU on the monolithic bordered matrix.
pub fn direct_solve(sys: &SaddleSystem) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let setup = Instant::now();
    let mono = sys.monolithic();
    let lu = to_faer(&mono)?
        .sp_lu()
        .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
    let setup_seconds = setup.elapsed().as_secs_f64();

    let solve = Instant::now();
    let rhs = sys.rhs();
    let n = rhs.len();
    let mut col = faer::Mat::from_fn(n, 1, |i, _| rhs[i]);
    lu.solve_in_place(col.as_mut());
    let x: Vec<f64> = (0..n).map(|i| col[(i, 0)]).collect();
    let solve_seconds = solve.elapsed().as_secs_f64();

    let mut r = vec![0.0; n];
    sys.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri -= bi;
    }
    let true_residual = norm(&r) / norm(rhs).max(f64::MIN_POSITIVE);
    if true_residual > 1e-10 {
        return Err(SolverError::DirectResidual {
            residual: true_residual,
        });
    }
    Ok((
        x,
        SolveReport {
            iterations: 0,
            residual_history: Vec::new(),
            true_residual,
            converged: true,
            setup_seconds,
            solve_seconds,
        },
    ))
}

/// Diagonal velocity block plus exact factorization of the approximate Schur
/// complement over the pressure dofs (bordered by the constraint column when
/// one is supplied).
pub struct BlockSchur {
    dinv: Vec<f64>,
    schur: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n_pressure: usize,
    bordered: bool,
}

impl BlockSchur {
    pub fn build(sys: &SaddleSystem) -> Result<Self, SolverError> {
        Self::from_blocks(&sys.a, &sys.b, sys.c.as_ref(), Some(&sys.e))
    }

    pub fn from_blocks(
        a: &CsrMatrix,
        b: &CsrMatrix,
        c: Option<&CsrMatrix>,
        e: Option<&[f64]>,
    ) -> Result<Self, SolverError> {
        let d = a.diagonal();
        for (row, &v) in d.iter().enumerate() {
            if !(v > 0.0) {
                return Err(SolverError::BadDiagonal { row });
            }
        }
        let dinv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();

        // S = -C - B diag(A)⁻¹ Bᵀ via a scaled sparse triple product.
        let nq = b.nrows();
        let bt = b.transpose();
        let scaled_triplets: Vec<(usize, usize, f64)> = b
            .triplets()
            .map(|(i, j, v)| (i, j, v * dinv[j]))
            .collect();
        let bd = CsrMatrix::from_triplets(nq, b.ncols(), scaled_triplets);
        let bdbt = bd.matmul(&bt);

        let dim = nq + usize::from(e.is_some());
        let mut triplets: Vec<Triplet<usize, usize, f64>> = bdbt
            .triplets()
            .map(|(i, j, v)| Triplet::new(i, j, -v))
            .collect();
        if let Some(c) = c {
            triplets.extend(c.triplets().map(|(i, j, v)| Triplet::new(i, j, -v)));
        }
        if let Some(e) = e {
            for (i, &w) in e.iter().enumerate() {
                if w != 0.0 {
                    triplets.push(Triplet::new(i, nq, w));
                    triplets.push(Triplet::new(nq, i, w));
                }
            }
        }
        let schur = SparseColMat::try_new_from_triplets(dim, dim, &triplets)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?
            .sp_lu()
            .map_err(|e| SolverError::Factorization(format!("schur complement: {e:?}")))?;
        Ok(Self {
            dinv,
            schur,
            n_pressure: nq,
            bordered: e.is_some(),
        })
    }
}

impl Preconditioner for BlockSchur {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nf = self.dinv.len();
        let tail = self.n_pressure + usize::from(self.bordered);
        assert_eq!(x.len(), nf + tail);
        let mut z = Vec::with_capacity(x.len());
        z.extend(x[..nf].iter().zip(&self.dinv).map(|(v, d)| v * d));
        let mut col = faer::Mat::from_fn(tail, 1, |i, _| x[nf + i]);
        self.schur.solve_in_place(col.as_mut());
        z.extend((0..tail).map(|i| col[(i, 0)]));
        z
    }
}

/// Exact factorization of the regularized velocity block `A + (1/γ) BᵀB`
/// paired with `(1/γ)I` on the bordered pressure block.
pub struct BlockReg {
    chol: faer::sparse::linalg::solvers::Llt<usize, f64>,
    n_velocity: usize,
    gamma: f64,
}

impl BlockReg {
    pub fn build(sys: &SaddleSystem, gamma: f64) -> Result<Self, SolverError> {
        Self::from_blocks(&sys.a, &sys.b, gamma)
    }

    pub fn from_blocks(a: &CsrMatrix, b: &CsrMatrix, gamma: f64) -> Result<Self, SolverError> {
        assert!(gamma > 0.0, "regularization parameter must be positive");
        let btb = b.transpose().matmul(b);
        let reg = a.add_scaled(&btb, 1.0 / gamma);
        let chol = to_faer(&reg)?
            .sp_cholesky(Side::Lower)
            .map_err(|e| SolverError::Factorization(format!("regularized block: {e:?}")))?;
        Ok(Self {
            chol,
            n_velocity: a.nrows(),
            gamma,
        })
    }
}

impl Preconditioner for BlockReg {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nf = self.n_velocity;
        let mut col = faer::Mat::from_fn(nf, 1, |i, _| x[i]);
        self.chol.solve_in_place(col.as_mut());
        let mut z = Vec::with_capacity(x.len());
        z.extend((0..nf).map(|i| col[(i, 0)]));
        z.extend(x[nf..].iter().map(|v| v / self.gamma));
        z
    }
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt and Givens
/// rotations. Returns the best iterate with `converged = false` when the
/// iteration budget runs out.
pub fn gmres<O, P>(
    op: &O,
    precond: &P,
    rhs: &[f64],
    config: &GmresConfig,
) -> (Vec<f64>, SolveReport)
where
    O: LinearOperator + ?Sized,
    P: Preconditioner + ?Sized,
{
    let start = Instant::now();
    let n = op.dim();
    assert_eq!(rhs.len(), n);
    let m = config.restart.max(1);
    let bnorm = norm(rhs);
    let mut x = vec![0.0; n];
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return (
            x,
            SolveReport {
                iterations: 0,
                residual_history: history,
                true_residual: 0.0,
                converged: true,
                setup_seconds: 0.0,
                solve_seconds: start.elapsed().as_secs_f64(),
            },
        );
    }

    let true_rel_res = |x: &[f64], scratch: &mut Vec<f64>| {
        scratch.resize(n, 0.0);
        op.apply(x, scratch);
        for (ri, bi) in scratch.iter_mut().zip(rhs) {
            *ri -= bi;
        }
        norm(scratch) / bnorm
    };

    let mut scratch = Vec::new();
    let mut best = (x.clone(), true_rel_res(&x, &mut scratch));
    let mut total_its = 0usize;
    let mut converged = false;

    'outer: while total_its < config.maxit {
        let mut r = vec![0.0; n];
        op.apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        if beta / bnorm <= config.rtol {
            converged = true;
            break;
        }
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|t| t / beta).collect());
        let mut h = vec![vec![0.0f64; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![0.0f64; m];
        let mut g = vec![0.0f64; m + 1];
        g[0] = beta;

        let mut cols = 0usize;
        for j in 0..m {
            if total_its >= config.maxit {
                break;
            }
            total_its += 1;
            let z = precond.apply(&v[j]);
            let mut w = vec![0.0; n];
            op.apply(&z, &mut w);
            for i in 0..=j {
                let hij: f64 = w.iter().zip(&v[i]).map(|(a, b)| a * b).sum();
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= hij * vk;
                }
            }
            let hjj = norm(&w);
            h[j + 1][j] = hjj;
            // Apply the accumulated rotations, then a new one for this column.
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + hjj * hjj).sqrt();
            if denom == 0.0 {
                cols = j + 1;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = hjj / denom;
            h[j][j] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            cols = j + 1;
            let rel = g[j + 1].abs() / bnorm;
            history.push(rel);
            if rel <= config.rtol || hjj <= f64::MIN_POSITIVE * 16.0 {
                break;
            }
            v.push(w.iter().map(|t| t / hjj).collect());
        }

        if cols == 0 {
            break;
        }
        // Triangular solve and right-preconditioned update x += M⁻¹ (V y).
        let mut y = vec![0.0f64; cols];
        for i in (0..cols).rev() {
            let mut s = g[i];
            for (kk, yk) in y.iter().enumerate().skip(i + 1) {
                s -= h[i][kk] * yk;
            }
            y[i] = s / h[i][i];
        }
        let mut vy = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            for (t, vk) in vy.iter_mut().zip(&v[i]) {
                *t += yi * vk;
            }
        }
        let update = precond.apply(&vy);
        for (xi, ui) in x.iter_mut().zip(&update) {
            *xi += ui;
        }

        let rel = true_rel_res(&x, &mut scratch);
        if rel < best.1 {
            best = (x.clone(), rel);
        }
        if rel <= config.rtol {
            converged = true;
            break 'outer;
        }
    }

    if converged {
        let rel = true_rel_res(&x, &mut scratch);
        if rel < best.1 {
            best = (x, rel);
        }
    }
    let (x, true_residual) = best;
    (
        x,
        SolveReport {
            iterations: total_its,
            residual_history: history,
            true_residual,
            converged: converged && true_residual <= 10.0 * config.rtol,
            setup_seconds: 0.0,
            solve_seconds: start.elapsed().as_secs_f64(),
        },
    )
}

/// Solver selection for drivers and the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    Direct,
    BlockSchur,
    BlockReg,
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Direct => "direct",
            SolverChoice::BlockSchur => "block-schur",
            SolverChoice::BlockReg => "block-reg",
        }
    }
}

impl std::str::FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(SolverChoice::Direct),
            "block-schur" => Ok(SolverChoice::BlockSchur),
            "block-reg" => Ok(SolverChoice::BlockReg),
            other => Err(format!(
                "unknown solver '{other}' (expected direct, block-schur, or block-reg)"
            )),
        }
    }
}

/// Solve an assembled system with the chosen method. `gamma` is the
/// regularization parameter for Block-Reg (callers resolve `auto` to h²).
pub fn solve_system(
    sys: &SaddleSystem,
    choice: SolverChoice,
    gamma: f64,
    config: &GmresConfig,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    match choice {
        SolverChoice::Direct => direct_solve(sys),
        SolverChoice::BlockSchur => {
            let setup = Instant::now();
            let pc = BlockSchur::build(sys)?;
            let setup_seconds = setup.elapsed().as_secs_f64();
            let (x, mut report) = gmres(sys, &pc, sys.rhs(), config);
            report.setup_seconds = setup_seconds;
            Ok((x, report))
        }
        SolverChoice::BlockReg => {
            let setup = Instant::now();
            let pc = BlockReg::build(sys, gamma)?;
            let setup_seconds = setup.elapsed().as_secs_f64();
            let (x, mut report) = gmres(sys, &pc, sys.rhs(), config);
            report.setup_seconds = setup_seconds;
            Ok((x, report))
        }
    }
}

/// `S_p = T_baseline / T_p` against the smallest worker count present.
pub fn compute_speedup(timings: &BTreeMap<usize, f64>) -> Result<Vec<(usize, f64)>, SolverError> {
    let (_, &base) = timings.iter().next().ok_or(SolverError::MissingBaseline)?;
    Ok(timings.iter().map(|(&p, &t)| (p, base / t)).collect())
}
