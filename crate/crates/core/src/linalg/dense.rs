//! Dense symmetric factorization for the local mass-matrix solves.
//!
//! `P A Pᵀ = L D Lᵀ` with diagonal pivoting (largest remaining diagonal
//! entry first). The monomial mass matrices this is applied to are symmetric
//! positive definite but can be badly scaled on stretched cells, so a pivot
//! falling below `PIVOT_RTOL` times the largest initial diagonal is reported
//! as ill-conditioning rather than silently producing garbage.

use nalgebra::DMatrix;
use thiserror::Error;

const PIVOT_RTOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("symmetric factorization failed at step {step}: pivot {pivot:.3e} below threshold {threshold:.3e} (ill-conditioned or not positive definite)")]
    IllConditioned {
        step: usize,
        pivot: f64,
        threshold: f64,
    },
}

/// Pivoted LDLᵀ factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct SymmetricFactor {
    n: usize,
    /// Strict lower triangle holds L, diagonal holds D, in permuted order.
    ld: DMatrix<f64>,
    /// `perm[j]` = original index sitting at permuted position `j`.
    perm: Vec<usize>,
}

impl SymmetricFactor {
    pub fn new(a: &DMatrix<f64>) -> Result<Self, FactorError> {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let mut m = a.clone_owned();
        let mut perm: Vec<usize> = (0..n).collect();
        // Relative to the largest diagonal entry: mass matrices carry the
        // cell/face measure, so an absolute floor would misread a tiny but
        // perfectly conditioned face as singular. A zero diagonal still
        // fails (threshold 0 and the `>` test below).
        let scale = (0..n).fold(0.0_f64, |s, i| s.max(m[(i, i)].abs()));
        let threshold = PIVOT_RTOL * scale;

        for j in 0..n {
            let p = (j..n)
                .max_by(|&x, &y| m[(x, x)].total_cmp(&m[(y, y)]))
                .unwrap();
            if p != j {
                m.swap_rows(j, p);
                m.swap_columns(j, p);
                perm.swap(j, p);
            }
            let d = m[(j, j)];
            if !(d > threshold) {
                return Err(FactorError::IllConditioned {
                    step: j,
                    pivot: d,
                    threshold,
                });
            }
            for i in j + 1..n {
                m[(i, j)] /= d;
            }
            // The active block is kept fully symmetric (not just its lower
            // triangle) so that the row/column pivot swaps stay valid.
            for k in j + 1..n {
                let lkj = m[(k, j)];
                if lkj == 0.0 {
                    continue;
                }
                for i in j + 1..n {
                    m[(i, k)] -= m[(i, j)] * d * lkj;
                }
            }
        }
        Ok(Self { n, ld: m, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let n = self.n;
        let mut y = vec![0.0; n];
        for j in 0..n {
            y[j] = x[self.perm[j]];
        }
        for j in 0..n {
            let yj = y[j];
            for i in j + 1..n {
                y[i] -= self.ld[(i, j)] * yj;
            }
        }
        for (j, v) in y.iter_mut().enumerate() {
            *v /= self.ld[(j, j)];
        }
        for j in (0..n).rev() {
            let mut s = y[j];
            for i in j + 1..n {
                s -= self.ld[(i, j)] * y[i];
            }
            y[j] = s;
        }
        for j in 0..n {
            x[self.perm[j]] = y[j];
        }
    }

    /// Solve against every column of `b`.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.n);
        let mut out = b.clone_owned();
        let mut col = vec![0.0; self.n];
        for c in 0..b.ncols() {
            col.copy_from_slice(out.column(c).as_slice());
            self.solve_in_place(&mut col);
            out.column_mut(c).copy_from_slice(&col);
        }
        out
    }
}
