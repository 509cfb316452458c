//! Compressed sparse row matrix with deterministic construction.
//!
//! Built once from triplets and immutable afterwards; duplicates are summed
//! after a (row, col) sort, so the stored matrix does not depend on insertion
//! order or thread count. Products traverse entries in storage order.

use nalgebra::DMatrix;

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        for &(i, j, _) in &triplets {
            assert!(i < nrows && j < ncols, "entry ({i},{j}) outside {nrows}x{ncols}");
        }
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            match entries.last_mut() {
                Some(e) if e.0 == i && e.1 == j => e.2 += v,
                _ => entries.push((i, j, v)),
            }
        }
        let mut indptr = vec![0usize; nrows + 1];
        for &(i, _, _) in &entries {
            indptr[i + 1] += 1;
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices: entries.iter().map(|e| e.1).collect(),
            data: entries.iter().map(|e| e.2).collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for i in 0..d.len() {
            let (cols, vals) = self.row(i);
            if let Ok(p) = cols.binary_search(&i) {
                d[i] = vals[p];
            }
        }
        d
    }

    /// `y += A x`.
    pub fn matvec_add(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                s += v * x[j];
            }
            y[i] += s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_add(x, &mut y);
        y
    }

    /// `y += Aᵀ x`.
    pub fn matvec_transpose_add(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        self.matvec_transpose_add(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        // Row-order traversal keeps each output row sorted by column.
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let p = counts[j];
                indices[p] = i;
                data[p] = v;
                counts[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            data,
        }
    }

    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut stamp = vec![usize::MAX; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            let (cols, vals) = self.row(i);
            for (&k, &v) in cols.iter().zip(vals) {
                let (kcols, kvals) = other.row(k);
                for (&j, &w) in kcols.iter().zip(kvals) {
                    if stamp[j] != i {
                        stamp[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += v * w;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                indices.push(j);
                data.push(acc[j]);
            }
            indptr[i + 1] = indices.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            data,
        }
    }

    /// `self + alpha·other` (matching shapes).
    pub fn add_scaled(&self, other: &CsrMatrix, alpha: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut data = Vec::with_capacity(indices.capacity());
        for i in 0..self.nrows {
            let (ac, av) = self.row(i);
            let (bc, bv) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                let ja = ac.get(p).copied().unwrap_or(usize::MAX);
                let jb = bc.get(q).copied().unwrap_or(usize::MAX);
                if ja < jb {
                    indices.push(ja);
                    data.push(av[p]);
                    p += 1;
                } else if jb < ja {
                    indices.push(jb);
                    data.push(alpha * bv[q]);
                    q += 1;
                } else {
                    indices.push(ja);
                    data.push(av[p] + alpha * bv[q]);
                    p += 1;
                    q += 1;
                }
            }
            indptr[i + 1] = indices.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(nrows: usize, ncols: usize, per_row: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..nrows {
            for _ in 0..per_row {
                t.push((i, rng.gen_range(0..ncols), rng.gen_range(-1.0..1.0)));
            }
        }
        CsrMatrix::from_triplets(nrows, ncols, t)
    }

    #[test]
    fn duplicates_are_summed_and_rows_sorted() {
        let a = CsrMatrix::from_triplets(
            2,
            3,
            vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5), (1, 0, -1.0), (0, 1, 3.0)],
        );
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.row(0), (&[1usize][..], &[5.0][..]));
        assert_eq!(a.row(1), (&[0usize, 2][..], &[-1.0, 1.5][..]));
    }

    #[test]
    fn products_match_dense() {
        let a = random_sparse(17, 13, 4, 1);
        let b = random_sparse(13, 9, 3, 2);
        let (da, db) = (a.to_dense(), b.to_dense());
        let x: Vec<f64> = (0..13).map(|i| (i as f64).sin()).collect();
        let y = a.matvec(&x);
        let dy = &da * nalgebra::DVector::from_column_slice(&x);
        for i in 0..17 {
            assert!((y[i] - dy[i]).abs() < 1e-13);
        }
        let z: Vec<f64> = (0..17).map(|i| (i as f64).cos()).collect();
        let w = a.matvec_transpose(&z);
        let dw = da.transpose() * nalgebra::DVector::from_column_slice(&z);
        for j in 0..13 {
            assert!((w[j] - dw[j]).abs() < 1e-13);
        }
        let c = a.matmul(&b);
        let dc = &da * &db;
        assert!((c.to_dense() - dc).amax() < 1e-13);
        let t = a.transpose();
        assert!((t.to_dense() - da.transpose()).amax() == 0.0);
    }

    #[test]
    fn add_scaled_matches_dense() {
        let a = random_sparse(11, 11, 3, 3);
        let b = random_sparse(11, 11, 5, 4);
        let c = a.add_scaled(&b, -0.75);
        let want = a.to_dense() - 0.75 * b.to_dense();
        assert!((c.to_dense() - want).amax() < 1e-14);
    }

    #[test]
    fn diagonal_and_empty_rows() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 2.0), (2, 1, 1.0), (2, 2, -4.0)]);
        assert_eq!(a.diagonal(), vec![2.0, 0.0, -4.0]);
        assert_eq!(a.row(1).0.len(), 0);
        let y = a.matvec(&[1.0, 1.0, 1.0]);
        assert_eq!(y, vec![2.0, 0.0, -3.0]);
    }
}
