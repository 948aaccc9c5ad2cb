use nalgebra::DMatrix;

use crate::error::{shape_bail, Result};

use super::LinearOperator;

/// Compressed sparse row matrix. Column indices are sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= nrows || *c >= ncols) {
            shape_bail!("triplet ({r}, {c}) outside {nrows}x{ncols}");
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Keeps every entry of a dense matrix whose magnitude exceeds `drop_below`.
    pub fn from_dense(m: &DMatrix<f64>, drop_below: f64) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].abs() > drop_below {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = self · x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            t.extend(cols.iter().zip(vals).map(|(&c, &v)| (c, i, v)));
        }
        Self::from_triplets(self.ncols, self.nrows, t).expect("indices in range")
    }

    /// Sparse product `self · other` (row-by-row accumulation).
    pub fn matmul(&self, other: &SparseMatrix) -> Result<Self> {
        if self.ncols != other.nrows {
            shape_bail!("matmul {}x{} by {}x{}", self.nrows, self.ncols, other.nrows, other.ncols);
        }
        let mut acc = vec![0.0; other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut cols_used = Vec::new();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            let (ac, av) = self.row(i);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&j, &b) in bc.iter().zip(bv) {
                    if !touched[j] {
                        touched[j] = true;
                        cols_used.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols_used.sort_unstable();
            for &j in &cols_used {
                indices.push(j);
                values.push(acc[j]);
                acc[j] = 0.0;
                touched[j] = false;
            }
            cols_used.clear();
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &SparseMatrix) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for i in 0..self.nrows {
            let (ac, av) = self.row(i);
            for p in 0..other.nrows {
                let (bc, bv) = other.row(p);
                for (&j, &a) in ac.iter().zip(av) {
                    for (&q, &b) in bc.iter().zip(bv) {
                        t.push((i * other.nrows + p, j * other.ncols + q, a * b));
                    }
                }
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, t).expect("indices in range")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(i, c)] += v;
            }
        }
        m
    }

    /// One forward lexicographic Gauss–Seidel sweep on `self · x = b`.
    pub fn gauss_seidel_sweep(&self, x: &mut [f64], b: &[f64]) {
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut diag = 0.0;
            let mut s = b[i];
            for (&c, &v) in cols.iter().zip(vals) {
                if c == i {
                    diag = v;
                } else {
                    s -= v * x[c];
                }
            }
            x[i] = s / diag;
        }
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm of a symmetric matrix.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl LinearOperator for SparseMatrix {
    fn size(&self) -> usize {
        self.nrows
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(1, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0)]).unwrap();
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.nnz(), 2);
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let a = SparseMatrix::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, -2.0), (1, 1, 3.0)]).unwrap();
        let b = SparseMatrix::from_triplets(3, 2, vec![(0, 1, 0.5), (1, 0, 1.5), (2, 0, 4.0)]).unwrap();
        let ab = a.matmul(&b).unwrap().to_dense();
        assert_eq!(ab, a.to_dense() * b.to_dense());
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
        let k = a.kron(&b).to_dense();
        assert_eq!(k, a.to_dense().kronecker(&b.to_dense()));
    }
}
