//! Compressed sparse row matrices and the tagged skeletal operator.
//!
//! Assembly goes through triplet lists that are sorted and summed in
//! canonical `(row, col)` order, so parallel per-element contributions always
//! produce bit-identical matrices.

use crate::{Error, Real, Result};

/// Dof spaces an operator can map between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofSpace {
    /// Interior fine skeletal dofs (2 per interior fine face).
    FineSkeletal,
    /// Interior coarse skeletal dofs.
    CoarseSkeletal,
    /// Interior coarse vertex values (nodal continuous P1 traces).
    CoarseNodal,
    /// Discontinuous P1 bulk dofs on the fine mesh (3 per element).
    FineBulk,
    /// Discontinuous P1 bulk dofs on the coarse mesh (3 per element).
    CoarseBulk,
}

impl DofSpace {
    pub fn name(self) -> &'static str {
        match self {
            DofSpace::FineSkeletal => "fine-skeletal",
            DofSpace::CoarseSkeletal => "coarse-skeletal",
            DofSpace::CoarseNodal => "coarse-nodal",
            DofSpace::FineBulk => "fine-bulk",
            DofSpace::CoarseBulk => "coarse-bulk",
        }
    }
}

/// Plain CSR matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from triplets; duplicate entries are summed in sorted order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last = (usize::MAX, usize::MAX);
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            if (r, c) == last {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = (r, c);
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn zero(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Entries of one row as `(col, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.indptr[r]..self.indptr[r + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.ncols);
        let mut y = vec![T::zero(); self.nrows];
        for r in 0..self.nrows {
            let mut acc = T::zero();
            for idx in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[idx] * x[self.indices[idx]];
            }
            y[r] = acc;
        }
        y
    }

    /// `y = A^T x` without materializing the transpose.
    pub fn matvec_transpose(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.nrows);
        let mut y = vec![T::zero(); self.ncols];
        for r in 0..self.nrows {
            let xr = x[r];
            if xr == T::zero() {
                continue;
            }
            for idx in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[idx]] += self.values[idx] * xr;
            }
        }
        y
    }

    /// Applies `A` to a sparse vector, returning a dense result.
    pub fn matvec_sparse(&self, x: &[(usize, T)]) -> Vec<(usize, T)> {
        let mut dense = vec![T::zero(); self.ncols];
        for &(i, v) in x {
            dense[i] = v;
        }
        let mut out = Vec::new();
        for r in 0..self.nrows {
            let mut acc = T::zero();
            let mut touched = false;
            for idx in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[idx];
                if dense[c] != T::zero() {
                    acc += self.values[idx] * dense[c];
                    touched = true;
                }
            }
            if touched && acc != T::zero() {
                out.push((r, acc));
            }
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix<T> {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                triplets.push((c, r, v));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, triplets)
    }

    /// Sparse-sparse product `A * B`.
    pub fn matmul(&self, other: &CsrMatrix<T>) -> CsrMatrix<T> {
        assert_eq!(self.ncols, other.nrows, "matmul dimension mismatch");
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![T::zero(); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols_in_row = Vec::new();
        for r in 0..self.nrows {
            cols_in_row.clear();
            for (k, va) in self.row(r) {
                for (c, vb) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = T::zero();
                        cols_in_row.push(c);
                    }
                    acc[c] += va * vb;
                }
            }
            cols_in_row.sort_unstable();
            for &c in &cols_in_row {
                indices.push(c);
                values.push(acc[c]);
            }
            indptr[r + 1] = indices.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Extracts `A[rows, cols]` as a new matrix.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix<T> {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (local, &c) in cols.iter().enumerate() {
            col_map[c] = local;
        }
        let mut triplets = Vec::new();
        for (local_r, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if col_map[c] != usize::MAX {
                    triplets.push((local_r, col_map[c], v));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), triplets)
    }

    /// Dense copy, for small test oracles.
    pub fn to_dense(&self) -> nalgebra::DMatrix<T> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Max-norm symmetry defect `max |A - A^T|`.
    pub fn symmetry_defect(&self) -> T {
        let t = self.transpose();
        let mut defect = T::zero();
        for r in 0..self.nrows {
            let mut a_row: Vec<(usize, T)> = self.row(r).collect();
            let mut t_row: Vec<(usize, T)> = t.row(r).collect();
            a_row.sort_unstable_by_key(|e| e.0);
            t_row.sort_unstable_by_key(|e| e.0);
            let (mut i, mut j) = (0, 0);
            while i < a_row.len() || j < t_row.len() {
                let (ca, cb) = (
                    a_row.get(i).map_or(usize::MAX, |e| e.0),
                    t_row.get(j).map_or(usize::MAX, |e| e.0),
                );
                let d = if ca == cb {
                    i += 1;
                    j += 1;
                    (a_row[i - 1].1 - t_row[j - 1].1).abs()
                } else if ca < cb {
                    i += 1;
                    a_row[i - 1].1.abs()
                } else {
                    j += 1;
                    t_row[j - 1].1.abs()
                };
                defect = defect.max(d);
            }
        }
        defect
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// A sparse operator between tagged skeletal dof spaces.
#[derive(Debug, Clone)]
pub struct SkeletalOperator<T> {
    pub matrix: CsrMatrix<T>,
    pub row_space: DofSpace,
    pub col_space: DofSpace,
    pub symmetric: bool,
}

impl<T: Real> SkeletalOperator<T> {
    pub fn new(matrix: CsrMatrix<T>, row_space: DofSpace, col_space: DofSpace) -> Self {
        SkeletalOperator {
            matrix,
            row_space,
            col_space,
            symmetric: false,
        }
    }

    pub fn symmetric(matrix: CsrMatrix<T>, space: DofSpace) -> Self {
        SkeletalOperator {
            matrix,
            row_space: space,
            col_space: space,
            symmetric: true,
        }
    }

    /// Applies the operator, checking the input tag.
    pub fn apply_tagged(&self, x: &[T], x_space: DofSpace) -> Result<Vec<T>> {
        if x_space != self.col_space {
            return Err(Error::LevelMismatch {
                expected: self.col_space.name(),
                got: x_space.name(),
            });
        }
        Ok(self.matrix.matvec(x))
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.matrix.matvec(x)
    }

    /// Verifies the symmetry invariant `max|K - K^T| <= tol * max|K|`.
    pub fn check_symmetry(&self, tol: T) -> bool {
        !self.symmetric || self.matrix.symmetry_defect() <= tol * self.matrix.max_abs()
    }
}
