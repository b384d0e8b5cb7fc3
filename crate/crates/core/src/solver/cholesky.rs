//! Up-looking sparse Cholesky with a geometric nested-dissection ordering.

use crate::sparse::CsrMatrix;
use crate::{Error, Real, Result};

/// Recursive coordinate-bisection nested dissection.
///
/// `coords[i]` is a representative point of dof `i` (for skeletal dofs: the
/// face midpoint). Returns a permutation `perm` such that new index `p` holds
/// old dof `perm[p]`. Separators are ordered last, which keeps Cholesky fill
/// near `O(n log n)` on these planar graphs.
pub fn nested_dissection<T: Real>(matrix: &CsrMatrix<T>, coords: &[[f64; 2]]) -> Vec<usize> {
    assert_eq!(matrix.nrows(), coords.len());
    let n = matrix.nrows();
    let mut perm = Vec::with_capacity(n);
    let mut set: Vec<usize> = (0..n).collect();
    let mut side = vec![0u8; n];
    dissect(matrix, coords, &mut set, &mut side, &mut perm);
    debug_assert_eq!(perm.len(), n);
    perm
}

const ND_LEAF: usize = 48;

fn dissect<T: Real>(
    matrix: &CsrMatrix<T>,
    coords: &[[f64; 2]],
    set: &mut Vec<usize>,
    side: &mut [u8],
    out: &mut Vec<usize>,
) {
    if set.len() <= ND_LEAF {
        set.sort_unstable();
        out.extend_from_slice(set);
        return;
    }
    // Split along the longer bounding-box axis at the median.
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for &i in set.iter() {
        for a in 0..2 {
            lo[a] = lo[a].min(coords[i][a]);
            hi[a] = hi[a].max(coords[i][a]);
        }
    }
    let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
    set.sort_unstable_by(|&a, &b| {
        coords[a][axis]
            .partial_cmp(&coords[b][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mid = set.len() / 2;
    // side: 1 = first half, 2 = second half.
    for (pos, &i) in set.iter().enumerate() {
        side[i] = if pos < mid { 1 } else { 2 };
    }
    let mut half_a: Vec<usize> = Vec::with_capacity(mid);
    let mut half_b: Vec<usize> = Vec::with_capacity(set.len() - mid);
    let mut separator: Vec<usize> = Vec::new();
    for &i in set.iter() {
        if side[i] == 1 {
            let touches_b = matrix.row(i).any(|(j, _)| side[j] == 2);
            if touches_b {
                separator.push(i);
            } else {
                half_a.push(i);
            }
        } else {
            half_b.push(i);
        }
    }
    for &i in set.iter() {
        side[i] = 0;
    }
    set.clear();
    dissect(matrix, coords, &mut half_a, side, out);
    dissect(matrix, coords, &mut half_b, side, out);
    separator.sort_unstable();
    out.extend_from_slice(&separator);
}

/// Sparse `L L^T` factorization of a symmetric positive definite matrix.
pub struct SparseCholesky<T> {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    // L stored by columns.
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    val: Vec<T>,
}

impl<T: Real> SparseCholesky<T> {
    /// Factorizes `matrix` (full symmetric storage) with the given ordering.
    pub fn with_permutation(matrix: &CsrMatrix<T>, perm: Vec<usize>) -> Result<Self> {
        let n = matrix.nrows();
        assert_eq!(matrix.ncols(), n);
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // Upper triangle of the permuted matrix, stored column-wise: entries
        // (row r, value) with r <= k for each column k.
        let mut triplets = Vec::with_capacity(matrix.nnz() / 2 + n);
        for old_r in 0..n {
            for (old_c, v) in matrix.row(old_r) {
                let (pr, pc) = (iperm[old_r], iperm[old_c]);
                if pr <= pc {
                    triplets.push((pc, pr, v));
                }
            }
        }
        let upper = CsrMatrix::from_triplets(n, n, triplets);

        // Elimination tree.
        let mut parent = vec![usize::MAX; n];
        let mut ancestor = vec![usize::MAX; n];
        for k in 0..n {
            for (r, _) in upper.row(k) {
                if r >= k {
                    continue;
                }
                let mut i = r;
                while ancestor[i] != usize::MAX && ancestor[i] != k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    i = next;
                }
                if ancestor[i] == usize::MAX {
                    ancestor[i] = k;
                    parent[i] = k;
                }
            }
        }

        // Symbolic pass: column counts of L via row patterns (ereach).
        let mut counts = vec![1usize; n]; // diagonals
        let mut stamp = vec![usize::MAX; n];
        let mut stack = vec![0usize; n];
        for k in 0..n {
            stamp[k] = k;
            for (r, _) in upper.row(k) {
                if r >= k {
                    continue;
                }
                let mut i = r;
                while stamp[i] != k {
                    stamp[i] = k;
                    counts[i] += 1;
                    i = parent[i];
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + counts[k];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut val = vec![T::zero(); nnz];
        let mut head: Vec<usize> = col_ptr[..n].to_vec();

        // Numeric pass, up-looking over rows of L.
        let mut x = vec![T::zero(); n];
        let mut stamp = vec![usize::MAX; n];
        for k in 0..n {
            // Pattern of row k: paths from the nonzeros of column k of the
            // upper-triangular matrix up the elimination tree, in topological
            // order (stack grows downward).
            let mut top = n;
            stamp[k] = k;
            x[k] = T::zero();
            let mut diag = T::zero();
            for (r, v) in upper.row(k) {
                if r > k {
                    continue;
                }
                if r == k {
                    diag = v;
                    continue;
                }
                x[r] = v;
                let mut len = 0;
                let mut i = r;
                while stamp[i] != k {
                    stack[len] = i;
                    len += 1;
                    stamp[i] = k;
                    i = parent[i];
                }
                // Move the path into the pattern region at the tail of the
                // same buffer; scratch [0..len) and pattern [top..n) never
                // overlap because every node enters the pattern once.
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    stack[top] = stack[len];
                }
            }
            for p in top..n {
                let i = stack[p];
                let lki = x[i] / val[col_ptr[i]];
                x[i] = T::zero();
                for q in col_ptr[i] + 1..head[i] {
                    x[row_idx[q]] -= val[q] * lki;
                }
                diag -= lki * lki;
                let slot = head[i];
                head[i] += 1;
                row_idx[slot] = k;
                val[slot] = lki;
            }
            if !(diag > T::zero()) {
                return Err(Error::SolverBreakdown {
                    residual: diag.to_f64().unwrap_or(f64::NAN),
                });
            }
            let slot = head[k];
            head[k] += 1;
            row_idx[slot] = k;
            val[slot] = diag.sqrt();
        }

        Ok(SparseCholesky {
            n,
            perm,
            col_ptr,
            row_idx,
            val,
        })
    }

    /// Factorizes with a nested-dissection ordering computed from `coords`.
    pub fn new(matrix: &CsrMatrix<T>, coords: &[[f64; 2]]) -> Result<Self> {
        let perm = nested_dissection(matrix, coords);
        Self::with_permutation(matrix, perm)
    }

    pub fn nnz_factor(&self) -> usize {
        self.val.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x = vec![T::zero(); n];
        for p in 0..n {
            x[p] = b[self.perm[p]];
        }
        // Forward: L y = Pb.
        for j in 0..n {
            let xj = x[j] / self.val[self.col_ptr[j]];
            x[j] = xj;
            for q in self.col_ptr[j] + 1..self.col_ptr[j + 1] {
                x[self.row_idx[q]] -= self.val[q] * xj;
            }
        }
        // Backward: L^T z = y.
        for j in (0..n).rev() {
            let mut acc = x[j];
            for q in self.col_ptr[j] + 1..self.col_ptr[j + 1] {
                acc -= self.val[q] * x[self.row_idx[q]];
            }
            x[j] = acc / self.val[self.col_ptr[j]];
        }
        let mut out = vec![T::zero(); n];
        for p in 0..n {
            out[self.perm[p]] = x[p];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;

    /// 2D grid Laplacian with Dirichlet elimination, plus coordinates.
    fn grid_laplacian(n: usize) -> (CsrMatrix<f64>, Vec<[f64; 2]>) {
        let id = |i: usize, j: usize| j * n + i;
        let mut triplets = Vec::new();
        let mut coords = Vec::new();
        for j in 0..n {
            for i in 0..n {
                coords.push([i as f64, j as f64]);
                triplets.push((id(i, j), id(i, j), 4.0));
                let mut nb = |a: isize, b: isize| {
                    if a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < n {
                        triplets.push((id(i, j), id(a as usize, b as usize), -1.0));
                    }
                };
                nb(i as isize - 1, j as isize);
                nb(i as isize + 1, j as isize);
                nb(i as isize, j as isize - 1);
                nb(i as isize, j as isize + 1);
            }
        }
        (CsrMatrix::from_triplets(n * n, n * n, triplets), coords)
    }

    #[test]
    fn nd_permutation_is_a_permutation() {
        let (a, coords) = grid_laplacian(13);
        let perm = nested_dissection(&a, &coords);
        let mut seen = vec![false; a.nrows()];
        for &p in &perm {
            assert!(!seen[p]);
            seen[p] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn factorization_solves_spd_system() {
        let (a, coords) = grid_laplacian(20);
        let chol = SparseCholesky::new(&a, &coords).unwrap();
        let n = a.nrows();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x_true);
        let x = chol.solve(&b);
        let err = x
            .iter()
            .zip(&x_true)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn natural_order_matches_nd_solution() {
        let (a, coords) = grid_laplacian(9);
        let chol_nd = SparseCholesky::new(&a, &coords).unwrap();
        let chol_nat =
            SparseCholesky::with_permutation(&a, (0..a.nrows()).collect()).unwrap();
        let b: Vec<f64> = (0..a.nrows()).map(|i| 1.0 + (i % 7) as f64).collect();
        let (xa, xb) = (chol_nd.solve(&b), chol_nat.solve(&b));
        for (u, v) in xa.iter().zip(&xb) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        let res = SparseCholesky::new(&a, &[[0.0, 0.0], [1.0, 0.0]]);
        assert!(matches!(res, Err(Error::SolverBreakdown { .. })));
    }

    #[test]
    fn nd_keeps_fill_moderate() {
        let (a, coords) = grid_laplacian(40);
        let chol = SparseCholesky::new(&a, &coords).unwrap();
        // Natural (banded) ordering would give roughly n * bandwidth = 64000.
        assert!(
            chol.nnz_factor() < 40_000,
            "fill too large: {}",
            chol.nnz_factor()
        );
    }
}
