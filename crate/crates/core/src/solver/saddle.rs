//! Schur-complement solver for constrained (saddle-point) systems.
//!
//! Systems have the block form `[K B^T; B 0]` with `K` sparse SPD on the
//! patch dofs and `B` a short, full-row-rank constraint block. `K` is
//! factorized once; the dense Schur complement `S = B K^-1 B^T` is formed by
//! one solve per constraint row and factorized densely. This is cheap because
//! the number of constraints (patch-interior coarse vertices) is small
//! compared to the fine dof count.

use super::SparseCholesky;
use crate::sparse::CsrMatrix;
use crate::{Error, Real, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub struct SchurSaddle<T: Real> {
    k: CsrMatrix<T>,
    b: CsrMatrix<T>,
    chol: SparseCholesky<T>,
    schur: Cholesky<T, Dyn>,
}

impl<T: Real> SchurSaddle<T> {
    /// Builds the solver. `element` tags error reports with the coarse
    /// element whose patch produced the system.
    pub fn new(
        k: CsrMatrix<T>,
        b: CsrMatrix<T>,
        coords: &[[f64; 2]],
        element: usize,
    ) -> Result<Self> {
        let n = k.nrows();
        let m = b.nrows();
        assert_eq!(b.ncols(), n, "constraint block shape");
        let chol = SparseCholesky::new(&k, coords)?;

        let mut schur = DMatrix::<T>::zeros(m, m);
        let mut bt_row = vec![T::zero(); n];
        for i in 0..m {
            bt_row.iter_mut().for_each(|v| *v = T::zero());
            for (c, v) in b.row(i) {
                bt_row[c] = v;
            }
            let z = chol.solve(&bt_row);
            let bz = b.matvec(&z);
            for j in 0..m {
                schur[(i, j)] = bz[j];
            }
        }
        // Symmetrize roundoff before the dense factorization.
        for i in 0..m {
            for j in 0..i {
                let avg = (schur[(i, j)] + schur[(j, i)]) / (T::one() + T::one());
                schur[(i, j)] = avg;
                schur[(j, i)] = avg;
            }
        }
        let schur = Cholesky::new(schur).ok_or(Error::InfSup { element })?;
        // The dense factorization tolerates numerically singular PSD input;
        // a collapsed factor diagonal still means rank-deficient constraints.
        let diag = schur.l_dirty();
        let mut dmin = T::max_value().unwrap();
        let mut dmax = T::zero();
        for i in 0..m {
            dmin = dmin.min(diag[(i, i)]);
            dmax = dmax.max(diag[(i, i)]);
        }
        if m > 0 && dmin <= dmax * T::default_epsilon().sqrt() {
            return Err(Error::InfSup { element });
        }
        Ok(SchurSaddle { k, b, chol, schur })
    }

    pub fn constraint_count(&self) -> usize {
        self.b.nrows()
    }

    /// Solves `K x + B^T lambda = f`, `B x = g`.
    pub fn solve(&self, f: &[T], g: &[T]) -> (Vec<T>, Vec<T>) {
        let y = self.chol.solve(f);
        let mut rhs = DVector::from_vec(self.b.matvec(&y));
        for (i, &gi) in g.iter().enumerate() {
            rhs[i] -= gi;
        }
        let lambda = self.schur.solve(&rhs);
        let bt_lambda = self.b.matvec_transpose(lambda.as_slice());
        let correction = self.chol.solve(&bt_lambda);
        let x: Vec<T> = y
            .iter()
            .zip(&correction)
            .map(|(&a, &b)| a - b)
            .collect();
        (x, lambda.as_slice().to_vec())
    }

    /// Solves with one residual check and at most `refinements` iterative
    /// refinement passes; errors if the relative residual stays above `tol`.
    pub fn solve_checked(
        &self,
        f: &[T],
        g: &[T],
        tol: T,
        refinements: usize,
    ) -> Result<(Vec<T>, Vec<T>, T)> {
        let scale = norm2(f).max(norm2(g));
        if scale == T::zero() {
            return Ok((vec![T::zero(); f.len()], vec![T::zero(); g.len()], T::zero()));
        }
        let (mut x, mut lambda) = self.solve(f, g);
        let mut res = self.residual(f, g, &x, &lambda) / scale;
        for _ in 0..refinements {
            if res <= tol {
                break;
            }
            let (rf, rg) = self.residual_vectors(f, g, &x, &lambda);
            let (dx, dl) = self.solve(&rf, &rg);
            for i in 0..x.len() {
                x[i] += dx[i];
            }
            for i in 0..lambda.len() {
                lambda[i] += dl[i];
            }
            res = self.residual(f, g, &x, &lambda) / scale;
        }
        if res <= tol {
            Ok((x, lambda, res))
        } else {
            Err(Error::SolverBreakdown {
                residual: res.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    fn residual_vectors(&self, f: &[T], g: &[T], x: &[T], lambda: &[T]) -> (Vec<T>, Vec<T>) {
        let kx = self.k.matvec(x);
        let btl = self.b.matvec_transpose(lambda);
        let rf: Vec<T> = (0..f.len()).map(|i| f[i] - kx[i] - btl[i]).collect();
        let bx = self.b.matvec(x);
        let rg: Vec<T> = (0..g.len()).map(|i| g[i] - bx[i]).collect();
        (rf, rg)
    }

    fn residual(&self, f: &[T], g: &[T], x: &[T], lambda: &[T]) -> T {
        let (rf, rg) = self.residual_vectors(f, g, x, lambda);
        norm2(&rf).max(norm2(&rg))
    }
}

fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}
