//! Jacobi-preconditioned conjugate gradient.

use crate::sparse::CsrMatrix;
use crate::{Error, Real, Result};

/// Solves `A x = b` for symmetric positive definite `A` to the given
/// relative residual. Returns the solution and the achieved residual.
pub fn conjugate_gradient<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, T)> {
    let n = a.nrows();
    let norm_b = norm(b);
    if norm_b == T::zero() {
        return Ok((vec![T::zero(); n], T::zero()));
    }
    let mut inv_diag = vec![T::one(); n];
    for i in 0..n {
        if let Some((_, d)) = a.row(i).find(|&(j, _)| j == i) {
            if d > T::zero() {
                inv_diag[i] = T::one() / d;
            }
        }
    }

    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = T::one();
    for _ in 0..max_iter {
        let ap = a.matvec(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / norm_b;
        if res <= tol {
            return Ok((x, res));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverBreakdown {
        residual: res.to_f64().unwrap_or(f64::NAN),
    })
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
