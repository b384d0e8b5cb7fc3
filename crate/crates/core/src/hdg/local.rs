//! Per-element local solvers and condensed element matrices.
//!
//! For a triangle `e` with constant coefficient `c` and stabilization `tau`,
//! the local problem maps skeletal data `m` on the three faces to the primal
//! `u in P1(e)` and dual `q in P1(e)^2` satisfying, for all test functions,
//!
//! ```text
//! (c^-1 q, p)_e - (u, div p)_e = -<m, p.n>_de
//! <q.n + tau u, v>_de - (q, grad v)_e = tau <m, v>_de
//! ```
//!
//! Both bulk unknowns are eliminated per element (static condensation); the
//! remaining skeletal coupling is the 6x6 matrix `a_e`.

use crate::mesh::MeshLevel;
use crate::quad::{edge_gauss2, triangle_area};
use crate::{real, Error, Real, Result};
use nalgebra::{SMatrix, SVector};

/// Stabilization parameter rule; `tau` is face-wise constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule<T> {
    /// `tau = c` on every face.
    Constant(T),
    /// `tau = c / h` with `h` the mesh size of the assembled level.
    OverH(T),
}

impl<T: Real> TauRule<T> {
    pub fn value(&self, mesh_size: f64) -> T {
        match *self {
            TauRule::Constant(c) => c,
            TauRule::OverH(c) => c / real::<T>(mesh_size),
        }
    }
}

/// Orthonormal face basis in arclength `t in [0, L]`:
/// `phi_0 = 1/sqrt(L)`, `phi_1 = sqrt(12/L^3) (t - L/2)`.
#[inline]
pub fn face_basis<T: Real>(len: T, t: T, mode: usize) -> T {
    match mode {
        0 => T::one() / len.sqrt(),
        _ => (real::<T>(12.0) / (len * len * len)).sqrt() * (t - len / real::<T>(2.0)),
    }
}

/// Dense local operators of one element.
#[derive(Debug, Clone)]
pub struct LocalSolverKernel<T> {
    pub element: usize,
    /// Constant coefficient value on the element.
    pub coeff: T,
    pub area: T,
    /// Global face ids in local order (edges `(v0,v1), (v1,v2), (v2,v0)`).
    pub faces: [usize; 3],
    pub face_lengths: [T; 3],
    pub tau: [T; 3],
    /// Skeletal trace dofs (6) -> primal nodal values (3).
    pub u_op: SMatrix<T, 3, 6>,
    /// Skeletal trace dofs (6) -> dual nodal values (6, component-major:
    /// `[qx at v0..v2, qy at v0..v2]`).
    pub q_op: SMatrix<T, 6, 6>,
    /// Condensed element matrix: the bilinear form restricted to `e`.
    pub a_e: SMatrix<T, 6, 6>,
    /// Stabilizer part of `a_e`.
    pub s_e: SMatrix<T, 6, 6>,
}

impl<T: Real> LocalSolverKernel<T> {
    /// Local energy `d^T a_e d` of a local skeletal vector.
    pub fn energy(&self, d: &SVector<T, 6>) -> T {
        (d.transpose() * self.a_e * d)[(0, 0)]
    }
}

/// Builds the local kernels of every element of `mesh`.
///
/// `coeff_of` returns the constant coefficient on an element. Fails for
/// `tau <= 0`, which leaves the LDG-H local problems singular.
pub fn build_local_kernels<T: Real>(
    mesh: &MeshLevel,
    coeff_of: impl Fn(usize) -> T + Sync,
    tau_rule: TauRule<T>,
) -> Result<Vec<LocalSolverKernel<T>>> {
    let tau = tau_rule.value(mesh.mesh_size());
    if !(tau > T::zero()) {
        return Err(Error::InvalidParameter(
            "LDG-H requires tau > 0 (local solvability)".into(),
        ));
    }
    use rayon::prelude::*;
    (0..mesh.elements.len())
        .into_par_iter()
        .map(|e| build_kernel(mesh, e, coeff_of(e), tau))
        .collect()
}

fn build_kernel<T: Real>(
    mesh: &MeshLevel,
    element: usize,
    coeff: T,
    tau: T,
) -> Result<LocalSolverKernel<T>> {
    let verts = mesh.element_vertices(element);
    let area_f = triangle_area(&verts);
    let area = real::<T>(area_f);
    let tri = mesh.elements[element];
    let faces = mesh.element_faces[element];

    // Barycentric gradients: grad l_i = rot90(p_{i+2} - p_{i+1}) / (2 area).
    let mut grad = [[T::zero(); 2]; 3];
    for i in 0..3 {
        let a = verts[(i + 1) % 3];
        let b = verts[(i + 2) % 3];
        grad[i] = [
            real::<T>(-(b[1] - a[1]) / (2.0 * area_f)),
            real::<T>((b[0] - a[0]) / (2.0 * area_f)),
        ];
    }

    // P1 mass matrix on the element.
    let mut mass = SMatrix::<T, 3, 3>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let w = if i == j { 2.0 } else { 1.0 };
            mass[(i, j)] = area * real::<T>(w / 12.0);
        }
    }

    // System blocks: unknowns [q (component-major, 6); u (3)].
    let mut sys = SMatrix::<T, 9, 9>::zeros();
    let mut rhs = SMatrix::<T, 9, 6>::zeros();

    // (c^-1 q, p): block-diagonal vector mass.
    for comp in 0..2 {
        for i in 0..3 {
            for j in 0..3 {
                sys[(comp * 3 + i, comp * 3 + j)] = mass[(i, j)] / coeff;
            }
        }
    }
    // -(u, div p) with div(l_j e_comp) = grad l_j [comp] constant.
    for comp in 0..2 {
        for j in 0..3 {
            let div = grad[j][comp];
            for i in 0..3 {
                sys[(comp * 3 + j, 6 + i)] -= div * area / real::<T>(3.0);
            }
        }
    }
    // -(q, grad v) rows of the flux equation.
    for i in 0..3 {
        for comp in 0..2 {
            for j in 0..3 {
                sys[(6 + i, comp * 3 + j)] -= grad[i][comp] * area / real::<T>(3.0);
            }
        }
    }

    let mut face_lengths = [T::zero(); 3];
    // Per local face: endpoints in global orientation (low vertex id first).
    for (lf, &f) in faces.iter().enumerate() {
        let (va, vb) = (tri[lf], tri[(lf + 1) % 3]);
        let (ga, gb) = (va.min(vb), va.max(vb));
        let (pa, pb) = (mesh.vertices[ga], mesh.vertices[gb]);
        let len_f = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let len = real::<T>(len_f);
        face_lengths[lf] = len;
        debug_assert_eq!(
            (ga.min(gb), ga.max(gb)),
            mesh.faces[f].vertices,
            "element face order"
        );

        // Outward normal with respect to this element.
        let bary = mesh.element_barycenter(element);
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        let mut nrm = [(pb[1] - pa[1]) / len_f, -(pb[0] - pa[0]) / len_f];
        if (bary[0] - mid[0]) * nrm[0] + (bary[1] - mid[1]) * nrm[1] > 0.0 {
            nrm = [-nrm[0], -nrm[1]];
        }
        let normal = [real::<T>(nrm[0]), real::<T>(nrm[1])];

        for (x, w, t) in edge_gauss2::<T>(pa, pb) {
            // Barycentric values at the quadrature point.
            let lambda = barycentric_at(&verts, [x[0], x[1]]);
            // <q.n, v> and tau <u, v> boundary terms.
            for i in 0..3 {
                for comp in 0..2 {
                    for j in 0..3 {
                        sys[(6 + i, comp * 3 + j)] += w * normal[comp] * lambda[j] * lambda[i];
                    }
                }
                for j in 0..3 {
                    sys[(6 + i, 6 + j)] += tau * w * lambda[j] * lambda[i];
                }
            }
            for mode in 0..2 {
                let phi = face_basis(len, t, mode);
                let s = 2 * lf + mode;
                // -<m, p.n> on the dual equations.
                for comp in 0..2 {
                    for j in 0..3 {
                        rhs[(comp * 3 + j, s)] -= w * phi * normal[comp] * lambda[j];
                    }
                }
                // tau <m, v> on the flux equations.
                for i in 0..3 {
                    rhs[(6 + i, s)] += tau * w * phi * lambda[i];
                }
            }
        }
    }

    let solution = solve_local(&sys, &rhs).ok_or(Error::SingularLocalSystem { element })?;
    let q_op: SMatrix<T, 6, 6> = solution.fixed_rows::<6>(0).into_owned();
    let u_op: SMatrix<T, 3, 6> = solution.fixed_rows::<3>(6).into_owned();

    // Condensed matrix: (c^-1 Q m, Q mu) + stabilizer.
    let mut mq = SMatrix::<T, 6, 6>::zeros();
    for comp in 0..2 {
        for i in 0..3 {
            for j in 0..3 {
                mq[(comp * 3 + i, comp * 3 + j)] = mass[(i, j)] / coeff;
            }
        }
    }
    let mut a_e = q_op.transpose() * mq * q_op;
    let mut s_e = SMatrix::<T, 6, 6>::zeros();
    for (lf, &_f) in faces.iter().enumerate() {
        let (va, vb) = (tri[lf], tri[(lf + 1) % 3]);
        let (ga, gb) = (va.min(vb), va.max(vb));
        let (pa, pb) = (mesh.vertices[ga], mesh.vertices[gb]);
        let len = face_lengths[lf];
        for (x, w, t) in edge_gauss2::<T>(pa, pb) {
            let lambda = barycentric_at(&verts, [x[0], x[1]]);
            // Row vector mapping local skeletal dofs to (U m - m) at the
            // quadrature point.
            let mut gap = SMatrix::<T, 1, 6>::zeros();
            for s in 0..6 {
                let mut v = T::zero();
                for i in 0..3 {
                    v += lambda[i] * u_op[(i, s)];
                }
                gap[(0, s)] = v;
            }
            for mode in 0..2 {
                gap[(0, 2 * lf + mode)] -= face_basis(len, t, mode);
            }
            s_e += gap.transpose() * gap * (tau * w);
        }
    }
    a_e += s_e;

    Ok(LocalSolverKernel {
        element,
        coeff,
        area,
        faces,
        face_lengths,
        tau: [tau; 3],
        u_op,
        q_op,
        a_e,
        s_e,
    })
}

/// Barycentric coordinates of a point in a triangle.
fn barycentric_at<T: Real>(verts: &[[f64; 2]; 3], x: [T; 2]) -> [T; 3] {
    let area = real::<T>(triangle_area(verts));
    let mut lambda = [T::zero(); 3];
    for i in 0..3 {
        let a = verts[(i + 1) % 3];
        let b = verts[(i + 2) % 3];
        // Signed area of (a, b, x) over the element area.
        let cross = (real::<T>(b[0] - a[0])) * (x[1] - real::<T>(a[1]))
            - (real::<T>(b[1] - a[1])) * (x[0] - real::<T>(a[0]));
        lambda[i] = cross / (area + area);
    }
    lambda
}

/// Equilibrated full-pivot LU solve of the 9x9 local system with one step of
/// iterative refinement. The blocks mix scales (bulk mass ~ h^2, boundary
/// penalty ~ tau h), so plain LU loses digits that the LS4 exactness
/// contract cannot afford.
fn solve_local<T: Real>(
    sys: &SMatrix<T, 9, 9>,
    rhs: &SMatrix<T, 9, 6>,
) -> Option<SMatrix<T, 9, 6>> {
    let mut row_scale = [T::one(); 9];
    let mut col_scale = [T::one(); 9];
    let mut scaled = *sys;
    for _ in 0..2 {
        for r in 0..9 {
            let m = (0..9).map(|c| scaled[(r, c)].abs()).fold(T::zero(), T::max);
            if m > T::zero() {
                let s = T::one() / m;
                for c in 0..9 {
                    scaled[(r, c)] *= s;
                }
                row_scale[r] *= s;
            }
        }
        for c in 0..9 {
            let m = (0..9).map(|r| scaled[(r, c)].abs()).fold(T::zero(), T::max);
            if m > T::zero() {
                let s = T::one() / m;
                for r in 0..9 {
                    scaled[(r, c)] *= s;
                }
                col_scale[c] *= s;
            }
        }
    }
    let lu = scaled.full_piv_lu();
    let solve_one = |b: &SVector<T, 9>| -> Option<SVector<T, 9>> {
        let mut sb = *b;
        for r in 0..9 {
            sb[r] *= row_scale[r];
        }
        let mut y = lu.solve(&sb)?;
        for c in 0..9 {
            y[c] *= col_scale[c];
        }
        // One refinement pass against the unscaled system.
        let resid = b - sys * y;
        let mut sr = resid;
        for r in 0..9 {
            sr[r] *= row_scale[r];
        }
        if let Some(mut dy) = lu.solve(&sr) {
            for c in 0..9 {
                dy[c] *= col_scale[c];
            }
            y += dy;
        }
        Some(y)
    };
    let mut out = SMatrix::<T, 9, 6>::zeros();
    for s in 0..6 {
        let col = solve_one(&rhs.column(s).into_owned())?;
        out.set_column(s, &col);
    }
    Some(out)
}
