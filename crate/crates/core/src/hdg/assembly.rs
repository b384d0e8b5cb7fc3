//! Global skeletal assembly and the condensed fine system.

use super::fields::{BulkField, FluxField};
use super::local::{build_local_kernels, LocalSolverKernel, TauRule};
use super::SkeletalDofMap;
use crate::coefficient::CoefficientField;
use crate::mesh::{MeshHierarchy, MeshLevel};
use crate::quad::triangle_deg4;
use crate::solver::SparseCholesky;
use crate::sparse::{CsrMatrix, DofSpace, SkeletalOperator};
use crate::{Error, Real, Result};
use nalgebra::SVector;
use rayon::prelude::*;
use std::sync::OnceLock;

/// Gathers the six local skeletal dofs of an element (zero on boundary
/// faces).
#[inline]
pub fn gather_local<T: Real>(
    kernel: &LocalSolverKernel<T>,
    dofmap: &SkeletalDofMap,
    global: &[T],
) -> SVector<T, 6> {
    let mut out = SVector::<T, 6>::zeros();
    for lf in 0..3 {
        if let Some(slot) = dofmap.face_slot[kernel.faces[lf]] {
            out[2 * lf] = global[2 * slot];
            out[2 * lf + 1] = global[2 * slot + 1];
        }
    }
    out
}

/// Assembles the condensed bilinear form `K = sum_e scatter(a_e)` over the
/// interior skeletal dofs.
pub fn assemble_a<T: Real>(
    kernels: &[LocalSolverKernel<T>],
    dofmap: &SkeletalDofMap,
) -> SkeletalOperator<T> {
    let triplets: Vec<(usize, usize, T)> = kernels
        .par_iter()
        .map(|k| {
            let mut local = Vec::with_capacity(36);
            for lr in 0..6 {
                let Some(sr) = dofmap.face_slot[k.faces[lr / 2]] else {
                    continue;
                };
                let r = 2 * sr + lr % 2;
                for lc in 0..6 {
                    let Some(sc) = dofmap.face_slot[k.faces[lc / 2]] else {
                        continue;
                    };
                    let c = 2 * sc + lc % 2;
                    local.push((r, c, k.a_e[(lr, lc)]));
                }
            }
            local
        })
        .flatten()
        .collect();
    let matrix = CsrMatrix::from_triplets(dofmap.n_dofs, dofmap.n_dofs, triplets);
    SkeletalOperator::symmetric(matrix, dofmap.space)
}

/// Assembles the load vector `b[i] = sum_e (f, U_e phi_i)_e` with a
/// degree-4 bulk rule.
pub fn assemble_rhs<T: Real>(
    mesh: &MeshLevel,
    kernels: &[LocalSolverKernel<T>],
    dofmap: &SkeletalDofMap,
    f: impl Fn(f64, f64) -> T + Sync,
) -> Vec<T> {
    let contributions: Vec<(usize, T)> = kernels
        .par_iter()
        .map(|k| {
            let verts = mesh.element_vertices(k.element);
            // Moments (f, lambda_i)_e of the nodal bulk basis.
            let mut moments = SVector::<T, 3>::zeros();
            for (x, w) in triangle_deg4::<T>(&verts) {
                let lam = barycentric(&verts, x);
                let fx = f(
                    x[0].to_f64().unwrap_or(f64::NAN),
                    x[1].to_f64().unwrap_or(f64::NAN),
                );
                for i in 0..3 {
                    moments[i] += w * fx * lam[i];
                }
            }
            let local = k.u_op.transpose() * moments;
            let mut out = Vec::with_capacity(6);
            for s in 0..6 {
                if let Some(slot) = dofmap.face_slot[k.faces[s / 2]] {
                    out.push((2 * slot + s % 2, local[s]));
                }
            }
            out
        })
        .flatten()
        .collect();
    let mut b = vec![T::zero(); dofmap.n_dofs];
    // Deterministic accumulation: sort by dof index, then element order.
    let mut sorted = contributions;
    sorted.sort_by_key(|&(i, _)| i);
    for (i, v) in sorted {
        b[i] += v;
    }
    b
}

fn barycentric<T: Real>(verts: &[[f64; 2]; 3], x: [T; 2]) -> [T; 3] {
    let area = crate::real::<T>(crate::quad::triangle_area(verts));
    let mut lam = [T::zero(); 3];
    for i in 0..3 {
        let a = verts[(i + 1) % 3];
        let b = verts[(i + 2) % 3];
        let cross = crate::real::<T>(b[0] - a[0]) * (x[1] - crate::real::<T>(a[1]))
            - crate::real::<T>(b[1] - a[1]) * (x[0] - crate::real::<T>(a[0]));
        lam[i] = cross / (area + area);
    }
    lam
}

/// Applies the primal local solvers: skeletal vector to bulk `P1` field.
pub fn apply_u<T: Real>(
    kernels: &[LocalSolverKernel<T>],
    dofmap: &SkeletalDofMap,
    m: &[T],
) -> BulkField<T> {
    let mut values = vec![T::zero(); 3 * kernels.len()];
    for k in kernels {
        let local = k.u_op * gather_local(k, dofmap, m);
        for i in 0..3 {
            values[3 * k.element + i] = local[i];
        }
    }
    BulkField { values }
}

/// Applies the dual local solvers: skeletal vector to bulk `P1^2` field.
pub fn apply_q<T: Real>(
    kernels: &[LocalSolverKernel<T>],
    dofmap: &SkeletalDofMap,
    m: &[T],
) -> FluxField<T> {
    let mut values = vec![T::zero(); 6 * kernels.len()];
    for k in kernels {
        let local = k.q_op * gather_local(k, dofmap, m);
        for i in 0..6 {
            values[6 * k.element + i] = local[i];
        }
    }
    FluxField { values }
}

/// The condensed system of one mesh level: kernels, dof map, stiffness, and
/// a lazily computed sparse factorization.
pub struct FineSystem<T: Real> {
    pub mesh: MeshLevel,
    pub dofmap: SkeletalDofMap,
    pub kernels: Vec<LocalSolverKernel<T>>,
    pub stiffness: SkeletalOperator<T>,
    pub tau: TauRule<T>,
    dof_coords: Vec<[f64; 2]>,
    factor: OnceLock<SparseCholesky<T>>,
}

impl<T: Real> FineSystem<T> {
    /// Builds the fine-level system of a hierarchy for a resolved
    /// coefficient field.
    pub fn build(
        hier: &MeshHierarchy,
        field: &CoefficientField<T>,
        tau: TauRule<T>,
    ) -> Result<Self> {
        let mesh = hier.fine.clone();
        // Resolve per-element values up front so kernel construction can
        // run in parallel without touching the hierarchy.
        let mut coeff = Vec::with_capacity(mesh.elements.len());
        for e in 0..mesh.elements.len() {
            coeff.push(field.value_on_fine_element(hier, e)?);
        }
        Self::build_on_level(mesh, move |e| coeff[e], tau)
    }

    /// Builds the condensed system on an arbitrary level with an explicit
    /// per-element coefficient. Used for the fine system and for the naive
    /// coarse comparison solver.
    pub fn build_on_level(
        mesh: MeshLevel,
        coeff_of: impl Fn(usize) -> T + Sync,
        tau: TauRule<T>,
    ) -> Result<Self> {
        let space = DofSpace::FineSkeletal;
        let dofmap = SkeletalDofMap::new(&mesh, space);
        let kernels = build_local_kernels(&mesh, coeff_of, tau)?;
        let stiffness = assemble_a(&kernels, &dofmap);
        let dof_coords = dofmap.dof_coords(&mesh);
        Ok(FineSystem {
            mesh,
            dofmap,
            kernels,
            stiffness,
            tau,
            dof_coords,
            factor: OnceLock::new(),
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs
    }

    /// The sparse Cholesky factor of the stiffness matrix, computed on first
    /// use.
    pub fn cholesky(&self) -> Result<&SparseCholesky<T>> {
        if self.factor.get().is_none() {
            let chol = SparseCholesky::new(&self.stiffness.matrix, &self.dof_coords)?;
            let _ = self.factor.set(chol);
        }
        Ok(self.factor.get().expect("factor just set"))
    }

    /// Direct solve of `K m = b` to the requested relative residual.
    ///
    /// The sparse factorization is the primary path; if its residual misses
    /// the target the preconditioned conjugate gradient fallback polishes the
    /// solution under the same contract.
    pub fn solve_reference(&self, b: &[T], tol: T) -> Result<Vec<T>> {
        let norm_b = l2(b);
        if norm_b == T::zero() {
            return Ok(vec![T::zero(); b.len()]);
        }
        let chol = self.cholesky()?;
        let mut m = chol.solve(b);
        let mut residual = self.residual(&m, b) / norm_b;
        if residual > tol {
            // One refinement step, then CG polish if still above target.
            let r = self.residual_vector(&m, b);
            let dm = chol.solve(&r);
            for i in 0..m.len() {
                m[i] += dm[i];
            }
            residual = self.residual(&m, b) / norm_b;
        }
        if residual > tol {
            let r = self.residual_vector(&m, b);
            let (dm, _) =
                crate::solver::conjugate_gradient(&self.stiffness.matrix, &r, tol, 20_000)?;
            for i in 0..m.len() {
                m[i] += dm[i];
            }
            residual = self.residual(&m, b) / norm_b;
        }
        if residual > tol {
            return Err(Error::SolverBreakdown {
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(m)
    }

    fn residual_vector(&self, m: &[T], b: &[T]) -> Vec<T> {
        let km = self.stiffness.matrix.matvec(m);
        (0..b.len()).map(|i| b[i] - km[i]).collect()
    }

    fn residual(&self, m: &[T], b: &[T]) -> T {
        l2(&self.residual_vector(m, b))
    }

    /// Energy norm `sqrt(m^T K m)`.
    pub fn energy_norm(&self, m: &[T]) -> T {
        let km = self.stiffness.matrix.matvec(m);
        m.iter()
            .zip(&km)
            .map(|(&a, &b)| a * b)
            .sum::<T>()
            .max(T::zero())
            .sqrt()
    }

    /// Energy norm restricted to a set of elements (sum of element-kernel
    /// energies).
    pub fn energy_norm_on_elements(&self, m: &[T], elements: &[usize]) -> T {
        let mut acc = T::zero();
        for &e in elements {
            let k = &self.kernels[e];
            let d = gather_local(k, &self.dofmap, m);
            acc += k.energy(&d);
        }
        acc.max(T::zero()).sqrt()
    }

    /// Restriction of the bilinear form to the fine elements inside one
    /// coarse element: `y += sum_{e in E} scatter(a_e gather(x))`.
    pub fn apply_restricted(&self, fine_elements: &[usize], x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dofmap.n_dofs];
        for &e in fine_elements {
            let k = &self.kernels[e];
            let local = k.a_e * gather_local(k, &self.dofmap, x);
            for s in 0..6 {
                if let Some(slot) = self.dofmap.face_slot[k.faces[s / 2]] {
                    y[2 * slot + s % 2] += local[s];
                }
            }
        }
        y
    }

    pub fn apply_u(&self, m: &[T]) -> BulkField<T> {
        apply_u(&self.kernels, &self.dofmap, m)
    }

    pub fn apply_q(&self, m: &[T]) -> FluxField<T> {
        apply_q(&self.kernels, &self.dofmap, m)
    }
}

fn l2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}
