//! Transfer operators between the non-nested coarse and fine skeletal
//! spaces.
//!
//! The skeletal spaces of two mesh levels are not nested, so the multiscale
//! construction needs an explicit injection `I_h` (coarse continuous traces
//! into the fine skeleton) and a computable projection `Pi_H` built from four
//! sparse factors:
//!
//! ```text
//! Pi_H = gamma_H . I_avg_H . Pi_L2_H . I_avg_h . U
//! ```
//!
//! `U` reconstructs the bulk, `I_avg_h` averages to continuous `P1` within
//! each coarse element, `Pi_L2_H` projects element-wise onto coarse linears,
//! and `I_avg_H` averages coarse nodal values globally with zero boundary
//! values. The projection's range is spanned by coarse hat traces, so it is
//! stored nodally: one value per interior coarse vertex.

use crate::hdg::{FineSystem, SkeletalDofMap};
use crate::mesh::{MeshHierarchy, MeshLevel};
use crate::quad::{triangle_area, triangle_deg2};
use crate::sparse::{CsrMatrix, DofSpace, SkeletalOperator};
use crate::{real, Real, Result};
use std::collections::HashMap;

/// Nodal basis of the continuous coarse trace space: one hat per interior
/// coarse vertex.
#[derive(Debug, Clone)]
pub struct CoarseNodalBasis {
    /// Interior coarse vertex ids, ascending.
    pub interior_vertices: Vec<usize>,
    /// Per coarse vertex: its node slot, or `None` on the boundary.
    pub vertex_slot: Vec<Option<usize>>,
}

impl CoarseNodalBasis {
    pub fn new(coarse: &MeshLevel) -> Self {
        let interior_vertices: Vec<usize> = (0..coarse.vertices.len())
            .filter(|&v| !coarse.boundary_vertex[v])
            .collect();
        let mut vertex_slot = vec![None; coarse.vertices.len()];
        for (slot, &v) in interior_vertices.iter().enumerate() {
            vertex_slot[v] = Some(slot);
        }
        CoarseNodalBasis {
            interior_vertices,
            vertex_slot,
        }
    }

    pub fn len(&self) -> usize {
        self.interior_vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior_vertices.is_empty()
    }
}

/// The assembled transfer operators with their retained factors.
pub struct TransferOperators<T> {
    /// `I_h`: coarse nodal values to fine skeletal dofs.
    pub injection: SkeletalOperator<T>,
    /// `Pi_H`: fine skeletal dofs to coarse nodal values.
    pub projection: SkeletalOperator<T>,
    /// `U` as a sparse map, fine skeletal dofs to fine bulk dofs.
    pub mat_u: CsrMatrix<T>,
    /// `I_avg_h`: fine bulk to fine bulk, averaging within coarse elements.
    pub avg_fine: CsrMatrix<T>,
    /// `Pi_L2_H`: fine bulk to coarse bulk, element-wise `L2` projection
    /// onto linears.
    pub l2_coarse: CsrMatrix<T>,
    /// `I_avg_H`: coarse bulk to coarse nodal, global vertex averaging with
    /// zero boundary.
    pub avg_coarse: CsrMatrix<T>,
    /// Gram matrix of the coarse-level skeletal product on the nodal hats.
    pub gram: CsrMatrix<T>,
    pub basis: CoarseNodalBasis,
}

impl<T: Real> TransferOperators<T> {
    /// Builds injection, projection, and all factors for a hierarchy whose
    /// fine system is already assembled.
    pub fn build(hier: &MeshHierarchy, fine: &FineSystem<T>) -> Result<Self> {
        let basis = CoarseNodalBasis::new(&hier.coarse);
        let mat_u = build_mat_u(fine);
        let avg_fine = build_avg_fine(hier);
        let l2_coarse = build_l2_coarse(hier);
        let avg_coarse = build_avg_coarse(&hier.coarse, &basis);
        let projection_matrix = avg_coarse
            .matmul(&l2_coarse)
            .matmul(&avg_fine)
            .matmul(&mat_u);
        let injection_matrix = build_injection(hier, &fine.dofmap, &basis);
        let gram = build_gram(&hier.coarse, &basis);
        Ok(TransferOperators {
            injection: SkeletalOperator::new(
                injection_matrix,
                DofSpace::FineSkeletal,
                DofSpace::CoarseNodal,
            ),
            projection: SkeletalOperator::new(
                projection_matrix,
                DofSpace::CoarseNodal,
                DofSpace::FineSkeletal,
            ),
            mat_u,
            avg_fine,
            l2_coarse,
            avg_coarse,
            gram,
            basis,
        })
    }

    /// Applies the kernel-space projector `P_W = Id - I_h Pi_H`.
    pub fn kernel_project(&self, x: &[T]) -> Vec<T> {
        let coarse = self.projection.matrix.matvec(x);
        let back = self.injection.matrix.matvec(&coarse);
        x.iter().zip(&back).map(|(&a, &b)| a - b).collect()
    }

    /// `B = G_H . Pi_H`, the constraint block of corrector saddle systems:
    /// row `v` evaluates `<Pi_H (.), b_v>_H`.
    pub fn constraint_matrix(&self) -> CsrMatrix<T> {
        self.gram.matmul(&self.projection.matrix)
    }
}

/// `U` as a sparse matrix: block rows are the per-element `u_op` kernels.
fn build_mat_u<T: Real>(fine: &FineSystem<T>) -> CsrMatrix<T> {
    let mut triplets = Vec::new();
    for k in &fine.kernels {
        for s in 0..6 {
            let Some(slot) = fine.dofmap.face_slot[k.faces[s / 2]] else {
                continue;
            };
            let col = 2 * slot + s % 2;
            for i in 0..3 {
                let v = k.u_op[(i, s)];
                if v != T::zero() {
                    triplets.push((3 * k.element + i, col, v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(3 * fine.kernels.len(), fine.dofmap.n_dofs, triplets)
}

/// Vertex averaging of the fine bulk within each coarse element. Fine
/// vertices on coarse element boundaries average only over the fine elements
/// inside the owning coarse element, so the output may jump across coarse
/// faces.
fn build_avg_fine<T: Real>(hier: &MeshHierarchy) -> CsrMatrix<T> {
    let n_bulk = 3 * hier.fine.elements.len();
    let mut triplets = Vec::new();
    for fine_list in &hier.coarse_to_fine {
        let mut incidence: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        for &fe in fine_list {
            for (loc, &v) in hier.fine.elements[fe].iter().enumerate() {
                incidence.entry(v).or_default().push((fe, loc));
            }
        }
        for list in incidence.values() {
            let share = T::one() / real::<T>(list.len() as f64);
            for &(e_row, loc_row) in list {
                for &(e_col, loc_col) in list {
                    triplets.push((3 * e_row + loc_row, 3 * e_col + loc_col, share));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n_bulk, n_bulk, triplets)
}

/// Element-wise `L2` projection of a fine bulk field onto coarse linears,
/// in coarse nodal (per-element) representation.
fn build_l2_coarse<T: Real>(hier: &MeshHierarchy) -> CsrMatrix<T> {
    let mut triplets = Vec::new();
    // Inverse of the P1 mass pattern [[2,1,1],[1,2,1],[1,1,2]] is
    // (1/4) [[3,-1,-1],[-1,3,-1],[-1,-1,3]]; with the |E|/12 scale the
    // inverse picks up 12/|E| * 1/4 = 3/|E|.
    let minv_pattern = [[3.0, -1.0, -1.0], [-1.0, 3.0, -1.0], [-1.0, -1.0, 3.0]];
    for (ce, fine_list) in hier.coarse_to_fine.iter().enumerate() {
        let cverts = hier.coarse.element_vertices(ce);
        let area = triangle_area(&cverts);
        for &fe in fine_list {
            let fverts = hier.fine.element_vertices(fe);
            // Moments int_fe b^E_i lambda_j with the exact degree-2 rule.
            let mut moments = [[T::zero(); 3]; 3];
            for (x, w) in triangle_deg2::<T>(&fverts) {
                let lam_c = barycentric(&cverts, x);
                let lam_f = barycentric(&fverts, x);
                for i in 0..3 {
                    for j in 0..3 {
                        moments[i][j] += w * lam_c[i] * lam_f[j];
                    }
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    let mut v = T::zero();
                    for s in 0..3 {
                        v += real::<T>(3.0 * minv_pattern[i][s] / area) * moments[s][j];
                    }
                    if v != T::zero() {
                        triplets.push((3 * ce + i, 3 * fe + j, v));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(
        3 * hier.coarse.elements.len(),
        3 * hier.fine.elements.len(),
        triplets,
    )
}

/// Global coarse vertex averaging with zero boundary values, nodal output.
fn build_avg_coarse<T: Real>(coarse: &MeshLevel, basis: &CoarseNodalBasis) -> CsrMatrix<T> {
    let mut triplets = Vec::new();
    for (slot, &v) in basis.interior_vertices.iter().enumerate() {
        let incident = &coarse.vertex_elements[v];
        let share = T::one() / real::<T>(incident.len() as f64);
        for &e in incident {
            let loc = coarse.elements[e].iter().position(|&w| w == v).unwrap();
            triplets.push((slot, 3 * e + loc, share));
        }
    }
    CsrMatrix::from_triplets(basis.len(), 3 * coarse.elements.len(), triplets)
}

/// Injection: the coarse hat at each interior vertex, evaluated as a
/// continuous `P1` function on the nested fine mesh and expanded exactly in
/// the fine face basis.
fn build_injection<T: Real>(
    hier: &MeshHierarchy,
    fine_dofmap: &SkeletalDofMap,
    basis: &CoarseNodalBasis,
) -> CsrMatrix<T> {
    let mut triplets = Vec::new();
    let twelfth = real::<T>(1.0 / 12.0);
    let half = real::<T>(0.5);
    for (col, &v) in basis.interior_vertices.iter().enumerate() {
        // Face coefficients by overwrite: faces shared between two coarse
        // elements get identical values from both sides because the hat is
        // continuous.
        let mut coeffs: HashMap<usize, (T, T)> = HashMap::new();
        for &ce in &hier.coarse.vertex_elements[v] {
            let cverts = hier.coarse.element_vertices(ce);
            let loc = hier.coarse.elements[ce]
                .iter()
                .position(|&w| w == v)
                .unwrap();
            for &fe in &hier.coarse_to_fine[ce] {
                for &face in &hier.fine.element_faces[fe] {
                    if fine_dofmap.face_slot[face].is_none() {
                        continue;
                    }
                    let (a, b) = hier.fine.faces[face].vertices;
                    let (pa, pb) = (hier.fine.vertices[a], hier.fine.vertices[b]);
                    let len = real::<T>(hier.fine.face_length(face));
                    let ha = barycentric(&cverts, [real::<T>(pa[0]), real::<T>(pa[1])])[loc];
                    let hb = barycentric(&cverts, [real::<T>(pb[0]), real::<T>(pb[1])])[loc];
                    let c0 = len.sqrt() * half * (ha + hb);
                    let c1 = (len * twelfth).sqrt() * (hb - ha);
                    coeffs.insert(face, (c0, c1));
                }
            }
        }
        let mut entries: Vec<(usize, (T, T))> = coeffs.into_iter().collect();
        entries.sort_unstable_by_key(|e| e.0);
        for (face, (c0, c1)) in entries {
            let slot = fine_dofmap.face_slot[face].unwrap();
            if c0 != T::zero() {
                triplets.push((2 * slot, col, c0));
            }
            if c1 != T::zero() {
                triplets.push((2 * slot + 1, col, c1));
            }
        }
    }
    CsrMatrix::from_triplets(fine_dofmap.n_dofs, basis.len(), triplets)
}

/// Gram matrix `G[v, w] = <b_v, b_w>_H` of the hat traces under the
/// coarse-level skeletal product (exact edge integrals of linear products).
fn build_gram<T: Real>(coarse: &MeshLevel, basis: &CoarseNodalBasis) -> CsrMatrix<T> {
    let weight = real::<T>(coarse.product_weight());
    let sixth = real::<T>(1.0 / 6.0);
    let two = T::one() + T::one();
    let mut triplets = Vec::new();
    for e in 0..coarse.elements.len() {
        let tri = coarse.elements[e];
        for lf in 0..3 {
            let (va, vb) = (tri[lf], tri[(lf + 1) % 3]);
            let len = real::<T>(coarse.face_length(coarse.element_faces[e][lf]));
            let scale = weight * len * sixth;
            for (x, y, w) in [
                (va, va, two),
                (vb, vb, two),
                (va, vb, T::one()),
                (vb, va, T::one()),
            ] {
                if let (Some(sx), Some(sy)) = (basis.vertex_slot[x], basis.vertex_slot[y]) {
                    triplets.push((sx, sy, scale * w));
                }
            }
        }
    }
    CsrMatrix::from_triplets(basis.len(), basis.len(), triplets)
}

fn barycentric<T: Real>(verts: &[[f64; 2]; 3], x: [T; 2]) -> [T; 3] {
    let area = real::<T>(triangle_area(verts));
    let mut lam = [T::zero(); 3];
    for i in 0..3 {
        let a = verts[(i + 1) % 3];
        let b = verts[(i + 2) % 3];
        let cross = real::<T>(b[0] - a[0]) * (x[1] - real::<T>(a[1]))
            - real::<T>(b[1] - a[1]) * (x[0] - real::<T>(a[0]));
        lam[i] = cross / (area + area);
    }
    lam
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{CoefficientField, UniformStream};
    use crate::hdg::norms::skeletal_trace_of_p1;
    use crate::hdg::TauRule;
    use crate::mesh::build_hierarchy;

    fn setup(k_c: usize, k_f: usize) -> (MeshHierarchy, FineSystem<f64>, TransferOperators<f64>) {
        let hier = build_hierarchy(k_c, k_c, k_f).unwrap();
        let field = CoefficientField::checkerboard(k_c, 1.0, 10.0).unwrap();
        let fine = FineSystem::build(&hier, &field, TauRule::OverH(100.0)).unwrap();
        let ops = TransferOperators::build(&hier, &fine).unwrap();
        (hier, fine, ops)
    }

    /// Nodal values of a coarse hat on the fine vertex grid (the hat is P1
    /// on the fine mesh by nestedness).
    fn hat_on_fine_vertices(hier: &MeshHierarchy, v: usize) -> Vec<f64> {
        let mut nodal = vec![0.0; hier.fine.vertices.len()];
        for &ce in &hier.coarse.vertex_elements[v] {
            let cverts = hier.coarse.element_vertices(ce);
            let loc = hier.coarse.elements[ce]
                .iter()
                .position(|&w| w == v)
                .unwrap();
            for &fe in &hier.coarse_to_fine[ce] {
                for &fv in &hier.fine.elements[fe] {
                    let p = hier.fine.vertices[fv];
                    nodal[fv] = barycentric(&cverts, [p[0], p[1]])[loc];
                }
            }
        }
        nodal
    }

    #[test]
    fn injection_equals_exact_hat_trace() {
        let (hier, fine, ops) = setup(1, 3);
        assert_eq!(ops.basis.len(), 1);
        let v = ops.basis.interior_vertices[0];
        let nodal = hat_on_fine_vertices(&hier, v);
        let exact = skeletal_trace_of_p1(&hier.fine, &fine.dofmap, &nodal);
        let col = ops.injection.matrix.matvec(&[1.0]);
        let max = nodal.iter().cloned().fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        for (a, b) in col.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn injection_restricted_to_coarse_skeleton_reproduces_coarse_trace() {
        // On fine faces lying on the coarse skeleton, the injected hat trace
        // integrates back to the coarse trace dofs (nestedness).
        let (hier, fine, ops) = setup(2, 3);
        for (col, &v) in ops.basis.interior_vertices.iter().enumerate() {
            let mut unit = vec![0.0; ops.basis.len()];
            unit[col] = 1.0;
            let injected = ops.injection.matrix.matvec(&unit);
            // For each coarse face: sum over its fine pieces of
            // int_F b_v ds recovered from the c0 coefficients.
            let mut per_coarse_face = vec![0.0; hier.coarse.faces.len()];
            for (slot, &ff) in fine.dofmap.interior_faces.iter().enumerate() {
                if let Some(cf) = hier.fine_face_on_coarse_skeleton[ff] {
                    let len = hier.fine.face_length(ff);
                    per_coarse_face[cf] += injected[2 * slot] * len.sqrt();
                }
            }
            for cf in 0..hier.coarse.faces.len() {
                let (a, b) = hier.coarse.faces[cf].vertices;
                if hier.coarse.boundary_face[cf] {
                    continue;
                }
                let ha = if a == v { 1.0 } else { 0.0 };
                let hb = if b == v { 1.0 } else { 0.0 };
                let exact = hier.coarse.face_length(cf) * 0.5 * (ha + hb);
                assert!(
                    (per_coarse_face[cf] - exact).abs() < 1e-13,
                    "face {cf}: {} vs {exact}",
                    per_coarse_face[cf]
                );
            }
        }
    }

    #[test]
    fn projection_of_injection_is_identity() {
        for (kc, kf) in [(1, 2), (1, 3), (2, 4)] {
            let (_hier, _fine, ops) = setup(kc, kf);
            let n = ops.basis.len();
            for col in 0..n {
                let mut unit = vec![0.0; n];
                unit[col] = 1.0;
                let injected = ops.injection.matrix.matvec(&unit);
                let back = ops.projection.matrix.matvec(&injected);
                for (i, &v) in back.iter().enumerate() {
                    let expect = if i == col { 1.0 } else { 0.0 };
                    assert!(
                        (v - expect).abs() < 1e-12,
                        "({kc},{kf}) hat {col} entry {i}: {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn projection_fixes_random_coarse_p1_traces() {
        // gamma_h of a hat combination projects back to its nodal values:
        // all four factors fix continuous coarse P1 functions.
        let (hier, fine, ops) = setup(2, 4);
        let mut stream = UniformStream::new(17);
        let coeffs: Vec<f64> = stream.vector(ops.basis.len());
        let mut fine_nodal = vec![0.0; hier.fine.vertices.len()];
        for (slot, &v) in ops.basis.interior_vertices.iter().enumerate() {
            let hat = hat_on_fine_vertices(&hier, v);
            for (i, h) in hat.iter().enumerate() {
                fine_nodal[i] += coeffs[slot] * h;
            }
        }
        let m = skeletal_trace_of_p1(&hier.fine, &fine.dofmap, &fine_nodal);
        let projected = ops.projection.matrix.matvec(&m);
        for (slot, &c) in coeffs.iter().enumerate() {
            assert!(
                (projected[slot] - c).abs() < 1e-12,
                "slot {slot}: {} vs {c}",
                projected[slot]
            );
        }
    }

    /// Straightforward dense re-implementation of the projection pipeline
    /// with nested loops and nalgebra solves.
    fn dense_projection_oracle(
        hier: &MeshHierarchy,
        fine: &FineSystem<f64>,
        basis: &CoarseNodalBasis,
        m: &[f64],
    ) -> Vec<f64> {
        let bulk = fine.apply_u(m);
        let nf = hier.fine.elements.len();
        let mut avg = vec![0.0; 3 * nf];
        for list in hier.coarse_to_fine.iter() {
            for &fe in list {
                for (loc, &v) in hier.fine.elements[fe].iter().enumerate() {
                    let mut acc = 0.0;
                    let mut count = 0;
                    for &other in list {
                        if let Some(oloc) =
                            hier.fine.elements[other].iter().position(|&w| w == v)
                        {
                            acc += bulk.values[3 * other + oloc];
                            count += 1;
                        }
                    }
                    avg[3 * fe + loc] = acc / count as f64;
                }
            }
        }
        let nc = hier.coarse.elements.len();
        let mut coarse_bulk = vec![0.0; 3 * nc];
        for ce in 0..nc {
            let cverts = hier.coarse.element_vertices(ce);
            let area = triangle_area(&cverts);
            let mut mass = nalgebra::Matrix3::<f64>::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    mass[(i, j)] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                }
            }
            let mut rhs = nalgebra::Vector3::<f64>::zeros();
            for &fe in &hier.coarse_to_fine[ce] {
                let fverts = hier.fine.element_vertices(fe);
                for (x, w) in triangle_deg2::<f64>(&fverts) {
                    let lc = barycentric(&cverts, x);
                    let lf = barycentric(&fverts, x);
                    let mut val = 0.0;
                    for j in 0..3 {
                        val += lf[j] * avg[3 * fe + j];
                    }
                    for i in 0..3 {
                        rhs[i] += w * lc[i] * val;
                    }
                }
            }
            let sol = mass.lu().solve(&rhs).unwrap();
            for i in 0..3 {
                coarse_bulk[3 * ce + i] = sol[i];
            }
        }
        let mut out = vec![0.0; basis.len()];
        for (slot, &v) in basis.interior_vertices.iter().enumerate() {
            let incident = &hier.coarse.vertex_elements[v];
            let mut acc = 0.0;
            for &e in incident {
                let loc = hier.coarse.elements[e]
                    .iter()
                    .position(|&w| w == v)
                    .unwrap();
                acc += coarse_bulk[3 * e + loc];
            }
            out[slot] = acc / incident.len() as f64;
        }
        out
    }

    #[test]
    fn factor_composition_matches_dense_oracle() {
        let (hier, fine, ops) = setup(1, 2);
        let mut stream = UniformStream::new(23);
        for _ in 0..5 {
            let m: Vec<f64> = stream.vector(fine.dofmap.n_dofs);
            let fast = ops.projection.matrix.matvec(&m);
            let slow = dense_projection_oracle(&hier, &fine, &ops.basis, &m);
            let scale = slow.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn kernel_projector_idempotent_and_annihilated() {
        let (_hier, fine, ops) = setup(2, 3);
        let mut stream = UniformStream::new(29);
        for _ in 0..10 {
            let x: Vec<f64> = stream.vector(fine.dofmap.n_dofs);
            let px = ops.kernel_project(&x);
            let ppx = ops.kernel_project(&px);
            let scale = px.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (a, b) in px.iter().zip(&ppx) {
                assert!((a - b).abs() < 1e-12 * scale);
            }
            for v in ops.projection.matrix.matvec(&px) {
                assert!(v.abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn complement_rank_is_coarse_dimension() {
        // rank(Id - P_W) = rank(I_h Pi_H) = interior coarse vertex count.
        for (kc, kf) in [(1, 2), (2, 3)] {
            let (_hier, _fine, ops) = setup(kc, kf);
            let dense = ops
                .injection
                .matrix
                .matmul(&ops.projection.matrix)
                .to_dense();
            let svd = dense.svd(false, false);
            let smax = svd.singular_values.max();
            let rank = svd
                .singular_values
                .iter()
                .filter(|&&s| s > 1e-10 * smax)
                .count();
            assert_eq!(rank, ops.basis.len(), "kc={kc} kf={kf}");
        }
    }

    #[test]
    fn gram_matches_quadrature_oracle() {
        let (hier, _fine, ops) = setup(2, 3);
        let coarse = &hier.coarse;
        let weight = coarse.product_weight();
        let dense = ops.gram.to_dense();
        for (sv, &v) in ops.basis.interior_vertices.iter().enumerate() {
            for (sw, &w) in ops.basis.interior_vertices.iter().enumerate() {
                let mut acc = 0.0;
                for e in 0..coarse.elements.len() {
                    let tri = coarse.elements[e];
                    for lf in 0..3 {
                        let (va, vb) = (tri[lf], tri[(lf + 1) % 3]);
                        let (pa, pb) = (coarse.vertices[va], coarse.vertices[vb]);
                        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
                        let hv = |vt: usize| if vt == v { 1.0 } else { 0.0 };
                        let hw = |vt: usize| if vt == w { 1.0 } else { 0.0 };
                        let prod = |s: f64| {
                            let bv = hv(va) * (1.0 - s) + hv(vb) * s;
                            let bw = hw(va) * (1.0 - s) + hw(vb) * s;
                            bv * bw
                        };
                        // Simpson, exact for the quadratic integrand.
                        acc += weight * len * (prod(0.0) + 4.0 * prod(0.5) + prod(1.0)) / 6.0;
                    }
                }
                assert!(
                    (dense[(sv, sw)] - acc).abs() < 1e-14,
                    "({v},{w}): {} vs {acc}",
                    dense[(sv, sw)]
                );
            }
        }
    }
}
