//! Mesh-dependent skeletal scalar products and norms.
//!
//! The product is `<m, mu>_* = sum_E (|E| / |dE|) int_dE m mu`; interior
//! faces accumulate from both adjacent elements. With the orthonormal face
//! basis, face integrals of two skeletal functions reduce to dot products of
//! their coefficient pairs.

use super::fields::BulkField;
use super::local::{face_basis, LocalSolverKernel};
use super::SkeletalDofMap;
use crate::mesh::MeshLevel;
use crate::quad::edge_gauss2;
use crate::{real, Error, Real, Result};

/// `<m, mu>_*` on the level of `mesh`. Checks the dof-space tags.
pub fn skeletal_product<T: Real>(
    mesh: &MeshLevel,
    dofmap: &SkeletalDofMap,
    m: &[T],
    mu: &[T],
) -> Result<T> {
    if m.len() != dofmap.n_dofs || mu.len() != dofmap.n_dofs {
        return Err(Error::LevelMismatch {
            expected: dofmap.space.name(),
            got: "vector of different length",
        });
    }
    let weight = real::<T>(mesh.product_weight());
    let mut acc = T::zero();
    for (slot, &f) in dofmap.interior_faces.iter().enumerate() {
        // Both adjacent elements contribute the same weight on this uniform
        // mesh family.
        let sides = real::<T>(if mesh.boundary_face[f] { 1.0 } else { 2.0 });
        acc += weight
            * sides
            * (m[2 * slot] * mu[2 * slot] + m[2 * slot + 1] * mu[2 * slot + 1]);
    }
    Ok(acc)
}

/// `||m||_*`.
pub fn skeletal_norm<T: Real>(mesh: &MeshLevel, dofmap: &SkeletalDofMap, m: &[T]) -> T {
    skeletal_product(mesh, dofmap, m, m)
        .expect("matching dof map")
        .max(T::zero())
        .sqrt()
}

/// Local norm `||m||_{*,omega}` over a set of elements: only the element
/// boundary integrals of the listed elements are accumulated.
pub fn skeletal_norm_on_elements<T: Real>(
    mesh: &MeshLevel,
    dofmap: &SkeletalDofMap,
    m: &[T],
    elements: &[usize],
) -> T {
    let weight = real::<T>(mesh.product_weight());
    let mut acc = T::zero();
    for &e in elements {
        for &f in &mesh.element_faces[e] {
            if let Some(slot) = dofmap.face_slot[f] {
                acc += weight * (m[2 * slot] * m[2 * slot] + m[2 * slot + 1] * m[2 * slot + 1]);
            }
        }
    }
    acc.max(T::zero()).sqrt()
}

/// `||U m - m||_*`-type norm: the trace gap between a bulk field and a
/// skeletal vector, accumulated per element boundary.
pub fn trace_gap_norm<T: Real>(
    mesh: &MeshLevel,
    dofmap: &SkeletalDofMap,
    kernels: &[LocalSolverKernel<T>],
    bulk: &BulkField<T>,
    m: &[T],
) -> T {
    trace_gap_norm_on(mesh, dofmap, kernels, bulk, m, None)
}

/// Same as [`trace_gap_norm`] but restricted to listed elements.
pub fn trace_gap_norm_on<T: Real>(
    mesh: &MeshLevel,
    dofmap: &SkeletalDofMap,
    kernels: &[LocalSolverKernel<T>],
    bulk: &BulkField<T>,
    m: &[T],
    elements: Option<&[usize]>,
) -> T {
    let weight = real::<T>(mesh.product_weight());
    let all: Vec<usize>;
    let iter: &[usize] = match elements {
        Some(list) => list,
        None => {
            all = (0..mesh.elements.len()).collect();
            &all
        }
    };
    let mut acc = T::zero();
    for &e in iter {
        let k = &kernels[e];
        let tri = mesh.elements[e];
        for lf in 0..3 {
            let (va, vb) = (tri[lf], tri[(lf + 1) % 3]);
            let (ga, gb) = (va.min(vb), va.max(vb));
            let (pa, pb) = (mesh.vertices[ga], mesh.vertices[gb]);
            let len = k.face_lengths[lf];
            let slot = dofmap.face_slot[k.faces[lf]];
            for (x, w, t) in edge_gauss2::<T>(pa, pb) {
                // Trace of the bulk P1 at the quadrature point.
                let lam = barycentric_at(mesh, e, x);
                let mut uval = T::zero();
                for i in 0..3 {
                    uval += lam[i] * bulk.values[3 * e + i];
                }
                let mut mval = T::zero();
                if let Some(slot) = slot {
                    for mode in 0..2 {
                        mval += m[2 * slot + mode] * face_basis(len, t, mode);
                    }
                }
                let gap = uval - mval;
                acc += weight * w * gap * gap;
            }
        }
    }
    acc.max(T::zero()).sqrt()
}

/// Skeletal norm applied to a bulk function: `sum_E w_E int_dE u|_E^2`.
pub fn bulk_trace_norm<T: Real>(mesh: &MeshLevel, bulk: &BulkField<T>) -> T {
    let weight = real::<T>(mesh.product_weight());
    let mut acc = T::zero();
    for e in 0..mesh.elements.len() {
        let tri = mesh.elements[e];
        for lf in 0..3 {
            let (va, vb) = (tri[lf], tri[(lf + 1) % 3]);
            let (pa, pb) = (mesh.vertices[va.min(vb)], mesh.vertices[va.max(vb)]);
            for (x, w, _) in edge_gauss2::<T>(pa, pb) {
                let lam = barycentric_at(mesh, e, x);
                let mut uval = T::zero();
                for i in 0..3 {
                    uval += lam[i] * bulk.values[3 * e + i];
                }
                acc += weight * w * uval * uval;
            }
        }
    }
    acc.max(T::zero()).sqrt()
}

/// Face-wise `L2` projection of a point function onto the skeletal space
/// (two-point Gauss per face, exact for traces of cubics).
pub fn skeletal_from_fn<T: Real>(
    mesh: &MeshLevel,
    dofmap: &SkeletalDofMap,
    f: impl Fn(f64, f64) -> T,
) -> Vec<T> {
    let mut out = vec![T::zero(); dofmap.n_dofs];
    for (slot, &face) in dofmap.interior_faces.iter().enumerate() {
        let (a, b) = mesh.faces[face].vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = real::<T>(mesh.face_length(face));
        for (x, w, t) in edge_gauss2::<T>(pa, pb) {
            let fx = f(
                x[0].to_f64().unwrap_or(f64::NAN),
                x[1].to_f64().unwrap_or(f64::NAN),
            );
            for mode in 0..2 {
                out[2 * slot + mode] += w * fx * face_basis(len, t, mode);
            }
        }
    }
    out
}

/// Exact trace `gamma_h w` of a continuous `P1` function given by vertex
/// values.
pub fn skeletal_trace_of_p1<T: Real>(
    mesh: &MeshLevel,
    dofmap: &SkeletalDofMap,
    nodal: &[T],
) -> Vec<T> {
    let mut out = vec![T::zero(); dofmap.n_dofs];
    let half = real::<T>(0.5);
    for (slot, &face) in dofmap.interior_faces.iter().enumerate() {
        let (a, b) = mesh.faces[face].vertices;
        let len = real::<T>(mesh.face_length(face));
        let (wa, wb) = (nodal[a], nodal[b]);
        out[2 * slot] = len.sqrt() * half * (wa + wb);
        out[2 * slot + 1] = (len / real::<T>(12.0)).sqrt() * (wb - wa);
    }
    out
}

fn barycentric_at<T: Real>(mesh: &MeshLevel, e: usize, x: [T; 2]) -> [T; 3] {
    let verts = mesh.element_vertices(e);
    let area = real::<T>(crate::quad::triangle_area(&verts));
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
    use crate::coefficient::UniformStream;
    use crate::sparse::DofSpace;

    #[test]
    fn product_is_symmetric() {
        let mesh = MeshLevel::build(2);
        let dofmap = SkeletalDofMap::new(&mesh, DofSpace::FineSkeletal);
        let mut stream = UniformStream::new(3);
        for _ in 0..10 {
            let m: Vec<f64> = stream.vector(dofmap.n_dofs);
            let mu: Vec<f64> = stream.vector(dofmap.n_dofs);
            let a = skeletal_product(&mesh, &dofmap, &m, &mu).unwrap();
            let b = skeletal_product(&mesh, &dofmap, &mu, &m).unwrap();
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn unit_trace_on_one_element_has_local_norm_area() {
        // m = 1 on the faces of a single element E: the local norm on E is
        // |E| / |dE| * |dE| = |E|; the global product also collects the
        // neighbor-side contributions of the shared faces.
        let mesh = MeshLevel::build(2);
        let dofmap = SkeletalDofMap::new(&mesh, DofSpace::FineSkeletal);
        // Pick an element with no boundary faces.
        let e = (0..mesh.elements.len())
            .find(|&e| {
                mesh.element_faces[e]
                    .iter()
                    .all(|&f| !mesh.boundary_face[f])
            })
            .unwrap();
        let mut m = vec![0.0f64; dofmap.n_dofs];
        for &f in &mesh.element_faces[e] {
            let slot = dofmap.face_slot[f].unwrap();
            let len = mesh.face_length(f);
            // Coefficients of the constant 1 on the face.
            m[2 * slot] = len.sqrt();
        }
        let h = mesh.mesh_size();
        let area = 0.5 * h * h;
        let local = skeletal_norm_on_elements(&mesh, &dofmap, &m, &[e]);
        assert!((local * local - area).abs() < 1e-14);
        // Global: each neighbor contributes w * len(face) extra; here that
        // doubles the value.
        let global = skeletal_product(&mesh, &dofmap, &m, &m).unwrap();
        assert!((global - 2.0 * area).abs() < 1e-14);
    }

    #[test]
    fn projection_reproduces_p1_traces() {
        // skeletal_from_fn on an affine function agrees with the exact
        // trace formula.
        let mesh = MeshLevel::build(3);
        let dofmap = SkeletalDofMap::new(&mesh, DofSpace::FineSkeletal);
        let w = |x: f64, y: f64| 0.3 * x - 1.7 * y + 0.25;
        let projected = skeletal_from_fn(&mesh, &dofmap, |x, y| w(x, y));
        let nodal: Vec<f64> = mesh.vertices.iter().map(|p| w(p[0], p[1])).collect();
        let exact = skeletal_trace_of_p1(&mesh, &dofmap, &nodal);
        for (a, b) in projected.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn hat_trace_norm_matches_direct_quadrature() {
        // ||gamma_h(hat)||_h computed through the dof coefficients vs an
        // independent face-wise quadrature of the hat itself.
        let mesh = MeshLevel::build(2);
        let dofmap = SkeletalDofMap::new(&mesh, DofSpace::FineSkeletal);
        let v0 = (0..mesh.vertices.len())
            .find(|&v| !mesh.boundary_vertex[v])
            .unwrap();
        let mut nodal = vec![0.0f64; mesh.vertices.len()];
        nodal[v0] = 1.0;
        let m = skeletal_trace_of_p1(&mesh, &dofmap, &nodal);
        let norm = skeletal_norm(&mesh, &dofmap, &m);

        // Oracle: sum over elements and their faces of w * int (hat)^2 with
        // Simpson on each face (exact for the quadratic integrand).
        let weight = mesh.product_weight();
        let mut acc = 0.0;
        for e in 0..mesh.elements.len() {
            let tri = mesh.elements[e];
            for lf in 0..3 {
                let (va, vb) = (tri[lf], tri[(lf + 1) % 3]);
                if mesh.boundary_face[mesh.element_faces[e][lf]] {
                    continue;
                }
                let (pa, pb) = (mesh.vertices[va], mesh.vertices[vb]);
                let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
                let (ha, hb) = (nodal[va], nodal[vb]);
                let hm = 0.5 * (ha + hb);
                acc += weight * len * (ha * ha + 4.0 * hm * hm + hb * hb) / 6.0;
            }
        }
        assert!((norm * norm - acc).abs() < 1e-12, "{} vs {}", norm * norm, acc);
    }
}
