//! LDG-H local solvers, static condensation, and the fine skeletal system.
//!
//! Unknowns live on mesh faces: two dofs per interior face, the coefficients
//! of an orthonormal basis pair in face arclength. Per element, local solvers
//! map the six adjacent skeletal dofs to the bulk primal (`P1`) and dual
//! (`P1^2`) approximations; eliminating the bulk yields a 6x6 condensed
//! element matrix whose scatter is the global skeletal bilinear form.

pub mod assembly;
pub mod fields;
pub mod local;
pub mod norms;

pub use assembly::{assemble_a, assemble_rhs, FineSystem};
pub use fields::{BulkField, FluxField};
pub use local::{build_local_kernels, LocalSolverKernel, TauRule};

use crate::mesh::MeshLevel;
use crate::sparse::DofSpace;

/// Dof enumeration for one skeletal level: two dofs per interior face,
/// boundary faces eliminated (homogeneous Dirichlet trace).
#[derive(Debug, Clone)]
pub struct SkeletalDofMap {
    pub space: DofSpace,
    /// Interior faces in ascending face id order.
    pub interior_faces: Vec<usize>,
    /// Per face: its position among interior faces, or `None` on the
    /// boundary.
    pub face_slot: Vec<Option<usize>>,
    /// Total interior dof count, `2 * interior_faces.len()`.
    pub n_dofs: usize,
}

impl SkeletalDofMap {
    pub fn new(mesh: &MeshLevel, space: DofSpace) -> Self {
        let interior_faces: Vec<usize> = (0..mesh.faces.len())
            .filter(|&f| !mesh.boundary_face[f])
            .collect();
        let mut face_slot = vec![None; mesh.faces.len()];
        for (slot, &f) in interior_faces.iter().enumerate() {
            face_slot[f] = Some(slot);
        }
        let n_dofs = 2 * interior_faces.len();
        SkeletalDofMap {
            space,
            interior_faces,
            face_slot,
            n_dofs,
        }
    }

    /// Global dof id of mode `mode` on face `face`, if the face is interior.
    #[inline]
    pub fn dof(&self, face: usize, mode: usize) -> Option<usize> {
        debug_assert!(mode < 2);
        self.face_slot[face].map(|slot| 2 * slot + mode)
    }

    /// Face and mode of a dof id.
    #[inline]
    pub fn face_of_dof(&self, dof: usize) -> (usize, usize) {
        (self.interior_faces[dof / 2], dof % 2)
    }

    /// Representative coordinates per dof (face midpoints), used by the
    /// nested-dissection ordering.
    pub fn dof_coords(&self, mesh: &MeshLevel) -> Vec<[f64; 2]> {
        let mut coords = Vec::with_capacity(self.n_dofs);
        for &f in &self.interior_faces {
            let mid = mesh.face_midpoint(f);
            coords.push(mid);
            coords.push(mid);
        }
        coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshLevel;

    #[test]
    fn dof_count_is_twice_interior_faces() {
        let mesh = MeshLevel::build(2);
        let map = SkeletalDofMap::new(&mesh, DofSpace::FineSkeletal);
        assert_eq!(map.n_dofs, 2 * mesh.interior_face_count());
        // Mask and offsets are consistent.
        for (slot, &f) in map.interior_faces.iter().enumerate() {
            assert_eq!(map.face_slot[f], Some(slot));
            assert_eq!(map.dof(f, 0), Some(2 * slot));
            assert_eq!(map.dof(f, 1), Some(2 * slot + 1));
            assert_eq!(map.face_of_dof(2 * slot), (f, 0));
        }
        for f in 0..mesh.faces.len() {
            if mesh.boundary_face[f] {
                assert_eq!(map.dof(f, 0), None);
            }
        }
    }
}
