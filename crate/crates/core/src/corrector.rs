//! Element corrector saddle problems and the multiscale basis.
//!
//! For a coarse element `E` and a coarse hat `b_i`, the corrector solves
//!
//! ```text
//! a(C, eta) + <lambda, Pi_H eta>_H = a_E(I_h b_i, eta)
//! <Pi_H C, mu>_H                  = 0
//! ```
//!
//! over the fine skeletal dofs interior to the patch `N^l(E)` (zero trace on
//! the patch boundary) and the coarse hats at patch-interior vertices. The
//! ideal variant uses the whole domain. Patches with identical element sets
//! share one factorization; correctors of the three hats of an element share
//! their patch solver.

use crate::hdg::{FineSystem, TauRule};
use crate::mesh::{patch, MeshHierarchy, Patch};
use crate::solver::SchurSaddle;
use crate::sparse::CsrMatrix;
use crate::transfer::TransferOperators;
use crate::{real, Error, Real, Result};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::{Read, Write};

/// Default cap on the fine dof count for ideal (whole-domain) correctors.
pub const DEFAULT_IDEAL_CAP: usize = 60_000;

/// Patch order: localized with `l >= 1`, or the ideal whole-domain solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchOrder {
    Localized(usize),
    Ideal,
}

impl PatchOrder {
    /// Encoded for cache files and reports; `u64::MAX` marks the ideal mode.
    pub fn encode(self) -> u64 {
        match self {
            PatchOrder::Localized(l) => l as u64,
            PatchOrder::Ideal => u64::MAX,
        }
    }

    pub fn decode(raw: u64) -> Self {
        if raw == u64::MAX {
            PatchOrder::Ideal
        } else {
            PatchOrder::Localized(raw as usize)
        }
    }
}

impl std::fmt::Display for PatchOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PatchOrder::Localized(l) => write!(f, "{l}"),
            PatchOrder::Ideal => write!(f, "inf"),
        }
    }
}

/// One corrector column `C_E^l b_i`, stored sparse on its patch support.
#[derive(Debug, Clone)]
pub struct CorrectorColumn<T> {
    /// Coarse element the correction belongs to.
    pub element: usize,
    /// Node slot of the coarse hat.
    pub node: usize,
    /// Sparse fine skeletal vector, ascending dof ids.
    pub values: Vec<(usize, T)>,
}

/// Parameters identifying a corrector set; cache lookups compare all fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorMeta {
    pub k_coarse: u32,
    pub k_fine: u32,
    pub coeff_hash: u64,
    /// 0 = constant rule, 1 = c/h rule.
    pub tau_kind: u8,
    pub tau_c: f64,
    pub ell: u64,
}

impl CorrectorMeta {
    pub fn new<T: Real>(
        hier: &MeshHierarchy,
        coeff_hash: u64,
        tau: TauRule<T>,
        ell: PatchOrder,
    ) -> Self {
        let (tau_kind, tau_c) = match tau {
            TauRule::Constant(c) => (0u8, c.to_f64().unwrap_or(f64::NAN)),
            TauRule::OverH(c) => (1u8, c.to_f64().unwrap_or(f64::NAN)),
        };
        CorrectorMeta {
            k_coarse: hier.coarse.grid_order as u32,
            k_fine: hier.fine.grid_order as u32,
            coeff_hash,
            tau_kind,
            tau_c,
            ell: ell.encode(),
        }
    }
}

/// All corrector columns of one configuration plus the multiscale basis.
pub struct CorrectorSet<T> {
    pub ell: PatchOrder,
    pub meta: CorrectorMeta,
    /// Columns sorted by `(element, node)`.
    pub columns: Vec<CorrectorColumn<T>>,
    /// Per column: the patch-interior node slots its constraint tested
    /// (used by the projection-residual checks).
    pub constrained_nodes: Vec<Vec<usize>>,
}

impl<T: Real> CorrectorSet<T> {
    /// The multiscale basis matrix: column `i` is
    /// `I_h b_i - sum_{E} C_E b_i`, sparse.
    pub fn basis_matrix(&self, transfer: &TransferOperators<T>) -> CsrMatrix<T> {
        let n_dofs = transfer.injection.matrix.nrows();
        let n_nodes = transfer.basis.len();
        let mut triplets = Vec::new();
        let inj_t = transfer.injection.matrix.transpose();
        for node in 0..n_nodes {
            for (dof, v) in inj_t.row(node) {
                triplets.push((dof, node, v));
            }
        }
        for col in &self.columns {
            for &(dof, v) in &col.values {
                triplets.push((dof, col.node, -v));
            }
        }
        CsrMatrix::from_triplets(n_dofs, n_nodes, triplets)
    }

    /// Dense corrector sum `sum_E C_E b_i` for one node.
    pub fn corrector_of_node(&self, node: usize, n_dofs: usize) -> Vec<T> {
        let mut out = vec![T::zero(); n_dofs];
        for col in self.columns.iter().filter(|c| c.node == node) {
            for &(dof, v) in &col.values {
                out[dof] += v;
            }
        }
        out
    }
}

struct PatchSolver<T: Real> {
    dofs: Vec<usize>,
    nodes: Vec<usize>,
    saddle: SchurSaddle<T>,
}

fn build_patch_solver<T: Real>(
    fine: &FineSystem<T>,
    transfer: &TransferOperators<T>,
    constraint: &CsrMatrix<T>,
    patch: &Patch,
) -> Result<PatchSolver<T>> {
    let mut dofs = Vec::with_capacity(2 * patch.interior_fine_faces.len());
    let mut coords = Vec::with_capacity(2 * patch.interior_fine_faces.len());
    for &f in &patch.interior_fine_faces {
        let slot = fine.dofmap.face_slot[f].expect("interior fine face");
        let mid = fine.mesh.face_midpoint(f);
        dofs.push(2 * slot);
        dofs.push(2 * slot + 1);
        coords.push(mid);
        coords.push(mid);
    }
    let nodes: Vec<usize> = patch
        .interior_coarse_vertices
        .iter()
        .map(|&v| transfer.basis.vertex_slot[v].expect("interior coarse vertex"))
        .collect();
    let k_local = fine.stiffness.matrix.submatrix(&dofs, &dofs);
    let b_local = constraint.submatrix(&nodes, &dofs);
    let saddle = SchurSaddle::new(k_local, b_local, &coords, patch.center)?;
    Ok(PatchSolver {
        dofs,
        nodes,
        saddle,
    })
}

/// Right-hand side `a_E(I_h xi, .)` restricted to patch dofs.
fn restricted_rhs<T: Real>(
    fine: &FineSystem<T>,
    hier: &MeshHierarchy,
    element: usize,
    xi_fine: &[T],
    dofs: &[usize],
) -> Vec<T> {
    let full = fine.apply_restricted(&hier.coarse_to_fine[element], xi_fine);
    dofs.iter().map(|&d| full[d]).collect()
}

/// Computes one element correction `C_E^l xi` as a dense fine vector.
///
/// `xi` is a coarse function in nodal coefficients. The ideal mode requires
/// the fine dof count to stay under `ideal_cap`.
pub fn element_correction<T: Real>(
    hier: &MeshHierarchy,
    fine: &FineSystem<T>,
    transfer: &TransferOperators<T>,
    element: usize,
    xi_nodal: &[T],
    ell: PatchOrder,
    tol: T,
    ideal_cap: usize,
) -> Result<Vec<T>> {
    let region = patch_for(hier, element, ell, fine, ideal_cap)?;
    let constraint = transfer.constraint_matrix();
    let solver = build_patch_solver(fine, transfer, &constraint, &region)?;
    let xi_fine = transfer.injection.matrix.matvec(xi_nodal);
    let f = restricted_rhs(fine, hier, element, &xi_fine, &solver.dofs);
    let g = vec![T::zero(); solver.nodes.len()];
    let (x, _lambda, _res) = solver.saddle.solve_checked(&f, &g, tol, 2)?;
    let mut out = vec![T::zero(); fine.dofmap.n_dofs];
    for (local, &dof) in solver.dofs.iter().enumerate() {
        out[dof] = x[local];
    }
    Ok(out)
}

fn patch_for<T: Real>(
    hier: &MeshHierarchy,
    element: usize,
    ell: PatchOrder,
    fine: &FineSystem<T>,
    ideal_cap: usize,
) -> Result<Patch> {
    match ell {
        PatchOrder::Localized(l) => patch(hier, element, l),
        PatchOrder::Ideal => {
            if fine.dofmap.n_dofs > ideal_cap {
                return Err(Error::Budget {
                    need: fine.dofmap.n_dofs,
                    cap: ideal_cap,
                });
            }
            // Saturate: grow until the patch covers the mesh.
            patch(hier, element, hier.coarse.cells_per_side().max(1) * 2)
        }
    }
}

/// Builds the corrector columns of every `(element, hat)` pair.
///
/// Only hats with a vertex on the element contribute (the restricted
/// right-hand side vanishes otherwise). Patches with identical element sets
/// share one factorization; groups run in parallel.
pub fn build_correctors<T: Real>(
    hier: &MeshHierarchy,
    fine: &FineSystem<T>,
    transfer: &TransferOperators<T>,
    ell: PatchOrder,
    tol: T,
    ideal_cap: usize,
    coeff_hash: u64,
) -> Result<CorrectorSet<T>> {
    let constraint = transfer.constraint_matrix();
    let inj_t = transfer.injection.matrix.transpose();
    let n_elems = hier.coarse.elements.len();

    // Group coarse elements by patch signature; the ideal mode is a single
    // whole-domain group.
    let group_list: Vec<(Patch, Vec<usize>)> = match ell {
        PatchOrder::Ideal => {
            let p = patch_for(hier, 0, ell, fine, ideal_cap)?;
            vec![(p, (0..n_elems).collect())]
        }
        PatchOrder::Localized(_) => {
            let mut patches: Vec<Patch> = Vec::with_capacity(n_elems);
            for e in 0..n_elems {
                patches.push(patch_for(hier, e, ell, fine, ideal_cap)?);
            }
            let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
            for (e, p) in patches.iter().enumerate() {
                groups.entry(p.elements.clone()).or_default().push(e);
            }
            let mut reps: BTreeMap<Vec<usize>, Patch> = BTreeMap::new();
            for p in patches {
                reps.entry(p.elements.clone()).or_insert(p);
            }
            groups
                .into_iter()
                .map(|(key, members)| (reps.remove(&key).expect("representative"), members))
                .collect()
        }
    };

    let results: Result<Vec<Vec<(CorrectorColumn<T>, Vec<usize>)>>> = group_list
        .par_iter()
        .map(|(region, members)| {
            let solver = build_patch_solver(fine, transfer, &constraint, region)?;
            let g = vec![T::zero(); solver.nodes.len()];
            let mut out = Vec::new();
            let mut xi_fine = vec![T::zero(); fine.dofmap.n_dofs];
            for &e in members.iter() {
                for &v in &hier.coarse.elements[e] {
                    let Some(node) = transfer.basis.vertex_slot[v] else {
                        continue;
                    };
                    xi_fine.iter_mut().for_each(|x| *x = T::zero());
                    for (dof, val) in inj_t.row(node) {
                        xi_fine[dof] = val;
                    }
                    let f = restricted_rhs(fine, hier, e, &xi_fine, &solver.dofs);
                    let (x, _lambda, _res) = solver.saddle.solve_checked(&f, &g, tol, 2)?;
                    let values: Vec<(usize, T)> = solver
                        .dofs
                        .iter()
                        .zip(&x)
                        .filter(|&(_, &v)| v != T::zero())
                        .map(|(&d, &v)| (d, v))
                        .collect();
                    out.push((
                        CorrectorColumn {
                            element: e,
                            node,
                            values,
                        },
                        solver.nodes.clone(),
                    ));
                }
            }
            Ok(out)
        })
        .collect();

    let mut flat: Vec<(CorrectorColumn<T>, Vec<usize>)> =
        results?.into_iter().flatten().collect();
    flat.sort_by_key(|(c, _)| (c.element, c.node));
    let (columns, constrained_nodes): (Vec<_>, Vec<_>) = flat.into_iter().unzip();

    Ok(CorrectorSet {
        ell,
        meta: CorrectorMeta::new(hier, coeff_hash, fine.tau, ell),
        columns,
        constrained_nodes,
    })
}

/// Energy of an ideal corrector outside successive patches:
/// `(l, ||C||_{a, Omega \ N^l(E)})` for `l = 1..` until saturation.
pub fn decay_profile<T: Real>(
    hier: &MeshHierarchy,
    fine: &FineSystem<T>,
    corrector: &[T],
    element: usize,
) -> Vec<(usize, T)> {
    let n = hier.coarse.elements.len();
    let mut profile = Vec::new();
    for l in 1.. {
        let p = patch(hier, element, l).expect("patch");
        let inside: std::collections::BTreeSet<usize> = p.elements.iter().copied().collect();
        let mut outside_fine = Vec::new();
        for e in 0..n {
            if !inside.contains(&e) {
                outside_fine.extend_from_slice(&hier.coarse_to_fine[e]);
            }
        }
        let energy = fine.energy_norm_on_elements(corrector, &outside_fine);
        profile.push((l, energy));
        if p.elements.len() == n {
            break;
        }
    }
    profile
}

/// Least-squares fit of `log(profile)` against the patch order; returns the
/// decay factor `theta = exp(slope)`. Entries at or below the floor
/// (saturated exteriors) are excluded.
pub fn fit_decay_theta<T: Real>(profile: &[(usize, T)]) -> Option<T> {
    let first = profile.first()?.1;
    if first <= T::zero() {
        return None;
    }
    let floor = first * real::<T>(1e-12);
    let pts: Vec<(T, T)> = profile
        .iter()
        .filter(|&&(_, v)| v > floor)
        .map(|&(l, v)| (real::<T>(l as f64), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = real::<T>(pts.len() as f64);
    let sx: T = pts.iter().map(|p| p.0).sum();
    let sy: T = pts.iter().map(|p| p.1).sum();
    let sxx: T = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: T = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Some(slope.exp())
}

const CACHE_MAGIC: &[u8; 8] = b"CORRSET1";

/// Writes a corrector set to a versioned little-endian binary container.
pub fn write_cache<T: Real>(path: &std::path::Path, set: &CorrectorSet<T>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    let m = &set.meta;
    for v in [
        m.k_coarse as u64,
        m.k_fine as u64,
        m.coeff_hash,
        m.tau_kind as u64,
        m.tau_c.to_bits(),
        m.ell,
        set.columns.len() as u64,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for (col, nodes) in set.columns.iter().zip(&set.constrained_nodes) {
        for v in [
            col.element as u64,
            col.node as u64,
            col.values.len() as u64,
            nodes.len() as u64,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for &(dof, val) in &col.values {
            w.write_all(&(dof as u64).to_le_bytes())?;
            w.write_all(&val.to_f64().unwrap_or(f64::NAN).to_bits().to_le_bytes())?;
        }
        for &n in nodes {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a cached corrector set; `Ok(None)` when the file parameters do not
/// match `expect` (stale cache).
pub fn read_cache<T: Real>(
    path: &std::path::Path,
    expect: &CorrectorMeta,
) -> Result<Option<CorrectorSet<T>>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Parse("corrector cache: bad magic".into()));
    }
    let mut u64buf = [0u8; 8];
    let mut next = |r: &mut dyn Read| -> Result<u64> {
        r.read_exact(&mut u64buf)?;
        Ok(u64::from_le_bytes(u64buf))
    };
    let meta = CorrectorMeta {
        k_coarse: next(&mut r)? as u32,
        k_fine: next(&mut r)? as u32,
        coeff_hash: next(&mut r)?,
        tau_kind: next(&mut r)? as u8,
        tau_c: f64::from_bits(next(&mut r)?),
        ell: next(&mut r)?,
    };
    let n_cols = next(&mut r)? as usize;
    if meta != *expect {
        return Ok(None);
    }
    let mut columns = Vec::with_capacity(n_cols);
    let mut constrained_nodes = Vec::with_capacity(n_cols);
    for _ in 0..n_cols {
        let element = next(&mut r)? as usize;
        let node = next(&mut r)? as usize;
        let n_values = next(&mut r)? as usize;
        let n_nodes = next(&mut r)? as usize;
        let mut values = Vec::with_capacity(n_values);
        for _ in 0..n_values {
            let dof = next(&mut r)? as usize;
            let val = f64::from_bits(next(&mut r)?);
            values.push((dof, real::<T>(val)));
        }
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            nodes.push(next(&mut r)? as usize);
        }
        columns.push(CorrectorColumn {
            element,
            node,
            values,
        });
        constrained_nodes.push(nodes);
    }
    Ok(Some(CorrectorSet {
        ell: PatchOrder::decode(meta.ell),
        meta,
        columns,
        constrained_nodes,
    }))
}
