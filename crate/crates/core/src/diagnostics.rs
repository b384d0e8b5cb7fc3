//! Measured-constant suites for the local-solver properties and the
//! condensation oracle.
//!
//! The estimates behind the method (trace approximation, continuity of the
//! local solvers, dual consistency, spectral bounds of the condensed
//! stiffness, broken Poincare-Friedrichs) come with unquantified constants.
//! These suites measure them over random skeletal vectors so that stability
//! across refinement levels can be asserted; the spectral bounds use power
//! and inverse iterations seeded from the random pool, since random Rayleigh
//! quotients concentrate in the interior of the spectrum and would not probe
//! the extremes.

use crate::coefficient::{CoefficientField, UniformStream};
use crate::hdg::norms::{skeletal_norm, skeletal_norm_on_elements, trace_gap_norm};
use crate::hdg::{assemble_rhs, FineSystem, TauRule};
use crate::mesh::{build_hierarchy, patch, MeshHierarchy};
use crate::transfer::TransferOperators;
use crate::{real, Real, Result};
use nalgebra::{DMatrix, DVector};

/// Measured constants of one fine level.
#[derive(Debug, Clone)]
pub struct LsReport {
    pub k_fine: usize,
    /// `max ||U mu - mu||_h / (h ||Q mu||_0)`.
    pub ls1: f64,
    /// `max ||U mu||_0 / ||mu||_h`.
    pub ls2_u: f64,
    /// `max_e h ||Q mu||_{0,e} / ||mu||_{h,e}`.
    pub ls2_q: f64,
    /// `max h ||Q mu + A grad U mu||_0 / ||U mu - mu||_h`.
    pub ls3: f64,
    /// Smallest generalized Rayleigh quotient of `K` against the h-product.
    pub ls5_c1: f64,
    /// Largest quotient scaled by `h^2`.
    pub ls5_c2: f64,
    /// `max (||mu||_h + ||U mu||_0) / ||Q mu||_0` (broken
    /// Poincare-Friedrichs, boundary term zero).
    pub poincare: f64,
}

/// Runs the random-vector suite on one fine level.
pub fn ls_suite<T: Real>(
    hier: &MeshHierarchy,
    field: &CoefficientField<T>,
    tau: TauRule<T>,
    n_samples: usize,
    seed: u64,
) -> Result<LsReport> {
    let fine = FineSystem::build(hier, field, tau)?;
    let mesh = &fine.mesh;
    let h = mesh.mesh_size();
    let mut stream = UniformStream::new(seed);
    let mut ls1 = 0.0f64;
    let mut ls2_u = 0.0f64;
    let mut ls2_q = 0.0f64;
    let mut ls3 = 0.0f64;
    let mut poincare = 0.0f64;
    let coeff_of: Vec<T> = (0..mesh.elements.len())
        .map(|e| field.value_on_fine_element(hier, e))
        .collect::<Result<_>>()?;
    for _ in 0..n_samples {
        let mu: Vec<T> = stream.vector(fine.dofmap.n_dofs);
        let u = fine.apply_u(&mu);
        let q = fine.apply_q(&mu);
        let gap = trace_gap_norm(mesh, &fine.dofmap, &fine.kernels, &u, &mu)
            .to_f64()
            .unwrap();
        let q_norm = q.l2_norm(mesh).to_f64().unwrap();
        let u_norm = u.l2_norm(mesh).to_f64().unwrap();
        let mu_norm = skeletal_norm(mesh, &fine.dofmap, &mu).to_f64().unwrap();
        ls1 = ls1.max(gap / (h * q_norm));
        ls2_u = ls2_u.max(u_norm / mu_norm);
        for e in 0..mesh.elements.len() {
            let qe = q.l2_norm_on(mesh, e).to_f64().unwrap();
            let me = skeletal_norm_on_elements(mesh, &fine.dofmap, &mu, &[e])
                .to_f64()
                .unwrap();
            if me > 0.0 {
                ls2_q = ls2_q.max(h * qe / me);
            }
        }
        let defect = q
            .defect_vs_gradient(mesh, &u, |e| coeff_of[e])
            .to_f64()
            .unwrap();
        ls3 = ls3.max(h * defect / gap);
        poincare = poincare.max((mu_norm + u_norm) / q_norm);
    }
    let (c1, c2) = spectral_bounds(&fine, seed ^ 0x5eed)?;
    Ok(LsReport {
        k_fine: mesh.grid_order,
        ls1,
        ls2_u,
        ls2_q,
        ls3,
        ls5_c1: c1,
        ls5_c2: c2 * h * h,
        poincare,
    })
}

/// Extremal generalized Rayleigh quotients of `K x = lambda W x` with `W`
/// the diagonal h-product weight, via power iteration (largest) and inverse
/// iteration through the sparse factorization (smallest).
fn spectral_bounds<T: Real>(fine: &FineSystem<T>, seed: u64) -> Result<(f64, f64)> {
    let n = fine.dofmap.n_dofs;
    let w = real::<T>(2.0 * fine.mesh.product_weight());
    let mut stream = UniformStream::new(seed);

    // Largest: power iteration on D^-1/2 K D^-1/2 (D = w Id here).
    let mut x: Vec<T> = stream.vector(n);
    let mut lam_max = 0.0f64;
    for _ in 0..600 {
        let kx = fine.stiffness.matrix.matvec(&x);
        let norm = l2(&kx);
        let lam = x
            .iter()
            .zip(&kx)
            .map(|(&a, &b)| a * b)
            .sum::<T>()
            .to_f64()
            .unwrap()
            / l2(&x).to_f64().unwrap().powi(2);
        for i in 0..n {
            x[i] = kx[i] / norm;
        }
        let lam = lam / w.to_f64().unwrap();
        if (lam - lam_max).abs() <= 1e-9 * lam.abs() {
            lam_max = lam;
            break;
        }
        lam_max = lam;
    }

    // Smallest: inverse iteration, x <- K^-1 W x.
    let chol = fine.cholesky()?;
    let mut y: Vec<T> = stream.vector(n);
    let mut lam_min = f64::INFINITY;
    for _ in 0..600 {
        let wy: Vec<T> = y.iter().map(|&v| v * w).collect();
        let z = chol.solve(&wy);
        let norm = l2(&z);
        // Rayleigh quotient of the current iterate.
        let kz = fine.stiffness.matrix.matvec(&z);
        let num = z
            .iter()
            .zip(&kz)
            .map(|(&a, &b)| a * b)
            .sum::<T>()
            .to_f64()
            .unwrap();
        let den = l2(&z).to_f64().unwrap().powi(2) * w.to_f64().unwrap();
        let lam = num / den;
        for i in 0..n {
            y[i] = z[i] / norm;
        }
        if (lam - lam_min).abs() <= 1e-9 * lam.abs() {
            lam_min = lam;
            break;
        }
        lam_min = lam;
    }
    Ok((lam_min, lam_max))
}

fn l2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// LS4 defects of random continuous piecewise-linear functions:
/// `(max |U gamma w - w|, max |Q gamma w + A grad w|)`, both scaled
/// relative to the sampled function.
pub fn ls4_defects<T: Real>(
    hier: &MeshHierarchy,
    field: &CoefficientField<T>,
    tau: TauRule<T>,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let fine = FineSystem::build(hier, field, tau)?;
    let mesh = &fine.mesh;
    let mut stream = UniformStream::new(seed);
    let mut u_defect = 0.0f64;
    let mut q_defect = 0.0f64;
    for _ in 0..n_samples {
        let mut nodal = vec![T::zero(); mesh.vertices.len()];
        for v in 0..mesh.vertices.len() {
            if !mesh.boundary_vertex[v] {
                nodal[v] = stream.next_real();
            }
        }
        let m = crate::hdg::norms::skeletal_trace_of_p1(mesh, &fine.dofmap, &nodal);
        let u = fine.apply_u(&m);
        let q = fine.apply_q(&m);
        let scale = nodal
            .iter()
            .map(|v| v.to_f64().unwrap().abs())
            .fold(1e-30, f64::max);
        for e in 0..mesh.elements.len() {
            let tri = mesh.elements[e];
            let c = field.value_on_fine_element(hier, e)?;
            // Exact broken gradient of the P1 interpolant.
            let nodal_e: Vec<T> = tri.iter().map(|&v| nodal[v]).collect();
            let interp = crate::hdg::BulkField {
                values: {
                    let mut vals = vec![T::zero(); 3 * mesh.elements.len()];
                    for i in 0..3 {
                        vals[3 * e + i] = nodal_e[i];
                    }
                    vals
                },
            };
            let grad = interp.gradient_on(mesh, e);
            for i in 0..3 {
                let du = (u.values[3 * e + i] - nodal[tri[i]]).to_f64().unwrap().abs();
                u_defect = u_defect.max(du / scale);
                for comp in 0..2 {
                    let dq = (q.values[6 * e + 3 * comp + i] + c * grad[comp])
                        .to_f64()
                        .unwrap()
                        .abs();
                    q_defect = q_defect.max(dq / (scale * c.to_f64().unwrap()));
                }
            }
        }
    }
    Ok((u_defect, q_defect))
}

/// Measured constants of the transfer operators on one hierarchy.
#[derive(Debug, Clone)]
pub struct TransferReport {
    pub k_coarse: usize,
    pub k_fine: usize,
    /// Bounds of `||m_H||_{H,E} / ||I_h m_H||_{h,E}` (norm equivalence of
    /// the injection).
    pub inj_equiv_min: f64,
    pub inj_equiv_max: f64,
    /// `max ||I_h Pi_H m||_a / ||m||_a` (stability).
    pub stability: f64,
    /// `max_E ||m - I_h Pi_H m||_{h,E} / (H ||Q m||_{0,omega_E})`
    /// (interpolation estimate).
    pub interpolation: f64,
}

pub fn transfer_suite<T: Real>(
    hier: &MeshHierarchy,
    field: &CoefficientField<T>,
    tau: TauRule<T>,
    n_samples: usize,
    seed: u64,
) -> Result<TransferReport> {
    let fine = FineSystem::build(hier, field, tau)?;
    let ops = TransferOperators::build(hier, &fine)?;
    let coarse_dofmap =
        crate::hdg::SkeletalDofMap::new(&hier.coarse, crate::sparse::DofSpace::CoarseSkeletal);
    let mut stream = UniformStream::new(seed);
    let capital_h = hier.coarse.mesh_size();

    let mut inj_min = f64::INFINITY;
    let mut inj_max = 0.0f64;
    for _ in 0..n_samples {
        let nodal_coeffs: Vec<T> = stream.vector(ops.basis.len());
        let mut coarse_nodal = vec![T::zero(); hier.coarse.vertices.len()];
        for (slot, &v) in ops.basis.interior_vertices.iter().enumerate() {
            coarse_nodal[v] = nodal_coeffs[slot];
        }
        let coarse_trace = crate::hdg::norms::skeletal_trace_of_p1(
            &hier.coarse,
            &coarse_dofmap,
            &coarse_nodal,
        );
        let injected = ops.injection.matrix.matvec(&nodal_coeffs);
        for e in 0..hier.coarse.elements.len() {
            let coarse_local =
                skeletal_norm_on_elements(&hier.coarse, &coarse_dofmap, &coarse_trace, &[e])
                    .to_f64()
                    .unwrap();
            let fine_local = skeletal_norm_on_elements(
                &fine.mesh,
                &fine.dofmap,
                &injected,
                &hier.coarse_to_fine[e],
            )
            .to_f64()
            .unwrap();
            if fine_local > 0.0 && coarse_local > 0.0 {
                let r = coarse_local / fine_local;
                inj_min = inj_min.min(r);
                inj_max = inj_max.max(r);
            }
        }
    }

    let mut stability = 0.0f64;
    let mut interpolation = 0.0f64;
    for _ in 0..n_samples {
        let m: Vec<T> = stream.vector(fine.dofmap.n_dofs);
        let coarse = ops.projection.matrix.matvec(&m);
        let back = ops.injection.matrix.matvec(&coarse);
        let norm_m = fine.energy_norm(&m).to_f64().unwrap();
        let norm_back = fine.energy_norm(&back).to_f64().unwrap();
        stability = stability.max(norm_back / norm_m);
        let residual: Vec<T> = m.iter().zip(&back).map(|(&a, &b)| a - b).collect();
        let q = fine.apply_q(&m);
        for e in 0..hier.coarse.elements.len() {
            let local = skeletal_norm_on_elements(
                &fine.mesh,
                &fine.dofmap,
                &residual,
                &hier.coarse_to_fine[e],
            )
            .to_f64()
            .unwrap();
            let neighborhood = patch(hier, e, 1)?;
            let mut q_local = 0.0f64;
            for &ce in &neighborhood.elements {
                for &fe in &hier.coarse_to_fine[ce] {
                    q_local += q.l2_norm_on(&fine.mesh, fe).to_f64().unwrap().powi(2);
                }
            }
            let q_local = q_local.sqrt();
            if q_local > 0.0 {
                interpolation = interpolation.max(local / (capital_h * q_local));
            }
        }
    }

    Ok(TransferReport {
        k_coarse: hier.coarse.grid_order,
        k_fine: hier.fine.grid_order,
        inj_equiv_min: inj_min,
        inj_equiv_max: inj_max,
        stability,
        interpolation,
    })
}

/// Assembles the full uncondensed system (per-element dual and primal
/// unknowns plus skeletal unknowns, coupled by flux continuity), solves it
/// densely, and returns the relative sup-distance between its skeletal
/// block and the condensed solve. The local blocks are re-derived here with
/// plain quadrature loops, independent of the kernel construction path.
pub fn condensation_gap<T: Real>(
    hier: &MeshHierarchy,
    field: &CoefficientField<T>,
    tau_rule: TauRule<T>,
    f: impl Fn(f64, f64) -> T + Sync,
) -> Result<f64> {
    let fine = FineSystem::build(hier, field, tau_rule)?;
    let mesh = &fine.mesh;
    let dofmap = &fine.dofmap;
    let n_e = mesh.elements.len();
    let n_m = dofmap.n_dofs;
    let n = 9 * n_e + n_m;
    let tau = tau_rule.value(mesh.mesh_size());

    let mut sys = DMatrix::<T>::zeros(n, n);
    let mut rhs = DVector::<T>::zeros(n);
    for e in 0..n_e {
        let verts = mesh.element_vertices(e);
        let tri = mesh.elements[e];
        let area = crate::quad::triangle_area(&verts);
        let coeff = field.value_on_fine_element(hier, e)?;
        let base = 9 * e;
        // Gradients of the barycentric basis.
        let mut grad = [[T::zero(); 2]; 3];
        for i in 0..3 {
            let a = verts[(i + 1) % 3];
            let b = verts[(i + 2) % 3];
            grad[i] = [
                real::<T>(-(b[1] - a[1]) / (2.0 * area)),
                real::<T>((b[0] - a[0]) / (2.0 * area)),
            ];
        }
        // Bulk terms.
        for comp in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    let mass = real::<T>(area / 12.0 * if i == j { 2.0 } else { 1.0 });
                    sys[(base + comp * 3 + i, base + comp * 3 + j)] += mass / coeff;
                }
                for j in 0..3 {
                    sys[(base + comp * 3 + i, base + 6 + j)] -=
                        grad[i][comp] * real::<T>(area / 3.0);
                }
                for j in 0..3 {
                    sys[(base + 6 + j, base + comp * 3 + i)] -=
                        grad[j][comp] * real::<T>(area / 3.0);
                }
            }
        }
        // Source moments (degree-4 rule).
        for (x, w) in crate::quad::triangle_deg4::<T>(&verts) {
            let lam = barycentric(&verts, x);
            let fx = f(x[0].to_f64().unwrap(), x[1].to_f64().unwrap());
            for i in 0..3 {
                rhs[base + 6 + i] += w * fx * lam[i];
            }
        }
        // Boundary terms per local face.
        for lf in 0..3 {
            let (va, vb) = (tri[lf], tri[(lf + 1) % 3]);
            let (ga, gb) = (va.min(vb), va.max(vb));
            let (pa, pb) = (mesh.vertices[ga], mesh.vertices[gb]);
            let face = mesh.element_faces[e][lf];
            let len_f = mesh.face_length(face);
            let len = real::<T>(len_f);
            let bary = mesh.element_barycenter(e);
            let midp = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            let mut nrm = [(pb[1] - pa[1]) / len_f, -(pb[0] - pa[0]) / len_f];
            if (bary[0] - midp[0]) * nrm[0] + (bary[1] - midp[1]) * nrm[1] > 0.0 {
                nrm = [-nrm[0], -nrm[1]];
            }
            let normal = [real::<T>(nrm[0]), real::<T>(nrm[1])];
            let slot = dofmap.face_slot[face];
            for (x, w, t) in crate::quad::edge_gauss2::<T>(pa, pb) {
                let lam = barycentric(&verts, x);
                for i in 0..3 {
                    // <q.n, v> and tau <u - m, v> in the flux equation.
                    for comp in 0..2 {
                        for j in 0..3 {
                            sys[(base + 6 + i, base + comp * 3 + j)] +=
                                w * normal[comp] * lam[j] * lam[i];
                        }
                    }
                    for j in 0..3 {
                        sys[(base + 6 + i, base + 6 + j)] += tau * w * lam[j] * lam[i];
                    }
                }
                if let Some(s) = slot {
                    for mode in 0..2 {
                        let phi = crate::hdg::local::face_basis(len, t, mode);
                        let col = 9 * n_e + 2 * s + mode;
                        for i in 0..3 {
                            sys[(base + 6 + i, col)] -= tau * w * phi * lam[i];
                        }
                        // -<m, p.n> in the dual equation.
                        for comp in 0..2 {
                            for j in 0..3 {
                                sys[(base + comp * 3 + j, col)] +=
                                    w * phi * normal[comp] * lam[j];
                            }
                        }
                        // Flux continuity row for this skeletal dof.
                        let row = 9 * n_e + 2 * s + mode;
                        for comp in 0..2 {
                            for j in 0..3 {
                                sys[(row, base + comp * 3 + j)] +=
                                    w * phi * normal[comp] * lam[j];
                            }
                        }
                        for j in 0..3 {
                            sys[(row, base + 6 + j)] += tau * w * phi * lam[j];
                        }
                        sys[(row, col)] -= tau * w * phi * phi;
                    }
                }
            }
        }
    }

    let dense_sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| crate::Error::InvalidParameter("uncondensed system singular".into()))?;
    let b = assemble_rhs(mesh, &fine.kernels, dofmap, &f);
    let condensed = fine.solve_reference(&b, real::<T>(1e-12))?;
    let mut gap = 0.0f64;
    let mut scale = 1e-30f64;
    for i in 0..n_m {
        let a = dense_sol[9 * n_e + i].to_f64().unwrap();
        let c = condensed[i].to_f64().unwrap();
        gap = gap.max((a - c).abs());
        scale = scale.max(c.abs());
    }
    Ok(gap / scale)
}

fn barycentric<T: Real>(verts: &[[f64; 2]; 3], x: [T; 2]) -> [T; 3] {
    let area = real::<T>(crate::quad::triangle_area(verts));
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

/// Convenience: hierarchy with the epsilon order clamped to the valid range.
pub fn hierarchy_for<T: Real>(
    k_coarse: usize,
    k_fine: usize,
    field: &CoefficientField<T>,
) -> Result<MeshHierarchy> {
    build_hierarchy(k_coarse, field.grid_order.clamp(k_coarse, k_fine), k_fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ls4_exact_on_small_mesh() {
        let field = CoefficientField::checkerboard(1, 1.0, 10.0).unwrap();
        let hier = hierarchy_for(1, 3, &field).unwrap();
        let (du, dq) = ls4_defects(&hier, &field, TauRule::OverH(100.0), 10, 7).unwrap();
        assert!(du < 1e-12, "primal defect {du}");
        assert!(dq < 1e-12, "dual defect {dq}");
    }

    #[test]
    fn condensation_gap_small_on_tiny_meshes() {
        for k in [1usize, 2] {
            let field = CoefficientField::checkerboard(1, 1.0, 10.0).unwrap();
            let hier = hierarchy_for(1, k, &field).unwrap();
            let gap = condensation_gap(&hier, &field, TauRule::OverH(100.0), |x, y| {
                real::<f64>(x + 0.5 * y + 1.0)
            })
            .unwrap();
            assert!(gap <= 1e-10, "k={k}: condensation gap {gap}");
        }
    }

    #[test]
    fn spectral_bounds_bracket_random_quotients() {
        let field = CoefficientField::constant(1.0).unwrap();
        let hier = hierarchy_for(1, 3, &field).unwrap();
        let fine = FineSystem::build(&hier, &field, TauRule::OverH(100.0)).unwrap();
        let (c1, c2) = spectral_bounds(&fine, 3).unwrap();
        assert!(c1 > 0.0 && c2 > c1);
        let w = 2.0 * fine.mesh.product_weight();
        let mut stream = UniformStream::new(11);
        for _ in 0..20 {
            let x: Vec<f64> = stream.vector(fine.dofmap.n_dofs);
            let kx = fine.stiffness.matrix.matvec(&x);
            let num: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
            let den: f64 = w * x.iter().map(|v| v * v).sum::<f64>();
            let rq = num / den;
            assert!(rq >= c1 * 0.999 && rq <= c2 * 1.001, "quotient {rq} outside [{c1}, {c2}]");
        }
    }
}
