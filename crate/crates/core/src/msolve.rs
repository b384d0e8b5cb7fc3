//! The coarse multiscale Galerkin solve, error reports, and convergence
//! studies.

use crate::coefficient::CoefficientField;
use crate::corrector::{build_correctors, CorrectorSet, PatchOrder};
use crate::hdg::{assemble_rhs, BulkField, FineSystem, FluxField, TauRule};
use crate::mesh::{build_hierarchy, MeshHierarchy};
use crate::transfer::TransferOperators;
use crate::{real, Error, Real, Result};
use nalgebra::DVector;
use std::time::Instant;

/// Identifies the discretization a solution belongs to; error comparisons
/// require equal metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionMeta {
    pub k_coarse: usize,
    pub k_fine: usize,
    pub coeff_hash: u64,
    pub tau_kind: u8,
    pub tau_c: f64,
}

impl SolutionMeta {
    pub fn new<T: Real>(hier: &MeshHierarchy, coeff_hash: u64, tau: TauRule<T>) -> Self {
        let (tau_kind, tau_c) = match tau {
            TauRule::Constant(c) => (0u8, c.to_f64().unwrap_or(f64::NAN)),
            TauRule::OverH(c) => (1u8, c.to_f64().unwrap_or(f64::NAN)),
        };
        SolutionMeta {
            k_coarse: hier.coarse.grid_order,
            k_fine: hier.fine.grid_order,
            coeff_hash,
            tau_kind,
            tau_c,
        }
    }
}

/// A solved multiscale approximation with its reconstructed bulk fields.
pub struct MultiscaleSolution<T> {
    pub ell: PatchOrder,
    /// Coefficients over the multiscale basis (one per interior coarse
    /// vertex).
    pub coarse_coefficients: Vec<T>,
    /// The fine skeletal representation, `basis * coefficients`.
    pub fine_representation: Vec<T>,
    pub bulk_primal: BulkField<T>,
    pub bulk_dual: FluxField<T>,
    pub meta: SolutionMeta,
}

/// Solves the coarse Galerkin system over the multiscale basis.
pub fn solve_multiscale<T: Real>(
    fine: &FineSystem<T>,
    transfer: &TransferOperators<T>,
    correctors: &CorrectorSet<T>,
    rhs: &[T],
    meta: SolutionMeta,
) -> Result<MultiscaleSolution<T>> {
    let basis = correctors.basis_matrix(transfer);
    let n_nodes = basis.ncols();
    let k_basis = fine.stiffness.matrix.matmul(&basis);
    let coarse = basis.transpose().matmul(&k_basis).to_dense();
    let chol = nalgebra::Cholesky::new(coarse).ok_or_else(|| {
        Error::InvalidParameter("coarse multiscale system not positive definite".into())
    })?;
    let rhs_c = DVector::from_vec(basis.matvec_transpose(rhs));
    let coeffs = chol.solve(&rhs_c);
    // Accumulate basis columns through the transpose in a single pass.
    let mut fine_repr = vec![T::zero(); fine.dofmap.n_dofs];
    let basis_t = basis.transpose();
    for node in 0..n_nodes {
        let c = coeffs[node];
        if c == T::zero() {
            continue;
        }
        for (dof, v) in basis_t.row(node) {
            fine_repr[dof] += v * c;
        }
    }
    let bulk_primal = fine.apply_u(&fine_repr);
    let bulk_dual = fine.apply_q(&fine_repr);
    Ok(MultiscaleSolution {
        ell: correctors.ell,
        coarse_coefficients: coeffs.as_slice().to_vec(),
        fine_representation: fine_repr,
        bulk_primal,
        bulk_dual,
        meta,
    })
}

/// Errors of a multiscale solution against the fine reference.
#[derive(Debug, Clone)]
pub struct ErrorReport<T> {
    /// `||m - m~||_a`.
    pub energy: T,
    /// `||U m - U m~||_0`.
    pub bulk_l2: T,
    /// `||Q m - Q m~||_0`.
    pub dual_l2: T,
    /// `||m - m~||_h`.
    pub skeletal_h: T,
}

/// Computes all reported error norms. Fails on metadata mismatch.
pub fn compute_errors<T: Real>(
    fine: &FineSystem<T>,
    reference: &[T],
    reference_meta: &SolutionMeta,
    solution: &MultiscaleSolution<T>,
) -> Result<ErrorReport<T>> {
    if *reference_meta != solution.meta {
        return Err(Error::MetadataMismatch(format!(
            "reference {reference_meta:?} vs solution {:?}",
            solution.meta
        )));
    }
    let diff: Vec<T> = reference
        .iter()
        .zip(&solution.fine_representation)
        .map(|(&a, &b)| a - b)
        .collect();
    let energy = fine.energy_norm(&diff);
    let ref_u = fine.apply_u(reference);
    let ref_q = fine.apply_q(reference);
    let bulk_l2 = ref_u.l2_distance(&solution.bulk_primal, &fine.mesh);
    let dual_l2 = ref_q.l2_distance(&solution.bulk_dual, &fine.mesh);
    let skeletal_h = crate::hdg::norms::skeletal_norm(&fine.mesh, &fine.dofmap, &diff);
    Ok(ErrorReport {
        energy,
        bulk_l2,
        dual_l2,
        skeletal_h,
    })
}

/// A naive coarse-level HDG comparison solution, represented in the fine
/// skeletal space.
///
/// The coarse solver samples the coefficient at element barycenters (it
/// cannot resolve the oscillations) and solves the condensed system on the
/// coarse mesh. Its skeletal solution is continuized by vertex averaging of
/// the coarse bulk and injected into the fine skeleton, which makes energy
/// norms against the fine reference well defined.
pub fn naive_coarse_surrogate<T: Real>(
    hier: &MeshHierarchy,
    field: &CoefficientField<T>,
    tau: TauRule<T>,
    transfer: &TransferOperators<T>,
    f: impl Fn(f64, f64) -> T + Sync,
    tol: T,
) -> Result<Vec<T>> {
    let coarse_mesh = hier.coarse.clone();
    let coeff_of = |e: usize| {
        let b = coarse_mesh.element_barycenter(e);
        let (i, j) = field.cell_of_point(b[0], b[1]);
        field.cell_value(i, j)
    };
    let coarse_sys = FineSystem::build_on_level(hier.coarse.clone(), coeff_of, tau)?;
    let b = assemble_rhs(&coarse_sys.mesh, &coarse_sys.kernels, &coarse_sys.dofmap, f);
    let m_coarse = coarse_sys.solve_reference(&b, tol)?;
    let bulk = coarse_sys.apply_u(&m_coarse);
    let nodal = transfer.avg_coarse.matvec(&bulk.values);
    Ok(transfer.injection.matrix.matvec(&nodal))
}

/// Patch orders requested in a study.
pub type EllSpec = PatchOrder;

/// Convergence-study configuration.
pub struct StudyConfig<'a, T: Real> {
    pub k_coarse_list: Vec<usize>,
    pub k_eps: usize,
    pub k_fine: usize,
    pub field: &'a CoefficientField<T>,
    pub rhs: &'a (dyn Fn(f64, f64) -> T + Sync),
    pub case_label: String,
    pub tau: TauRule<T>,
    pub ells: Vec<EllSpec>,
    pub tol: T,
    pub ideal_cap: usize,
}

/// One row of the study table.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub case: String,
    pub k_coarse: usize,
    pub k_fine: usize,
    pub ell: String,
    pub tau: f64,
    pub energy_error: f64,
    pub l2_error: f64,
    pub dual_error: f64,
    /// `log2(e(H) / e(H/2))` against the previous row of the same `ell`.
    pub rate_energy: Option<f64>,
    pub rate_l2: Option<f64>,
    pub wall_ms_kernels: u128,
    pub wall_ms_correctors: u128,
    pub wall_ms_solve: u128,
}

/// Runs the full pipeline over the requested coarse levels and patch
/// orders: one fine reference solve, then per `(ell, k_H)` a corrector
/// build and coarse solve with error norms and rates.
pub fn convergence_study<T: Real>(cfg: &StudyConfig<'_, T>) -> Result<Vec<StudyRow>> {
    let k0 = *cfg
        .k_coarse_list
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty k_H list".into()))?;
    let t_kernels = Instant::now();
    let hier0 = build_hierarchy(k0, cfg.k_eps, cfg.k_fine)?;
    let fine = FineSystem::build(&hier0, cfg.field, cfg.tau)?;
    let b = assemble_rhs(&fine.mesh, &fine.kernels, &fine.dofmap, cfg.rhs);
    let reference = fine.solve_reference(&b, cfg.tol)?;
    let wall_kernels = t_kernels.elapsed().as_millis();
    let coeff_hash = cfg.field.content_hash();
    let tau_value = cfg.tau.value(fine.mesh.mesh_size()).to_f64().unwrap_or(f64::NAN);

    let mut rows = Vec::new();
    for &ell in &cfg.ells {
        let mut prev: Option<(f64, f64)> = None;
        for &k_coarse in &cfg.k_coarse_list {
            let hier = build_hierarchy(k_coarse, cfg.k_eps, cfg.k_fine)?;
            let transfer = TransferOperators::build(&hier, &fine)?;
            let t_corr = Instant::now();
            let correctors = build_correctors(
                &hier,
                &fine,
                &transfer,
                ell,
                cfg.tol,
                cfg.ideal_cap,
                coeff_hash,
            )?;
            let wall_correctors = t_corr.elapsed().as_millis();
            let t_solve = Instant::now();
            let meta = SolutionMeta::new(&hier, coeff_hash, cfg.tau);
            let solution = solve_multiscale(&fine, &transfer, &correctors, &b, meta.clone())?;
            let report = compute_errors(&fine, &reference, &meta, &solution)?;
            let wall_solve = t_solve.elapsed().as_millis();

            let energy = report.energy.to_f64().unwrap_or(f64::NAN);
            let l2 = report.bulk_l2.to_f64().unwrap_or(f64::NAN);
            let (rate_energy, rate_l2) = match prev {
                Some((pe, pl)) => (Some((pe / energy).log2()), Some((pl / l2).log2())),
                None => (None, None),
            };
            prev = Some((energy, l2));
            rows.push(StudyRow {
                case: cfg.case_label.clone(),
                k_coarse,
                k_fine: cfg.k_fine,
                ell: ell.to_string(),
                tau: tau_value,
                energy_error: energy,
                l2_error: l2,
                dual_error: report.dual_l2.to_f64().unwrap_or(f64::NAN),
                rate_energy,
                rate_l2,
                wall_ms_kernels: wall_kernels,
                wall_ms_correctors: wall_correctors,
                wall_ms_solve: wall_solve,
            });
        }
    }
    Ok(rows)
}

/// Builds the standard right-hand sides of the experiments.
pub fn builtin_rhs<T: Real>(name: &str) -> Option<Box<dyn Fn(f64, f64) -> T + Sync>> {
    let pi = std::f64::consts::PI;
    match name {
        "paper_checkerboard_f" => Some(Box::new(move |x, y| {
            real::<T>(5.0 * pi * pi * (2.0 * pi * x).sin() * (2.0 * pi * y).cos())
        })),
        "constant_one" => Some(Box::new(|_, _| T::one())),
        "smooth_sine" => Some(Box::new(move |x, y| {
            real::<T>(2.0 * pi * pi * (pi * x).sin() * (pi * y).sin())
        })),
        _ => None,
    }
}
