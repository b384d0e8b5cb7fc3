use hdg_lod::coefficient::CoefficientField;
use hdg_lod::hdg::{assemble_rhs, FineSystem, TauRule};
use hdg_lod::mesh::build_hierarchy;
use std::time::Instant;

#[test]
#[ignore]
fn bench_fine_k7() {
    let t0 = Instant::now();
    let hier = build_hierarchy(2, 6, 7).unwrap();
    println!("hierarchy: {:?}", t0.elapsed());
    let field = CoefficientField::checkerboard(6, 1.0, 10.0).unwrap();
    let t1 = Instant::now();
    let fine = FineSystem::build(&hier, &field, TauRule::OverH(100.0)).unwrap();
    println!("kernels+assembly: {:?} (n_dofs={}, nnz={})", t1.elapsed(), fine.n_dofs(), fine.stiffness.matrix.nnz());
    let t2 = Instant::now();
    let chol = fine.cholesky().unwrap();
    println!("cholesky: {:?} (nnz L = {})", t2.elapsed(), chol.nnz_factor());
    let t3 = Instant::now();
    let b = assemble_rhs(&fine.mesh, &fine.kernels, &fine.dofmap, |x, y| {
        5.0 * std::f64::consts::PI.powi(2) * (2.0 * std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).cos()
    });
    println!("rhs: {:?}", t3.elapsed());
    let t4 = Instant::now();
    let m = fine.solve_reference(&b, 1e-10).unwrap();
    println!("solve: {:?}, |m|_max = {:.3e}", t4.elapsed(), m.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs())));
}
