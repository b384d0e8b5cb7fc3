//! Discontinuous `P1` bulk fields reconstructed from skeletal solutions.

use crate::mesh::MeshLevel;
use crate::quad::{triangle_area, triangle_deg4};
use crate::{real, Real};

/// Scalar bulk field: three nodal values per element.
#[derive(Debug, Clone)]
pub struct BulkField<T> {
    /// `values[3 e + i]` is the value at vertex `i` of element `e`.
    pub values: Vec<T>,
}

/// Vector bulk field: six values per element, component-major
/// (`[qx at v0..v2, qy at v0..v2]`).
#[derive(Debug, Clone)]
pub struct FluxField<T> {
    pub values: Vec<T>,
}

/// `int_e l_i l_j = |e| (1 + delta_ij) / 12`.
#[inline]
fn mass_quadratic<T: Real>(area: T, a: &[T; 3], b: &[T; 3]) -> T {
    let two = T::one() + T::one();
    let mut acc = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            let w = if i == j { two } else { T::one() };
            acc += w * a[i] * b[j];
        }
    }
    acc * area / real::<T>(12.0)
}

impl<T: Real> BulkField<T> {
    pub fn zeros(mesh: &MeshLevel) -> Self {
        BulkField {
            values: vec![T::zero(); 3 * mesh.elements.len()],
        }
    }

    /// Exact `L2` norm (the integrand is a quadratic polynomial).
    pub fn l2_norm(&self, mesh: &MeshLevel) -> T {
        let mut acc = T::zero();
        for e in 0..mesh.elements.len() {
            let area = real::<T>(triangle_area(&mesh.element_vertices(e)));
            let v = [
                self.values[3 * e],
                self.values[3 * e + 1],
                self.values[3 * e + 2],
            ];
            acc += mass_quadratic(area, &v, &v);
        }
        acc.max(T::zero()).sqrt()
    }

    /// Exact `L2` distance between two fields on the same mesh.
    pub fn l2_distance(&self, other: &BulkField<T>, mesh: &MeshLevel) -> T {
        let diff = BulkField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a - b)
                .collect(),
        };
        diff.l2_norm(mesh)
    }

    /// `L2` distance to a closure, with a degree-4 quadrature.
    pub fn l2_error_vs(&self, mesh: &MeshLevel, exact: impl Fn(f64, f64) -> T) -> T {
        let mut acc = T::zero();
        for e in 0..mesh.elements.len() {
            let verts = mesh.element_vertices(e);
            for (x, w) in triangle_deg4::<T>(&verts) {
                let lam = barycentric(&verts, x);
                let mut val = T::zero();
                for i in 0..3 {
                    val += lam[i] * self.values[3 * e + i];
                }
                let d = val
                    - exact(
                        x[0].to_f64().unwrap_or(f64::NAN),
                        x[1].to_f64().unwrap_or(f64::NAN),
                    );
                acc += w * d * d;
            }
        }
        acc.max(T::zero()).sqrt()
    }

    /// Value at the barycenter of an element.
    pub fn at_barycenter(&self, e: usize) -> T {
        (self.values[3 * e] + self.values[3 * e + 1] + self.values[3 * e + 2]) / real::<T>(3.0)
    }

    /// Broken gradient on an element (constant per element).
    pub fn gradient_on(&self, mesh: &MeshLevel, e: usize) -> [T; 2] {
        let verts = mesh.element_vertices(e);
        let area = triangle_area(&verts);
        let mut g = [T::zero(); 2];
        for i in 0..3 {
            let a = verts[(i + 1) % 3];
            let b = verts[(i + 2) % 3];
            let gi = [
                real::<T>(-(b[1] - a[1]) / (2.0 * area)),
                real::<T>((b[0] - a[0]) / (2.0 * area)),
            ];
            g[0] += self.values[3 * e + i] * gi[0];
            g[1] += self.values[3 * e + i] * gi[1];
        }
        g
    }
}

impl<T: Real> FluxField<T> {
    /// Exact `L2` norm, component-wise quadratic integrands.
    pub fn l2_norm(&self, mesh: &MeshLevel) -> T {
        let mut acc = T::zero();
        for e in 0..mesh.elements.len() {
            let area = real::<T>(triangle_area(&mesh.element_vertices(e)));
            for comp in 0..2 {
                let v = [
                    self.values[6 * e + 3 * comp],
                    self.values[6 * e + 3 * comp + 1],
                    self.values[6 * e + 3 * comp + 2],
                ];
                acc += mass_quadratic(area, &v, &v);
            }
        }
        acc.max(T::zero()).sqrt()
    }

    /// Exact `L2` norm restricted to one element.
    pub fn l2_norm_on(&self, mesh: &MeshLevel, e: usize) -> T {
        let area = real::<T>(triangle_area(&mesh.element_vertices(e)));
        let mut acc = T::zero();
        for comp in 0..2 {
            let v = [
                self.values[6 * e + 3 * comp],
                self.values[6 * e + 3 * comp + 1],
                self.values[6 * e + 3 * comp + 2],
            ];
            acc += mass_quadratic(area, &v, &v);
        }
        acc.max(T::zero()).sqrt()
    }

    pub fn l2_distance(&self, other: &FluxField<T>, mesh: &MeshLevel) -> T {
        let diff = FluxField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a - b)
                .collect(),
        };
        diff.l2_norm(mesh)
    }

    /// `L2` norm of `q + A grad u` over the mesh, for element-wise constant
    /// `A` given per element; `u` is a bulk field on the same mesh. The
    /// integrand is quadratic, so the result is exact.
    pub fn defect_vs_gradient(
        &self,
        mesh: &MeshLevel,
        u: &BulkField<T>,
        coeff_of: impl Fn(usize) -> T,
    ) -> T {
        let mut acc = T::zero();
        for e in 0..mesh.elements.len() {
            let area = real::<T>(triangle_area(&mesh.element_vertices(e)));
            let grad = u.gradient_on(mesh, e);
            let c = coeff_of(e);
            for comp in 0..2 {
                let shift = c * grad[comp];
                let v = [
                    self.values[6 * e + 3 * comp] + shift,
                    self.values[6 * e + 3 * comp + 1] + shift,
                    self.values[6 * e + 3 * comp + 2] + shift,
                ];
                acc += mass_quadratic(area, &v, &v);
            }
        }
        acc.max(T::zero()).sqrt()
    }
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
    use crate::mesh::MeshLevel;

    #[test]
    fn constant_field_norm() {
        let mesh = MeshLevel::build(2);
        let field = BulkField {
            values: vec![3.0f64; 3 * mesh.elements.len()],
        };
        // ||3||_L2 over the unit square.
        assert!((field.l2_norm(&mesh) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn linear_field_norm_exact() {
        // w = x: nodal interpolation is exact, ||x||^2 = 1/3.
        let mesh = MeshLevel::build(3);
        let mut values = Vec::new();
        for e in 0..mesh.elements.len() {
            for v in mesh.element_vertices(e) {
                values.push(v[0]);
            }
        }
        let field = BulkField { values };
        assert!((field.l2_norm(&mesh).powi(2) - 1.0 / 3.0).abs() < 1e-14);
        assert!(field.l2_error_vs(&mesh, |x, _| x) < 1e-14);
        for e in 0..mesh.elements.len() {
            let g = field.gradient_on(&mesh, e);
            assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
        }
    }

    #[test]
    fn flux_defect_vanishes_for_matching_gradient() {
        let mesh = MeshLevel::build(2);
        // u = y, A = 2: q = -A grad u = (0, -2) makes the defect zero.
        let mut uv = Vec::new();
        let mut qv = Vec::new();
        for e in 0..mesh.elements.len() {
            for v in mesh.element_vertices(e) {
                uv.push(v[1]);
            }
            qv.extend_from_slice(&[0.0, 0.0, 0.0, -2.0, -2.0, -2.0]);
        }
        let u = BulkField { values: uv };
        let q = FluxField { values: qv };
        assert!(q.defect_vs_gradient(&mesh, &u, |_| 2.0) < 1e-13);
        assert!((q.l2_norm(&mesh) - 2.0).abs() < 1e-13);
    }
}
