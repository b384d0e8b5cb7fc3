//! Quadrature rules on triangles and edges.
//!
//! The LDG-H kernels only integrate polynomials: degree 2 in the bulk
//! (products of two linears), degree 2 on edges. Right-hand sides use a
//! degree-4 bulk rule. All rules return physical points and weights that
//! already include the element measure.

use crate::{real, Real};

/// Midpoint rule on a triangle, exact for polynomials of degree 2.
///
/// `verts` are the physical vertices; weights sum to the triangle area.
pub fn triangle_deg2<T: Real>(verts: &[[f64; 2]; 3]) -> [([T; 2], T); 3] {
    let area = triangle_area(verts);
    let w = real::<T>(area / 3.0);
    let mid = |a: usize, b: usize| {
        [
            real::<T>(0.5 * (verts[a][0] + verts[b][0])),
            real::<T>(0.5 * (verts[a][1] + verts[b][1])),
        ]
    };
    [(mid(0, 1), w), (mid(1, 2), w), (mid(2, 0), w)]
}

// Dunavant 6-point rule, exact for degree 4.
const D4_W: [f64; 2] = [0.223_381_589_678_011, 0.109_951_743_655_322];
const D4_A: [f64; 2] = [0.445_948_490_915_965, 0.091_576_213_509_771];

/// Six-point rule on a triangle, exact for polynomials of degree 4.
pub fn triangle_deg4<T: Real>(verts: &[[f64; 2]; 3]) -> [([T; 2], T); 6] {
    let area = triangle_area(verts);
    let mut out = [([T::zero(), T::zero()], T::zero()); 6];
    let mut k = 0;
    for g in 0..2 {
        let (w, a) = (D4_W[g], D4_A[g]);
        // The three cyclic permutations of barycentric (1-2a, a, a).
        for r in 0..3 {
            let mut bary = [a; 3];
            bary[r] = 1.0 - 2.0 * a;
            let mut x = [0.0; 2];
            for v in 0..3 {
                x[0] += bary[v] * verts[v][0];
                x[1] += bary[v] * verts[v][1];
            }
            out[k] = ([real(x[0]), real(x[1])], real(w * area));
            k += 1;
        }
    }
    out
}

/// Two-point Gauss rule on the segment `a..b`, exact for degree 3.
///
/// Returns physical points, weights (summing to the segment length), and the
/// arclength parameter of each point measured from `a`.
pub fn edge_gauss2<T: Real>(a: [f64; 2], b: [f64; 2]) -> [([T; 2], T, T); 2] {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let offset = 0.5 / f64::sqrt(3.0);
    let mut out = [([T::zero(), T::zero()], T::zero(), T::zero()); 2];
    for (k, s) in [0.5 - offset, 0.5 + offset].into_iter().enumerate() {
        let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
        out[k] = ([real(x[0]), real(x[1])], real(0.5 * len), real(s * len));
    }
    out
}

/// Signed area of a triangle given counter-clockwise vertices.
pub fn triangle_area(verts: &[[f64; 2]; 3]) -> f64 {
    let [a, b, c] = verts;
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const T0: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    fn integrate_tri_deg2(f: impl Fn(f64, f64) -> f64, verts: &[[f64; 2]; 3]) -> f64 {
        triangle_deg2::<f64>(verts)
            .iter()
            .map(|(x, w)| w * f(x[0], x[1]))
            .sum()
    }

    #[test]
    fn deg2_exact_on_monomials() {
        // Exact values on the reference triangle: ∫ x^i y^j.
        let cases = [
            (0, 0, 0.5),
            (1, 0, 1.0 / 6.0),
            (0, 1, 1.0 / 6.0),
            (1, 1, 1.0 / 24.0),
            (2, 0, 1.0 / 12.0),
            (0, 2, 1.0 / 12.0),
        ];
        for (i, j, exact) in cases {
            let got = integrate_tri_deg2(|x, y| x.powi(i) * y.powi(j), &T0);
            assert!((got - exact).abs() < 1e-15, "x^{i} y^{j}: {got} vs {exact}");
        }
    }

    #[test]
    fn deg4_exact_on_quartics() {
        // ∫ x^4 = 1/30, ∫ x^2 y^2 = 1/180 on the reference triangle.
        let q = triangle_deg4::<f64>(&T0);
        let int = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
            q.iter().map(|(x, w)| w * f(x[0], x[1])).sum()
        };
        assert!((int(&|x, _| x.powi(4)) - 1.0 / 30.0).abs() < 1e-15);
        assert!((int(&|x, y| x * x * y * y) - 1.0 / 180.0).abs() < 1e-16);
        let wsum: f64 = q.iter().map(|(_, w)| w).sum();
        assert!((wsum - 0.5).abs() < 1e-15);
    }

    #[test]
    fn edge_rule_exact_on_cubics() {
        let a = [0.25, 0.5];
        let b = [0.75, 1.0];
        let len = f64::sqrt(0.5 * 0.5 + 0.5 * 0.5);
        let q = edge_gauss2::<f64>(a, b);
        // ∫_0^L t^3 dt = L^4/4 in arclength.
        let got: f64 = q.iter().map(|(_, w, t)| w * t.powi(3)).sum();
        assert!((got - len.powi(4) / 4.0).abs() < 1e-15);
    }
}
