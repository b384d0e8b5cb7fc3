//! Nested uniform triangulations of the unit square.
//!
//! Every level splits the square into `2^k x 2^k` cells and each cell into two
//! triangles along the lower-left to upper-right diagonal. Using the same
//! diagonal on every level makes refinement exactly nested: each coarse
//! triangle is the union of `4^(k_h - k_H)` fine triangles and every fine face
//! on the coarse skeleton tiles exactly one coarse face.
//!
//! Face ids are deterministic: faces are sorted lexicographically by their
//! `(min vertex, max vertex)` key.

use crate::{Error, Result};

/// Default cap on the fine skeletal dof count accepted by [`build_hierarchy`].
pub const DEFAULT_DOF_BUDGET: usize = 4_000_000;

/// A mesh face (edge) with its global orientation.
#[derive(Debug, Clone)]
pub struct Face {
    /// Endpoint vertex ids, `vertices.0 < vertices.1`.
    pub vertices: (usize, usize),
    /// Unit normal pointing from the lower-id adjacent element into the
    /// higher-id one (outward on the boundary).
    pub normal: [f64; 2],
}

/// One uniform triangulation level.
#[derive(Debug, Clone)]
pub struct MeshLevel {
    /// Grid order `k`; the mesh size is `2^-k`.
    pub grid_order: usize,
    /// Vertex coordinates, row-major over the `(2^k + 1)^2` grid points.
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub elements: Vec<[usize; 3]>,
    /// Faces sorted by `(min vertex, max vertex)`.
    pub faces: Vec<Face>,
    /// Per element, the global ids of its edges `(v0,v1), (v1,v2), (v2,v0)`.
    pub element_faces: Vec<[usize; 3]>,
    /// Per element and local edge: `+1` if the local traversal direction
    /// agrees with the global low-to-high vertex orientation.
    pub element_face_signs: Vec<[i8; 3]>,
    /// Adjacent elements per face, lower id first.
    pub face_elements: Vec<(usize, Option<usize>)>,
    /// Whether a face lies on the domain boundary.
    pub boundary_face: Vec<bool>,
    /// Whether a vertex lies on the domain boundary.
    pub boundary_vertex: Vec<bool>,
    /// Elements incident to each vertex.
    pub vertex_elements: Vec<Vec<usize>>,
}

impl MeshLevel {
    /// Builds the level-`k` triangulation.
    pub fn build(k: usize) -> Self {
        let n = 1usize << k;
        let nv = n + 1;
        let vid = |i: usize, j: usize| j * nv + i;

        let mut vertices = Vec::with_capacity(nv * nv);
        for j in 0..nv {
            for i in 0..nv {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let boundary_vertex: Vec<bool> = (0..nv * nv)
            .map(|v| {
                let (i, j) = (v % nv, v / nv);
                i == 0 || j == 0 || i == n || j == n
            })
            .collect();

        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
                elements.push([a, b, d]); // lower-right triangle
                elements.push([a, d, c]); // upper-left triangle
            }
        }

        // Deduplicated faces in (min, max) order; ids follow the sort.
        let mut keys: Vec<(usize, usize)> = Vec::with_capacity(3 * elements.len());
        for tri in &elements {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                keys.push((a.min(b), a.max(b)));
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let face_id = |key: (usize, usize)| keys.binary_search(&key).expect("face key");

        let mut element_faces = Vec::with_capacity(elements.len());
        let mut element_face_signs = Vec::with_capacity(elements.len());
        let mut face_elements: Vec<(usize, Option<usize>)> = vec![(usize::MAX, None); keys.len()];
        for (t, tri) in elements.iter().enumerate() {
            let mut ids = [0usize; 3];
            let mut signs = [0i8; 3];
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let f = face_id((a.min(b), a.max(b)));
                ids[e] = f;
                signs[e] = if a < b { 1 } else { -1 };
                let slot = &mut face_elements[f];
                if slot.0 == usize::MAX {
                    slot.0 = t;
                } else {
                    debug_assert!(slot.1.is_none());
                    slot.1 = Some(t);
                }
            }
            element_faces.push(ids);
            element_face_signs.push(signs);
        }

        let mut faces = Vec::with_capacity(keys.len());
        let mut boundary_face = Vec::with_capacity(keys.len());
        for (f, &(a, b)) in keys.iter().enumerate() {
            let (pa, pb) = (vertices[a], vertices[b]);
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let mut normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
            // Orient away from the first (lower-id) adjacent element.
            let e0 = face_elements[f].0;
            let bary = barycenter(&vertices, &elements[e0]);
            let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            if (bary[0] - mid[0]) * normal[0] + (bary[1] - mid[1]) * normal[1] > 0.0 {
                normal = [-normal[0], -normal[1]];
            }
            faces.push(Face {
                vertices: (a, b),
                normal,
            });
            boundary_face.push(face_elements[f].1.is_none());
        }

        let mut vertex_elements = vec![Vec::new(); nv * nv];
        for (t, tri) in elements.iter().enumerate() {
            for &v in tri {
                vertex_elements[v].push(t);
            }
        }

        MeshLevel {
            grid_order: k,
            vertices,
            elements,
            faces,
            element_faces,
            element_face_signs,
            face_elements,
            boundary_face,
            boundary_vertex,
            vertex_elements,
        }
    }

    /// Number of cells per side.
    pub fn cells_per_side(&self) -> usize {
        1 << self.grid_order
    }

    /// Mesh size `2^-k`.
    pub fn mesh_size(&self) -> f64 {
        1.0 / self.cells_per_side() as f64
    }

    /// Element id of triangle `t` in cell `(i, j)`.
    pub fn element_id(&self, i: usize, j: usize, t: usize) -> usize {
        2 * (j * self.cells_per_side() + i) + t
    }

    /// Inverse of [`element_id`](Self::element_id): `(cell i, cell j, t)`.
    pub fn element_cell(&self, e: usize) -> (usize, usize, usize) {
        let n = self.cells_per_side();
        let t = e % 2;
        let cell = e / 2;
        (cell % n, cell / n, t)
    }

    /// Physical vertex positions of an element.
    pub fn element_vertices(&self, e: usize) -> [[f64; 2]; 3] {
        let tri = self.elements[e];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    /// Element barycenter.
    pub fn element_barycenter(&self, e: usize) -> [f64; 2] {
        barycenter(&self.vertices, &self.elements[e])
    }

    /// Face midpoint.
    pub fn face_midpoint(&self, f: usize) -> [f64; 2] {
        let (a, b) = self.faces[f].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Face length.
    pub fn face_length(&self, f: usize) -> f64 {
        let (a, b) = self.faces[f].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    /// Number of interior (non-boundary) faces.
    pub fn interior_face_count(&self) -> usize {
        self.boundary_face.iter().filter(|b| !**b).count()
    }

    /// `|E| / |∂E|`, the weight of the mesh-dependent skeletal product; the
    /// mesh is uniform so this is the same for every element.
    pub fn product_weight(&self) -> f64 {
        let h = self.mesh_size();
        let area = 0.5 * h * h;
        let perimeter = (2.0 + std::f64::consts::SQRT_2) * h;
        area / perimeter
    }
}

fn barycenter(vertices: &[[f64; 2]], tri: &[usize; 3]) -> [f64; 2] {
    let mut b = [0.0; 2];
    for &v in tri {
        b[0] += vertices[v][0] / 3.0;
        b[1] += vertices[v][1] / 3.0;
    }
    b
}

/// The coarse/epsilon/fine mesh hierarchy.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    pub coarse: MeshLevel,
    pub fine: MeshLevel,
    /// Order of the epsilon cell grid carrying the coefficient. The grid is
    /// square cells only; it never needs a triangulation.
    pub k_eps: usize,
    /// Fine elements contained in each coarse element.
    pub coarse_to_fine: Vec<Vec<usize>>,
    /// For each fine face: the coarse face containing it, if the fine face
    /// lies on the coarse skeleton.
    pub fine_face_on_coarse_skeleton: Vec<Option<usize>>,
}

/// Builds the hierarchy `k_H <= k_eps <= k_h` under the default dof budget.
pub fn build_hierarchy(k_coarse: usize, k_eps: usize, k_fine: usize) -> Result<MeshHierarchy> {
    build_hierarchy_with_budget(k_coarse, k_eps, k_fine, DEFAULT_DOF_BUDGET)
}

/// Builds the hierarchy with an explicit fine-dof budget.
pub fn build_hierarchy_with_budget(
    k_coarse: usize,
    k_eps: usize,
    k_fine: usize,
    dof_budget: usize,
) -> Result<MeshHierarchy> {
    if !(k_coarse <= k_eps && k_eps <= k_fine) {
        return Err(Error::InvalidParameter(format!(
            "mesh orders must satisfy k_H <= k_eps <= k_h, got ({k_coarse}, {k_eps}, {k_fine})"
        )));
    }
    let n = 1usize << k_fine;
    let fine_dofs = 2 * (3 * n * n + 2 * n - 4 * n);
    if fine_dofs > dof_budget {
        return Err(Error::Budget {
            need: fine_dofs,
            cap: dof_budget,
        });
    }

    let coarse = MeshLevel::build(k_coarse);
    let fine = MeshLevel::build(k_fine);
    let ratio = 1usize << (k_fine - k_coarse);

    // Fine triangles inside a coarse triangle, by index arithmetic on the
    // shared diagonal direction: within a coarse cell with local fine cell
    // coordinates (x, y) in [0, r)^2, the lower coarse triangle contains the
    // lower fine triangle iff y <= x and the upper fine triangle iff y < x.
    let mut coarse_to_fine = vec![Vec::new(); coarse.elements.len()];
    for (ce, list) in coarse_to_fine.iter_mut().enumerate() {
        let (ci, cj, ct) = coarse.element_cell(ce);
        for y in 0..ratio {
            for x in 0..ratio {
                let (fi, fj) = (ci * ratio + x, cj * ratio + y);
                for t in 0..2 {
                    let in_lower = if t == 0 { y <= x } else { y < x };
                    if (ct == 0) == in_lower {
                        list.push(fine.element_id(fi, fj, t));
                    }
                }
            }
        }
        list.sort_unstable();
    }

    let fine_face_on_coarse_skeleton = classify_fine_faces(&coarse, &fine, ratio);

    Ok(MeshHierarchy {
        coarse,
        fine,
        k_eps,
        coarse_to_fine,
        fine_face_on_coarse_skeleton,
    })
}

fn classify_fine_faces(coarse: &MeshLevel, fine: &MeshLevel, ratio: usize) -> Vec<Option<usize>> {
    let nvf = fine.cells_per_side() + 1;
    let nvc = coarse.cells_per_side() + 1;
    let coarse_vid = |i: usize, j: usize| j * nvc + i;
    let coarse_face_id = |a: usize, b: usize| {
        let key = (a.min(b), a.max(b));
        coarse
            .faces
            .binary_search_by(|f| f.vertices.cmp(&key))
            .expect("coarse face")
    };

    fine.faces
        .iter()
        .map(|face| {
            let (a, b) = face.vertices;
            let (ai, aj) = (a % nvf, a / nvf);
            let (bi, bj) = (b % nvf, b / nvf);
            if aj == bj {
                // Horizontal fine face.
                if aj % ratio != 0 {
                    return None;
                }
                let (ci, cj) = (ai.min(bi) / ratio, aj / ratio);
                Some(coarse_face_id(coarse_vid(ci, cj), coarse_vid(ci + 1, cj)))
            } else if ai == bi {
                // Vertical fine face.
                if ai % ratio != 0 {
                    return None;
                }
                let (ci, cj) = (ai / ratio, aj.min(bj) / ratio);
                Some(coarse_face_id(coarse_vid(ci, cj), coarse_vid(ci, cj + 1)))
            } else {
                // Diagonal fine face; on a coarse diagonal iff the local
                // offsets inside the coarse cell are equal.
                if ai % ratio != aj % ratio {
                    return None;
                }
                let (ci, cj) = (ai.min(bi) / ratio, aj.min(bj) / ratio);
                Some(coarse_face_id(
                    coarse_vid(ci, cj),
                    coarse_vid(ci + 1, cj + 1),
                ))
            }
        })
        .collect()
}

/// An `ℓ`-th order element patch `N^ℓ(E)` on the coarse mesh.
#[derive(Debug, Clone)]
pub struct Patch {
    /// The coarse element the patch grew from.
    pub center: usize,
    /// Patch order `ℓ`.
    pub order: usize,
    /// Coarse elements of the patch, sorted.
    pub elements: Vec<usize>,
    /// Coarse vertices with every incident element inside the patch and not
    /// on the domain boundary.
    pub interior_coarse_vertices: Vec<usize>,
    /// Coarse faces with both adjacent elements inside the patch.
    pub interior_coarse_faces: Vec<usize>,
    /// Fine faces with both adjacent elements inside the patch.
    pub interior_fine_faces: Vec<usize>,
}

impl Patch {
    /// Whether the patch covers the whole mesh.
    pub fn is_saturated(&self, hier: &MeshHierarchy) -> bool {
        self.elements.len() == hier.coarse.elements.len()
    }
}

/// Grows the `ℓ`-fold vertex-neighborhood patch around coarse element
/// `center` and collects its interior index sets.
pub fn patch(hier: &MeshHierarchy, center: usize, order: usize) -> Result<Patch> {
    if order == 0 {
        return Err(Error::InvalidParameter("patch order must be >= 1".into()));
    }
    if center >= hier.coarse.elements.len() {
        return Err(Error::InvalidParameter(format!(
            "coarse element {center} out of range"
        )));
    }
    let coarse = &hier.coarse;
    let mut in_patch = vec![false; coarse.elements.len()];
    in_patch[center] = true;
    for _ in 0..order {
        let current: Vec<usize> = (0..coarse.elements.len()).filter(|&e| in_patch[e]).collect();
        for e in current {
            for &v in &coarse.elements[e] {
                for &nb in &coarse.vertex_elements[v] {
                    in_patch[nb] = true;
                }
            }
        }
    }
    Ok(collect_patch(hier, center, order, in_patch))
}

fn collect_patch(
    hier: &MeshHierarchy,
    center: usize,
    order: usize,
    in_patch: Vec<bool>,
) -> Patch {
    let coarse = &hier.coarse;
    let elements: Vec<usize> = (0..coarse.elements.len()).filter(|&e| in_patch[e]).collect();

    let mut vertex_touched = vec![false; coarse.vertices.len()];
    for &e in &elements {
        for &v in &coarse.elements[e] {
            vertex_touched[v] = true;
        }
    }
    let interior_coarse_vertices: Vec<usize> = (0..coarse.vertices.len())
        .filter(|&v| {
            vertex_touched[v]
                && !coarse.boundary_vertex[v]
                && coarse.vertex_elements[v].iter().all(|&e| in_patch[e])
        })
        .collect();

    let interior_coarse_faces: Vec<usize> = (0..coarse.faces.len())
        .filter(|&f| {
            let (e0, e1) = coarse.face_elements[f];
            match e1 {
                Some(e1) => in_patch[e0] && in_patch[e1],
                None => false,
            }
        })
        .collect();

    let mut fine_in_patch = vec![false; hier.fine.elements.len()];
    for &ce in &elements {
        for &fe in &hier.coarse_to_fine[ce] {
            fine_in_patch[fe] = true;
        }
    }
    let interior_fine_faces: Vec<usize> = (0..hier.fine.faces.len())
        .filter(|&f| {
            let (e0, e1) = hier.fine.face_elements[f];
            match e1 {
                Some(e1) => fine_in_patch[e0] && fine_in_patch[e1],
                None => false,
            }
        })
        .collect();

    Patch {
        center,
        order,
        elements,
        interior_coarse_vertices,
        interior_coarse_faces,
        interior_fine_faces,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn level_counts() {
        for k in 0..5 {
            let m = MeshLevel::build(k);
            let n = 1usize << k;
            assert_eq!(m.elements.len(), 2 * n * n);
            assert_eq!(m.vertices.len(), (n + 1) * (n + 1));
            assert_eq!(m.faces.len(), 3 * n * n + 2 * n);
        }
    }

    #[test]
    fn unit_square_split_once() {
        // Hand enumeration of the k = 0 mesh.
        let m = MeshLevel::build(0);
        assert_eq!(m.elements.len(), 2);
        assert_eq!(m.faces.len(), 5);
        assert_eq!(m.interior_face_count(), 1);
    }

    #[test]
    fn face_counts_match_exhaustive_enumeration() {
        // Independent oracle: collect all triangle edges of the 2x2 grid.
        let m = MeshLevel::build(1);
        let mut edges = BTreeSet::new();
        for tri in &m.elements {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        assert_eq!(edges.len(), 16);
        assert_eq!(m.faces.len(), 16);
        let interior = m
            .faces
            .iter()
            .enumerate()
            .filter(|(f, _)| m.face_elements[*f].1.is_some())
            .count();
        assert_eq!(interior, 8);
    }

    #[test]
    fn adjacency_and_orientation() {
        let m = MeshLevel::build(2);
        for f in 0..m.faces.len() {
            let (e0, e1) = m.face_elements[f];
            assert!(e0 != usize::MAX);
            if let Some(e1) = e1 {
                assert!(e0 < e1, "lower element id first");
                assert!(!m.boundary_face[f]);
            } else {
                assert!(m.boundary_face[f]);
                // Outward: normal points away from the element barycenter.
                let bary = m.element_barycenter(e0);
                let mid = m.face_midpoint(f);
                let nrm = m.faces[f].normal;
                assert!((bary[0] - mid[0]) * nrm[0] + (bary[1] - mid[1]) * nrm[1] < 0.0);
            }
        }
    }

    #[test]
    fn positive_areas() {
        let m = MeshLevel::build(3);
        let h = m.mesh_size();
        for e in 0..m.elements.len() {
            let area = crate::quad::triangle_area(&m.element_vertices(e));
            assert!((area - 0.5 * h * h).abs() < 1e-15);
        }
    }

    #[test]
    fn euler_characteristic() {
        for k in 0..5 {
            let m = MeshLevel::build(k);
            let chi =
                m.vertices.len() as isize - m.faces.len() as isize + m.elements.len() as isize;
            assert_eq!(chi, 1);
        }
    }

    #[test]
    fn hierarchy_counts_and_partition() {
        let h = build_hierarchy(1, 1, 2).unwrap();
        assert_eq!(h.coarse.elements.len(), 8);
        assert_eq!(h.fine.elements.len(), 32);
        // coarse_to_fine partitions the fine element set.
        let mut seen = vec![false; h.fine.elements.len()];
        for list in &h.coarse_to_fine {
            assert_eq!(list.len(), 4);
            for &fe in list {
                assert!(!seen[fe], "fine element assigned twice");
                seen[fe] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn containment_is_geometric() {
        let h = build_hierarchy(1, 2, 3).unwrap();
        for (ce, list) in h.coarse_to_fine.iter().enumerate() {
            let verts = h.coarse.element_vertices(ce);
            for &fe in list {
                let b = h.fine.element_barycenter(fe);
                assert!(
                    point_in_triangle(b, &verts),
                    "barycenter of fine {fe} outside coarse {ce}"
                );
            }
        }
    }

    fn point_in_triangle(p: [f64; 2], v: &[[f64; 2]; 3]) -> bool {
        for e in 0..3 {
            let (a, b) = (v[e], v[(e + 1) % 3]);
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            if cross < 0.0 {
                return false;
            }
        }
        true
    }

    #[test]
    fn skeleton_faces_tile_coarse_faces() {
        let h = build_hierarchy(2, 2, 4).unwrap();
        let ratio = 4usize;
        let mut tiled = vec![0.0f64; h.coarse.faces.len()];
        let mut counts = vec![0usize; h.coarse.faces.len()];
        for (ff, mapped) in h.fine_face_on_coarse_skeleton.iter().enumerate() {
            if let Some(cf) = mapped {
                tiled[*cf] += h.fine.face_length(ff);
                counts[*cf] += 1;
            }
        }
        for cf in 0..h.coarse.faces.len() {
            let len = h.coarse.face_length(cf);
            assert_eq!(counts[cf], ratio);
            assert!((tiled[cf] - len).abs() <= 1e-14 * len);
        }
    }

    #[test]
    fn rejects_bad_orders_and_budget() {
        assert!(build_hierarchy(3, 2, 4).is_err());
        assert!(matches!(
            build_hierarchy_with_budget(1, 1, 6, 100),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn patch_saturates() {
        let h = build_hierarchy(2, 2, 2).unwrap();
        // Corner element, large order: the whole mesh.
        let p = patch(&h, 0, 10).unwrap();
        assert_eq!(p.elements.len(), 32);
        assert!(p.is_saturated(&h));
    }

    /// Brute-force vertex-sharing neighborhood, quadratic in element count.
    fn neighborhood_oracle(m: &MeshLevel, seed: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &e in seed {
            for other in 0..m.elements.len() {
                let shares = m.elements[e]
                    .iter()
                    .any(|v| m.elements[other].contains(v));
                if shares {
                    out.insert(other);
                }
            }
        }
        out
    }

    #[test]
    fn first_order_patch_matches_vertex_sharing_scan() {
        let h = build_hierarchy(3, 3, 3).unwrap();
        // An element away from the boundary.
        let center = h.coarse.element_id(3, 4, 0);
        let p = patch(&h, center, 1).unwrap();
        let oracle = neighborhood_oracle(&h.coarse, &BTreeSet::from([center]));
        assert_eq!(BTreeSet::from_iter(p.elements.iter().copied()), oracle);
    }

    #[test]
    fn higher_order_patch_is_iterated_neighborhood() {
        let h = build_hierarchy(3, 3, 3).unwrap();
        let center = h.coarse.element_id(2, 2, 1);
        let mut oracle = BTreeSet::from([center]);
        for ell in 1..=3 {
            oracle = neighborhood_oracle(&h.coarse, &oracle);
            let p = patch(&h, center, ell).unwrap();
            assert_eq!(BTreeSet::from_iter(p.elements.iter().copied()), oracle);
        }
    }

    #[test]
    fn patch_monotone_in_order() {
        let h = build_hierarchy(2, 2, 3).unwrap();
        for center in 0..h.coarse.elements.len() {
            let mut prev: Option<BTreeSet<usize>> = None;
            for ell in 1..=4 {
                let p = patch(&h, center, ell).unwrap();
                let set = BTreeSet::from_iter(p.elements.iter().copied());
                if let Some(prev) = &prev {
                    assert!(prev.is_subset(&set));
                }
                prev = Some(set);
            }
        }
    }

    #[test]
    fn patch_interior_sets_exclude_patch_boundary() {
        let h = build_hierarchy(3, 3, 4).unwrap();
        let center = h.coarse.element_id(3, 3, 0);
        let p = patch(&h, center, 1).unwrap();
        let inside: BTreeSet<usize> = p.elements.iter().copied().collect();
        for &v in &p.interior_coarse_vertices {
            assert!(!h.coarse.boundary_vertex[v]);
            for &e in &h.coarse.vertex_elements[v] {
                assert!(inside.contains(&e));
            }
        }
        for &f in &p.interior_coarse_faces {
            let (e0, e1) = h.coarse.face_elements[f];
            assert!(inside.contains(&e0) && inside.contains(&e1.unwrap()));
        }
    }
}
