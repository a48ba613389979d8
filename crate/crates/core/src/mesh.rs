//! Uniform periodic triangulations of the unit square identified with the 2-torus.
//!
//! Every grid cell `(i, j)` is split along the diagonal from `(i, j)` to
//! `(i + 1, j + 1)` into a lower triangle `(i,j) (i+1,j) (i+1,j+1)` and an upper
//! triangle `(i,j) (i+1,j+1) (i,j+1)`. Entities are numbered lexicographically
//! by grid index and periodic partners are identified by index arithmetic
//! modulo `n`, so no floating-point matching is involved.

use crate::error::MeshError;

/// Grid offsets of the three local vertices of the lower and upper triangle.
const LOWER: [(usize, usize); 3] = [(0, 0), (1, 0), (1, 1)];
const UPPER: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

/// Edge kinds attached to every grid cell; edge id = `3 * cell + kind`.
const EDGE_HORIZONTAL: usize = 0;
const EDGE_VERTICAL: usize = 1;
const EDGE_DIAGONAL: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicTriMesh {
    n: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// Local edge `k` of a triangle joins local vertices `k` and `(k + 1) % 3`.
    triangle_edges: Vec<[usize; 3]>,
    h: f64,
}

/// Affine map from the reference triangle `{(0,0), (1,0), (0,1)}` onto a
/// physical element. Coordinates of wrapped elements are unwrapped, so some
/// may equal 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub coords: [[f64; 2]; 3],
    /// Columns are the images of the reference edge vectors.
    pub jacobian: [[f64; 2]; 2],
    /// Transposed inverse Jacobian, maps reference gradients to physical ones.
    pub inv_jacobian_t: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementGeometry {
    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn map(&self, xi: f64, eta: f64) -> [f64; 2] {
        let [o, _, _] = self.coords;
        [
            o[0] + self.jacobian[0][0] * xi + self.jacobian[0][1] * eta,
            o[1] + self.jacobian[1][0] * xi + self.jacobian[1][1] * eta,
        ]
    }

    #[inline]
    pub fn gradient(&self, reference: [f64; 2]) -> [f64; 2] {
        let g = &self.inv_jacobian_t;
        [
            g[0][0] * reference[0] + g[0][1] * reference[1],
            g[1][0] * reference[0] + g[1][1] * reference[1],
        ]
    }
}

impl PeriodicTriMesh {
    pub fn build_uniform(n: usize) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::ZeroSubdivisions);
        }
        let nf = n as f64;
        let vertex = |i: usize, j: usize| (j % n) * n + (i % n);
        let cell = |i: usize, j: usize| (j % n) * n + (i % n);

        let mut vertices = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                vertices.push([i as f64 / nf, j as f64 / nf]);
            }
        }

        let mut edges = Vec::with_capacity(3 * n * n);
        for j in 0..n {
            for i in 0..n {
                edges.push([vertex(i, j), vertex(i + 1, j)]);
                edges.push([vertex(i, j), vertex(i, j + 1)]);
                edges.push([vertex(i, j), vertex(i + 1, j + 1)]);
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        let mut triangle_edges = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let c = cell(i, j);
                triangles.push(LOWER.map(|(di, dj)| vertex(i + di, j + dj)));
                triangle_edges.push([
                    3 * c + EDGE_HORIZONTAL,
                    3 * cell(i + 1, j) + EDGE_VERTICAL,
                    3 * c + EDGE_DIAGONAL,
                ]);
                triangles.push(UPPER.map(|(di, dj)| vertex(i + di, j + dj)));
                triangle_edges.push([
                    3 * c + EDGE_DIAGONAL,
                    3 * cell(i, j + 1) + EDGE_HORIZONTAL,
                    3 * c + EDGE_VERTICAL,
                ]);
            }
        }

        Ok(Self {
            n,
            vertices,
            triangles,
            edges,
            triangle_edges,
            h: std::f64::consts::SQRT_2 / nf,
        })
    }

    /// Uniform refinement: the mesh with `2n` subdivisions. Coarse vertex
    /// `(i, j)` becomes fine vertex `(2i, 2j)`; see [`Self::children`].
    pub fn refine(&self) -> Self {
        Self::build_uniform(2 * self.n).expect("2n >= 2")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Grid spacing `1/n`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Periodic identification: the vertex id of grid point `(i, j)` for any
    /// integer grid indices.
    pub fn periodic_vertex(&self, i: i64, j: i64) -> usize {
        let n = self.n as i64;
        (j.rem_euclid(n) * n + i.rem_euclid(n)) as usize
    }

    /// Grid cell and lower/upper flag of triangle `t`.
    pub fn cell_of(&self, t: usize) -> (usize, usize, bool) {
        let c = t / 2;
        (c % self.n, c / self.n, t % 2 == 1)
    }

    /// Midpoint of edge `e`, inside the fundamental domain `[0, 1)^2`.
    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let c = e / 3;
        let (i, j) = ((c % self.n) as f64, (c / self.n) as f64);
        let (di, dj) = match e % 3 {
            EDGE_HORIZONTAL => (0.5, 0.0),
            EDGE_VERTICAL => (0.0, 0.5),
            _ => (0.5, 0.5),
        };
        let nf = self.n as f64;
        [(i + di) / nf, (j + dj) / nf]
    }

    pub fn element_geometry(&self, t: usize) -> Result<ElementGeometry, MeshError> {
        if t >= self.triangles.len() {
            return Err(MeshError::TriangleOutOfRange {
                index: t,
                count: self.triangles.len(),
            });
        }
        Ok(self.geometry_unchecked(t))
    }

    #[inline]
    pub(crate) fn geometry_unchecked(&self, t: usize) -> ElementGeometry {
        let (i, j, upper) = self.cell_of(t);
        let nf = self.n as f64;
        let offsets = if upper { UPPER } else { LOWER };
        let coords = offsets.map(|(di, dj)| [(i + di) as f64 / nf, (j + dj) as f64 / nf]);
        let jacobian = [
            [coords[1][0] - coords[0][0], coords[2][0] - coords[0][0]],
            [coords[1][1] - coords[0][1], coords[2][1] - coords[0][1]],
        ];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let inv_jacobian_t = [
            [jacobian[1][1] / det, -jacobian[1][0] / det],
            [-jacobian[0][1] / det, jacobian[0][0] / det],
        ];
        ElementGeometry {
            coords,
            jacobian,
            inv_jacobian_t,
            det: det.abs(),
        }
    }

    /// Locate the element containing `x` (wrapped into the fundamental domain)
    /// and return it with the reference coordinates of the point.
    pub fn locate(&self, x: [f64; 2]) -> (usize, [f64; 2]) {
        let nf = self.n as f64;
        let cell_coord = |v: f64| {
            let s = v.rem_euclid(1.0) * nf;
            let k = (s.floor() as usize).min(self.n - 1);
            (k, s - k as f64)
        };
        let (i, a) = cell_coord(x[0]);
        let (j, b) = cell_coord(x[1]);
        let c = j * self.n + i;
        if b <= a {
            // lower: (0,0) + xi (1,0) + eta (1,1)
            (2 * c, [a - b, b])
        } else {
            // upper: (0,0) + xi (1,1) + eta (0,1)
            (2 * c + 1, [a, b - a])
        }
    }

    /// The four triangles of `self.refine()` that tile coarse triangle `t`.
    pub fn children(&self, t: usize) -> [usize; 4] {
        let (i, j, upper) = self.cell_of(t);
        let nf = 2 * self.n;
        let fine = |ci: usize, cj: usize, up: bool| 2 * (cj * nf + ci) + usize::from(up);
        let (i2, j2) = (2 * i, 2 * j);
        if upper {
            [
                fine(i2, j2, true),
                fine(i2, j2 + 1, false),
                fine(i2, j2 + 1, true),
                fine(i2 + 1, j2 + 1, true),
            ]
        } else {
            [
                fine(i2, j2, false),
                fine(i2 + 1, j2, false),
                fine(i2 + 1, j2, true),
                fine(i2 + 1, j2 + 1, false),
            ]
        }
    }

    /// Ratio of element diameter to inradius for triangle `t`.
    pub fn shape_ratio(&self, t: usize) -> f64 {
        let g = self.geometry_unchecked(t);
        let len = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let [a, b, c] = g.coords;
        let sides = [len(a, b), len(b, c), len(c, a)];
        let diameter = sides.iter().cloned().fold(0.0, f64::max);
        let inradius = 2.0 * g.area() / sides.iter().sum::<f64>();
        diameter / inradius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_subdivisions() {
        assert!(matches!(
            PeriodicTriMesh::build_uniform(0),
            Err(MeshError::ZeroSubdivisions)
        ));
    }

    #[test]
    fn torus_counts_and_euler_characteristic() {
        for n in [1usize, 2, 4, 8, 16] {
            let m = PeriodicTriMesh::build_uniform(n).unwrap();
            assert_eq!(m.num_vertices(), n * n);
            assert_eq!(m.num_edges(), 3 * n * n);
            assert_eq!(m.num_triangles(), 2 * n * n);
            let chi = m.num_vertices() as i64 - m.num_edges() as i64 + m.num_triangles() as i64;
            assert_eq!(chi, 0);
        }
        let m = PeriodicTriMesh::build_uniform(4).unwrap();
        assert_eq!(
            (m.num_vertices(), m.num_edges(), m.num_triangles()),
            (16, 48, 32)
        );
    }

    #[test]
    fn areas_sum_to_one_and_are_equal() {
        for n in [1usize, 2, 4, 8, 16] {
            let m = PeriodicTriMesh::build_uniform(n).unwrap();
            let areas: Vec<f64> = (0..m.num_triangles())
                .map(|t| m.element_geometry(t).unwrap().area())
                .collect();
            let total: f64 = areas.iter().sum();
            assert!((total - 1.0).abs() <= 1e-14, "n={n}: {total}");
            assert!(areas.iter().all(|&a| a > 0.0 && a == areas[0]));
        }
    }

    #[test]
    fn mesh_size_and_refinement() {
        let m = PeriodicTriMesh::build_uniform(8).unwrap();
        assert!((m.h() - 2f64.sqrt() / 8.0).abs() < 1e-15);
        let f = m.refine();
        assert_eq!(f.n(), 16);
        assert!((f.h() - m.h() / 2.0).abs() < 1e-15);
        let one = PeriodicTriMesh::build_uniform(1).unwrap().refine();
        assert_eq!(
            (one.num_vertices(), one.num_edges(), one.num_triangles()),
            (4, 12, 8)
        );
        assert_eq!(one, PeriodicTriMesh::build_uniform(2).unwrap());
    }

    #[test]
    fn quasi_uniform_shape_ratio() {
        let m = PeriodicTriMesh::build_uniform(8).unwrap();
        let r0 = m.shape_ratio(0);
        for t in 0..m.num_triangles() {
            assert!((m.shape_ratio(t) - r0).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_vertices_are_nested() {
        let coarse = PeriodicTriMesh::build_uniform(4).unwrap();
        let fine = coarse.refine();
        let target = [0.25, 0.5];
        assert!(coarse.vertices().contains(&target));
        assert!(fine.vertices().contains(&target));
        for (k, v) in coarse.vertices().iter().enumerate() {
            let (i, j) = (k % 4, k / 4);
            let fv = fine.vertices()[fine.periodic_vertex(2 * i as i64, 2 * j as i64)];
            assert_eq!(*v, fv);
        }
    }

    #[test]
    fn children_tile_their_parent() {
        let coarse = PeriodicTriMesh::build_uniform(3).unwrap();
        let fine = coarse.refine();
        for t in 0..coarse.num_triangles() {
            let parent = coarse.element_geometry(t).unwrap();
            let kids = coarse.children(t);
            let area: f64 = kids
                .iter()
                .map(|&c| fine.element_geometry(c).unwrap().area())
                .sum();
            assert!((area - parent.area()).abs() < 1e-15);
            for &c in &kids {
                let g = fine.element_geometry(c).unwrap();
                let centroid = g.map(1.0 / 3.0, 1.0 / 3.0);
                let (located, _) = coarse.locate(centroid);
                assert_eq!(located, t);
            }
        }
    }

    #[test]
    fn every_edge_shared_by_two_triangles() {
        for n in [1usize, 2, 5] {
            let m = PeriodicTriMesh::build_uniform(n).unwrap();
            let mut count = vec![0usize; m.num_edges()];
            for te in m.triangle_edges() {
                for &e in te {
                    count[e] += 1;
                }
            }
            assert!(count.iter().all(|&c| c == 2));
        }
    }

    #[test]
    fn local_edges_join_the_right_vertices() {
        let m = PeriodicTriMesh::build_uniform(5).unwrap();
        for t in 0..m.num_triangles() {
            let tri = m.triangles()[t];
            for k in 0..3 {
                let e = m.edges()[m.triangle_edges()[t][k]];
                let mut want = [tri[k], tri[(k + 1) % 3]];
                let mut got = e;
                want.sort();
                got.sort();
                assert_eq!(want, got);
            }
        }
    }

    #[test]
    fn geometry_examples() {
        let m = PeriodicTriMesh::build_uniform(1).unwrap();
        let g = m.element_geometry(0).unwrap();
        assert!((g.det - 1.0).abs() < 1e-15);
        let m2 = PeriodicTriMesh::build_uniform(2).unwrap();
        for t in 0..m2.num_triangles() {
            let g = m2.element_geometry(t).unwrap();
            assert!((g.area() - 0.125).abs() < 1e-15);
            assert!((g.det - 2.0 * g.area()).abs() < 1e-15);
            let refs = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
            for (k, r) in refs.iter().enumerate() {
                let x = g.map(r[0], r[1]);
                let stored = m2.vertices()[m2.triangles()[t][k]];
                for d in 0..2 {
                    let wrapped = x[d].rem_euclid(1.0);
                    assert!((wrapped - stored[d]).abs() < 1e-15);
                }
            }
        }
        assert!(matches!(
            m2.element_geometry(8),
            Err(MeshError::TriangleOutOfRange { index: 8, count: 8 })
        ));
    }

    #[test]
    fn locate_round_trips_through_the_affine_map() {
        let m = PeriodicTriMesh::build_uniform(7).unwrap();
        for k in 0..200 {
            let x = [(k as f64 * 0.6180339887).fract(), (k as f64 * 0.4142135623).fract()];
            let (t, r) = m.locate(x);
            assert!(r[0] >= -1e-14 && r[1] >= -1e-14 && r[0] + r[1] <= 1.0 + 1e-14);
            let y = m.element_geometry(t).unwrap().map(r[0], r[1]);
            assert!((y[0] - x[0]).abs() < 1e-14 && (y[1] - x[1]).abs() < 1e-14);
        }
    }
}
