use std::sync::Arc;

use crate::error::FemError;
use crate::fem::quadrature::QuadratureRule;
use crate::mesh::PeriodicTriMesh;

/// Largest number of local basis functions (P2).
pub const MAX_LOCAL: usize = 6;

/// Continuous periodic Lagrange space of degree 1 or 2.
///
/// P1 dofs are the mesh vertices. P2 dofs are the vertices followed by the
/// edge midpoints (`n^2 + edge id`). Local P2 ordering is the three vertices
/// then the three edges, edge `k` joining local vertices `k` and `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    degree: usize,
    mesh: Arc<PeriodicTriMesh>,
    dof_count: usize,
    element_dofs: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: Arc<PeriodicTriMesh>, degree: usize) -> Result<Self, FemError> {
        let nv = mesh.num_vertices();
        let (dof_count, element_dofs) = match degree {
            1 => (nv, mesh.triangles().iter().flatten().copied().collect()),
            2 => {
                let mut dofs = Vec::with_capacity(6 * mesh.num_triangles());
                for (tri, edges) in mesh.triangles().iter().zip(mesh.triangle_edges()) {
                    dofs.extend_from_slice(tri);
                    dofs.extend(edges.iter().map(|e| nv + e));
                }
                (nv + mesh.num_edges(), dofs)
            }
            d => return Err(FemError::UnsupportedDegree(d)),
        };
        Ok(Self {
            degree,
            mesh,
            dof_count,
            element_dofs,
        })
    }

    pub fn p1(mesh: Arc<PeriodicTriMesh>) -> Self {
        Self::new(mesh, 1).expect("degree 1 is supported")
    }

    pub fn p2(mesh: Arc<PeriodicTriMesh>) -> Self {
        Self::new(mesh, 2).expect("degree 2 is supported")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn mesh(&self) -> &Arc<PeriodicTriMesh> {
        &self.mesh
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_triangles()
    }

    pub fn local_dofs(&self) -> usize {
        local_dofs(self.degree)
    }

    #[inline]
    pub fn element_dofs(&self, t: usize) -> &[usize] {
        let k = self.local_dofs();
        &self.element_dofs[k * t..k * (t + 1)]
    }

    /// Nodal points of all dofs, inside `[0, 1)^2`.
    pub fn dof_coordinates(&self) -> Vec<[f64; 2]> {
        let mut out = self.mesh.vertices().to_vec();
        if self.degree == 2 {
            out.extend((0..self.mesh.num_edges()).map(|e| self.mesh.edge_midpoint(e)));
        }
        out
    }

    /// Dofs grouped by nested dissection of the periodic node lattice, in
    /// elimination order. No element couples two groups that are separated
    /// by a later group.
    pub fn nested_dissection(&self) -> Vec<Vec<usize>> {
        let l = 2 * self.mesh.n();
        let mut at_point: Vec<Vec<usize>> = vec![Vec::new(); l * l];
        for (d, x) in self.dof_coordinates().iter().enumerate() {
            let lx = (x[0] * l as f64).round() as usize % l;
            let ly = (x[1] * l as f64).round() as usize % l;
            at_point[ly * l + lx].push(d);
        }
        lattice_nested_dissection(l)
            .into_iter()
            .map(|pts| pts.into_iter().flat_map(|p| at_point[p].iter().copied()).collect::<Vec<_>>())
            .filter(|g| !g.is_empty())
            .collect()
    }

    pub fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh.n() == other.mesh.n()
    }
}

/// Largest side of a lattice box that is not split further.
const LEAF_SIDE: usize = 7;

/// Nested dissection of the periodic `l × l` lattice of P2 nodes (point id
/// `y·l + x`). Separators run along mesh lines (even lattice indices), which
/// no element crosses. Returns point sets in elimination order.
fn lattice_nested_dissection(l: usize) -> Vec<Vec<usize>> {
    // even index strictly inside `lo..hi` leaving both sides nonempty
    fn split(lo: usize, hi: usize) -> Option<usize> {
        if hi < lo + 3 {
            return None;
        }
        let mid = (lo + hi - 1) / 2;
        [mid, mid + 1, mid.saturating_sub(1)]
            .into_iter()
            .find(|&m| m % 2 == 0 && m > lo && m + 1 < hi)
    }
    fn points(l: usize, xs: std::ops::Range<usize>, ys: std::ops::Range<usize>) -> Vec<usize> {
        ys.flat_map(|y| xs.clone().map(move |x| y * l + x)).collect()
    }
    fn rect(l: usize, xs: std::ops::Range<usize>, ys: std::ops::Range<usize>, out: &mut Vec<Vec<usize>>) {
        let (w, h) = (xs.len(), ys.len());
        if w == 0 || h == 0 {
            return;
        }
        let cut = if w.max(h) <= LEAF_SIDE {
            None
        } else if w >= h {
            split(xs.start, xs.end).map(|m| (true, m))
        } else {
            split(ys.start, ys.end).map(|m| (false, m))
        };
        match cut {
            None => out.push(points(l, xs, ys)),
            Some((true, m)) => {
                rect(l, xs.start..m, ys.clone(), out);
                rect(l, m + 1..xs.end, ys.clone(), out);
                out.push(points(l, m..m + 1, ys));
            }
            Some((false, m)) => {
                rect(l, xs.clone(), ys.start..m, out);
                rect(l, xs.clone(), m + 1..ys.end, out);
                out.push(points(l, xs, m..m + 1));
            }
        }
    }
    let mut out = Vec::new();
    let Some(xm) = split(0, l) else {
        out.push(points(l, 0..l, 0..l));
        return out;
    };
    let ym = xm;
    for xs in [1..xm, xm + 1..l] {
        rect(l, xs.clone(), 1..ym, &mut out);
        rect(l, xs.clone(), ym + 1..l, &mut out);
        let mut sep = points(l, xs.clone(), 0..1);
        sep.extend(points(l, xs, ym..ym + 1));
        out.push(sep);
    }
    let mut sep = points(l, 0..1, 0..l);
    sep.extend(points(l, xm..xm + 1, 0..l));
    out.push(sep);
    out
}

pub fn local_dofs(degree: usize) -> usize {
    if degree == 1 {
        3
    } else {
        6
    }
}

const REF_BARY_GRADS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Basis values at reference point `(x, y)`; the first `local_dofs` entries
/// are meaningful.
#[inline]
pub fn basis_values(degree: usize, x: f64, y: f64) -> [f64; MAX_LOCAL] {
    let l = [1.0 - x - y, x, y];
    if degree == 1 {
        [l[0], l[1], l[2], 0.0, 0.0, 0.0]
    } else {
        [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ]
    }
}

/// Reference-coordinate gradients of the basis at `(x, y)`.
#[inline]
pub fn basis_reference_gradients(degree: usize, x: f64, y: f64) -> [[f64; 2]; MAX_LOCAL] {
    let g = REF_BARY_GRADS;
    let mut out = [[0.0; 2]; MAX_LOCAL];
    if degree == 1 {
        out[..3].copy_from_slice(&g);
        return out;
    }
    let l = [1.0 - x - y, x, y];
    for i in 0..3 {
        let s = 4.0 * l[i] - 1.0;
        out[i] = [s * g[i][0], s * g[i][1]];
    }
    for k in 0..3 {
        let (a, b) = (k, (k + 1) % 3);
        out[3 + k] = [
            4.0 * (l[a] * g[b][0] + l[b] * g[a][0]),
            4.0 * (l[a] * g[b][1] + l[b] * g[a][1]),
        ];
    }
    out
}

/// Basis values and reference gradients at every point of a quadrature rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub degree: usize,
    pub values: Vec<[f64; MAX_LOCAL]>,
    pub reference_gradients: Vec<[[f64; 2]; MAX_LOCAL]>,
}

impl Tabulation {
    pub fn new(degree: usize, quad: &QuadratureRule) -> Self {
        let (values, reference_gradients) = (0..quad.len())
            .map(|q| {
                let [x, y] = quad.reference_point(q);
                (
                    basis_values(degree, x, y),
                    basis_reference_gradients(degree, x, y),
                )
            })
            .unzip();
        Self {
            degree,
            values,
            reference_gradients,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh(n: usize) -> Arc<PeriodicTriMesh> {
        Arc::new(PeriodicTriMesh::build_uniform(n).unwrap())
    }

    #[test]
    fn nested_dissection_partitions_dofs() {
        for n in 1..=9 {
            for space in [FeSpace::p1(mesh(n)), FeSpace::p2(mesh(n))] {
                let mut seen = vec![false; space.dof_count()];
                for d in space.nested_dissection().into_iter().flatten() {
                    assert!(!seen[d]);
                    seen[d] = true;
                }
                assert!(seen.iter().all(|&s| s));
            }
        }
        let groups = FeSpace::p2(mesh(16)).nested_dissection();
        assert!(groups.iter().all(|g| g.len() <= 4 * 32));
        assert_eq!(groups.last().unwrap().len(), 2 * 32);
    }

    #[test]
    fn dof_counts() {
        for n in [1usize, 3, 8] {
            assert_eq!(FeSpace::p1(mesh(n)).dof_count(), n * n);
            assert_eq!(FeSpace::p2(mesh(n)).dof_count(), 4 * n * n);
        }
        assert_eq!(
            FeSpace::new(mesh(2), 3),
            Err(FemError::UnsupportedDegree(3))
        );
    }

    #[test]
    fn every_dof_is_referenced() {
        for degree in [1, 2] {
            let s = FeSpace::new(mesh(4), degree).unwrap();
            let mut seen = vec![false; s.dof_count()];
            for t in 0..s.num_elements() {
                for &d in s.element_dofs(t) {
                    seen[d] = true;
                }
            }
            assert!(seen.iter().all(|&v| v));
        }
    }

    #[test]
    fn partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for degree in [1, 2] {
            for _ in 0..50 {
                let (a, b): (f64, f64) = (rng.gen(), rng.gen());
                let (x, y) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
                let v = basis_values(degree, x, y);
                let s: f64 = v[..local_dofs(degree)].iter().sum();
                assert!((s - 1.0).abs() < 1e-13);
                let g = basis_reference_gradients(degree, x, y);
                let gs = g[..local_dofs(degree)]
                    .iter()
                    .fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
                assert!(gs[0].abs() < 1e-13 && gs[1].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn nodal_basis_is_kronecker() {
        let nodes = [
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.5, 0.0],
            [0.5, 0.5],
            [0.0, 0.5],
        ];
        for (i, p) in nodes.iter().enumerate() {
            let v = basis_values(2, p[0], p[1]);
            for (j, &vj) in v.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vj - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (x, y, e) = (0.21, 0.33, 1e-6);
        for degree in [1, 2] {
            let g = basis_reference_gradients(degree, x, y);
            let vx = basis_values(degree, x + e, y);
            let vmx = basis_values(degree, x - e, y);
            let vy = basis_values(degree, x, y + e);
            let vmy = basis_values(degree, x, y - e);
            for i in 0..local_dofs(degree) {
                assert!((g[i][0] - (vx[i] - vmx[i]) / (2.0 * e)).abs() < 1e-8);
                assert!((g[i][1] - (vy[i] - vmy[i]) / (2.0 * e)).abs() < 1e-8);
            }
        }
    }
}
