use std::sync::Arc;

use crate::error::FemError;
use crate::fem::space::{basis_reference_gradients, basis_values, FeSpace};
use crate::linalg::{CscMatrix, SparsityPattern};

/// A scalar finite element function: one coefficient per dof.
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self, FemError> {
        if coeffs.len() != space.dof_count() {
            return Err(FemError::LengthMismatch {
                expected: space.dof_count(),
                found: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: Arc<FeSpace>) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn constant(space: Arc<FeSpace>, c: f64) -> Self {
        let coeffs = vec![c; space.dof_count()];
        Self { space, coeffs }
    }

    /// Nodal interpolant of `g`.
    pub fn interpolate(space: Arc<FeSpace>, g: impl Fn([f64; 2]) -> f64) -> Self {
        let coeffs = space.dof_coordinates().into_iter().map(g).collect();
        Self { space, coeffs }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn evaluate(&self, x: [f64; 2]) -> f64 {
        let (t, [xi, eta]) = self.space.mesh().locate(x);
        let v = basis_values(self.space.degree(), xi, eta);
        self.space
            .element_dofs(t)
            .iter()
            .zip(v)
            .map(|(&d, b)| self.coeffs[d] * b)
            .sum()
    }

    pub fn evaluate_gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let mesh = self.space.mesh();
        let (t, [xi, eta]) = mesh.locate(x);
        let geometry = mesh.geometry_unchecked(t);
        let g = basis_reference_gradients(self.space.degree(), xi, eta);
        let mut out = [0.0; 2];
        for (k, &d) in self.space.element_dofs(t).iter().enumerate() {
            let pg = geometry.gradient(g[k]);
            out[0] += self.coeffs[d] * pg[0];
            out[1] += self.coeffs[d] * pg[1];
        }
        out
    }

    /// Exact representation of `self` in a nested finer space of the same degree.
    pub fn prolongate(&self, fine: &Arc<FeSpace>) -> Result<FeFunction, FemError> {
        let p = prolongation_matrix(&self.space, fine)?;
        Ok(FeFunction {
            space: fine.clone(),
            coeffs: p.mul_vec(&self.coeffs),
        })
    }
}

/// A vector field with both components in the same scalar space.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFeFunction {
    space: Arc<FeSpace>,
    components: [Vec<f64>; 2],
}

impl VectorFeFunction {
    pub fn new(space: Arc<FeSpace>, components: [Vec<f64>; 2]) -> Result<Self, FemError> {
        for c in &components {
            if c.len() != space.dof_count() {
                return Err(FemError::LengthMismatch {
                    expected: space.dof_count(),
                    found: c.len(),
                });
            }
        }
        Ok(Self { space, components })
    }

    pub fn zeros(space: Arc<FeSpace>) -> Self {
        let n = space.dof_count();
        Self {
            space,
            components: [vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn interpolate(space: Arc<FeSpace>, g: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let values: Vec<[f64; 2]> = space.dof_coordinates().into_iter().map(g).collect();
        let components = [
            values.iter().map(|v| v[0]).collect(),
            values.iter().map(|v| v[1]).collect(),
        ];
        Self { space, components }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.components[k]
    }

    pub fn components(&self) -> &[Vec<f64>; 2] {
        &self.components
    }

    pub fn component_function(&self, k: usize) -> FeFunction {
        FeFunction {
            space: self.space.clone(),
            coeffs: self.components[k].clone(),
        }
    }

    pub fn evaluate(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.component_function(0).evaluate(x),
            self.component_function(1).evaluate(x),
        ]
    }
}

/// Matrix mapping coefficients on `coarse` to the identical function on a
/// nested finer mesh of the same degree (fine `n` a multiple of coarse `n`).
pub fn prolongation_matrix(coarse: &FeSpace, fine: &FeSpace) -> Result<CscMatrix, FemError> {
    let (nc, nf) = (coarse.mesh().n(), fine.mesh().n());
    if coarse.degree() != fine.degree() || nf % nc != 0 {
        return Err(FemError::MeshMismatch);
    }
    let degree = coarse.degree();
    let coarse_mesh = coarse.mesh();
    let mut entries = Vec::new();
    for (row, x) in fine.dof_coordinates().into_iter().enumerate() {
        let (t, [xi, eta]) = coarse_mesh.locate(x);
        let v = basis_values(degree, xi, eta);
        for (k, &d) in coarse.element_dofs(t).iter().enumerate() {
            // Nodes of the fine space hit coarse nodal values exactly or lie
            // inside coarse elements; drop round-off-sized weights.
            let w = if v[k].abs() < 1e-14 { 0.0 } else { v[k] };
            if w != 0.0 {
                entries.push((row, d, w));
            }
        }
    }
    let pattern = Arc::new(SparsityPattern::from_entries(
        fine.dof_count(),
        coarse.dof_count(),
        entries.iter().map(|&(r, c, _)| (r, c)),
    ));
    let mut p = CscMatrix::zeros(pattern);
    for (r, c, w) in entries {
        p.add(r, c, w);
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PeriodicTriMesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(n: usize, degree: usize) -> Arc<FeSpace> {
        let mesh = Arc::new(PeriodicTriMesh::build_uniform(n).unwrap());
        Arc::new(FeSpace::new(mesh, degree).unwrap())
    }

    #[test]
    fn length_is_checked() {
        let s = space(2, 2);
        assert_eq!(
            FeFunction::new(s, vec![0.0; 3]),
            Err(FemError::LengthMismatch {
                expected: 16,
                found: 3
            })
        );
    }

    #[test]
    fn constants_evaluate_to_themselves() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for degree in [1, 2] {
            let f = FeFunction::constant(space(5, degree), 2.5);
            for _ in 0..20 {
                let x = [rng.gen::<f64>(), rng.gen::<f64>()];
                assert!((f.evaluate(x) - 2.5).abs() < 1e-14);
                let g = f.evaluate_gradient(x);
                assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn p2_reproduces_quadratics_inside_an_element() {
        let s = space(4, 2);
        let f = FeFunction::interpolate(s.clone(), |p| p[0] * p[0]);
        // Element 2 * (cell (1, 1)) is away from the periodic seam.
        let t = 2 * (4 + 1);
        let g = s.mesh().element_geometry(t).unwrap();
        let c = g.map(1.0 / 3.0, 1.0 / 3.0);
        assert!((f.evaluate(c) - c[0] * c[0]).abs() < 1e-15);
        let grad = f.evaluate_gradient(c);
        assert!((grad[0] - 2.0 * c[0]).abs() < 1e-13 && grad[1].abs() < 1e-13);
    }

    #[test]
    fn prolongation_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for degree in [1, 2] {
            let coarse = space(4, degree);
            let fine = space(8, degree);
            let coeffs: Vec<f64> = (0..coarse.dof_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = FeFunction::new(coarse, coeffs).unwrap();
            let g = f.prolongate(&fine).unwrap();
            for _ in 0..100 {
                let x = [rng.gen::<f64>(), rng.gen::<f64>()];
                assert!((f.evaluate(x) - g.evaluate(x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn prolongation_rejects_non_nested() {
        assert_eq!(
            prolongation_matrix(&space(4, 2), &space(6, 2)).err(),
            Some(FemError::MeshMismatch)
        );
        assert_eq!(
            prolongation_matrix(&space(4, 2), &space(8, 1)).err(),
            Some(FemError::MeshMismatch)
        );
    }
}
