//! L², H¹, pressure-L² and modified Stokes projections onto the discrete spaces.

use std::sync::Arc;

use crate::error::{FemError, ProjectionError};
use crate::fem::assembly::{
    assemble_divergence_block, assemble_gradient_load, assemble_load, assemble_mass,
    assemble_stiffness,
};
use crate::fem::{FeFunction, FeSpace, QuadratureRule, VectorFeFunction};
use crate::linalg::multifrontal::{MultifrontalLu, MultifrontalSymbolic};
use crate::linalg::{solve_spd, CscMatrix};

/// Tolerance on the mean of the input to [`pressure_l2_project`].
pub const PRESSURE_MEAN_TOL: f64 = 1e-8;

fn h1_gram(space: &FeSpace, quad: &QuadratureRule) -> CscMatrix {
    let m = assemble_mass(space, quad);
    let k = assemble_stiffness(space, quad);
    m.linear_combination(1.0, &k, 1.0)
}

fn h1_load(
    space: &FeSpace,
    quad: &QuadratureRule,
    f: &(impl Fn([f64; 2]) -> f64 + Sync),
    grad: &(impl Fn([f64; 2]) -> [f64; 2] + Sync),
) -> Vec<f64> {
    let a = assemble_load(space, quad, f);
    let b = assemble_gradient_load(space, quad, grad);
    a.iter().zip(&b).map(|(x, y)| x + y).collect()
}

/// `⟨π f − f, v⟩ = 0` for all `v` in the space.
pub fn l2_project(
    space: &Arc<FeSpace>,
    f: impl Fn([f64; 2]) -> f64 + Sync,
    quad: &QuadratureRule,
) -> Result<FeFunction, ProjectionError> {
    let m = assemble_mass(space, quad);
    let rhs = assemble_load(space, quad, f);
    let c = solve_spd(&m, &rhs)?;
    Ok(FeFunction::new(space.clone(), c)?)
}

/// `⟨π f − f, v⟩ + ⟨∇(π f − f), ∇v⟩ = 0` for all `v` in the space.
pub fn h1_project(
    space: &Arc<FeSpace>,
    f: impl Fn([f64; 2]) -> f64 + Sync,
    grad: impl Fn([f64; 2]) -> [f64; 2] + Sync,
    quad: &QuadratureRule,
) -> Result<FeFunction, ProjectionError> {
    let a = h1_gram(space, quad);
    let rhs = h1_load(space, quad, &f, &grad);
    let c = solve_spd(&a, &rhs)?;
    Ok(FeFunction::new(space.clone(), c)?)
}

/// L² projection of a zero-mean function onto zero-mean P1 (or P2) functions.
pub fn pressure_l2_project(
    space: &Arc<FeSpace>,
    f: impl Fn([f64; 2]) -> f64 + Sync,
    quad: &QuadratureRule,
) -> Result<FeFunction, ProjectionError> {
    let m = assemble_mass(space, quad);
    let rhs = assemble_load(space, quad, f);
    let mean: f64 = rhs.iter().sum();
    if mean.abs() > PRESSURE_MEAN_TOL {
        return Err(ProjectionError::NonzeroMean(mean));
    }
    let mut c = solve_spd(&m, &rhs)?;
    // constants lie in the space and |Ω| = 1
    let ones = vec![1.0; c.len()];
    let shift = m.bilinear(&ones, &c);
    c.iter_mut().for_each(|v| *v -= shift);
    Ok(FeFunction::new(space.clone(), c)?)
}

/// Modified Stokes projection: H¹-orthogonal projection of `f` onto the
/// discretely divergence-free subspace of `velocity²`, with `pressure`
/// (zero mean, enforced by a multiplier) as the constraint space.
pub fn stokes_project(
    velocity: &Arc<FeSpace>,
    pressure: &Arc<FeSpace>,
    f: impl Fn([f64; 2]) -> [f64; 2] + Sync,
    grad: impl Fn([f64; 2]) -> [[f64; 2]; 2] + Sync,
    quad: &QuadratureRule,
) -> Result<VectorFeFunction, ProjectionError> {
    if !velocity.same_mesh(pressure) {
        return Err(FemError::MeshMismatch.into());
    }
    let nv = velocity.dof_count();
    let np = pressure.dof_count();
    let a = h1_gram(velocity, quad);
    let b = [
        assemble_divergence_block(pressure, velocity, 0, quad),
        assemble_divergence_block(pressure, velocity, 1, quad),
    ];
    let p_mass = assemble_mass(pressure, quad);
    let p_mean = p_mass.mul_vec(&vec![1.0; np]);

    let n = 2 * nv + np + 1;
    let (p0, lam) = (2 * nv, 2 * nv + np);
    let mut triplets = Vec::new();
    for k in 0..2 {
        let off = k * nv;
        triplets.extend(a.triplets().map(|(r, c, v)| (off + r, off + c, v)));
        for (r, c, v) in b[k].triplets() {
            // -⟨p, ∂_k v⟩ in the momentum rows, ⟨∂_k u, q⟩ in the constraint rows
            triplets.push((off + c, p0 + r, -v));
            triplets.push((p0 + r, off + c, v));
        }
    }
    for (j, &m) in p_mean.iter().enumerate() {
        triplets.push((p0 + j, lam, m));
        triplets.push((lam, p0 + j, m));
    }
    let system = CscMatrix::from_triplets(n, n, &triplets);

    let mut rhs = vec![0.0; n];
    for k in 0..2 {
        let load = h1_load(velocity, quad, &|x| f(x)[k], &|x| grad(x)[k]);
        rhs[k * nv..(k + 1) * nv].copy_from_slice(&load);
    }
    let mut supernodes: Vec<Vec<usize>> = velocity
        .nested_dissection()
        .into_iter()
        .map(|dofs| {
            let mut group: Vec<usize> = dofs.iter().flat_map(|&d| [d, nv + d]).collect();
            group.extend(dofs.iter().filter(|&&d| d < np).map(|d| p0 + d));
            group
        })
        .collect();
    supernodes.last_mut().expect("nonempty mesh").push(lam);
    let symbolic = Arc::new(MultifrontalSymbolic::new(system.pattern().clone(), supernodes)?);
    let sol = MultifrontalLu::factorize(&symbolic, &system)?.solve(&rhs)?;
    Ok(VectorFeFunction::new(
        velocity.clone(),
        [sol[..nv].to_vec(), sol[nv..2 * nv].to_vec()],
    )?)
}

/// `max_j |⟨div u, q_j⟩|` over the basis of `pressure`.
pub fn discrete_divergence(u: &VectorFeFunction, pressure: &FeSpace, quad: &QuadratureRule) -> f64 {
    let velocity = u.space();
    let d0 = assemble_divergence_block(pressure, velocity, 0, quad).mul_vec(u.component(0));
    let d1 = assemble_divergence_block(pressure, velocity, 1, quad).mul_vec(u.component(1));
    d0.iter().zip(&d1).fold(0.0, |m, (a, b)| m.max((a + b).abs()))
}
