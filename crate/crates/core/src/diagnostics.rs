//! Energy, dissipation, mass, relative energy, space-time error norms and
//! experimental orders of convergence.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{DiagnosticsError, FemError};
use crate::fem::assembly::{assemble_mass, assemble_stiffness, integrate_fields};
use crate::fem::{make_quadrature, prolongation_matrix, FeFunction, FeSpace, QuadratureRule, VectorFeFunction};
use crate::linalg::CscMatrix;
use crate::model::ModelParams;
use crate::scheme::SpaceTimeSolution;

/// `E(φ, u) = ∫ γ/2 |∇φ|² + f(φ) + ½ |u|²`.
pub fn energy(
    phi: &FeFunction,
    u: &VectorFeFunction,
    params: &ModelParams,
    quad: &QuadratureRule,
) -> Result<f64, FemError> {
    let gamma = params.gamma();
    integrate_fields(&[phi.field(), u.field(0), u.field(1)], quad, |s| {
        let g = s.gradients[0];
        let (u0, u1) = (s.values[1], s.values[2]);
        0.5 * gamma * (g[0] * g[0] + g[1] * g[1]) + params.eval_f(s.values[0]) + 0.5 * (u0 * u0 + u1 * u1)
    })
}

/// `D_φ(μ, u) = ∫ b(φ) |∇μ|² + η(φ) |∇u|²`.
pub fn dissipation(
    phi: &FeFunction,
    mu: &FeFunction,
    u: &VectorFeFunction,
    params: &ModelParams,
    quad: &QuadratureRule,
) -> Result<f64, FemError> {
    integrate_fields(&[phi.field(), mu.field(), u.field(0), u.field(1)], quad, |s| {
        let p = s.values[0];
        let gm = s.gradients[1];
        let (g0, g1) = (s.gradients[2], s.gradients[3]);
        params.eval_b(p) * (gm[0] * gm[0] + gm[1] * gm[1])
            + params.eval_eta(p) * (g0[0] * g0[0] + g0[1] * g0[1] + g1[0] * g1[0] + g1[1] * g1[1])
    })
}

/// `⟨φ, 1⟩`.
pub fn mass(phi: &FeFunction, quad: &QuadratureRule) -> Result<f64, FemError> {
    integrate_fields(&[phi.field()], quad, |s| s.values[0])
}

/// Regularized relative energy
/// `∫ γ/2 |∇(φ−φ̂)|² + f(φ|φ̂) + α/2 |φ−φ̂|² + ½ |u−û|²` with `α = max(γ, γ + f1)`.
pub fn relative_energy(
    phi: &FeFunction,
    u: &VectorFeFunction,
    phi_hat: &FeFunction,
    u_hat: &VectorFeFunction,
    params: &ModelParams,
    quad: &QuadratureRule,
) -> Result<f64, FemError> {
    let gamma = params.gamma();
    let alpha = params.alpha();
    let fields = [
        phi.field(),
        phi_hat.field(),
        u.field(0),
        u.field(1),
        u_hat.field(0),
        u_hat.field(1),
    ];
    integrate_fields(&fields, quad, |s| {
        let (p, ph) = (s.values[0], s.values[1]);
        let dg = [
            s.gradients[0][0] - s.gradients[1][0],
            s.gradients[0][1] - s.gradients[1][1],
        ];
        let du = [s.values[2] - s.values[4], s.values[3] - s.values[5]];
        let d = p - ph;
        0.5 * gamma * (dg[0] * dg[0] + dg[1] * dg[1])
            + params.taylor_remainder_f(p, ph)
            + 0.5 * alpha * d * d
            + 0.5 * (du[0] * du[0] + du[1] * du[1])
    })
}

/// `‖f − g‖_{L²}` for an analytic `g`.
pub fn l2_error(
    f: &FeFunction,
    g: impl Fn([f64; 2]) -> f64 + Sync,
    quad: &QuadratureRule,
) -> Result<f64, FemError> {
    integrate_fields(&[f.field()], quad, |s| (s.values[0] - g(s.x)).powi(2)).map(f64::sqrt)
}

/// Full `‖f − g‖_{H¹}` for an analytic `g` with gradient `dg`.
pub fn h1_error(
    f: &FeFunction,
    g: impl Fn([f64; 2]) -> f64 + Sync,
    dg: impl Fn([f64; 2]) -> [f64; 2] + Sync,
    quad: &QuadratureRule,
) -> Result<f64, FemError> {
    integrate_fields(&[f.field()], quad, |s| {
        let e = s.values[0] - g(s.x);
        let d = dg(s.x);
        let ge = [s.gradients[0][0] - d[0], s.gradients[0][1] - d[1]];
        e * e + ge[0] * ge[0] + ge[1] * ge[1]
    })
    .map(f64::sqrt)
}

/// `eoc_k = log2(e_{k-1} / e_k)`; the first entry is `None`.
pub fn eoc(errors: &[f64]) -> Result<Vec<Option<f64>>, DiagnosticsError> {
    if let Some((index, &value)) = errors.iter().enumerate().find(|(_, &e)| !(e > 0.0)) {
        return Err(DiagnosticsError::NonPositiveError { index, value });
    }
    Ok(std::iter::once(None)
        .chain(errors.windows(2).map(|w| Some((w[0] / w[1]).log2())))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub level: usize,
    /// Sum of squared norms of the φ, u, μ̄ and ū differences.
    pub e: f64,
    /// Squared `L²(L²)` pressure difference.
    pub e_p: f64,
    pub eoc: Option<f64>,
    pub eoc_p: Option<f64>,
}

/// Errors between consecutive refinement levels, with their EOCs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn from_errors(errors: &[(f64, f64)]) -> Result<Self, DiagnosticsError> {
        let e: Vec<f64> = errors.iter().map(|r| r.0).collect();
        let ep: Vec<f64> = errors.iter().map(|r| r.1).collect();
        let (rate, rate_p) = (eoc(&e)?, eoc(&ep)?);
        let rows = errors
            .iter()
            .enumerate()
            .map(|(k, &(e, e_p))| ErrorRow {
                level: k,
                e,
                e_p,
                eoc: rate[k],
                eoc_p: rate_p[k],
            })
            .collect();
        Ok(Self { rows })
    }

    pub const CSV_HEADER: &'static str = "k,e,eoc,ep,eoc_p";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.level, r.e, opt(r.eoc), r.e_p, opt(r.eoc_p));
        }
        out
    }
}

impl std::fmt::Display for ErrorTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "---".to_string(), |x| format!("{x:.3}"));
        writeln!(f, "{:>3} | {:>12} | {:>7} | {:>12} | {:>7}", "k", "e", "eoc", "e_p", "eoc")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>3} | {:>12.4e} | {:>7} | {:>12.4e} | {:>7}",
                r.level,
                r.e,
                opt(r.eoc),
                r.e_p,
                opt(r.eoc_p)
            )?;
        }
        Ok(())
    }
}

/// Accumulates the differences between a stored coarse solution and a fine
/// solution on `refine(mesh)` with `τ/2`, one fine time node at a time.
///
/// `L∞` norms are taken over all fine time nodes (the difference is
/// piecewise linear on the fine grid, so this is the exact maximum); `L²`
/// norms are exact `τ`-weighted sums over fine intervals.
pub struct NestedErrorAccumulator<'a> {
    coarse: &'a SpaceTimeSolution,
    prolong_v: CscMatrix,
    prolong_p: CscMatrix,
    mass_v: CscMatrix,
    stiff_v: CscMatrix,
    mass_p: CscMatrix,
    tau_fine: f64,
    next_node: usize,
    next_interval: usize,
    phi_h1: f64,
    u_l2: f64,
    mu_l2h1: f64,
    ubar_l2h1: f64,
    p_l2l2: f64,
}

impl<'a> NestedErrorAccumulator<'a> {
    pub fn new(
        coarse: &'a SpaceTimeSolution,
        fine_velocity: &Arc<FeSpace>,
        fine_pressure: &Arc<FeSpace>,
        tau_fine: f64,
    ) -> Result<Self, DiagnosticsError> {
        let cv = coarse.velocity_space();
        let cp = coarse.pressure_space();
        if fine_velocity.mesh().n() != 2 * cv.mesh().n() || fine_pressure.mesh().n() != 2 * cp.mesh().n() {
            return Err(DiagnosticsError::NotNested(format!(
                "fine mesh n = {} is not twice the coarse n = {}",
                fine_velocity.mesh().n(),
                cv.mesh().n()
            )));
        }
        let ratio = coarse.tau() / tau_fine;
        if (ratio - 2.0).abs() > 1e-12 {
            return Err(DiagnosticsError::NotNested(format!(
                "time steps {} and {} are not nested by halving",
                coarse.tau(),
                tau_fine
            )));
        }
        let q = make_quadrature(4)?;
        Ok(Self {
            coarse,
            prolong_v: prolongation_matrix(cv, fine_velocity)?,
            prolong_p: prolongation_matrix(cp, fine_pressure)?,
            mass_v: assemble_mass(fine_velocity, &q),
            stiff_v: assemble_stiffness(fine_velocity, &q),
            mass_p: assemble_mass(fine_pressure, &q),
            tau_fine,
            next_node: 0,
            next_interval: 1,
            phi_h1: 0.0,
            u_l2: 0.0,
            mu_l2h1: 0.0,
            ubar_l2h1: 0.0,
            p_l2l2: 0.0,
        })
    }

    fn diff(p: &CscMatrix, coarse: &[f64], fine: &[f64]) -> Vec<f64> {
        p.mul_vec(coarse).iter().zip(fine).map(|(c, f)| c - f).collect()
    }

    fn h1_sq(&self, d: &[f64]) -> f64 {
        self.mass_v.quadratic(d) + self.stiff_v.quadratic(d)
    }

    /// Coarse node values interpolated to fine node `m`.
    fn coarse_at_fine_node(&self, m: usize, pick: impl Fn(usize) -> &'a [f64]) -> Vec<f64> {
        if m.is_multiple_of(2) {
            pick(m / 2).to_vec()
        } else {
            let (a, b) = (pick(m / 2), pick(m / 2 + 1));
            a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
        }
    }

    /// Fine node `m` (must be called for `m = 0, 1, 2, ...` in order).
    pub fn add_node(&mut self, m: usize, phi: &[f64], u: [&[f64]; 2]) -> Result<(), DiagnosticsError> {
        if m != self.next_node || m > 2 * self.coarse.num_steps() {
            return Err(DiagnosticsError::NotNested(format!("unexpected fine node {m}")));
        }
        let coarse = self.coarse;
        let cphi = self.coarse_at_fine_node(m, |n| coarse.phi_node(n));
        let d = Self::diff(&self.prolong_v, &cphi, phi);
        self.phi_h1 = self.phi_h1.max(self.h1_sq(&d));
        let mut u_sq = 0.0;
        for k in 0..2 {
            let cu = self.coarse_at_fine_node(m, |n| coarse.u_node(n)[k].as_slice());
            let d = Self::diff(&self.prolong_v, &cu, u[k]);
            u_sq += self.mass_v.quadratic(&d);
        }
        self.u_l2 = self.u_l2.max(u_sq);
        self.next_node += 1;
        Ok(())
    }

    /// Fine interval `m` = `(t_{m-1}, t_m]`, `m >= 1`, in order.
    pub fn add_interval(
        &mut self,
        m: usize,
        mu: &[f64],
        ubar: [&[f64]; 2],
        p: &[f64],
    ) -> Result<(), DiagnosticsError> {
        if m != self.next_interval || m > 2 * self.coarse.num_steps() {
            return Err(DiagnosticsError::NotNested(format!("unexpected fine interval {m}")));
        }
        let n = m.div_ceil(2);
        let d = Self::diff(&self.prolong_v, self.coarse.mu_interval(n), mu);
        self.mu_l2h1 += self.tau_fine * self.h1_sq(&d);
        let cubar = self.coarse.ubar_interval(n);
        for k in 0..2 {
            let d = Self::diff(&self.prolong_v, &cubar[k], ubar[k]);
            self.ubar_l2h1 += self.tau_fine * self.h1_sq(&d);
        }
        let d = Self::diff(&self.prolong_p, self.coarse.p_interval(n), p);
        self.p_l2l2 += self.tau_fine * self.mass_p.quadratic(&d);
        self.next_interval += 1;
        Ok(())
    }

    /// `(e, e_p)`; requires every fine node and interval to have been added.
    pub fn finish(self) -> Result<(f64, f64), DiagnosticsError> {
        let steps = 2 * self.coarse.num_steps();
        if self.next_node != steps + 1 || self.next_interval != steps + 1 {
            return Err(DiagnosticsError::NotNested(format!(
                "fine solution incomplete: {} nodes, {} intervals of {steps}",
                self.next_node,
                self.next_interval - 1
            )));
        }
        Ok((self.phi_h1 + self.u_l2 + self.mu_l2h1 + self.ubar_l2h1, self.p_l2l2))
    }

    /// The four squared contributions `(φ L∞H¹, u L∞L², μ̄ L²H¹, ū L²H¹)`.
    pub fn components(&self) -> [f64; 4] {
        [self.phi_h1, self.u_l2, self.mu_l2h1, self.ubar_l2h1]
    }
}

/// `(e_{h,τ}, e^p_{h,τ})` between a coarse solution and its nested refinement.
pub fn spacetime_error_norms(
    coarse: &SpaceTimeSolution,
    fine: &SpaceTimeSolution,
) -> Result<(f64, f64), DiagnosticsError> {
    if fine.num_steps() != 2 * coarse.num_steps() {
        return Err(DiagnosticsError::NotNested(format!(
            "{} fine steps for {} coarse steps",
            fine.num_steps(),
            coarse.num_steps()
        )));
    }
    let mut acc = NestedErrorAccumulator::new(coarse, fine.velocity_space(), fine.pressure_space(), fine.tau())?;
    for m in 0..=fine.num_steps() {
        let u = fine.u_node(m);
        acc.add_node(m, fine.phi_node(m), [&u[0], &u[1]])?;
    }
    for m in 1..=fine.num_steps() {
        let ubar = fine.ubar_interval(m);
        acc.add_interval(m, fine.mu_interval(m), [&ubar[0], &ubar[1]], fine.p_interval(m))?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::FeSpace;
    use crate::mesh::PeriodicTriMesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn p2(n: usize) -> Arc<FeSpace> {
        Arc::new(FeSpace::p2(Arc::new(PeriodicTriMesh::build_uniform(n).unwrap())))
    }

    fn q() -> QuadratureRule {
        make_quadrature(10).unwrap()
    }

    fn random_fn(rng: &mut ChaCha8Rng, s: &Arc<FeSpace>, scale: f64) -> FeFunction {
        let c = (0..s.dof_count()).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        FeFunction::new(s.clone(), c).unwrap()
    }

    fn random_vfn(rng: &mut ChaCha8Rng, s: &Arc<FeSpace>) -> VectorFeFunction {
        let n = s.dof_count();
        let c = [(); 2].map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        VectorFeFunction::new(s.clone(), c).unwrap()
    }

    #[test]
    fn energy_examples() {
        let s = p2(4);
        let params = ModelParams::default();
        let zero_u = VectorFeFunction::zeros(s.clone());
        let well = FeFunction::constant(s.clone(), 0.01);
        assert!(energy(&well, &zero_u, &params, &q()).unwrap().abs() < 1e-15);
        let c = FeFunction::constant(s.clone(), 0.3);
        let e = energy(&c, &zero_u, &params, &q()).unwrap();
        assert!((e - params.eval_f(0.3)).abs() < 1e-14);

        let pure = ModelParams::new(1.0, &[0.0], &[1.0], &[1.0]).unwrap();
        let s32 = p2(32);
        let sine = FeFunction::interpolate(s32.clone(), |x| (2.0 * PI * x[0]).sin());
        let e = energy(&sine, &VectorFeFunction::zeros(s32), &pure, &q()).unwrap();
        assert!((e - PI * PI).abs() < 0.01 * PI * PI);
    }

    #[test]
    fn dissipation_examples() {
        let s = p2(4);
        let params = ModelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = random_fn(&mut rng, &s, 1.0);
        let d0 = dissipation(
            &phi,
            &FeFunction::constant(s.clone(), 2.0),
            &VectorFeFunction::interpolate(s.clone(), |_| [1.0, -3.0]),
            &params,
            &q(),
        )
        .unwrap();
        assert!(d0.abs() < 1e-20);
        let mu = random_fn(&mut rng, &s, 1.0);
        let u = random_vfn(&mut rng, &s);
        assert!(dissipation(&phi, &mu, &u, &params, &q()).unwrap() > 0.0);
        // b ≡ 1 with tiny viscosity: D = |∇μ|² + η |∇u|²
        let unit = ModelParams::new(1.0, &[0.0], &[1.0], &[1e-9]).unwrap();
        let k = assemble_stiffness(&s, &q());
        let want = k.quadratic(mu.coeffs()) + 1e-9 * (k.quadratic(u.component(0)) + k.quadratic(u.component(1)));
        let got = dissipation(&phi, &mu, &u, &unit, &q()).unwrap();
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn mass_examples() {
        let s8 = p2(8);
        let c = FeFunction::constant(s8.clone(), 0.42);
        assert!((mass(&c, &q()).unwrap() - 0.42).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_fn(&mut rng, &s8, 1.0);
        let mut g = f.clone();
        g.coeffs_mut().iter_mut().for_each(|v| *v += 0.7);
        let (mf, mg) = (mass(&f, &q()).unwrap(), mass(&g, &q()).unwrap());
        assert!((mg - mf - 0.7).abs() < 1e-13);
    }

    #[test]
    fn mass_of_cosine_interpolant() {
        let s = p2(8);
        let f = FeFunction::interpolate(s, |p| 0.5 + 0.25 * (2.0 * PI * p[0]).cos() * (2.0 * PI * p[1]).cos());
        // exact mean of the interpolant is 0.5 by symmetry of the nodes
        assert!((mass(&f, &q()).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn relative_energy_properties() {
        let s = p2(4);
        let params = ModelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c0 = params.gamma().min(params.alpha()) / 4.0;
        let m = assemble_mass(&s, &q());
        let k = assemble_stiffness(&s, &q());
        for _ in 0..100 {
            let phi = random_fn(&mut rng, &s, 1.0);
            let phi_hat = random_fn(&mut rng, &s, 1.0);
            let u = random_vfn(&mut rng, &s);
            let u_hat = random_vfn(&mut rng, &s);
            let same = relative_energy(&phi, &u, &phi, &u, &params, &q()).unwrap();
            assert!(same.abs() < 1e-12);
            let e = relative_energy(&phi, &u, &phi_hat, &u_hat, &params, &q()).unwrap();
            assert!(e >= 0.0);
            let dphi: Vec<f64> = phi.coeffs().iter().zip(phi_hat.coeffs()).map(|(a, b)| a - b).collect();
            let du: Vec<Vec<f64>> = (0..2)
                .map(|c| u.component(c).iter().zip(u_hat.component(c)).map(|(a, b)| a - b).collect())
                .collect();
            let norms = m.quadratic(&dphi) + k.quadratic(&dphi) + m.quadratic(&du[0]) + m.quadratic(&du[1]);
            assert!(c0 * norms <= e, "{} > {e}", c0 * norms);
        }
    }

    #[test]
    fn relative_energy_without_potential() {
        let s = p2(4);
        let params = ModelParams::new(0.3, &[0.0], &[1.0], &[1.0]).unwrap();
        assert_eq!(params.alpha(), 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (phi, phi_hat) = (random_fn(&mut rng, &s, 1.0), random_fn(&mut rng, &s, 1.0));
        let (u, u_hat) = (random_vfn(&mut rng, &s), random_vfn(&mut rng, &s));
        let m = assemble_mass(&s, &q());
        let k = assemble_stiffness(&s, &q());
        let d: Vec<f64> = phi.coeffs().iter().zip(phi_hat.coeffs()).map(|(a, b)| a - b).collect();
        let du: Vec<Vec<f64>> = (0..2)
            .map(|c| u.component(c).iter().zip(u_hat.component(c)).map(|(a, b)| a - b).collect())
            .collect();
        let want = 0.15 * k.quadratic(&d) + 0.15 * m.quadratic(&d) + 0.5 * (m.quadratic(&du[0]) + m.quadratic(&du[1]));
        let got = relative_energy(&phi, &u, &phi_hat, &u_hat, &params, &q()).unwrap();
        assert!((got - want).abs() < 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn eoc_examples() {
        let r = eoc(&[16.0, 1.0]).unwrap();
        assert_eq!(r, vec![None, Some(4.0)]);
        assert_eq!(eoc(&[0.3, 0.3]).unwrap()[1], Some(0.0));
        let table = eoc(&[5.748, 1.523, 0.1637, 0.01074]).unwrap();
        let want = [1.916, 3.217, 3.929];
        for (got, want) in table[1..].iter().zip(want) {
            assert!((got.unwrap() - want).abs() < 2e-3, "{got:?} vs {want}");
        }
        assert_eq!(
            eoc(&[1.0, 0.0]),
            Err(DiagnosticsError::NonPositiveError { index: 1, value: 0.0 })
        );
    }

    #[test]
    fn error_table_csv() {
        let t = ErrorTable::from_errors(&[(16.0, 4.0), (1.0, 1.0)]).unwrap();
        assert_eq!(t.to_csv(), "k,e,eoc,ep,eoc_p\n0,16,,4,\n1,1,4,1,2\n");
    }
}
