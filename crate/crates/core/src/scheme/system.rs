//! Residual and analytic Jacobian of the coupled per-interval system.
//!
//! Unknown layout: `[φⁿ | μ̄ⁿ | u₁ⁿ | u₂ⁿ | p̄ⁿ | λ]`, where `λ` is the
//! multiplier enforcing `⟨p̄ⁿ, 1⟩ = 0`. Velocity-space blocks have `Nv`
//! entries, the pressure block `Np`.

use std::sync::Arc;

use crate::fem::assembly::{assemble_divergence_block, assemble_mass, for_each_element, ElementQuadrature, Tabulations};
use crate::fem::{make_quadrature, FeSpace, QuadratureRule, NONLINEAR_QUADRATURE_DEGREE};
use crate::linalg::{CscMatrix, SparsityPattern};
use crate::model::ModelParams;

const NV_LOCAL: usize = 6;
const NP_LOCAL: usize = 3;
const LOCAL: usize = 4 * NV_LOCAL + NP_LOCAL;

/// Nodes of the two-point Gauss rule on `[0, 1]`.
pub fn gauss_nodes() -> [f64; 2] {
    let d = 0.5 / 3f64.sqrt();
    [0.5 - d, 0.5 + d]
}

/// Spaces, quadrature and the fixed Jacobian pattern for one mesh.
pub struct Discretization {
    velocity: Arc<FeSpace>,
    pressure: Arc<FeSpace>,
    quad: QuadratureRule,
    tabs: Tabulations,
    pattern: Arc<SparsityPattern>,
    /// CSC value positions of each element's local `LOCAL × LOCAL` block
    /// (`usize::MAX` for the structurally zero pressure–pressure entries).
    positions: Vec<Vec<usize>>,
    lambda_positions: Vec<(usize, usize)>,
    pressure_mean: Vec<f64>,
    divergence: [CscMatrix; 2],
}

impl Discretization {
    pub fn new(velocity: Arc<FeSpace>, pressure: Arc<FeSpace>) -> Self {
        assert!(velocity.degree() == 2 && pressure.degree() == 1 && velocity.same_mesh(&pressure));
        let quad = make_quadrature(NONLINEAR_QUADRATURE_DEGREE).expect("supported degree");
        let tabs = Tabulations::new(&quad);
        let nv = velocity.dof_count();
        let np = pressure.dof_count();
        let n = 4 * nv + np + 1;
        let lam = n - 1;
        let globals = |t: usize| -> [usize; LOCAL] {
            let mut g = [0; LOCAL];
            let vd = velocity.element_dofs(t);
            for a in 0..4 {
                for i in 0..NV_LOCAL {
                    g[a * NV_LOCAL + i] = a * nv + vd[i];
                }
            }
            for (j, &d) in pressure.element_dofs(t).iter().enumerate() {
                g[4 * NV_LOCAL + j] = 4 * nv + d;
            }
            g
        };
        let num_el = velocity.num_elements();
        let mut entries = Vec::with_capacity(num_el * LOCAL * LOCAL + 2 * np);
        for t in 0..num_el {
            let g = globals(t);
            for r in 0..LOCAL {
                for c in 0..LOCAL {
                    if r >= 4 * NV_LOCAL && c >= 4 * NV_LOCAL {
                        continue;
                    }
                    entries.push((g[r], g[c]));
                }
            }
        }
        for j in 0..np {
            entries.push((4 * nv + j, lam));
            entries.push((lam, 4 * nv + j));
        }
        let pattern = Arc::new(SparsityPattern::from_entries(n, n, entries));
        let positions = (0..num_el)
            .map(|t| {
                let g = globals(t);
                let mut pos = vec![usize::MAX; LOCAL * LOCAL];
                for r in 0..LOCAL {
                    for c in 0..LOCAL {
                        if r < 4 * NV_LOCAL || c < 4 * NV_LOCAL {
                            pos[r * LOCAL + c] = pattern.find(g[r], g[c]).expect("entry in pattern");
                        }
                    }
                }
                pos
            })
            .collect();
        let lambda_positions = (0..np)
            .map(|j| {
                (
                    pattern.find(4 * nv + j, lam).expect("entry in pattern"),
                    pattern.find(lam, 4 * nv + j).expect("entry in pattern"),
                )
            })
            .collect();
        let pressure_mean = assemble_mass(&pressure, &quad).mul_vec(&vec![1.0; np]);
        let divergence = [0, 1].map(|k| assemble_divergence_block(&pressure, &velocity, k, &quad));
        Self {
            velocity,
            pressure,
            quad,
            tabs,
            pattern,
            positions,
            lambda_positions,
            pressure_mean,
            divergence,
        }
    }

    pub fn velocity_space(&self) -> &Arc<FeSpace> {
        &self.velocity
    }

    pub fn pressure_space(&self) -> &Arc<FeSpace> {
        &self.pressure
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    /// Total number of unknowns `4 Nv + Np + 1`.
    pub fn num_unknowns(&self) -> usize {
        4 * self.velocity.dof_count() + self.pressure.dof_count() + 1
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    /// `⟨q_j, 1⟩` for the pressure basis.
    pub fn pressure_mean(&self) -> &[f64] {
        &self.pressure_mean
    }

    /// `max_j |⟨div v, q_j⟩|`.
    pub fn divergence_residual(&self, v: [&[f64]; 2]) -> f64 {
        let d0 = self.divergence[0].mul_vec(v[0]);
        let d1 = self.divergence[1].mul_vec(v[1]);
        d0.iter().zip(&d1).fold(0.0, |m, (a, b)| m.max((a + b).abs()))
    }

    /// Nested dissection of the unknowns into supernodes, in elimination
    /// order. All unknowns located at one P2 node share a supernode; the
    /// multiplier is eliminated last.
    pub fn supernodes(&self) -> Vec<Vec<usize>> {
        let nv = self.velocity.dof_count();
        let np = self.pressure.dof_count();
        let mut out: Vec<Vec<usize>> = self
            .velocity
            .nested_dissection()
            .into_iter()
            .map(|dofs| {
                let mut group: Vec<usize> = (0..4).flat_map(|a| dofs.iter().map(move |d| a * nv + d)).collect();
                group.extend(dofs.iter().filter(|&&d| d < np).map(|d| 4 * nv + d));
                group
            })
            .collect();
        out.last_mut().expect("at least one supernode").push(4 * nv + np);
        out
    }

    /// Block ranges `(φ, μ̄, u₁, u₂, p̄, λ)` in the unknown vector.
    pub fn offsets(&self) -> [usize; 6] {
        let nv = self.velocity.dof_count();
        let np = self.pressure.dof_count();
        [0, nv, 2 * nv, 3 * nv, 4 * nv, 4 * nv + np]
    }
}

/// Data fixed during one interval.
pub struct StepSystem<'a> {
    pub disc: &'a Discretization,
    pub params: &'a ModelParams,
    pub tau: f64,
    pub phi_old: &'a [f64],
    pub u_old: [&'a [f64]; 2],
}

struct LocalValues {
    residual: [f64; LOCAL],
    jacobian: Option<Box<[f64; LOCAL * LOCAL]>>,
}

impl StepSystem<'_> {
    /// Residual of the coupled system at `x`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.assemble(x, false).0
    }

    /// Residual and exact Jacobian at `x`.
    pub fn residual_and_jacobian(&self, x: &[f64]) -> (Vec<f64>, CscMatrix) {
        let (r, j) = self.assemble(x, true);
        (r, j.expect("requested"))
    }

    fn assemble(&self, x: &[f64], with_jacobian: bool) -> (Vec<f64>, Option<CscMatrix>) {
        let d = self.disc;
        let n = d.num_unknowns();
        assert_eq!(x.len(), n, "unknown vector length");
        let [_, o_mu, o_u1, o_u2, o_p, o_lam] = d.offsets();
        let nv = o_mu;
        let phi = &x[..nv];
        let mu = &x[o_mu..o_u1];
        let u = [&x[o_u1..o_u2], &x[o_u2..o_p]];
        let p = &x[o_p..o_lam];
        let lambda = x[o_lam];

        let mut residual = vec![0.0; n];
        let mut jac = with_jacobian.then(|| CscMatrix::zeros(d.pattern.clone()));
        for_each_element(
            d.velocity.num_elements(),
            |t| self.element(t, phi, mu, u, p, with_jacobian),
            |t, local| {
                let vd = d.velocity.element_dofs(t);
                let pd = d.pressure.element_dofs(t);
                for a in 0..4 {
                    for i in 0..NV_LOCAL {
                        residual[a * nv + vd[i]] += local.residual[a * NV_LOCAL + i];
                    }
                }
                for j in 0..NP_LOCAL {
                    residual[o_p + pd[j]] += local.residual[4 * NV_LOCAL + j];
                }
                if let (Some(m), Some(lj)) = (jac.as_mut(), local.jacobian.as_ref()) {
                    let vals = m.values_mut();
                    for (&pos, &v) in d.positions[t].iter().zip(lj.iter()) {
                        if pos != usize::MAX {
                            vals[pos] += v;
                        }
                    }
                }
            },
        );
        for (j, &m) in d.pressure_mean.iter().enumerate() {
            residual[o_p + j] += lambda * m;
            residual[o_lam] += m * p[j];
        }
        if let Some(m) = jac.as_mut() {
            let vals = m.values_mut();
            for (&(col_lam, row_lam), &mj) in d.lambda_positions.iter().zip(&d.pressure_mean) {
                vals[col_lam] += mj;
                vals[row_lam] += mj;
            }
        }
        (residual, jac)
    }

    fn element(
        &self,
        t: usize,
        phi: &[f64],
        mu: &[f64],
        u: [&[f64]; 2],
        p: &[f64],
        with_jacobian: bool,
    ) -> LocalValues {
        let d = self.disc;
        let mesh = d.velocity.mesh();
        let eq = ElementQuadrature::new(mesh.geometry_unchecked(t), &d.quad);
        let tab2 = d.tabs.get(2);
        let tab1 = d.tabs.get(1);
        let grads = eq.gradients(tab2);
        let vd = d.velocity.element_dofs(t);
        let pd = d.pressure.element_dofs(t);
        let gather = |c: &[f64]| -> [f64; NV_LOCAL] { std::array::from_fn(|i| c[vd[i]]) };
        let (phi_o, phi_n, mu_l) = (gather(self.phi_old), gather(phi), gather(mu));
        let uo = [gather(self.u_old[0]), gather(self.u_old[1])];
        let un = [gather(u[0]), gather(u[1])];
        let p_l: [f64; NP_LOCAL] = std::array::from_fn(|j| p[pd[j]]);

        let tau = self.tau;
        let gamma = self.params.gamma();
        let sg = gauss_nodes();
        let mut res = [0.0; LOCAL];
        let mut jac = with_jacobian.then(|| Box::new([0.0; LOCAL * LOCAL]));
        let idx = |a: usize, i: usize| a * NV_LOCAL + i;

        for q in 0..eq.weights.len() {
            let w = eq.weights[q];
            let psi = &tab2.values[q];
            let g = &grads[q];
            let qv = &tab1.values[q];
            let val = |c: &[f64; NV_LOCAL]| (0..NV_LOCAL).map(|i| c[i] * psi[i]).sum::<f64>();
            let grad = |c: &[f64; NV_LOCAL]| {
                let mut s = [0.0; 2];
                for i in 0..NV_LOCAL {
                    s[0] += c[i] * g[i][0];
                    s[1] += c[i] * g[i][1];
                }
                s
            };
            let (vpo, vpn) = (val(&phi_o), val(&phi_n));
            let pbar = 0.5 * (vpo + vpn);
            let gpbar = {
                let (a, b) = (grad(&phi_o), grad(&phi_n));
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
            };
            let vmu = val(&mu_l);
            let gmu = grad(&mu_l);
            let vuo = [val(&uo[0]), val(&uo[1])];
            let vun = [val(&un[0]), val(&un[1])];
            let ub = [0.5 * (vuo[0] + vun[0]), 0.5 * (vuo[1] + vun[1])];
            let gub = [0, 1].map(|k| {
                let (a, b) = (grad(&uo[k]), grad(&un[k]));
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
            });
            let vp: f64 = (0..NP_LOCAL).map(|j| p_l[j] * qv[j]).sum();
            let phi_g = sg.map(|s| (1.0 - s) * vpo + s * vpn);
            let b = self.params.eval_b(pbar);
            let eta = self.params.eval_eta(pbar);
            let fp = 0.5 * (self.params.eval_f1d(phi_g[0]) + self.params.eval_f1d(phi_g[1]));
            let dphi_t = (vpn - vpo) / tau;
            let du_t = [(vun[0] - vuo[0]) / tau, (vun[1] - vuo[1]) / tau];
            let div_ub = gub[0][0] + gub[1][1];
            let ub_grad = |gr: [f64; 2]| ub[0] * gr[0] + ub[1] * gr[1];
            let ub_grad_uk = [ub_grad(gub[0]), ub_grad(gub[1])];

            for i in 0..NV_LOCAL {
                let (pi, gi) = (psi[i], g[i]);
                let ub_gi = ub_grad(gi);
                res[idx(0, i)] += w * (dphi_t * pi - pbar * ub_gi + b * (gmu[0] * gi[0] + gmu[1] * gi[1]));
                res[idx(1, i)] += w * (vmu * pi - gamma * (gpbar[0] * gi[0] + gpbar[1] * gi[1]) - fp * pi);
                for k in 0..2 {
                    let gk = gub[k];
                    res[idx(2 + k, i)] += w
                        * (du_t[k] * pi
                            + 0.5 * (ub_grad_uk[k] * pi - ub_gi * ub[k])
                            + eta * (gk[0] * gi[0] + gk[1] * gi[1])
                            - vp * gi[k]
                            + pbar * gmu[k] * pi);
                }
            }
            for j in 0..NP_LOCAL {
                res[4 * NV_LOCAL + j] += w * div_ub * qv[j];
            }

            let Some(jm) = jac.as_mut() else { continue };
            let db = self.params.eval_b_d1(pbar);
            let deta = self.params.eval_eta_d1(pbar);
            let f2 = 0.5 * (sg[0] * self.params.eval_f2d(phi_g[0]) + sg[1] * self.params.eval_f2d(phi_g[1]));
            let mut add = |r: usize, c: usize, v: f64| jm[r * LOCAL + c] += w * v;
            for i in 0..NV_LOCAL {
                let (pi, gi) = (psi[i], g[i]);
                let ub_gi = ub_grad(gi);
                let gmu_gi = gmu[0] * gi[0] + gmu[1] * gi[1];
                for j in 0..NV_LOCAL {
                    let (pj, gj) = (psi[j], g[j]);
                    let mass = pi * pj;
                    let stiff = gi[0] * gj[0] + gi[1] * gj[1];
                    let ub_gj = ub_grad(gj);
                    // φ rows
                    add(idx(0, i), idx(0, j), mass / tau - 0.5 * pj * ub_gi + 0.5 * db * pj * gmu_gi);
                    add(idx(0, i), idx(1, j), b * stiff);
                    for k in 0..2 {
                        add(idx(0, i), idx(2 + k, j), -0.5 * pbar * pj * gi[k]);
                    }
                    // μ̄ rows
                    add(idx(1, i), idx(0, j), -0.5 * gamma * stiff - f2 * mass);
                    add(idx(1, i), idx(1, j), mass);
                    // u rows
                    for k in 0..2 {
                        let gk = gub[k];
                        let r = idx(2 + k, i);
                        add(
                            r,
                            idx(0, j),
                            0.5 * deta * pj * (gk[0] * gi[0] + gk[1] * gi[1]) + 0.5 * pj * gmu[k] * pi,
                        );
                        add(r, idx(1, j), pbar * gj[k] * pi);
                        for l in 0..2 {
                            let mut v = 0.25 * (pj * gk[l] * pi - pj * gi[l] * ub[k]);
                            if k == l {
                                v += mass / tau + 0.5 * eta * stiff + 0.25 * (ub_gj * pi - ub_gi * pj);
                            }
                            add(r, idx(2 + l, j), v);
                        }
                    }
                }
                for (j, &qj) in qv.iter().enumerate().take(NP_LOCAL) {
                    for k in 0..2 {
                        add(idx(2 + k, i), 4 * NV_LOCAL + j, -qj * gi[k]);
                        add(4 * NV_LOCAL + j, idx(2 + k, i), 0.5 * gi[k] * qj);
                    }
                }
            }
        }
        LocalValues {
            residual: res,
            jacobian: jac,
        }
    }
}
