//! Space-time Galerkin time stepping: continuous piecewise linear `φ`, `u`
//! and piecewise constant `μ̄`, `p̄` in time, solved interval by interval
//! with Newton's method.

mod system;

use std::f64::consts::PI;
use std::sync::Arc;

pub use system::{gauss_nodes, Discretization, StepSystem};

use crate::diagnostics::{dissipation, energy, mass};
use crate::error::{FemError, SchemeError};
use crate::fem::assembly::{assemble_weighted_vector, LoadKind, Weight};
use crate::fem::{FeFunction, FeSpace, VectorFeFunction};
use crate::fem::assembly::{assemble_mass, assemble_stiffness};
use crate::linalg::multifrontal::{MultifrontalLu, MultifrontalSymbolic};
use crate::linalg::{norm_inf, solve_spd};
use crate::mesh::PeriodicTriMesh;
use crate::model::ModelParams;
use crate::projections::{h1_project, stokes_project};

type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
type TensorFn = Arc<dyn Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync>;

/// Initial phase field and velocity with their gradients.
#[derive(Clone)]
pub struct InitialData {
    pub phi: ScalarFn,
    pub grad_phi: VectorFn,
    pub u: VectorFn,
    /// `grad_u(x)[k]` is the gradient of component `k`.
    pub grad_u: TensorFn,
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("InitialData")
    }
}

impl InitialData {
    /// Spatially constant state.
    pub fn constant(phi: f64, u: [f64; 2]) -> Self {
        Self {
            phi: Arc::new(move |_| phi),
            grad_phi: Arc::new(|_| [0.0; 2]),
            u: Arc::new(move |_| u),
            grad_u: Arc::new(|_| [[0.0; 2]; 2]),
        }
    }

    /// Droplet-like phase field `0.5 + 0.25 cos(2πx) cos(2πy)` in the swirl
    /// `0.25 (−sin²(πx) sin(2πy), sin²(πy) sin(2πx))`.
    pub fn paper6() -> Self {
        Self {
            phi: Arc::new(|x| 0.5 + 0.25 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos()),
            grad_phi: Arc::new(|x| {
                let s = |v: f64| ((2.0 * PI * v).sin(), (2.0 * PI * v).cos());
                let (sx, cx) = s(x[0]);
                let (sy, cy) = s(x[1]);
                [-0.5 * PI * sx * cy, -0.5 * PI * cx * sy]
            }),
            u: Arc::new(|x| {
                let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
                [
                    -0.25 * sx * sx * (2.0 * PI * x[1]).sin(),
                    0.25 * sy * sy * (2.0 * PI * x[0]).sin(),
                ]
            }),
            grad_u: Arc::new(|x| {
                let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
                let (s2x, s2y) = ((2.0 * PI * x[0]).sin(), (2.0 * PI * x[1]).sin());
                let (c2x, c2y) = ((2.0 * PI * x[0]).cos(), (2.0 * PI * x[1]).cos());
                [
                    [-0.25 * PI * s2x * s2y, -0.5 * PI * sx * sx * c2y],
                    [0.5 * PI * sy * sy * c2x, 0.25 * PI * s2y * s2x],
                ]
            }),
        }
    }
}

/// Newton and tolerance settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Absolute `∞`-norm tolerance on the algebraic residual.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Halve the update (up to 8 times) while the residual grows.
    pub line_search: bool,
    /// Per-step energy residual bound, relative to `1 + |E(0)|`.
    pub energy_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            newton_tol: 1e-11,
            newton_max_iter: 30,
            line_search: false,
            energy_tol: 1e-8,
        }
    }
}

/// Discrete state at a time node, with the interval values of the
/// interval ending there (the initial guess data at node 0).
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub step: usize,
    pub t: f64,
    pub phi: Vec<f64>,
    pub u: [Vec<f64>; 2],
    pub mu: Vec<f64>,
    pub p: Vec<f64>,
    pub lambda: f64,
}

/// Solver and bookkeeping data for one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    pub newton_iters: usize,
    pub final_residual: f64,
    pub mass: f64,
    pub mass_drift: f64,
    pub energy: f64,
    /// `τ D_φ̄(μ̄, ū)` for this interval.
    pub dissipation: f64,
    /// `|E(tⁿ) − E(tⁿ⁻¹) + τ D|`.
    pub energy_residual: f64,
    /// `max_j |⟨div ū, q_j⟩|`.
    pub divergence_residual: f64,
}

/// `N = ⌈T/τ⌉` and the uniform step `T/N`.
pub fn time_grid(t_final: f64, tau: f64) -> Result<(usize, f64), SchemeError> {
    if !(t_final > 0.0 && t_final.is_finite() && tau > 0.0 && tau.is_finite()) {
        return Err(SchemeError::InvalidSettings(format!(
            "final time {t_final} and step {tau} must be positive"
        )));
    }
    let ratio = t_final / tau;
    let n = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round()
    } else {
        ratio.ceil()
    };
    let n = n.max(1.0) as usize;
    Ok((n, t_final / n as f64))
}

/// Residual reduction below which a reused Jacobian factorization is kept.
const STALE_CONTRACTION: f64 = 0.1;

/// Time stepper for one mesh.
pub struct Simulation {
    disc: Discretization,
    params: ModelParams,
    settings: SolverSettings,
    tau: f64,
    state: State,
    symbolic: Arc<MultifrontalSymbolic>,
    /// Jacobian factorization reused across iterations and intervals.
    factors: Option<MultifrontalLu>,
    energy: f64,
    initial_energy: f64,
    initial_mass: f64,
}

impl Simulation {
    /// H¹ projection of `φ₀`, modified Stokes projection of `u₀`, and the
    /// first chemical potential guess `M μ = γ K φ₀ + ⟨f′(φ₀), ψ⟩`.
    pub fn initialize(
        mesh: Arc<PeriodicTriMesh>,
        params: ModelParams,
        settings: SolverSettings,
        tau: f64,
        initial: &InitialData,
    ) -> Result<Self, SchemeError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SchemeError::InvalidSettings(format!("time step {tau} must be positive")));
        }
        if !(settings.newton_tol > 0.0 && settings.energy_tol > 0.0 && settings.newton_max_iter > 0) {
            return Err(SchemeError::InvalidSettings("tolerances and iteration limit must be positive".into()));
        }
        let velocity = Arc::new(FeSpace::p2(mesh.clone()));
        let pressure = Arc::new(FeSpace::p1(mesh));
        let disc = Discretization::new(velocity.clone(), pressure.clone());
        let quad = disc.quadrature();
        let phi = h1_project(&velocity, &*initial.phi, &*initial.grad_phi, quad)?;
        let u = stokes_project(&velocity, &pressure, &*initial.u, &*initial.grad_u, quad)?;

        let m = assemble_mass(&velocity, quad);
        let k = assemble_stiffness(&velocity, quad);
        let fprime = assemble_weighted_vector(LoadKind::Value, &velocity, quad, &[phi.field()], |s| {
            Weight::Scalar(params.eval_f1d(s.values[0]))
        })
        .map_err(fem_error)?;
        let rhs: Vec<f64> = k
            .mul_vec(phi.coeffs())
            .iter()
            .zip(&fprime)
            .map(|(a, b)| params.gamma() * a + b)
            .collect();
        let mu = solve_spd(&m, &rhs)?;

        let symbolic = Arc::new(MultifrontalSymbolic::new(disc.pattern().clone(), disc.supernodes())?);
        let e0 = energy(&phi, &u, &params, quad).map_err(fem_error)?;
        let m0 = mass(&phi, quad).map_err(fem_error)?;
        let state = State {
            step: 0,
            t: 0.0,
            phi: phi.into_coeffs(),
            u: u.components().clone(),
            mu,
            p: vec![0.0; pressure.dof_count()],
            lambda: 0.0,
        };
        Ok(Self {
            disc,
            params,
            settings,
            tau,
            state,
            symbolic,
            factors: None,
            energy: e0,
            initial_energy: e0,
            initial_mass: m0,
        })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    pub fn initial_mass(&self) -> f64 {
        self.initial_mass
    }

    pub fn velocity_space(&self) -> &Arc<FeSpace> {
        self.disc.velocity_space()
    }

    pub fn pressure_space(&self) -> &Arc<FeSpace> {
        self.disc.pressure_space()
    }

    fn pack(&self) -> Vec<f64> {
        let s = &self.state;
        let mut x = Vec::with_capacity(self.disc.num_unknowns());
        x.extend_from_slice(&s.phi);
        x.extend_from_slice(&s.mu);
        x.extend_from_slice(&s.u[0]);
        x.extend_from_slice(&s.u[1]);
        x.extend_from_slice(&s.p);
        x.push(s.lambda);
        x
    }

    fn unpack(&self, x: &[f64], step: usize) -> State {
        let [_, mu, u1, u2, p, lam] = self.disc.offsets();
        State {
            step,
            t: step as f64 * self.tau,
            phi: x[..mu].to_vec(),
            mu: x[mu..u1].to_vec(),
            u: [x[u1..u2].to_vec(), x[u2..p].to_vec()],
            p: x[p..lam].to_vec(),
            lambda: x[lam],
        }
    }

    /// Advance one interval.
    pub fn step(&mut self) -> Result<StepReport, SchemeError> {
        let n = self.state.step + 1;
        self.advance(n)
            .map_err(|e| SchemeError::AtInterval {
                interval: n,
                source: Box::new(e),
            })
    }

    fn advance(&mut self, n: usize) -> Result<StepReport, SchemeError> {
        let settings = self.settings.clone();
        let system = StepSystem {
            disc: &self.disc,
            params: &self.params,
            tau: self.tau,
            phi_old: &self.state.phi,
            u_old: [&self.state.u[0], &self.state.u[1]],
        };
        let mut x = self.pack();
        let mut iters = 0;
        let mut r = system.residual(&x);
        let mut rnorm = norm_inf(&r);
        let mut fresh = false;
        while rnorm > settings.newton_tol {
            if iters == settings.newton_max_iter || !rnorm.is_finite() {
                return Err(SchemeError::NewtonDiverged {
                    iterations: iters,
                    residual: rnorm,
                });
            }
            if self.factors.is_none() {
                let (_, jac) = system.residual_and_jacobian(&x);
                self.factors = Some(MultifrontalLu::factorize(&self.symbolic, &jac)?);
                fresh = true;
            }
            let dx = self.factors.as_ref().expect("factorized").solve(&r)?;
            let mut scale = 1.0;
            let mut halvings = 0;
            let (trial, r_trial) = loop {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - scale * d).collect();
                let r_trial = system.residual(&trial);
                if !settings.line_search || halvings == 8 || norm_inf(&r_trial) <= rnorm {
                    break (trial, r_trial);
                }
                scale *= 0.5;
                halvings += 1;
            };
            let rn = norm_inf(&r_trial);
            iters += 1;
            if rn > STALE_CONTRACTION * rnorm && rn > settings.newton_tol {
                self.factors = None;
                if !fresh && rn >= rnorm {
                    // retry from x with a fresh Jacobian
                    continue;
                }
            }
            fresh = false;
            x = trial;
            r = r_trial;
            rnorm = rn;
        }

        let next = self.unpack(&x, n);
        let velocity = self.disc.velocity_space().clone();
        let quad = self.disc.quadrature();
        let vf = |c: Vec<f64>| FeFunction::new(velocity.clone(), c).map_err(fem_error);
        let vv = |c: [Vec<f64>; 2]| VectorFeFunction::new(velocity.clone(), c).map_err(fem_error);
        let avg = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect::<Vec<f64>>();
        let phi_n = vf(next.phi.clone())?;
        let u_n = vv(next.u.clone())?;
        let phi_bar = vf(avg(&self.state.phi, &next.phi))?;
        let ubar = [avg(&self.state.u[0], &next.u[0]), avg(&self.state.u[1], &next.u[1])];
        let divergence_residual = self.disc.divergence_residual([&ubar[0], &ubar[1]]);
        let u_bar = vv(ubar)?;
        let mu_bar = vf(next.mu.clone())?;

        let e = energy(&phi_n, &u_n, &self.params, quad).map_err(fem_error)?;
        let d = self.tau * dissipation(&phi_bar, &mu_bar, &u_bar, &self.params, quad).map_err(fem_error)?;
        let m = mass(&phi_n, quad).map_err(fem_error)?;
        let mass_prev = mass(&vf(self.state.phi.clone())?, quad).map_err(fem_error)?;
        let report = StepReport {
            step: n,
            t: next.t,
            newton_iters: iters,
            final_residual: rnorm,
            mass: m,
            mass_drift: (m - mass_prev).abs(),
            energy: e,
            dissipation: d,
            energy_residual: (e - self.energy + d).abs(),
            divergence_residual,
        };
        let mass_tol = 10.0 * settings.newton_tol * (1.0 + self.initial_mass.abs());
        if report.mass_drift > mass_tol {
            return Err(SchemeError::ToleranceExceeded {
                quantity: "mass drift",
                value: report.mass_drift,
                tol: mass_tol,
            });
        }
        let energy_tol = settings.energy_tol * (1.0 + self.initial_energy.abs());
        if report.energy_residual > energy_tol {
            return Err(SchemeError::ToleranceExceeded {
                quantity: "energy residual",
                value: report.energy_residual,
                tol: energy_tol,
            });
        }
        self.state = next;
        self.energy = e;
        Ok(report)
    }
}

fn fem_error(e: FemError) -> SchemeError {
    SchemeError::Fem(e)
}

/// Everything needed to run a simulation.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub mesh_n: usize,
    pub t_final: f64,
    /// Requested step; the actual step is `T / ⌈T/τ⌉`.
    pub tau: f64,
    pub params: ModelParams,
    pub settings: SolverSettings,
    pub initial: InitialData,
}

/// Result of [`run`].
#[derive(Debug)]
pub struct RunOutput {
    pub solution: Option<SpaceTimeSolution>,
    pub reports: Vec<StepReport>,
    pub initial_energy: f64,
    pub initial_mass: f64,
}

/// Run all `⌈T/τ⌉` steps. `observer(previous, next, report)` is called after
/// each step; the full solution is kept only when `record` is set.
pub fn run(
    setup: &RunSetup,
    record: bool,
    mut observer: impl FnMut(&State, &State, &StepReport),
) -> Result<RunOutput, SchemeError> {
    let (steps, tau) = time_grid(setup.t_final, setup.tau)?;
    let mesh = Arc::new(
        PeriodicTriMesh::build_uniform(setup.mesh_n).map_err(|e| SchemeError::InvalidSettings(e.to_string()))?,
    );
    let mut sim = Simulation::initialize(mesh, setup.params.clone(), setup.settings.clone(), tau, &setup.initial)?;
    let mut solution = record.then(|| SpaceTimeSolution::new(&sim));
    let mut reports = Vec::with_capacity(steps);
    for _ in 0..steps {
        let prev = sim.state().clone();
        let report = sim.step()?;
        observer(&prev, sim.state(), &report);
        if let Some(s) = solution.as_mut() {
            s.push(sim.state());
        }
        reports.push(report);
    }
    Ok(RunOutput {
        solution,
        reports,
        initial_energy: sim.initial_energy(),
        initial_mass: sim.initial_mass(),
    })
}

/// Coefficients of `φ`, `u` at every time node and of `μ̄`, `p̄` on every
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSolution {
    velocity: Arc<FeSpace>,
    pressure: Arc<FeSpace>,
    tau: f64,
    phi_nodes: Vec<Vec<f64>>,
    u_nodes: Vec<[Vec<f64>; 2]>,
    mu_intervals: Vec<Vec<f64>>,
    p_intervals: Vec<Vec<f64>>,
}

impl SpaceTimeSolution {
    fn new(sim: &Simulation) -> Self {
        let s = sim.state();
        Self {
            velocity: sim.velocity_space().clone(),
            pressure: sim.pressure_space().clone(),
            tau: sim.tau(),
            phi_nodes: vec![s.phi.clone()],
            u_nodes: vec![s.u.clone()],
            mu_intervals: Vec::new(),
            p_intervals: Vec::new(),
        }
    }

    fn push(&mut self, s: &State) {
        self.phi_nodes.push(s.phi.clone());
        self.u_nodes.push(s.u.clone());
        self.mu_intervals.push(s.mu.clone());
        self.p_intervals.push(s.p.clone());
    }

    pub fn velocity_space(&self) -> &Arc<FeSpace> {
        &self.velocity
    }

    pub fn pressure_space(&self) -> &Arc<FeSpace> {
        &self.pressure
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn num_steps(&self) -> usize {
        self.mu_intervals.len()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn phi_node(&self, n: usize) -> &[f64] {
        &self.phi_nodes[n]
    }

    pub fn u_node(&self, n: usize) -> &[Vec<f64>; 2] {
        &self.u_nodes[n]
    }

    /// `μ̄` on interval `n ≥ 1`.
    pub fn mu_interval(&self, n: usize) -> &[f64] {
        &self.mu_intervals[n - 1]
    }

    /// `p̄` on interval `n ≥ 1`.
    pub fn p_interval(&self, n: usize) -> &[f64] {
        &self.p_intervals[n - 1]
    }

    /// `ū = (uⁿ⁻¹ + uⁿ)/2` on interval `n ≥ 1`.
    pub fn ubar_interval(&self, n: usize) -> [Vec<f64>; 2] {
        let (a, b) = (&self.u_nodes[n - 1], &self.u_nodes[n]);
        [0, 1].map(|k| a[k].iter().zip(&b[k]).map(|(x, y)| 0.5 * (x + y)).collect())
    }

    pub fn phi_function(&self, n: usize) -> FeFunction {
        FeFunction::new(self.velocity.clone(), self.phi_nodes[n].clone()).expect("stored length")
    }

    pub fn u_function(&self, n: usize) -> VectorFeFunction {
        VectorFeFunction::new(self.velocity.clone(), self.u_nodes[n].clone()).expect("stored length")
    }
}
