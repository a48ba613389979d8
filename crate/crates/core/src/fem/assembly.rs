//! Elementwise assembly of weighted bilinear and linear forms.
//!
//! Element contributions are always added to the global object in ascending
//! element order. When `CHNS_THREADS` is above 1, local contributions are
//! computed in parallel chunks but still scattered in that order, so results
//! are bitwise independent of the thread count.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::FemError;
use crate::fem::function::{FeFunction, VectorFeFunction};
use crate::fem::quadrature::QuadratureRule;
use crate::fem::space::{FeSpace, Tabulation, MAX_LOCAL};
use crate::linalg::{CscMatrix, SparsityPattern};
use crate::mesh::ElementGeometry;

const CHUNK: usize = 512;

fn thread_pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var("CHNS_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(1);
        (threads > 1)
            .then(|| rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok())
            .flatten()
    })
    .as_ref()
}

/// Number of threads used for element loops (`CHNS_THREADS`, default 1).
pub fn assembly_threads() -> usize {
    thread_pool().map_or(1, |p| p.current_num_threads())
}

/// Run `compute` for every element and hand the results to `consume` in
/// ascending element order.
pub fn for_each_element<T, C, S>(count: usize, compute: C, mut consume: S)
where
    T: Send,
    C: Fn(usize) -> T + Sync,
    S: FnMut(usize, T),
{
    match thread_pool() {
        None => (0..count).for_each(|t| consume(t, compute(t))),
        Some(pool) => {
            for start in (0..count).step_by(CHUNK) {
                let end = (start + CHUNK).min(count);
                let batch: Vec<T> = pool.install(|| (start..end).into_par_iter().map(&compute).collect());
                for (k, v) in batch.into_iter().enumerate() {
                    consume(start + k, v);
                }
            }
        }
    }
}

/// Borrowed view of scalar coefficients on a space.
#[derive(Debug, Clone, Copy)]
pub struct FieldRef<'a> {
    pub space: &'a FeSpace,
    pub coeffs: &'a [f64],
}

impl FeFunction {
    pub fn field(&self) -> FieldRef<'_> {
        FieldRef {
            space: self.space(),
            coeffs: self.coeffs(),
        }
    }
}

impl VectorFeFunction {
    pub fn field(&self, k: usize) -> FieldRef<'_> {
        FieldRef {
            space: self.space(),
            coeffs: self.component(k),
        }
    }
}

/// Physical data of one element at the points of a quadrature rule.
pub struct ElementQuadrature {
    pub geometry: ElementGeometry,
    /// Physical quadrature points (unwrapped coordinates).
    pub points: Vec<[f64; 2]>,
    /// Reference weights times `|det J|`.
    pub weights: Vec<f64>,
}

impl ElementQuadrature {
    pub fn new(geometry: ElementGeometry, quad: &QuadratureRule) -> Self {
        let points = (0..quad.len())
            .map(|q| {
                let [x, y] = quad.reference_point(q);
                geometry.map(x, y)
            })
            .collect();
        let weights = quad.weights().iter().map(|w| w * geometry.det).collect();
        Self {
            geometry,
            points,
            weights,
        }
    }

    pub fn gradients(&self, tab: &Tabulation) -> Vec<[[f64; 2]; MAX_LOCAL]> {
        tab.reference_gradients
            .iter()
            .map(|rg| {
                let mut out = [[0.0; 2]; MAX_LOCAL];
                for (o, g) in out.iter_mut().zip(rg) {
                    *o = self.geometry.gradient(*g);
                }
                out
            })
            .collect()
    }
}

/// Tabulations for P1 and P2 on one rule.
pub struct Tabulations {
    p1: Tabulation,
    p2: Tabulation,
}

impl Tabulations {
    pub fn new(quad: &QuadratureRule) -> Self {
        Self {
            p1: Tabulation::new(1, quad),
            p2: Tabulation::new(2, quad),
        }
    }

    pub fn get(&self, degree: usize) -> &Tabulation {
        if degree == 1 {
            &self.p1
        } else {
            &self.p2
        }
    }
}

/// Values and gradients of supplied fields at one quadrature point.
#[derive(Debug, Clone)]
pub struct FieldSample<'a> {
    pub x: [f64; 2],
    pub values: &'a [f64],
    pub gradients: &'a [[f64; 2]],
}

/// Evaluate `fields` at every quadrature point of element `t`:
/// returns (values[q][f], gradients[q][f]).
pub fn sample_fields(
    fields: &[FieldRef<'_>],
    t: usize,
    eq: &ElementQuadrature,
    tabs: &Tabulations,
) -> (Vec<Vec<f64>>, Vec<Vec<[f64; 2]>>) {
    let nq = eq.weights.len();
    let mut values = vec![vec![0.0; fields.len()]; nq];
    let mut grads = vec![vec![[0.0; 2]; fields.len()]; nq];
    for (f, field) in fields.iter().enumerate() {
        let tab = tabs.get(field.space.degree());
        let pg = eq.gradients(tab);
        let dofs = field.space.element_dofs(t);
        for q in 0..nq {
            let (mut v, mut g) = (0.0, [0.0; 2]);
            for (k, &d) in dofs.iter().enumerate() {
                let c = field.coeffs[d];
                v += c * tab.values[q][k];
                g[0] += c * pg[q][k][0];
                g[1] += c * pg[q][k][1];
            }
            values[q][f] = v;
            grads[q][f] = g;
        }
    }
    (values, grads)
}

fn check_fields(space: &FeSpace, fields: &[FieldRef<'_>]) -> Result<(), FemError> {
    for f in fields {
        if !space.same_mesh(f.space) {
            return Err(FemError::MeshMismatch);
        }
        if f.coeffs.len() != f.space.dof_count() {
            return Err(FemError::LengthMismatch {
                expected: f.space.dof_count(),
                found: f.coeffs.len(),
            });
        }
    }
    Ok(())
}

/// Integrate a pointwise functional of `fields` over the domain.
pub fn integrate_fields(
    fields: &[FieldRef<'_>],
    quad: &QuadratureRule,
    g: impl Fn(&FieldSample<'_>) -> f64 + Sync,
) -> Result<f64, FemError> {
    let Some(first) = fields.first() else {
        return Ok(0.0);
    };
    check_fields(first.space, fields)?;
    let mesh = first.space.mesh();
    let tabs = Tabulations::new(quad);
    let mut total = 0.0;
    for_each_element(
        mesh.num_triangles(),
        |t| {
            let eq = ElementQuadrature::new(mesh.geometry_unchecked(t), quad);
            let (values, grads) = sample_fields(fields, t, &eq, &tabs);
            let mut s = 0.0;
            for q in 0..eq.weights.len() {
                let sample = FieldSample {
                    x: eq.points[q],
                    values: &values[q],
                    gradients: &grads[q],
                };
                s += eq.weights[q] * g(&sample);
            }
            s
        },
        |_, s| total += s,
    );
    Ok(total)
}

/// Weight returned by a coefficient evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Scalar(f64),
    Vector([f64; 2]),
    Tensor([[f64; 2]; 2]),
}

impl Weight {
    fn name(&self) -> &'static str {
        match self {
            Weight::Scalar(_) => "scalar",
            Weight::Vector(_) => "vector",
            Weight::Tensor(_) => "tensor",
        }
    }
}

/// Bilinear forms `a(trial_j, test_i)` with a pointwise weight `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    /// `∫ w φ_j ψ_i`, scalar weight.
    Mass,
    /// `∫ (w ∇φ_j) · ∇ψ_i`, scalar or tensor weight.
    Stiffness,
    /// `∫ (w · ∇φ_j) ψ_i`, vector weight.
    Convection,
}

/// Linear forms `l(test_i)` with a pointwise weight `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadKind {
    /// `∫ w ψ_i`, scalar weight.
    Value,
    /// `∫ w · ∇ψ_i`, vector weight.
    Gradient,
}

pub fn matrix_pattern(test: &FeSpace, trial: &FeSpace) -> SparsityPattern {
    let entries = (0..test.num_elements()).flat_map(|t| {
        let rows = test.element_dofs(t);
        let cols = trial.element_dofs(t);
        rows.iter()
            .flat_map(move |&r| cols.iter().map(move |&c| (r, c)))
    });
    SparsityPattern::from_entries(test.dof_count(), trial.dof_count(), entries)
}

pub fn assemble_weighted_matrix<W>(
    kind: FormKind,
    trial: &FeSpace,
    test: &FeSpace,
    quad: &QuadratureRule,
    fields: &[FieldRef<'_>],
    weight: W,
) -> Result<CscMatrix, FemError>
where
    W: Fn(&FieldSample<'_>) -> Weight + Sync,
{
    if !test.same_mesh(trial) {
        return Err(FemError::MeshMismatch);
    }
    check_fields(test, fields)?;
    let mesh = test.mesh();
    let tabs = Tabulations::new(quad);
    let (tab_u, tab_v) = (tabs.get(trial.degree()), tabs.get(test.degree()));
    let (nu, nv) = (trial.local_dofs(), test.local_dofs());
    let form = match kind {
        FormKind::Mass => "mass",
        FormKind::Stiffness => "stiffness",
        FormKind::Convection => "convection",
    };

    let mut matrix = CscMatrix::zeros(Arc::new(matrix_pattern(test, trial)));
    let mut error = None;
    for_each_element(
        mesh.num_triangles(),
        |t| -> Result<[[f64; MAX_LOCAL]; MAX_LOCAL], FemError> {
            let eq = ElementQuadrature::new(mesh.geometry_unchecked(t), quad);
            let gu = eq.gradients(tab_u);
            let gv = eq.gradients(tab_v);
            let (values, grads) = sample_fields(fields, t, &eq, &tabs);
            let mut local = [[0.0; MAX_LOCAL]; MAX_LOCAL];
            for q in 0..eq.weights.len() {
                let sample = FieldSample {
                    x: eq.points[q],
                    values: &values[q],
                    gradients: &grads[q],
                };
                let w = weight(&sample);
                let dx = eq.weights[q];
                let mismatch = || FemError::ShapeMismatch {
                    form,
                    found: w.name(),
                };
                for i in 0..nv {
                    for j in 0..nu {
                        let a = match (kind, w) {
                            (FormKind::Mass, Weight::Scalar(s)) => s * tab_u.values[q][j] * tab_v.values[q][i],
                            (FormKind::Stiffness, Weight::Scalar(s)) => {
                                s * (gu[q][j][0] * gv[q][i][0] + gu[q][j][1] * gv[q][i][1])
                            }
                            (FormKind::Stiffness, Weight::Tensor(m)) => {
                                let wg = [
                                    m[0][0] * gu[q][j][0] + m[0][1] * gu[q][j][1],
                                    m[1][0] * gu[q][j][0] + m[1][1] * gu[q][j][1],
                                ];
                                wg[0] * gv[q][i][0] + wg[1] * gv[q][i][1]
                            }
                            (FormKind::Convection, Weight::Vector(b)) => {
                                (b[0] * gu[q][j][0] + b[1] * gu[q][j][1]) * tab_v.values[q][i]
                            }
                            _ => return Err(mismatch()),
                        };
                        local[i][j] += dx * a;
                    }
                }
            }
            Ok(local)
        },
        |t, local| match local {
            Ok(local) => {
                let rows = test.element_dofs(t);
                let cols = trial.element_dofs(t);
                for (i, &r) in rows.iter().enumerate() {
                    for (j, &c) in cols.iter().enumerate() {
                        matrix.add(r, c, local[i][j]);
                    }
                }
            }
            Err(e) => {
                error.get_or_insert(e);
            }
        },
    );
    match error {
        Some(e) => Err(e),
        None => Ok(matrix),
    }
}

pub fn assemble_weighted_vector<W>(
    kind: LoadKind,
    test: &FeSpace,
    quad: &QuadratureRule,
    fields: &[FieldRef<'_>],
    weight: W,
) -> Result<Vec<f64>, FemError>
where
    W: Fn(&FieldSample<'_>) -> Weight + Sync,
{
    check_fields(test, fields)?;
    let mesh = test.mesh();
    let tabs = Tabulations::new(quad);
    let tab = tabs.get(test.degree());
    let nv = test.local_dofs();
    let form = match kind {
        LoadKind::Value => "value load",
        LoadKind::Gradient => "gradient load",
    };
    let mut out = vec![0.0; test.dof_count()];
    let mut error = None;
    for_each_element(
        mesh.num_triangles(),
        |t| -> Result<[f64; MAX_LOCAL], FemError> {
            let eq = ElementQuadrature::new(mesh.geometry_unchecked(t), quad);
            let gv = eq.gradients(tab);
            let (values, grads) = sample_fields(fields, t, &eq, &tabs);
            let mut local = [0.0; MAX_LOCAL];
            for q in 0..eq.weights.len() {
                let sample = FieldSample {
                    x: eq.points[q],
                    values: &values[q],
                    gradients: &grads[q],
                };
                let w = weight(&sample);
                for (i, l) in local.iter_mut().enumerate().take(nv) {
                    let a = match (kind, w) {
                        (LoadKind::Value, Weight::Scalar(s)) => s * tab.values[q][i],
                        (LoadKind::Gradient, Weight::Vector(b)) => b[0] * gv[q][i][0] + b[1] * gv[q][i][1],
                        _ => {
                            return Err(FemError::ShapeMismatch {
                                form,
                                found: w.name(),
                            })
                        }
                    };
                    *l += eq.weights[q] * a;
                }
            }
            Ok(local)
        },
        |t, local| match local {
            Ok(local) => {
                for (i, &r) in test.element_dofs(t).iter().enumerate() {
                    out[r] += local[i];
                }
            }
            Err(e) => {
                error.get_or_insert(e);
            }
        },
    );
    match error {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

pub fn assemble_mass(space: &FeSpace, quad: &QuadratureRule) -> CscMatrix {
    assemble_weighted_matrix(FormKind::Mass, space, space, quad, &[], |_| Weight::Scalar(1.0))
        .expect("scalar weight matches the mass form")
}

pub fn assemble_stiffness(space: &FeSpace, quad: &QuadratureRule) -> CscMatrix {
    assemble_weighted_matrix(FormKind::Stiffness, space, space, quad, &[], |_| {
        Weight::Scalar(1.0)
    })
    .expect("scalar weight matches the stiffness form")
}

/// `∫ g ψ_i` for an analytic function `g`.
pub fn assemble_load(
    space: &FeSpace,
    quad: &QuadratureRule,
    g: impl Fn([f64; 2]) -> f64 + Sync,
) -> Vec<f64> {
    assemble_weighted_vector(LoadKind::Value, space, quad, &[], |s| Weight::Scalar(g(s.x)))
        .expect("scalar weight matches the value load")
}

/// `∫ G · ∇ψ_i` for an analytic vector function `G`.
pub fn assemble_gradient_load(
    space: &FeSpace,
    quad: &QuadratureRule,
    g: impl Fn([f64; 2]) -> [f64; 2] + Sync,
) -> Vec<f64> {
    assemble_weighted_vector(LoadKind::Gradient, space, quad, &[], |s| {
        Weight::Vector(g(s.x))
    })
    .expect("vector weight matches the gradient load")
}

/// Matrix of `⟨∂_k v_j, q_i⟩` for velocity component `k` in `velocity` and
/// `q_i` in `pressure`.
pub fn assemble_divergence_block(
    pressure: &FeSpace,
    velocity: &FeSpace,
    k: usize,
    quad: &QuadratureRule,
) -> CscMatrix {
    let mut dir = [0.0; 2];
    dir[k] = 1.0;
    assemble_weighted_matrix(FormKind::Convection, velocity, pressure, quad, &[], |_| {
        Weight::Vector(dir)
    })
    .expect("vector weight matches the convection form")
}

/// Skew-symmetric trilinear form
/// `⟨a·∇b, c⟩_skw = ½ (⟨a·∇b, c⟩ − ⟨a·∇c, b⟩)` for vector fields.
pub fn skew_convection(
    a: &VectorFeFunction,
    b: &VectorFeFunction,
    c: &VectorFeFunction,
    quad: &QuadratureRule,
) -> Result<f64, FemError> {
    let fields = [
        a.field(0),
        a.field(1),
        b.field(0),
        b.field(1),
        c.field(0),
        c.field(1),
    ];
    integrate_fields(&fields, quad, |s| {
        let av = [s.values[0], s.values[1]];
        let mut sum = 0.0;
        for k in 0..2 {
            let (bk, gbk) = (s.values[2 + k], s.gradients[2 + k]);
            let (ck, gck) = (s.values[4 + k], s.gradients[4 + k]);
            let a_grad_b = av[0] * gbk[0] + av[1] * gbk[1];
            let a_grad_c = av[0] * gck[0] + av[1] * gck[1];
            sum += a_grad_b * ck - a_grad_c * bk;
        }
        0.5 * sum
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::quadrature::make_quadrature;
    use crate::linalg::CholeskyFactors;
    use crate::mesh::PeriodicTriMesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn space(n: usize, degree: usize) -> Arc<FeSpace> {
        let mesh = Arc::new(PeriodicTriMesh::build_uniform(n).unwrap());
        Arc::new(FeSpace::new(mesh, degree).unwrap())
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn mass_matrix_totals_and_spd() {
        let q4 = make_quadrature(4).unwrap();
        for n in [1usize, 2, 5] {
            for degree in [1, 2] {
                let s = space(n, degree);
                let m = assemble_mass(&s, &q4);
                let total: f64 = m.values().iter().sum();
                assert!((total - 1.0).abs() < 1e-13, "n={n} p={degree}: {total}");
                assert!(m.is_symmetric(1e-15));
                assert!(CholeskyFactors::new(&m).is_ok());
            }
        }
    }

    #[test]
    fn p2_mass_column_sums_on_one_element() {
        // Restrict assembly to a single element by weighting with its indicator.
        let s = space(3, 2);
        let q4 = make_quadrature(4).unwrap();
        let t = 4;
        let g = s.mesh().element_geometry(t).unwrap();
        let inside = |x: [f64; 2]| {
            let (tt, _) = s.mesh().locate([x[0].rem_euclid(1.0), x[1].rem_euclid(1.0)]);
            tt == t
        };
        let centroid = g.map(1.0 / 3.0, 1.0 / 3.0);
        assert!(inside(centroid));
        let m = assemble_weighted_matrix(FormKind::Mass, &s, &s, &q4, &[], |smp| {
            // quadrature points are interior, so membership is unambiguous
            Weight::Scalar(if inside(smp.x) { 1.0 } else { 0.0 })
        })
        .unwrap();
        let ones = vec![1.0; s.dof_count()];
        let col_sums = m.mul_vec(&ones);
        let dofs = s.element_dofs(t);
        for (k, &d) in dofs.iter().enumerate() {
            let want = if k < 3 { 0.0 } else { g.area() / 3.0 };
            assert!((col_sums[d] - want).abs() < 1e-15, "local {k}");
        }
    }

    #[test]
    fn stiffness_kernel_is_constants() {
        let q4 = make_quadrature(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for degree in [1, 2] {
            let s = space(6, degree);
            let k = assemble_stiffness(&s, &q4);
            assert!(k.is_symmetric(1e-14));
            let ones = vec![1.0; s.dof_count()];
            assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-13));
            let mut x = random_vec(&mut rng, s.dof_count());
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            x.iter_mut().for_each(|v| *v -= mean);
            assert!(k.quadratic(&x) > 0.0);
        }
    }

    #[test]
    fn stiffness_energy_of_sine() {
        let q4 = make_quadrature(4).unwrap();
        let s = space(32, 2);
        let u = FeFunction::interpolate(s.clone(), |p| (2.0 * PI * p[0]).sin());
        let k = assemble_stiffness(&s, &q4);
        let e = k.quadratic(u.coeffs());
        assert!((e - 2.0 * PI * PI).abs() < 0.01 * 2.0 * PI * PI);
    }

    #[test]
    fn unit_weight_matches_mass_and_stiffness_bitwise() {
        let q = make_quadrature(10).unwrap();
        let s = space(4, 2);
        let m1 = assemble_mass(&s, &q);
        let m2 =
            assemble_weighted_matrix(FormKind::Mass, &s, &s, &q, &[], |_| Weight::Scalar(1.0)).unwrap();
        assert_eq!(m1.values(), m2.values());
        let k1 = assemble_stiffness(&s, &q);
        let k2 = assemble_weighted_matrix(FormKind::Stiffness, &s, &s, &q, &[], |_| {
            Weight::Tensor([[1.0, 0.0], [0.0, 1.0]])
        })
        .unwrap();
        for (a, b) in k1.values().iter().zip(k2.values()) {
            assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn mobility_weight_scales_stiffness() {
        let q = make_quadrature(10).unwrap();
        let s = space(4, 2);
        let phi = FeFunction::zeros(s.clone());
        let b = |p: f64| 0.1 * (1.0 - p).powi(2) * p * p + 1e-3;
        let kb = assemble_weighted_matrix(FormKind::Stiffness, &s, &s, &q, &[phi.field()], |smp| {
            Weight::Scalar(b(smp.values[0]))
        })
        .unwrap();
        let k = assemble_stiffness(&s, &q);
        for (a, c) in kb.values().iter().zip(k.values()) {
            assert!((a - 1e-3 * c).abs() < 1e-16 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let q = make_quadrature(2).unwrap();
        let s = space(2, 1);
        let err = assemble_weighted_matrix(FormKind::Mass, &s, &s, &q, &[], |_| Weight::Vector([1.0, 0.0]));
        assert_eq!(
            err.err(),
            Some(FemError::ShapeMismatch {
                form: "mass",
                found: "vector"
            })
        );
        let err = assemble_weighted_vector(LoadKind::Gradient, &s, &q, &[], |_| Weight::Scalar(1.0));
        assert!(matches!(err, Err(FemError::ShapeMismatch { .. })));
    }

    #[test]
    fn skew_form_vanishes_for_equal_arguments() {
        let q = make_quadrature(10).unwrap();
        let s = space(4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = s.dof_count();
        for _ in 0..10 {
            let a = VectorFeFunction::new(s.clone(), [random_vec(&mut rng, n), random_vec(&mut rng, n)]).unwrap();
            let b = VectorFeFunction::new(s.clone(), [random_vec(&mut rng, n), random_vec(&mut rng, n)]).unwrap();
            assert!(skew_convection(&a, &b, &b, &q).unwrap().abs() < 1e-12);
            let c = VectorFeFunction::new(s.clone(), [random_vec(&mut rng, n), random_vec(&mut rng, n)]).unwrap();
            let bc = skew_convection(&a, &b, &c, &q).unwrap();
            let cb = skew_convection(&a, &c, &b, &q).unwrap();
            assert!((bc + cb).abs() < 1e-12);
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let q = make_quadrature(10).unwrap();
        let s = space(5, 2);
        let a = assemble_stiffness(&s, &q);
        let b = assemble_stiffness(&s, &q);
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn divergence_of_constants_vanishes() {
        let q = make_quadrature(4).unwrap();
        let v = space(4, 2);
        let p = space(4, 1);
        for k in 0..2 {
            let b = assemble_divergence_block(&p, &v, k, &q);
            let ones = vec![1.0; v.dof_count()];
            assert!(b.mul_vec(&ones).iter().all(|x| x.abs() < 1e-14));
        }
    }
}
