//! Quadrature on the reference triangle `{(0,0), (1,0), (0,1)}`.
//!
//! Rules are collapsed (Duffy) tensor products of Gauss-Legendre rules: with
//! `x = a (1 - b)`, `y = b` a polynomial of degree `d` in `(x, y)` becomes a
//! polynomial of degree `d` in `a` and `d + 1` in `b` once the factor `1 - b`
//! is included, so `m = d / 2 + 1` points per direction are exact.

use crate::error::FemError;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Barycentric coordinates `(1 - x - y, x, y)`.
    points: Vec<[f64; 3]>,
    /// Weights on the reference triangle, summing to 1/2.
    weights: Vec<f64>,
    exactness_degree: usize,
}

impl QuadratureRule {
    pub fn new(exactness_degree: usize) -> Result<Self, FemError> {
        if !matches!(exactness_degree, 2 | 4 | 6 | 10) {
            return Err(FemError::UnsupportedQuadrature(exactness_degree));
        }
        let m = exactness_degree / 2 + 1;
        let (nodes, gauss_weights) = gauss_legendre_unit(m);
        let mut points = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for (&b, &wb) in nodes.iter().zip(&gauss_weights) {
            for (&a, &wa) in nodes.iter().zip(&gauss_weights) {
                let x = a * (1.0 - b);
                let y = b;
                points.push([1.0 - x - y, x, y]);
                weights.push(wa * wb * (1.0 - b));
            }
        }
        Ok(Self {
            points,
            weights,
            exactness_degree,
        })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Reference coordinates `(x, y)` of point `q`.
    #[inline]
    pub fn reference_point(&self, q: usize) -> [f64; 2] {
        [self.points[q][1], self.points[q][2]]
    }

    /// Integrate `g(x, y)` over the reference triangle.
    pub fn integrate_reference(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        (0..self.len())
            .map(|q| {
                let [x, y] = self.reference_point(q);
                self.weights[q] * g(x, y)
            })
            .sum()
    }
}

pub fn make_quadrature(exactness_degree: usize) -> Result<QuadratureRule, FemError> {
    QuadratureRule::new(exactness_degree)
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre(m, z);
                dp = d;
                break;
            }
        }
        nodes[m - 1 - i] = 0.5 * (z + 1.0);
        weights[m - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (nodes, weights)
}

/// `P_m(z)` and `P_m'(z)` by the three-term recurrence.
fn legendre(m: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
