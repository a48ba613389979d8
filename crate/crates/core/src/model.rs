//! Model coefficients: interface parameter, mobility, viscosity and potential.

use crate::error::ModelError;

/// Range on which positivity and the convexity defect are checked.
pub const SAMPLE_RANGE: (f64, f64) = (-2.0, 3.0);
const SAMPLES: usize = 10_000;
/// Allowed negative round-off in the sampled potential (wells given by
/// decimal roots are not exactly representable).
const POTENTIAL_ROUNDOFF: f64 = 1e-12;

/// Polynomial with coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    /// `scale * Π (s - r)`.
    pub fn from_roots(scale: f64, roots: &[f64]) -> Self {
        let mut c = vec![scale];
        for &r in roots {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &v) in c.iter().enumerate() {
                next[k + 1] += v;
                next[k] -= r * v;
            }
            c = next;
        }
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Polynomial, k: usize| p.coeffs.get(k).copied().unwrap_or(0.0);
        Polynomial::new((0..n).map(|k| get(self, k) + get(other, k)).collect())
    }

    fn sampled_min(&self, (lo, hi): (f64, f64)) -> f64 {
        (0..SAMPLES)
            .map(|k| self.eval(lo + (hi - lo) * k as f64 / (SAMPLES - 1) as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Validated model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    gamma: f64,
    f: Polynomial,
    f_d1: Polynomial,
    f_d2: Polynomial,
    b: Polynomial,
    b_d1: Polynomial,
    eta: Polynomial,
    eta_d1: Polynomial,
    f1: f64,
    b_min: f64,
    eta_min: f64,
}

impl ModelParams {
    pub fn new(
        gamma: f64,
        f_coeffs: &[f64],
        b_coeffs: &[f64],
        eta_coeffs: &[f64],
    ) -> Result<Self, ModelError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ModelError::NonPositiveGamma(gamma));
        }
        let f = Polynomial::new(f_coeffs.to_vec());
        let b = Polynomial::new(b_coeffs.to_vec());
        let eta = Polynomial::new(eta_coeffs.to_vec());
        for (name, p, max) in [("f", &f, 4), ("b", &b, 4), ("eta", &eta, 2)] {
            if p.degree() > max {
                return Err(ModelError::DegreeTooHigh {
                    name,
                    degree: p.degree(),
                    max,
                });
            }
        }
        let b_min = b.sampled_min(SAMPLE_RANGE);
        if !(b_min > 0.0) {
            return Err(ModelError::NonPositiveCoefficient {
                name: "mobility b",
                min: b_min,
            });
        }
        let eta_min = eta.sampled_min(SAMPLE_RANGE);
        if !(eta_min > 0.0) {
            return Err(ModelError::NonPositiveCoefficient {
                name: "viscosity eta",
                min: eta_min,
            });
        }
        let f_min = f.sampled_min(SAMPLE_RANGE);
        if f_min < -POTENTIAL_ROUNDOFF {
            return Err(ModelError::NegativePotential(f_min));
        }
        let f_d1 = f.derivative();
        let f_d2 = f_d1.derivative();
        let mut f2_min = f_d2.sampled_min(SAMPLE_RANGE);
        // f'' is at most quadratic; include its vertex when it lies in range.
        if f_d2.degree() == 2 {
            let c = f_d2.coeffs();
            let vertex = -c[1] / (2.0 * c[2]);
            if (SAMPLE_RANGE.0..=SAMPLE_RANGE.1).contains(&vertex) {
                f2_min = f2_min.min(f_d2.eval(vertex));
            }
        }
        let f1 = (-f2_min).max(0.0);
        Ok(Self {
            gamma,
            b_d1: b.derivative(),
            eta_d1: eta.derivative(),
            f,
            f_d1,
            f_d2,
            b,
            eta,
            f1,
            b_min,
            eta_min,
        })
    }

    /// Potential `(s - 0.99)^2 (s - 0.01)^2`.
    pub fn reference_potential() -> Vec<f64> {
        Polynomial::from_roots(1.0, &[0.99, 0.99, 0.01, 0.01]).coeffs().to_vec()
    }

    /// Mobility `0.1 (1 - s)^2 s^2 + 1e-3`.
    pub fn reference_mobility() -> Vec<f64> {
        Polynomial::from_roots(0.1, &[1.0, 1.0, 0.0, 0.0])
            .add(&Polynomial::new(vec![1e-3]))
            .coeffs()
            .to_vec()
    }

    /// Viscosity `2.5e-4 (s + 1)^2 + 1e-3`.
    pub fn reference_viscosity() -> Vec<f64> {
        Polynomial::from_roots(2.5e-4, &[-1.0, -1.0])
            .add(&Polynomial::new(vec![1e-3]))
            .coeffs()
            .to_vec()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self, ModelError> {
        Self::new(gamma, self.f.coeffs(), self.b.coeffs(), self.eta.coeffs())
    }

    pub fn f_coeffs(&self) -> &[f64] {
        self.f.coeffs()
    }

    pub fn b_coeffs(&self) -> &[f64] {
        self.b.coeffs()
    }

    pub fn eta_coeffs(&self) -> &[f64] {
        self.eta.coeffs()
    }

    /// Convexity defect: `f''(s) >= -f1` on the sample range.
    pub fn f1(&self) -> f64 {
        self.f1
    }

    /// Regularization parameter `max(gamma, gamma + f1)` of the relative energy.
    pub fn alpha(&self) -> f64 {
        self.gamma.max(self.gamma + self.f1)
    }

    /// Sampled lower bound of the mobility.
    pub fn b_min(&self) -> f64 {
        self.b_min
    }

    pub fn eta_min(&self) -> f64 {
        self.eta_min
    }

    #[inline]
    pub fn eval_b(&self, s: f64) -> f64 {
        self.b.eval(s)
    }

    #[inline]
    pub fn eval_b_d1(&self, s: f64) -> f64 {
        self.b_d1.eval(s)
    }

    #[inline]
    pub fn eval_eta(&self, s: f64) -> f64 {
        self.eta.eval(s)
    }

    #[inline]
    pub fn eval_eta_d1(&self, s: f64) -> f64 {
        self.eta_d1.eval(s)
    }

    #[inline]
    pub fn eval_f(&self, s: f64) -> f64 {
        self.f.eval(s)
    }

    #[inline]
    pub fn eval_f1d(&self, s: f64) -> f64 {
        self.f_d1.eval(s)
    }

    #[inline]
    pub fn eval_f2d(&self, s: f64) -> f64 {
        self.f_d2.eval(s)
    }

    /// Second-order Taylor remainder `f(s) - f(ŝ) - f'(ŝ)(s - ŝ)`, summed as
    /// `Σ_{k≥2} f^(k)(ŝ)/k! (s - ŝ)^k` so that it has no cancellation and
    /// vanishes exactly at `s = ŝ`.
    pub fn taylor_remainder_f(&self, s: f64, s_hat: f64) -> f64 {
        let d = s - s_hat;
        let mut deriv = self.f_d2.clone();
        let mut factorial = 2.0;
        let mut power = d * d;
        let mut sum = 0.0;
        for k in 2..=self.f.degree().max(2) {
            sum += deriv.eval(s_hat) / factorial * power;
            deriv = deriv.derivative();
            factorial *= (k + 1) as f64;
            power *= d;
        }
        sum
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::new(
            1e-3,
            &Self::reference_potential(),
            &Self::reference_mobility(),
            &Self::reference_viscosity(),
        )
        .expect("reference parameters are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_values() {
        let p = ModelParams::default();
        assert!(p.eval_f1d(0.5).abs() < 1e-15);
        assert!((p.eval_b(0.0) - 1e-3).abs() < 1e-18);
        assert!((p.eval_b(0.5) - 0.00725).abs() < 1e-15);
        assert!((p.eval_eta(1.0) - 2.0e-3).abs() < 1e-17);
        assert!(p.eval_f(0.99).abs() < 1e-15 && p.eval_f(0.01).abs() < 1e-15);
        assert!((p.eval_f(0.5) - (0.49f64 * 0.49).powi(2)).abs() < 1e-15);
        assert_eq!(p.gamma(), 1e-3);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let p = ModelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = 1e-5;
        for _ in 0..100 {
            let s: f64 = rng.gen_range(-1.0..2.0);
            let fd1 = (p.eval_f(s + e) - p.eval_f(s - e)) / (2.0 * e);
            let fd2 = (p.eval_f1d(s + e) - p.eval_f1d(s - e)) / (2.0 * e);
            assert!((p.eval_f1d(s) - fd1).abs() < 1e-6);
            assert!((p.eval_f2d(s) - fd2).abs() < 1e-6);
            let bd = (p.eval_b(s + e) - p.eval_b(s - e)) / (2.0 * e);
            assert!((p.eval_b_d1(s) - bd).abs() < 1e-6);
            let ed = (p.eval_eta(s + e) - p.eval_eta(s - e)) / (2.0 * e);
            assert!((p.eval_eta_d1(s) - ed).abs() < 1e-6);
        }
    }

    #[test]
    fn convexity_defect_of_reference_potential() {
        // f = g^2 with g = (s - a)(s - c), a + c = 1: f'' = 2 g'^2 + 4 g is
        // symmetric about 1/2 where g' = 0, so min f'' = 4 g(1/2).
        let p = ModelParams::default();
        let f2_half = 4.0 * (0.5 - 0.99) * (0.5 - 0.01);
        assert!((p.f1() + f2_half).abs() < 1e-12, "{} vs {}", p.f1(), -f2_half);
        assert!((p.alpha() - (p.gamma() + p.f1())).abs() < 1e-15);
    }

    #[test]
    fn taylor_remainder() {
        let p = ModelParams::default();
        assert_eq!(p.taylor_remainder_f(0.3, 0.3), 0.0);
        let q = ModelParams::new(1.0, &[0.0, 0.0, 1.0], &[1.0], &[1.0]).unwrap();
        for (s, sh) in [(0.3, -1.2), (2.0, 0.5), (-0.7, -0.7)] {
            assert!((q.taylor_remainder_f(s, sh) - (s - sh) * (s - sh)).abs() < 1e-14);
        }
        // independent oracle: expanded quartic evaluated term by term
        let f = |s: f64| ((s - 0.99) * (s - 0.99)) * ((s - 0.01) * (s - 0.01));
        let fp = |s: f64| 2.0 * (s - 0.99) * (s - 0.01) * ((s - 0.01) + (s - 0.99));
        let direct = f(0.6) - f(0.4) - fp(0.4) * 0.2;
        assert!((p.taylor_remainder_f(0.6, 0.4) - direct).abs() < 1e-14);
    }

    #[test]
    fn regularized_remainder_is_nonnegative() {
        let p = ModelParams::default();
        let a = p.alpha();
        for i in 0..200 {
            for j in 0..200 {
                let s = -1.0 + 3.0 * i as f64 / 199.0;
                let sh = -1.0 + 3.0 * j as f64 / 199.0;
                let v = p.taylor_remainder_f(s, sh) + 0.5 * a * (s - sh) * (s - sh);
                assert!(v >= -1e-14, "s={s} sh={sh}: {v}");
            }
        }
    }

    #[test]
    fn validation_errors() {
        let f = ModelParams::reference_potential();
        let b = ModelParams::reference_mobility();
        let eta = ModelParams::reference_viscosity();
        assert_eq!(
            ModelParams::new(0.0, &f, &b, &eta),
            Err(ModelError::NonPositiveGamma(0.0))
        );
        assert!(matches!(
            ModelParams::new(1.0, &f, &[0.0, 1.0], &eta),
            Err(ModelError::NonPositiveCoefficient { name: "mobility b", .. })
        ));
        assert!(matches!(
            ModelParams::new(1.0, &f, &b, &[-1.0]),
            Err(ModelError::NonPositiveCoefficient { .. })
        ));
        assert!(matches!(
            ModelParams::new(1.0, &[0.0, 0.0, -1.0], &b, &eta),
            Err(ModelError::NegativePotential(_))
        ));
        assert!(matches!(
            ModelParams::new(1.0, &f, &b, &[1.0, 0.0, 0.0, 1.0]),
            Err(ModelError::DegreeTooHigh { name: "eta", .. })
        ));
    }
}
