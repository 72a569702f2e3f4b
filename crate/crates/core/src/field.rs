//! Smooth random fields on box domains with analytically exact derivatives.
//!
//! A field is `ξ(x) = a(x) + Σ_j c_j t_j(x)` where `a` is a polynomial mean
//! (degree ≤ 2 per coordinate), each basis term `t_j` is a product of
//! `cos(2π k_i x_i + θ_i)` factors, and the coefficients `c_j` are drawn
//! independently from mean-zero laws with finite exponential moments on all
//! of `R`. The trigonometric basis keeps the field C^∞ and gives closed-form
//! gradients and Hessians, so downstream saddle-point checks carry no
//! discretization error.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Open box `D = ∏ (l_i, u_i)`; evaluation is permitted on the closure.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidSpec(
                "domain needs matching, non-empty bound vectors".into(),
            ));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidSpec(format!(
                    "domain bounds must be finite with l < u, got ({l}, {u})"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit_interval() -> Self {
        Self {
            lower: vec![0.0],
            upper: vec![1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    /// Membership in the closed box `[D]`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (l, u))| *xi >= *l && *xi <= *u)
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(x.to_vec()))
        }
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (xi, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *xi = xi.clamp(*l, *u);
        }
    }
}

/// Mean-zero coefficient laws. Every law has a finite moment generating
/// function on all of `R`, which is what makes the Laplace integrals exist
/// for every real rate.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientLaw {
    /// Normal with mean 0 and standard deviation `sd`.
    Gaussian { sd: f64 },
    /// Density proportional to `exp(-|c|^p / p)`, `p > 1`. Its log-MGF grows
    /// like `|λ|^q / q` with `1/p + 1/q = 1`.
    SymmetricWeibull { p: f64 },
    /// Uniform on `[-a, a]`.
    Uniform { half_width: f64 },
}

impl CoefficientLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            CoefficientLaw::Gaussian { sd } if *sd > 0.0 && sd.is_finite() => Ok(()),
            CoefficientLaw::Gaussian { sd } => Err(Error::InvalidSpec(format!(
                "gaussian sd must be positive, got {sd}"
            ))),
            CoefficientLaw::SymmetricWeibull { p } if *p > 1.0 && p.is_finite() => Ok(()),
            CoefficientLaw::SymmetricWeibull { p } => Err(Error::InvalidSpec(format!(
                "symmetric-weibull p must exceed 1, got {p}"
            ))),
            CoefficientLaw::Uniform { half_width }
                if *half_width > 0.0 && half_width.is_finite() =>
            {
                Ok(())
            }
            CoefficientLaw::Uniform { half_width } => Err(Error::InvalidSpec(format!(
                "uniform half-width must be positive, got {half_width}"
            ))),
        }
    }

    pub fn draw(&self, rng: &mut CounterRng) -> f64 {
        match self {
            CoefficientLaw::Gaussian { sd } => sd * rng.next_gaussian(),
            CoefficientLaw::SymmetricWeibull { p } => rng.next_symmetric_weibull(*p),
            CoefficientLaw::Uniform { half_width } => rng.next_uniform(-half_width, *half_width),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            CoefficientLaw::Gaussian { sd } => sd * sd,
            CoefficientLaw::SymmetricWeibull { p } => {
                let g = statrs::function::gamma::gamma;
                p.powf(2.0 / p) * g(3.0 / p) / g(1.0 / p)
            }
            CoefficientLaw::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, CoefficientLaw::Gaussian { .. })
    }
}

/// One monomial `coeff * ∏ x_i^{powers_i}` of the mean; `powers_i ≤ 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u8>,
}

/// One basis term `∏_i cos(2π k_i x_i + θ_i)` with its coefficient law.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisTerm {
    pub frequency: Vec<f64>,
    pub phase: Vec<f64>,
    pub law: CoefficientLaw,
}

impl BasisTerm {
    /// Value of the deterministic shape `t(x)`.
    pub fn shape(&self, x: &[f64]) -> f64 {
        self.frequency
            .iter()
            .zip(&self.phase)
            .zip(x)
            .map(|((k, th), xi)| (std::f64::consts::TAU * k * xi + th).cos())
            .product()
    }

    fn factor(&self, i: usize, x: f64, derivative: u8) -> f64 {
        let w = std::f64::consts::TAU * self.frequency[i];
        let arg = w * x + self.phase[i];
        match derivative {
            0 => arg.cos(),
            1 => -w * arg.sin(),
            2 => -w * w * arg.cos(),
            _ => unreachable!(),
        }
    }

    fn shape_partial(&self, x: &[f64], orders: &[u8]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| self.factor(i, xi, orders[i]))
            .product()
    }
}

/// The law of the field: domain, polynomial mean, basis terms and base seed.
#[derive(Clone, Debug)]
pub struct FieldSpec {
    domain: Domain,
    mean: Vec<Monomial>,
    terms: Vec<BasisTerm>,
    base_seed: u64,
}

impl FieldSpec {
    pub fn new(
        domain: Domain,
        mean: Vec<Monomial>,
        terms: Vec<BasisTerm>,
        base_seed: u64,
    ) -> Result<Self> {
        let d = domain.dim();
        for m in &mean {
            if m.powers.len() != d {
                return Err(Error::InvalidSpec(
                    "mean monomial dimension mismatch".into(),
                ));
            }
            if m.powers.iter().any(|&p| p > 2) {
                return Err(Error::InvalidSpec(
                    "mean polynomial degree must be at most 2 per coordinate".into(),
                ));
            }
            if !m.coeff.is_finite() {
                return Err(Error::InvalidSpec("mean coefficient must be finite".into()));
            }
        }
        for t in &terms {
            if t.frequency.len() != d || t.phase.len() != d {
                return Err(Error::InvalidSpec("basis term dimension mismatch".into()));
            }
            if t.frequency.iter().chain(&t.phase).any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(
                    "basis frequencies and phases must be finite".into(),
                ));
            }
            t.law.validate()?;
        }
        Ok(Self {
            domain,
            mean,
            terms,
            base_seed,
        })
    }

    /// Convenience constructor for a purely deterministic field.
    pub fn deterministic(domain: Domain, mean: Vec<Monomial>) -> Result<Self> {
        Self::new(domain, mean, Vec::new(), 0)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    pub fn mean(&self) -> &[Monomial] {
        &self.mean
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn with_base_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    /// A field with no basis terms carries no randomness.
    pub fn is_deterministic(&self) -> bool {
        self.terms.is_empty()
    }

    fn mean_value(&self, x: &[f64]) -> f64 {
        self.mean
            .iter()
            .map(|m| {
                m.coeff
                    * m.powers
                        .iter()
                        .zip(x)
                        .map(|(&p, &xi)| xi.powi(p as i32))
                        .product::<f64>()
            })
            .sum()
    }

    fn mean_partial(&self, x: &[f64], orders: &[u8]) -> f64 {
        self.mean
            .iter()
            .map(|m| {
                let mut v = m.coeff;
                for ((&p, &o), &xi) in m.powers.iter().zip(orders).zip(x) {
                    v *= match (p, o) {
                        (p, 0) => xi.powi(p as i32),
                        (1, 1) => 1.0,
                        (2, 1) => 2.0 * xi,
                        (2, 2) => 2.0,
                        _ => 0.0,
                    };
                    if v == 0.0 {
                        break;
                    }
                }
                v
            })
            .sum()
    }
}

/// One realization `ω`: frozen coefficients over a shared spec. Evaluation is
/// pure, so samples can be created and evaluated concurrently.
#[derive(Clone, Debug)]
pub struct FieldSample {
    spec: Arc<FieldSpec>,
    coefficients: Vec<f64>,
    replicate_id: u64,
}

/// Draw the coefficients for replicate `replicate_id`. Term `j` consumes its
/// own counter stream keyed by `(base seed, replicate, j)`, so the draw is
/// independent of evaluation order and of any other replicate.
pub fn sample_field(spec: &Arc<FieldSpec>, replicate_id: u64) -> FieldSample {
    let coefficients = spec
        .terms
        .iter()
        .enumerate()
        .map(|(j, term)| {
            let mut rng = CounterRng::new(spec.base_seed, &[replicate_id, j as u64]);
            term.law.draw(&mut rng)
        })
        .collect();
    FieldSample {
        spec: Arc::clone(spec),
        coefficients,
        replicate_id,
    }
}

impl FieldSample {
    /// Build a sample with explicit coefficients (deterministic tests, FFI).
    pub fn with_coefficients(spec: Arc<FieldSpec>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != spec.terms.len() {
            return Err(Error::InvalidSpec(format!(
                "coefficient count {} does not match basis size {}",
                coefficients.len(),
                spec.terms.len()
            )));
        }
        Ok(Self {
            spec,
            coefficients,
            replicate_id: u64::MAX,
        })
    }

    pub fn spec(&self) -> &Arc<FieldSpec> {
        &self.spec
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn replicate_id(&self) -> u64 {
        self.replicate_id
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// `ξ(x) = a(x) + Σ c_j t_j(x)`, exact to floating precision.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.spec.domain.check_point(x)?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        let random: f64 = self
            .spec
            .terms
            .iter()
            .zip(&self.coefficients)
            .map(|(t, c)| c * t.shape(x))
            .sum();
        self.spec.mean_value(x) + random
    }

    /// Analytic gradient; no finite differencing anywhere.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.spec.domain.check_point(x)?;
        Ok(self.gradient_unchecked(x))
    }

    pub(crate) fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut orders = vec![0u8; d];
        (0..d)
            .map(|i| {
                orders[i] = 1;
                let mut g = self.spec.mean_partial(x, &orders);
                for (t, c) in self.spec.terms.iter().zip(&self.coefficients) {
                    g += c * t.shape_partial(x, &orders);
                }
                orders[i] = 0;
                g
            })
            .collect()
    }

    /// Analytic Hessian `η(x)`; symmetric by construction.
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.spec.domain.check_point(x)?;
        Ok(self.hessian_unchecked(x))
    }

    pub(crate) fn hessian_unchecked(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        let mut orders = vec![0u8; d];
        for i in 0..d {
            for j in i..d {
                if i == j {
                    orders[i] = 2;
                } else {
                    orders[i] = 1;
                    orders[j] = 1;
                }
                let mut v = self.spec.mean_partial(x, &orders);
                for (t, c) in self.spec.terms.iter().zip(&self.coefficients) {
                    v += c * t.shape_partial(x, &orders);
                }
                h[(i, j)] = v;
                h[(j, i)] = v;
                orders[i] = 0;
                orders[j] = 0;
            }
        }
        h
    }

    /// `ζ(x) = |det η(x)|^{1/2}`; zero at degenerate points.
    pub fn zeta(&self, x: &[f64]) -> Result<f64> {
        self.spec.domain.check_point(x)?;
        Ok(self.zeta_unchecked(x))
    }

    pub(crate) fn zeta_unchecked(&self, x: &[f64]) -> f64 {
        self.hessian_unchecked(x).determinant().abs().sqrt()
    }

    /// `ln ζ(x)`; `-inf` at degenerate points. Used by log-space quadrature.
    pub(crate) fn log_zeta_unchecked(&self, x: &[f64]) -> f64 {
        let det = self.hessian_unchecked(x).determinant().abs();
        0.5 * det.ln()
    }
}

/// Covariance `W(z1, z2) = Σ var(c_j) t_j(z1) t_j(z2)` of the centered part
/// of a Gaussian spec.
pub fn gaussian_covariance(spec: &FieldSpec, z1: &[f64], z2: &[f64]) -> Result<f64> {
    spec.domain.check_point(z1)?;
    spec.domain.check_point(z2)?;
    if !spec.terms.iter().all(|t| t.law.is_gaussian()) {
        return Err(Error::NonGaussianSpec);
    }
    Ok(spec
        .terms
        .iter()
        .map(|t| t.law.variance() * t.shape(z1) * t.shape(z2))
        .sum())
}

/// Natural semi-distance of a Gaussian field,
/// `d(z1, z2) = sqrt(W(z1,z1) - 2 W(z1,z2) + W(z2,z2))`.
pub fn gaussian_natural_distance(spec: &FieldSpec, z1: &[f64], z2: &[f64]) -> Result<f64> {
    let w11 = gaussian_covariance(spec, z1, z1)?;
    let w12 = gaussian_covariance(spec, z1, z2)?;
    let w22 = gaussian_covariance(spec, z2, z2)?;
    // Rounding can push the quadratic form a hair below zero at z1 == z2.
    Ok((w11 - 2.0 * w12 + w22).max(0.0).sqrt())
}
