//! The Hessian-weighted Laplace integral `I(λ, ω) = ∫_D ζ(x) e^{λ ξ(x)} dx`,
//! its saddle-point approximation, and the Monte Carlo estimates tying
//! `E e^{λM}` to `G(λ) = K(d) E I(λ)` with `K(d) = (2π)^{-d/2}`.
//!
//! Normalization. For an interior non-degenerate maximum the multivariate
//! Laplace expansion of `I(λ)` cancels the weight `ζ(x0) = |det η(x0)|^{1/2}`
//! against the curvature factor, leaving
//!
//! `I(λ) ≈ (2π/λ)^{d/2} e^{λM}`.
//!
//! An alternative convention that places `K(d) λ^{-d/2}` in front is off by a
//! factor `(2π)^d`; the quadratic oracle `ξ(x) = -x²/2` pins the constant
//! used here, and the acceptance suite records the discrepancy of the other
//! convention. Consequently the first-moment identity reads
//! `E e^{λM} ~ λ^{d/2} G(λ)`, which is exactly consistent with the
//! transform-side definition `R(λ) = λ^{d/2-1} G(λ)`.
//!
//! Everything is computed in log-space ([`LogValue`]); `λ M` in the hundreds
//! is routine.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extremum::{check_nondegeneracy, find_max, MaxResult, MaximizerOptions};
use crate::field::{sample_field, FieldSample, FieldSpec};
use crate::logspace::LogValue;
use crate::quadrature::{integrate_log, IntegralEstimate, QuadratureOptions};
use crate::stats::effective_sample_size;

const LN_TAU: f64 = 1.8378770664093453; // ln(2π)

/// Minimum effective sample size below which exponential Monte Carlo
/// averages are reported as unreliable instead of returned silently.
pub const MIN_ESS: f64 = 10.0;

/// `ln K(d)` with `K(d) = (2π)^{-d/2}`.
pub fn log_k(dim: usize) -> f64 {
    -0.5 * dim as f64 * LN_TAU
}

fn initial_splits_for(lambda: f64, max_width: f64) -> usize {
    // Resolve the peak region of width ~ λ^{-1/2} with a few cells before
    // adaptive refinement takes over.
    let target = max_width * lambda.max(1.0).sqrt() / 4.0;
    target.log2().ceil().clamp(0.0, 6.0) as usize
}

/// Adaptive quadrature of `ζ(x) e^{λ ξ(x)}` over the domain, in log-space.
pub fn integral_i(
    sample: &FieldSample,
    lambda: f64,
    quad: &QuadratureOptions,
) -> Result<IntegralEstimate> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let domain = sample.spec().domain();
    let widths = domain.widths();
    let max_width = widths.iter().cloned().fold(0.0, f64::max);
    let mut opts = quad.clone();
    if opts.initial_splits == 0 {
        opts.initial_splits = initial_splits_for(lambda, max_width);
    }
    let log_f = move |x: &[f64]| sample.log_zeta_unchecked(x) + lambda * sample.value_unchecked(x);
    integrate_log(&log_f, domain.lower(), domain.upper(), &opts)
}

/// Log-space saddle-point approximation `(2π/λ)^{d/2} e^{λM}` at an interior
/// non-degenerate maximum.
pub fn saddle_approx(result: &MaxResult, lambda: f64) -> Result<LogValue> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !check_nondegeneracy(result, 0.0) || result.hessian.determinant().abs() == 0.0 {
        return Err(Error::DegenerateMaximum);
    }
    let d = result.argmax.len() as f64;
    Ok(LogValue::from_log(
        0.5 * d * (LN_TAU - lambda.ln()) + lambda * result.value,
    ))
}

/// One `(sample, λ)` comparison of the integral with its saddle-point form.
#[derive(Clone, Debug)]
pub struct SaddleReport {
    pub lambda: f64,
    pub log_integral: LogValue,
    pub log_approx: LogValue,
    /// `I(λ) / ((2π/λ)^{d/2} e^{λM})`; tends to 1 pathwise as `λ → ∞`.
    pub ratio: f64,
    pub n_quad_points: usize,
}

/// Build the saddle report from an already-computed maximum.
pub fn saddle_report(
    sample: &FieldSample,
    max: &MaxResult,
    lambda: f64,
    quad: &QuadratureOptions,
) -> Result<SaddleReport> {
    let log_approx = saddle_approx(max, lambda)?;
    let est = integral_i(sample, lambda, quad)?;
    let ratio = est.value.div(&log_approx).to_linear();
    Ok(SaddleReport {
        lambda,
        log_integral: est.value,
        log_approx,
        ratio,
        n_quad_points: est.n_evals,
    })
}

/// `exp(log I − log approx)` for one sample, locating the maximum first.
pub fn pathwise_ratio(
    sample: &FieldSample,
    lambda: f64,
    max_opts: &MaximizerOptions,
    quad: &QuadratureOptions,
) -> Result<f64> {
    let max = find_max(sample, max_opts)?;
    if !check_nondegeneracy(&max, max_opts.det_tol) {
        return Err(Error::DegenerateMaximum);
    }
    Ok(saddle_report(sample, &max, lambda, quad)?.ratio)
}

/// A log-space Monte Carlo estimate together with a jackknife standard error
/// of its logarithm.
#[derive(Clone, Debug)]
pub struct McEstimate {
    pub value: LogValue,
    pub se_log: f64,
    pub n: usize,
}

/// Delete-one jackknife standard error of `ln(mean of exp(log_terms))`.
fn jackknife_se_log_mean(log_terms: &[f64]) -> f64 {
    let n = log_terms.len();
    if n < 2 {
        return f64::NAN;
    }
    let total = LogValue::sum(
        &log_terms
            .iter()
            .map(|&l| LogValue::from_log(l))
            .collect::<Vec<_>>(),
    );
    let thetas: Vec<f64> = log_terms
        .iter()
        .map(|&l| total.sub(&LogValue::from_log(l)).ln())
        .collect();
    let mean = crate::stats::mean(&thetas);
    let var: f64 =
        thetas.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() * (n as f64 - 1.0) / n as f64;
    var.sqrt()
}

/// Paired per-replicate data shared by the first-moment estimators: the same
/// replicate ids feed both `e^{λ M_i}` and `I(λ, ω_i)`.
#[derive(Clone, Debug)]
pub struct PairedReplicates {
    pub lambda: f64,
    /// `λ M_i` for each usable replicate.
    pub log_weights: Vec<f64>,
    /// `ln I(λ, ω_i)`.
    pub log_integrals: Vec<f64>,
    pub maxima: Vec<f64>,
    /// Replicates dropped because the maximizer did not converge.
    pub n_skipped: usize,
}

/// Draw replicates `0..n` and compute `(M_i, ln I_i)` pairs in parallel.
/// Replicate order is fixed by the counter-based streams, so the result is
/// independent of the thread schedule.
pub fn paired_replicates(
    spec: &Arc<FieldSpec>,
    lambda: f64,
    n_replicates: usize,
    max_opts: &MaximizerOptions,
    quad: &QuadratureOptions,
) -> Result<PairedReplicates> {
    if n_replicates == 0 {
        return Err(Error::InvalidInput("need at least one replicate".into()));
    }
    let rows: Vec<Result<Option<(f64, f64)>>> = (0..n_replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let sample = sample_field(spec, rep);
            let max = match find_max(&sample, max_opts) {
                Ok(m) => m,
                Err(Error::NoConvergence) => return Ok(None),
                Err(e) => return Err(e),
            };
            let est = integral_i(&sample, lambda, quad)?;
            Ok(Some((max.value, est.value.ln())))
        })
        .collect();
    let mut log_weights = Vec::with_capacity(n_replicates);
    let mut log_integrals = Vec::with_capacity(n_replicates);
    let mut maxima = Vec::with_capacity(n_replicates);
    let mut n_skipped = 0usize;
    for row in rows {
        match row? {
            Some((m, log_i)) => {
                maxima.push(m);
                log_weights.push(lambda * m);
                log_integrals.push(log_i);
            }
            None => n_skipped += 1,
        }
    }
    if maxima.is_empty() {
        return Err(Error::NoConvergence);
    }
    Ok(PairedReplicates {
        lambda,
        log_weights,
        log_integrals,
        maxima,
        n_skipped,
    })
}

/// `G(λ) = K(d) · mean_i I(λ, ω_i)` with a jackknife SE of the log.
pub fn estimate_g(
    spec: &Arc<FieldSpec>,
    lambda: f64,
    n_replicates: usize,
    max_opts: &MaximizerOptions,
    quad: &QuadratureOptions,
) -> Result<McEstimate> {
    let pairs = paired_replicates(spec, lambda, n_replicates, max_opts, quad)?;
    Ok(estimate_g_from(&pairs, spec.dim()))
}

/// `G` from precomputed replicate integrals.
pub fn estimate_g_from(pairs: &PairedReplicates, dim: usize) -> McEstimate {
    let n = pairs.log_integrals.len();
    let sum = LogValue::sum(
        &pairs
            .log_integrals
            .iter()
            .map(|&l| LogValue::from_log(l))
            .collect::<Vec<_>>(),
    );
    let value = LogValue::mean_of(&sum, n).scale_log(log_k(dim));
    McEstimate {
        value,
        se_log: jackknife_se_log_mean(&pairs.log_integrals),
        n,
    }
}

/// Log-sum-exp Monte Carlo estimate of `E e^{λ m}` from raw maxima, with the
/// effective sample size of the weights. This is also the degenerate test
/// hook: any vector of real draws can stand in for maxima.
pub fn log_mgf_from_values(values: &[f64], lambda: f64) -> (LogValue, f64) {
    let log_w: Vec<f64> = values.iter().map(|&m| lambda * m).collect();
    let sum = LogValue::sum(
        &log_w
            .iter()
            .map(|&l| LogValue::from_log(l))
            .collect::<Vec<_>>(),
    );
    (
        LogValue::mean_of(&sum, values.len()),
        effective_sample_size(&log_w),
    )
}

/// Paired-sampling estimate of `E e^{λM}`. Errors when the effective sample
/// size drops below [`MIN_ESS`] — the estimate is then dominated by a couple
/// of samples and must not be returned silently. Flat-weight batches with
/// `ess ≈ n` are exempt even when `n < 10`; nothing dominates there.
pub fn mgf_of_max(
    spec: &Arc<FieldSpec>,
    lambda: f64,
    n_replicates: usize,
    max_opts: &MaximizerOptions,
) -> Result<McEstimate> {
    if n_replicates == 0 {
        return Err(Error::InvalidInput("need at least one replicate".into()));
    }
    let rows: Vec<Result<Option<f64>>> = (0..n_replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let sample = sample_field(spec, rep);
            match find_max(&sample, max_opts) {
                Ok(m) => Ok(Some(m.value)),
                Err(Error::NoConvergence) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut maxima = Vec::with_capacity(n_replicates);
    for row in rows {
        if let Some(m) = row? {
            maxima.push(m);
        }
    }
    if maxima.is_empty() {
        return Err(Error::NoConvergence);
    }
    let (value, ess) = log_mgf_from_values(&maxima, lambda);
    if ess < MIN_ESS && ess < 0.5 * maxima.len() as f64 {
        return Err(Error::EssTooSmall {
            ess,
            min: MIN_ESS,
            log_estimate: value.ln(),
        });
    }
    let log_w: Vec<f64> = maxima.iter().map(|&m| lambda * m).collect();
    Ok(McEstimate {
        value,
        se_log: jackknife_se_log_mean(&log_w),
        n: maxima.len(),
    })
}

/// The paired first-moment comparison `E e^{λM} / (λ^{d/2} G(λ))`.
#[derive(Clone, Debug)]
pub struct FirstMomentRatio {
    pub lambda: f64,
    pub ratio: f64,
    pub log_ratio: f64,
    /// Delete-one jackknife SE of `log_ratio` over paired replicates. This
    /// measures only the spread of the per-sample saddle-point residuals:
    /// the paired ratio deviates from 1 by the mean residual itself (an
    /// `O(1/λ)` quantity the comparison is designed to exhibit), which this
    /// SE does not cover.
    pub se_log: f64,
    /// Jackknife SE of `log E e^{λM}` alone.
    pub se_log_mgf: f64,
    /// Jackknife SE of `log G(λ)` alone.
    pub se_log_g: f64,
    pub ess: f64,
    pub log_mgf: f64,
    pub log_g: f64,
    pub n: usize,
    pub n_skipped: usize,
}

impl FirstMomentRatio {
    /// 95% interval of the ratio from the paired jackknife SE.
    pub fn ci95_paired(&self) -> (f64, f64) {
        let half = 1.96 * self.se_log;
        ((self.log_ratio - half).exp(), (self.log_ratio + half).exp())
    }

    /// 95% agreement band between the two sides, combining their individual
    /// jackknife SEs in quadrature — the width at which two Monte Carlo
    /// estimates of the same quantity are statistically indistinguishable.
    pub fn ci95_agreement(&self) -> (f64, f64) {
        let half =
            1.96 * (self.se_log_mgf * self.se_log_mgf + self.se_log_g * self.se_log_g).sqrt();
        ((self.log_ratio - half).exp(), (self.log_ratio + half).exp())
    }
}

/// Paired estimate of `E e^{λM} / (λ^{d/2} G(λ))` on replicates `0..n`.
/// Enforces the ESS floor on the exponential weights.
pub fn first_moment_ratio(
    spec: &Arc<FieldSpec>,
    lambda: f64,
    n_replicates: usize,
    max_opts: &MaximizerOptions,
    quad: &QuadratureOptions,
) -> Result<FirstMomentRatio> {
    let pairs = paired_replicates(spec, lambda, n_replicates, max_opts, quad)?;
    first_moment_ratio_from(&pairs, spec.dim())
}

/// The ratio from precomputed paired replicates.
pub fn first_moment_ratio_from(pairs: &PairedReplicates, dim: usize) -> Result<FirstMomentRatio> {
    let n = pairs.log_weights.len();
    let lambda = pairs.lambda;
    let d = dim as f64;
    let ess = effective_sample_size(&pairs.log_weights);
    let sum_w = LogValue::sum(
        &pairs
            .log_weights
            .iter()
            .map(|&l| LogValue::from_log(l))
            .collect::<Vec<_>>(),
    );
    let sum_i = LogValue::sum(
        &pairs
            .log_integrals
            .iter()
            .map(|&l| LogValue::from_log(l))
            .collect::<Vec<_>>(),
    );
    let log_mgf = sum_w.ln() - (n as f64).ln();
    let log_g = sum_i.ln() - (n as f64).ln() + log_k(dim);
    // ratio = Σw / (λ^{d/2} K(d) ΣI); the 1/n factors cancel.
    let log_ratio = sum_w.ln() - 0.5 * d * lambda.ln() - log_k(dim) - sum_i.ln();
    if ess < MIN_ESS && ess < 0.5 * n as f64 {
        return Err(Error::EssTooSmall {
            ess,
            min: MIN_ESS,
            log_estimate: log_ratio,
        });
    }

    // Paired delete-one jackknife on the log-ratio.
    let se_log = if n < 2 {
        f64::NAN
    } else {
        let thetas: Vec<f64> = (0..n)
            .map(|i| {
                let w = sum_w.sub(&LogValue::from_log(pairs.log_weights[i]));
                let v = sum_i.sub(&LogValue::from_log(pairs.log_integrals[i]));
                w.ln() - v.ln()
            })
            .collect();
        let mean = crate::stats::mean(&thetas);
        (thetas.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() * (n as f64 - 1.0) / n as f64)
            .sqrt()
    };

    Ok(FirstMomentRatio {
        lambda,
        ratio: log_ratio.exp(),
        log_ratio,
        se_log,
        se_log_mgf: jackknife_se_log_mean(&pairs.log_weights),
        se_log_g: jackknife_se_log_mean(&pairs.log_integrals),
        ess,
        log_mgf,
        log_g,
        n,
        n_skipped: pairs.n_skipped,
    })
}

/// `R(λ) = λ^{d/2-1} (2π)^{-d/2} ∫_D E[ζ(x) e^{λξ(x)}] dx`, estimated with
/// the same replicate integrals as `G`; the identity `R = λ^{d/2-1} G` holds
/// by construction.
pub fn corollary_r(
    spec: &Arc<FieldSpec>,
    lambda: f64,
    n_replicates: usize,
    max_opts: &MaximizerOptions,
    quad: &QuadratureOptions,
) -> Result<McEstimate> {
    let g = estimate_g(spec, lambda, n_replicates, max_opts, quad)?;
    let d = spec.dim() as f64;
    Ok(McEstimate {
        value: g.value.scale_log((0.5 * d - 1.0) * lambda.ln()),
        se_log: g.se_log,
        n: g.n,
    })
}

/// `λ ∫_0^∞ e^{λz} T_n(z) dz` for the empirical tail `T_n` of `maxima`,
/// evaluated exactly as the integral of the step function: over each gap
/// `(v_j, v_{j+1})` of the sorted positive maxima the tail is constant, so
/// the increment is `t_j (e^{λ v_{j+1}} − e^{λ v_j})`. For nonnegative
/// maxima this equals `mean(e^{λ M_i}) − 1` by parts.
pub fn log_tail_transform(maxima: &[f64], lambda: f64) -> Result<LogValue> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if maxima.is_empty() {
        return Err(Error::InvalidInput("need at least one maximum".into()));
    }
    let n = maxima.len();
    let mut breaks: Vec<f64> = maxima.iter().cloned().filter(|&m| m > 0.0).collect();
    if breaks.is_empty() {
        return Ok(LogValue::zero());
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("NaN maximum"));
    breaks.dedup();
    let mut terms = Vec::with_capacity(breaks.len());
    let mut prev = 0.0f64;
    for &v in &breaks {
        // Tail value on (prev, v): strict exceedance count at prev.
        let count = maxima.iter().filter(|&&m| m > prev).count();
        if count > 0 {
            let log_t = (count as f64 / n as f64).ln();
            // t * (e^{λv} − e^{λ prev})
            let log_inc = lambda * v + (-(-(lambda * (v - prev))).exp()).ln_1p();
            terms.push(LogValue::from_log(log_t + log_inc));
        }
        prev = v;
    }
    Ok(LogValue::sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{BasisTerm, CoefficientLaw, Domain, Monomial};
    use crate::rng::CounterRng;
    use approx::assert_abs_diff_eq;
    use statrs::function::erf::erf;

    /// ξ(x) = -x²/2 on (-1, 1): the saddle-point constant oracle.
    fn half_quadratic_spec() -> Arc<FieldSpec> {
        Arc::new(
            FieldSpec::deterministic(
                Domain::new(vec![-1.0], vec![1.0]).unwrap(),
                vec![Monomial {
                    coeff: -0.5,
                    powers: vec![2],
                }],
            )
            .unwrap(),
        )
    }

    fn gaussian_pair_spec(sd: f64, seed: u64) -> Arc<FieldSpec> {
        Arc::new(
            FieldSpec::new(
                Domain::unit_interval(),
                vec![],
                vec![
                    BasisTerm {
                        frequency: vec![1.0],
                        phase: vec![0.0],
                        law: CoefficientLaw::Gaussian { sd },
                    },
                    BasisTerm {
                        frequency: vec![1.0],
                        phase: vec![std::f64::consts::FRAC_PI_2],
                        law: CoefficientLaw::Gaussian { sd },
                    },
                    BasisTerm {
                        frequency: vec![2.0],
                        phase: vec![0.7],
                        law: CoefficientLaw::Gaussian { sd: 0.5 * sd },
                    },
                ],
                seed,
            )
            .unwrap(),
        )
    }

    #[test]
    fn integral_matches_the_gaussian_oracle() {
        let s = sample_field(&half_quadratic_spec(), 0);
        let lambda = 100.0;
        let est = integral_i(&s, lambda, &QuadratureOptions::default()).unwrap();
        // ∫_{-1}^{1} e^{-λx²/2} dx = sqrt(2π/λ) erf(sqrt(λ/2))
        let expected = (std::f64::consts::TAU / lambda).sqrt() * erf((lambda / 2.0).sqrt());
        assert_abs_diff_eq!(est.value.ln(), expected.ln(), epsilon = 1e-8);
        assert_abs_diff_eq!(est.value.to_linear(), 0.250663, epsilon = 1e-6);
    }

    #[test]
    fn integral_at_lambda_zero_is_zeta_mass() {
        // ζ ≡ 1 for the quadratic, so ∫ζ = |D| = 2.
        let s = sample_field(&half_quadratic_spec(), 0);
        let est = integral_i(&s, 0.0, &QuadratureOptions::default()).unwrap();
        assert_abs_diff_eq!(est.value.to_linear(), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn constant_field_integral_is_zero() {
        let spec = Arc::new(
            FieldSpec::deterministic(
                Domain::unit_interval(),
                vec![Monomial {
                    coeff: 3.0,
                    powers: vec![0],
                }],
            )
            .unwrap(),
        );
        let s = sample_field(&spec, 0);
        let est = integral_i(&s, 5.0, &QuadratureOptions::default()).unwrap();
        assert!(est.value.is_zero());
    }

    #[test]
    fn log_space_matches_linear_space_at_moderate_lambda() {
        // Identical 256-panel GL-16 grids evaluated once through LogValue
        // and once in plain f64; at λ ≤ 30 nothing overflows in linear
        // space, so any gap is arithmetic, not quadrature.
        let spec = gaussian_pair_spec(1.0, 10);
        let s = sample_field(&spec, 2);
        let rule = crate::quadrature::GaussLegendre::new(16);
        for &lambda in &[5.0, 15.0, 30.0] {
            let fixed = QuadratureOptions {
                order: 16,
                rel_tol: 1e6, // accept the initial grid as-is
                max_cells: 512,
                initial_splits: 8,
            };
            let log_route = integral_i(&s, lambda, &fixed).unwrap();
            let panels = 256usize;
            let h = 1.0 / panels as f64;
            let mut acc = 0.0;
            for p in 0..panels {
                let (a, b) = (p as f64 * h, (p + 1) as f64 * h);
                for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                    let x = [0.5 * (a + b) + 0.5 * (b - a) * t];
                    acc += 0.5
                        * (b - a)
                        * w
                        * s.zeta(&x).unwrap()
                        * (lambda * s.value(&x).unwrap()).exp();
                }
            }
            assert!(
                (log_route.value.to_linear() - acc).abs() / acc < 1e-10,
                "λ={lambda}: {} vs {acc}",
                log_route.value.to_linear()
            );
            // The adaptive default should also land on the same value at the
            // quadrature (not arithmetic) level of agreement.
            let adaptive = integral_i(&s, lambda, &QuadratureOptions::default()).unwrap();
            assert!((adaptive.value.to_linear() - acc).abs() / acc < 1e-6);
        }
    }

    #[test]
    fn saddle_approx_examples() {
        use nalgebra::DMatrix;
        let mk = |d: usize, m: f64| MaxResult {
            value: m,
            argmax: vec![0.5; d],
            hessian: DMatrix::from_diagonal_element(d, d, -1.0),
            interior: true,
            min_abs_det: 1.0,
            n_starts_agreeing: 8,
        };
        let v = saddle_approx(&mk(1, 0.0), 100.0).unwrap();
        assert_abs_diff_eq!(
            v.ln(),
            (std::f64::consts::TAU / 100.0).sqrt().ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(v.to_linear(), 0.250663, epsilon = 1e-6);

        let v = saddle_approx(&mk(1, 1.0), 10.0).unwrap();
        assert_abs_diff_eq!(
            v.ln(),
            (std::f64::consts::TAU / 10.0).sqrt().ln() + 10.0,
            epsilon = 1e-12
        );

        let v = saddle_approx(&mk(2, 0.0), std::f64::consts::TAU).unwrap();
        assert_abs_diff_eq!(v.ln(), 0.0, epsilon = 1e-12);

        let boundary = MaxResult {
            interior: false,
            ..mk(1, 0.0)
        };
        assert!(matches!(
            saddle_approx(&boundary, 10.0),
            Err(Error::DegenerateMaximum)
        ));
    }

    #[test]
    fn pathwise_ratio_converges_on_the_quadratic() {
        let s = sample_field(&half_quadratic_spec(), 0);
        let opts = MaximizerOptions::default();
        let quad = QuadratureOptions::default();
        let r400 = pathwise_ratio(&s, 400.0, &opts, &quad).unwrap();
        assert!((r400 - 1.0).abs() < 0.005, "{r400}");
        let r25 = pathwise_ratio(&s, 25.0, &opts, &quad).unwrap();
        let r100 = pathwise_ratio(&s, 100.0, &opts, &quad).unwrap();
        assert!((r100 - 1.0).abs() < (r25 - 1.0).abs(), "{r25} {r100}");
    }

    #[test]
    fn boundary_maximum_is_refused() {
        let spec = Arc::new(
            FieldSpec::deterministic(
                Domain::unit_interval(),
                vec![Monomial {
                    coeff: -1.0,
                    powers: vec![1],
                }],
            )
            .unwrap(),
        );
        let s = sample_field(&spec, 0);
        let r = pathwise_ratio(
            &s,
            50.0,
            &MaximizerOptions::default(),
            &QuadratureOptions::default(),
        );
        assert!(matches!(r, Err(Error::DegenerateMaximum)));
    }

    #[test]
    fn estimate_g_on_a_deterministic_spec() {
        let spec = half_quadratic_spec();
        let lambda = 50.0;
        let g = estimate_g(
            &spec,
            lambda,
            3,
            &MaximizerOptions::default(),
            &QuadratureOptions::default(),
        )
        .unwrap();
        let s = sample_field(&spec, 0);
        let i = integral_i(&s, lambda, &QuadratureOptions::default()).unwrap();
        assert_abs_diff_eq!(g.value.ln(), log_k(1) + i.value.ln(), epsilon = 1e-12);
    }

    #[test]
    fn estimate_g_lambda_zero_matches_monte_carlo_of_zeta_mass() {
        let spec = gaussian_pair_spec(1.0, 77);
        let g = estimate_g(
            &spec,
            0.0,
            64,
            &MaximizerOptions::default(),
            &QuadratureOptions::default(),
        )
        .unwrap();
        // Direct Monte Carlo over (replicate, point) pairs.
        let mut rng = CounterRng::new(123, &[0]);
        let mut acc = 0.0;
        let reps = 64u64;
        let pts = 4000;
        for rep in 0..reps {
            let s = sample_field(&spec, rep);
            for _ in 0..pts {
                let x = [rng.next_f64()];
                acc += s.zeta(&x).unwrap();
            }
        }
        let mc = acc / (reps as f64 * pts as f64); // |D| = 1
        let expected = log_k(1) + mc.ln();
        assert!(
            (g.value.ln() - expected).abs() < 0.02,
            "{} vs {expected}",
            g.value.ln()
        );
    }

    #[test]
    fn estimators_are_deterministic() {
        let spec = gaussian_pair_spec(1.0, 5);
        let opts = MaximizerOptions::default();
        let quad = QuadratureOptions::default();
        let a = estimate_g(&spec, 10.0, 1, &opts, &quad).unwrap();
        let b = estimate_g(&spec, 10.0, 1, &opts, &quad).unwrap();
        assert_eq!(a.value.ln().to_bits(), b.value.ln().to_bits());
    }

    #[test]
    fn mgf_examples() {
        // Deterministic field: log E e^{λM} = λ M*.
        let spec = half_quadratic_spec();
        let est = mgf_of_max(&spec, 7.0, 1, &MaximizerOptions::default()).unwrap();
        assert_abs_diff_eq!(est.value.ln(), 0.0, epsilon = 1e-9); // M* = 0

        // Standard normal surrogate: log E e^{Z} = 1/2.
        let mut rng = CounterRng::new(912, &[0]);
        let n = 40_000;
        let draws: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
        let (v, ess) = log_mgf_from_values(&draws, 1.0);
        assert!((v.ln() - 0.5).abs() < 3.0 / (n as f64).sqrt(), "{}", v.ln());
        assert!(ess > 1000.0);

        // λ = 0 gives E 1 = 1 exactly.
        let (v0, _) = log_mgf_from_values(&draws, 0.0);
        assert_abs_diff_eq!(v0.ln(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mgf_is_monotone_in_lambda() {
        let mut rng = CounterRng::new(4, &[2]);
        let draws: Vec<f64> = (0..500).map(|_| rng.next_gaussian().abs()).collect();
        let mut prev = f64::NEG_INFINITY;
        for &lambda in &[0.0, 0.5, 1.0, 2.0, 4.0] {
            let (v, _) = log_mgf_from_values(&draws, lambda);
            assert!(v.ln() >= prev);
            prev = v.ln();
        }
    }

    #[test]
    fn small_ess_is_an_error() {
        let spec = gaussian_pair_spec(1.0, 31);
        // λ huge with few replicates: one sample dominates.
        match mgf_of_max(&spec, 500.0, 20, &MaximizerOptions::default()) {
            Err(Error::EssTooSmall { ess, .. }) => assert!(ess < MIN_ESS),
            other => panic!("expected ESS error, got {other:?}"),
        }
    }

    #[test]
    fn first_moment_ratio_reduces_to_the_pathwise_oracle() {
        // Deterministic spec: ratio = e^{λM} / (λ^{1/2} K I) = 1/pathwise.
        let spec = half_quadratic_spec();
        let r = first_moment_ratio(
            &spec,
            400.0,
            2,
            &MaximizerOptions::default(),
            &QuadratureOptions::default(),
        )
        .unwrap();
        assert!((r.ratio - 1.0).abs() < 0.005, "{}", r.ratio);
    }

    #[test]
    fn paired_beats_unpaired_variance() {
        // Block-wise comparison of log-ratio variance at n = 1000.
        let spec = gaussian_pair_spec(0.05, 321);
        let lambda = 40.0;
        let opts = MaximizerOptions::default();
        let quad = QuadratureOptions::default();
        let pairs = paired_replicates(&spec, lambda, 1000, &opts, &quad).unwrap();
        let blocks = 10;
        let per = pairs.log_weights.len() / blocks;
        let mut paired = Vec::new();
        let mut unpaired = Vec::new();
        for b in 0..blocks {
            let w = &pairs.log_weights[b * per..(b + 1) * per];
            let i = &pairs.log_integrals[b * per..(b + 1) * per];
            let lw = LogValue::sum(&w.iter().map(|&l| LogValue::from_log(l)).collect::<Vec<_>>());
            let li = LogValue::sum(&i.iter().map(|&l| LogValue::from_log(l)).collect::<Vec<_>>());
            paired.push(lw.ln() - li.ln());
            // Unpaired: integrals from the *next* block (cyclically).
            let ic = &pairs.log_integrals[((b + 1) % blocks) * per..((b + 1) % blocks + 1) * per];
            let lic = LogValue::sum(
                &ic.iter()
                    .map(|&l| LogValue::from_log(l))
                    .collect::<Vec<_>>(),
            );
            unpaired.push(lw.ln() - lic.ln());
        }
        let vp = crate::stats::sample_sd(&paired);
        let vu = crate::stats::sample_sd(&unpaired);
        assert!(vp < vu, "paired sd {vp} vs unpaired {vu}");
    }

    #[test]
    fn corollary_r_identity_is_exact() {
        let spec = gaussian_pair_spec(1.0, 8);
        let lambda = 30.0;
        let opts = MaximizerOptions::default();
        let quad = QuadratureOptions::default();
        let r = corollary_r(&spec, lambda, 16, &opts, &quad).unwrap();
        let g = estimate_g(&spec, lambda, 16, &opts, &quad).unwrap();
        let d = spec.dim() as f64;
        assert_eq!(
            r.value.ln().to_bits(),
            (g.value.ln() + (0.5 * d - 1.0) * lambda.ln()).to_bits()
        );
    }

    #[test]
    fn deterministic_lambda_r_over_mgf_tends_to_one() {
        let spec = half_quadratic_spec();
        let opts = MaximizerOptions::default();
        let quad = QuadratureOptions::default();
        let mut prev = f64::INFINITY;
        for &lambda in &[10.0, 25.0, 50.0] {
            let r = corollary_r(&spec, lambda, 1, &opts, &quad).unwrap();
            // M* = 0, so λ R(λ) → e^{λ M*} = 1.
            let ratio = (lambda.ln() + r.value.ln()).exp();
            assert!((ratio - 1.0).abs() < prev, "λ={lambda}");
            prev = (ratio - 1.0).abs();
        }
        assert!(prev < 0.005);
    }

    #[test]
    fn tail_transform_matches_mgf_by_parts() {
        // For positive maxima: λ ∫ e^{λz} T(z) dz = mean e^{λM} − 1 exactly.
        let maxima = vec![0.4, 1.1, 0.9, 2.0, 1.5, 0.7];
        let lambda = 12.0;
        let t = log_tail_transform(&maxima, lambda).unwrap();
        let direct: f64 = maxima
            .iter()
            .map(|&m| (lambda * m).exp() - 1.0)
            .sum::<f64>()
            / maxima.len() as f64;
        assert_abs_diff_eq!(t.to_linear(), direct, epsilon = direct * 1e-12);

        // All maxima nonpositive: the transform vanishes.
        assert!(log_tail_transform(&[-1.0, -0.5], 3.0).unwrap().is_zero());
    }

    #[test]
    fn tail_transform_agrees_with_paired_mgf_at_large_lambda() {
        let spec = gaussian_pair_spec(1.0, 2025);
        let opts = MaximizerOptions::default();
        let rows: Vec<f64> = (0..2000u64)
            .map(|rep| find_max(&sample_field(&spec, rep), &opts).unwrap().value)
            .collect();
        let lambda = 100.0;
        let (mgf, _) = log_mgf_from_values(&rows, lambda);
        let transform = log_tail_transform(&rows, lambda).unwrap();
        let rel = (transform.ln() - mgf.ln()).exp() - 1.0;
        assert!(rel.abs() < 1e-6, "relative gap {rel}");
    }
}
