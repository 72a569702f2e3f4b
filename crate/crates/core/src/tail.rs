//! Tail asymptotics: empirical tails, the Laplace-type integral
//! `∫_0^∞ y^γ exp(λy − y^p/p) dy`, transform-growth fitting
//! `R(λ) ≈ C λ^α exp(λ^q/q)`, and the resulting tail prediction
//!
//! `T(u) ≈ (2π)^{-1/2} C u^{α(p−1) − 1 + p/2} exp(−u^p/p)`.
//!
//! Constant convention. The classical Laplace expansion of the integral
//! carries `√(2π) (p−1)^{-1/2} λ^Δ exp(λ^q/q)`; the `√(2π)`-only form used
//! as the reference here is exact at `p = 2` and off by `(p−1)^{-1/2}`
//! otherwise. Both sides are reported: `laplace_asymptotic_44` returns the
//! measured ratio so the discrepancy is visible, and the tail prediction
//! keeps the `(2π)^{-1/2}` convention of the transform chain rather than
//! silently absorbing the factor.

use crate::error::{Error, Result};
use crate::quadrature::{integrate_log, QuadratureOptions};
use crate::stats::{binomial_lower95, binomial_upper95, linear_fit};

const LN_TAU: f64 = 1.8378770664093453; // ln(2π)

/// Parameters of the transform growth `R(λ) ~ C λ^α exp(λ^q/q)` together
/// with the derived conjugate quantities.
#[derive(Clone, Copy, Debug)]
pub struct AsymptoticParams {
    pub alpha: f64,
    pub c_r: f64,
    pub q: f64,
    /// Conjugate power `p = q/(q−1)`; `1/p + 1/q = 1`.
    pub p: f64,
    /// Tail polynomial exponent `γ = α(p−1) − 1 + p/2`.
    pub gamma: f64,
    /// `Δ = (2γ + 2 − p) / (2(p−1))` for the forward integral; with the
    /// tail's own `γ` this collapses back to `α`.
    pub delta: f64,
}

impl AsymptoticParams {
    pub fn new(alpha: f64, c_r: f64, q: f64) -> Result<Self> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::InvalidInput(format!(
                "growth power q must exceed 1, got {q}"
            )));
        }
        if !(c_r > 0.0) || !c_r.is_finite() {
            return Err(Error::InvalidInput(format!(
                "C must be positive, got {c_r}"
            )));
        }
        let p = q / (q - 1.0);
        let gamma = alpha * (p - 1.0) - 1.0 + 0.5 * p;
        let delta = (2.0 * gamma + 2.0 - p) / (2.0 * (p - 1.0));
        debug_assert!((delta - alpha).abs() <= 1e-10 * (1.0 + alpha.abs()));
        Ok(Self {
            alpha,
            c_r,
            q,
            p,
            gamma,
            delta,
        })
    }
}

/// Where a tail curve came from.
#[derive(Clone, Debug)]
pub enum TailSource {
    Empirical { n: usize },
    Predicted { alpha: f64, c_r: f64, q: f64 },
}

/// `u ↦ T(u)` on an increasing grid, stored in log-space. Monotone
/// non-increase is enforced on construction; predicted curves flag where
/// clipping to `[0, 1]` or monotone flattening was applied.
#[derive(Clone, Debug)]
pub struct TailCurve {
    u: Vec<f64>,
    log_tail: Vec<f64>,
    pub source: TailSource,
    pub clipped: bool,
    pub flattened: bool,
}

impl TailCurve {
    fn validate_grid(u: &[f64]) -> Result<()> {
        if u.is_empty() {
            return Err(Error::InvalidInput("empty u grid".into()));
        }
        if u.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("u grid must strictly increase".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn log_tail(&self) -> &[f64] {
        &self.log_tail
    }

    pub fn tail(&self, i: usize) -> f64 {
        self.log_tail[i].exp()
    }

    /// One-sided 95% envelope for empirical curves.
    pub fn confidence95(&self, i: usize) -> Option<(f64, f64)> {
        match self.source {
            TailSource::Empirical { n } => {
                let k = (self.tail(i) * n as f64).round() as usize;
                Some((binomial_lower95(k, n), binomial_upper95(k, n)))
            }
            TailSource::Predicted { .. } => None,
        }
    }
}

/// Empirical tail `T(u) = #{M_i > u} / n` (strict exceedance) on a grid.
pub fn empirical_tail(maxima: &[f64], u_grid: &[f64]) -> Result<TailCurve> {
    if maxima.is_empty() {
        return Err(Error::InvalidInput("need at least one maximum".into()));
    }
    TailCurve::validate_grid(u_grid)?;
    let mut sorted = maxima.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN maximum"));
    let n = sorted.len();
    let log_tail: Vec<f64> = u_grid
        .iter()
        .map(|&u| {
            // Count of strictly greater values via partition point.
            let k = n - sorted.partition_point(|&m| m <= u);
            if k == 0 {
                f64::NEG_INFINITY
            } else {
                (k as f64 / n as f64).ln()
            }
        })
        .collect();
    debug_assert!(log_tail.windows(2).all(|w| w[1] <= w[0]));
    Ok(TailCurve {
        u: u_grid.to_vec(),
        log_tail,
        source: TailSource::Empirical { n },
        clipped: false,
        flattened: false,
    })
}

/// The comparison of `∫_0^∞ y^γ exp(λy − y^p/p) dy` against the reference
/// form `√(2π) λ^Δ exp(λ^q/q)`.
#[derive(Clone, Copy, Debug)]
pub struct LaplaceComparison {
    pub log_numeric: f64,
    pub log_reference: f64,
    /// `numeric / reference`; tends to `(p−1)^{-1/2}` (which is 1 at p = 2).
    pub ratio: f64,
    pub delta: f64,
    pub saddle: f64,
}

/// Numerically integrate the Laplace-type integral in log-space and compare
/// with the reference asymptotic. Requires `γ > −1` (integrability at zero)
/// and a saddle `y* = λ^{1/(p−1)} > 1`.
pub fn laplace_asymptotic_44(
    gamma: f64,
    p: f64,
    lambda: f64,
    quad: &QuadratureOptions,
) -> Result<LaplaceComparison> {
    if !(p > 1.0) {
        return Err(Error::InvalidInput(format!("p must exceed 1, got {p}")));
    }
    if !(gamma > -1.0) {
        return Err(Error::InvalidInput(format!(
            "gamma must exceed -1, got {gamma}"
        )));
    }
    let saddle = lambda.powf(1.0 / (p - 1.0));
    if !(saddle > 1.0) {
        return Err(Error::InvalidInput(format!(
            "saddle λ^(1/(p-1)) = {saddle} must exceed 1; increase lambda"
        )));
    }
    let q = p / (p - 1.0);
    let exponent = move |y: f64| {
        if y <= 0.0 {
            f64::NEG_INFINITY
        } else {
            gamma * y.ln() + lambda * y - y.powf(p) / p
        }
    };
    let peak = exponent(saddle);
    // Truncate where the integrand has fallen 120 e-folds below the peak.
    let mut hi = 2.0 * saddle;
    while exponent(hi) > peak - 120.0 {
        hi *= 2.0;
    }
    // Pre-split so the initial grid resolves the peak width (λ|h''|)^{-1/2}.
    let width = ((p - 1.0) * lambda.powf((p - 2.0) / (p - 1.0))).powf(-0.5);
    let splits = (hi / (4.0 * width)).log2().ceil().clamp(0.0, 10.0) as usize;
    let opts = QuadratureOptions {
        initial_splits: splits,
        ..quad.clone()
    };
    let est = integrate_log(&|x: &[f64]| exponent(x[0]), &[0.0], &[hi], &opts)?;
    let delta = (2.0 * gamma + 2.0 - p) / (2.0 * (p - 1.0));
    let log_reference = 0.5 * LN_TAU + delta * lambda.ln() + lambda.powf(q) / q;
    let log_numeric = est.value.ln();
    Ok(LaplaceComparison {
        log_numeric,
        log_reference,
        ratio: (log_numeric - log_reference).exp(),
        delta,
        saddle,
    })
}

/// Evaluate the predicted tail on a grid (log-space inside), clipping at
/// probability 1 and flattening any rising head so the curve is a valid
/// non-increasing tail; both adjustments are flagged.
pub fn tail_prediction_45(params: &AsymptoticParams, u_grid: &[f64]) -> Result<TailCurve> {
    TailCurve::validate_grid(u_grid)?;
    if u_grid[0] <= 0.0 {
        return Err(Error::InvalidInput("prediction grid needs u > 0".into()));
    }
    let mut clipped = false;
    let mut flattened = false;
    let mut log_tail = Vec::with_capacity(u_grid.len());
    let mut running = f64::INFINITY;
    for &u in u_grid {
        let mut lt =
            -0.5 * LN_TAU + params.c_r.ln() + params.gamma * u.ln() - u.powf(params.p) / params.p;
        if lt > 0.0 {
            lt = 0.0;
            clipped = true;
        }
        if lt > running {
            lt = running;
            flattened = true;
        }
        running = lt;
        log_tail.push(lt);
    }
    Ok(TailCurve {
        u: u_grid.to_vec(),
        log_tail,
        source: TailSource::Predicted {
            alpha: params.alpha,
            c_r: params.c_r,
            q: params.q,
        },
        clipped,
        flattened,
    })
}

/// Result of fitting the transform growth model.
#[derive(Clone, Debug)]
pub struct FitReport {
    pub params: AsymptoticParams,
    /// Sum of squared residuals at the selected `q`.
    pub residual: f64,
    /// `(q, SSE)` over the candidate grid.
    pub q_table: Vec<(f64, f64)>,
    /// Set when the data show no super-polynomial growth; `alpha = 0` and
    /// `C = exp(mean log R)` are returned with the smallest candidate `q`.
    pub degenerate: bool,
}

fn sse_for_q(lambda: &[f64], log_r: &[f64], q: f64) -> (f64, f64, f64) {
    let x: Vec<f64> = lambda.iter().map(|l| l.ln()).collect();
    let y: Vec<f64> = log_r
        .iter()
        .zip(lambda)
        .map(|(lr, l)| lr - l.powf(q) / q)
        .collect();
    let (intercept, slope) = linear_fit(&x, &y);
    let sse: f64 = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .sum();
    (sse, slope, intercept)
}

/// Default candidate growth powers.
pub fn default_q_candidates() -> Vec<f64> {
    vec![1.25, 1.5, 2.0, 2.5, 3.0]
}

/// Least-squares `(SSE, α, log C)` at a fixed growth power `q`.
pub fn fit_at_q(lambda: &[f64], log_r: &[f64], q: f64) -> (f64, f64, f64) {
    sse_for_q(lambda, log_r, q)
}

/// Fit `log R = log C + α log λ + λ^q/q` by per-candidate least squares in
/// `(α, log C)`, selecting the `q` with the smallest residual and refining
/// it once by golden-section between its neighbors.
pub fn fit_r_params(lambda: &[f64], log_r: &[f64], q_candidates: &[f64]) -> Result<FitReport> {
    if lambda.len() != log_r.len() || lambda.len() < 6 {
        return Err(Error::InvalidInput(
            "need at least six (λ, log R) points".into(),
        ));
    }
    if lambda.windows(2).any(|w| w[1] <= w[0]) || lambda[0] <= 0.0 {
        return Err(Error::InvalidInput(
            "λ grid must be positive and increasing".into(),
        ));
    }
    if lambda[lambda.len() - 1] / lambda[0] < 9.99 {
        return Err(Error::InvalidInput(
            "λ grid must span at least a decade".into(),
        ));
    }
    if q_candidates.len() < 2 {
        return Err(Error::InvalidInput("need at least two q candidates".into()));
    }

    // Flat data: the growth model is meaningless; report the constant.
    let spread = log_r.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - log_r.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < 1e-9 {
        let mean = crate::stats::mean(log_r);
        let q = q_candidates.iter().cloned().fold(f64::INFINITY, f64::min);
        return Ok(FitReport {
            params: AsymptoticParams::new(0.0, mean.exp(), q)?,
            residual: 0.0,
            q_table: q_candidates.iter().map(|&q| (q, f64::NAN)).collect(),
            degenerate: true,
        });
    }

    let mut table: Vec<(f64, f64)> = q_candidates
        .iter()
        .map(|&q| (q, sse_for_q(lambda, log_r, q).0))
        .collect();
    table.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN candidate"));
    let best_idx = table
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.partial_cmp(&b.1).expect("NaN residual"))
        .map(|(i, _)| i)
        .expect("nonempty");

    // The residual profile must fall into the minimum from both sides;
    // a multi-modal profile means the model does not identify q.
    let unimodal = table[..best_idx].windows(2).all(|w| w[0].1 >= w[1].1)
        && table[best_idx..].windows(2).all(|w| w[0].1 <= w[1].1);
    if !unimodal {
        return Err(Error::DegenerateFit { residuals: table });
    }

    // One golden-section refinement between the neighbors of the best
    // candidate.
    let lo = if best_idx == 0 {
        (1.0 + table[0].0) / 2.0
    } else {
        table[best_idx - 1].0
    };
    let hi = if best_idx + 1 == table.len() {
        table[best_idx].0 + (table[best_idx].0 - lo)
    } else {
        table[best_idx + 1].0
    };
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let f = |q: f64| sse_for_q(lambda, log_r, q).0;
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
        if b - a <= 1e-11 {
            break;
        }
    }
    let q = 0.5 * (a + b);
    let (residual, alpha, log_c) = sse_for_q(lambda, log_r, q);
    Ok(FitReport {
        params: AsymptoticParams::new(alpha, log_c.exp(), q)?,
        residual,
        q_table: table,
        degenerate: false,
    })
}

/// Forward Tauberian check: integrate `e^{λz} T(z)` for the predicted tail
/// and compare with `C λ^α exp(λ^q/q)`. The integrand is a Laplace-type
/// integral with `γ` equal to the tail's polynomial exponent, so the ratio
/// tends to 1 at `p = 2` and to `(p−1)^{-1/2}` otherwise.
pub fn tauberian_consistency(
    params: &AsymptoticParams,
    lambda: f64,
    quad: &QuadratureOptions,
) -> Result<f64> {
    let cmp = laplace_asymptotic_44(params.gamma, params.p, lambda, quad)?;
    // numerator = (2π)^{-1/2} C ∫ z^γ e^{λz - z^p/p} dz
    let log_numerator = -0.5 * LN_TAU + params.c_r.ln() + cmp.log_numeric;
    let log_denominator =
        params.c_r.ln() + params.alpha * lambda.ln() + lambda.powf(params.q) / params.q;
    Ok((log_numerator - log_denominator).exp())
}
