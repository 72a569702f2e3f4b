//! Small statistical helpers: binomial confidence envelopes, effective
//! sample sizes for exponentially weighted sums, moments.

use statrs::distribution::{Beta, ContinuousCDF};

/// One-sided 95% Clopper–Pearson upper confidence limit for a binomial
/// proportion with `k` successes out of `n`.
pub fn binomial_upper95(k: usize, n: usize) -> f64 {
    assert!(n > 0 && k <= n);
    if k == n {
        return 1.0;
    }
    let beta = Beta::new((k + 1) as f64, (n - k) as f64).expect("valid beta parameters");
    beta.inverse_cdf(0.95)
}

/// One-sided 95% lower limit (companion of [`binomial_upper95`]).
pub fn binomial_lower95(k: usize, n: usize) -> f64 {
    assert!(n > 0 && k <= n);
    if k == 0 {
        return 0.0;
    }
    let beta = Beta::new(k as f64, (n - k + 1) as f64).expect("valid beta parameters");
    beta.inverse_cdf(0.05)
}

/// Effective sample size `(Σw)^2 / Σw^2` of weights `w_i = exp(log_w_i)`,
/// computed stably by shifting with the largest exponent.
pub fn effective_sample_size(log_weights: &[f64]) -> f64 {
    let m = log_weights
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &lw in log_weights {
        let w = (lw - m).exp();
        s1 += w;
        s2 += w * w;
    }
    s1 * s1 / s2
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 in the denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0);
    var.sqrt()
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}
