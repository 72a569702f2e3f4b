//! Pathwise maximization: `M(ω) = max_{x ∈ [D]} ξ(x, ω)`.
//!
//! A low-discrepancy multistart drives projected Newton ascent with a
//! gradient fallback. Starts are seeded strictly inside the box; iterates may
//! ride the boundary, and a converged point within the boundary inset is
//! flagged `interior = false`. The `brute_force_max` grid scan serves as an
//! independent lower-bound oracle for the optimizer.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::FieldSample;

/// Options for [`find_max`]; exposed one-to-one as config keys.
#[derive(Clone, Debug)]
pub struct MaximizerOptions {
    /// Number of multistart points; defaults to `8 * 3^d` when `None`.
    pub starts: Option<usize>,
    /// Convergence threshold on the projected gradient norm.
    pub grad_tol: f64,
    /// Iteration budget per start.
    pub max_iter: usize,
    /// `|det η(x0)|` below this is treated as degenerate.
    pub det_tol: f64,
    /// Two local maxima within this value gap count as the same maximum.
    pub value_tol: f64,
    /// Fraction of each axis width treated as "at the boundary".
    pub boundary_frac: f64,
}

impl Default for MaximizerOptions {
    fn default() -> Self {
        Self {
            starts: None,
            grad_tol: 1e-10,
            max_iter: 200,
            det_tol: 1e-8,
            value_tol: 1e-9,
            boundary_frac: 1e-6,
        }
    }
}

impl MaximizerOptions {
    pub fn start_count(&self, dim: usize) -> usize {
        self.starts.unwrap_or_else(|| 8 * 3usize.pow(dim as u32))
    }
}

/// Maximum of one sample path.
#[derive(Clone, Debug)]
pub struct MaxResult {
    /// `M = max ξ`.
    pub value: f64,
    /// The argmax `x0`.
    pub argmax: Vec<f64>,
    /// `η(x0)`.
    pub hessian: DMatrix<f64>,
    /// False when `x0` lies within the boundary inset of `∂D`.
    pub interior: bool,
    /// Smallest `|det η|` among the starts that reached the best value;
    /// monitors how close the observed maxima come to degeneracy.
    pub min_abs_det: f64,
    /// How many converged starts agreed with the best value.
    pub n_starts_agreeing: usize,
}

/// Kronecker (generalized golden ratio) low-discrepancy sequence in `[0,1)^d`.
fn kronecker_starts(dim: usize, count: usize) -> Vec<Vec<f64>> {
    // phi_d is the unique positive root of x^(d+1) = x + 1.
    let mut phi = 1.5f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let alphas: Vec<f64> = (1..=dim)
        .map(|i| (1.0 / phi.powi(i as i32)) % 1.0)
        .collect();
    (0..count)
        .map(|n| {
            alphas
                .iter()
                .map(|a| (0.5 + a * (n as f64 + 1.0)) % 1.0)
                .collect()
        })
        .collect()
}

struct Ascent<'a> {
    sample: &'a FieldSample,
    lower: Vec<f64>,
    upper: Vec<f64>,
    grad_tol: f64,
    max_iter: usize,
}

impl Ascent<'_> {
    /// Gradient with components pointing out of the box zeroed at active bounds.
    fn projected_gradient(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        let tie = 1e-14;
        g.iter()
            .enumerate()
            .map(|(i, &gi)| {
                let at_lower = x[i] <= self.lower[i] + tie * (self.upper[i] - self.lower[i]);
                let at_upper = x[i] >= self.upper[i] - tie * (self.upper[i] - self.lower[i]);
                if (at_lower && gi < 0.0) || (at_upper && gi > 0.0) {
                    0.0
                } else {
                    gi
                }
            })
            .collect()
    }

    fn clamp(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Returns `(x, value, converged)` from one start.
    fn run(&self, start: &[f64]) -> (Vec<f64>, f64, bool) {
        let d = start.len();
        let mut x = start.to_vec();
        self.clamp(&mut x);
        let mut value = self.sample.value_unchecked(&x);
        let widths: Vec<f64> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .collect();
        let max_width = widths.iter().cloned().fold(0.0, f64::max);
        let mut grad_step = 0.25 * max_width;

        for _ in 0..self.max_iter {
            let g = self.sample.gradient_unchecked(&x);
            let pg = self.projected_gradient(&x, &g);
            let pg_norm = pg.iter().map(|v| v * v).sum::<f64>().sqrt();
            if pg_norm <= self.grad_tol {
                return (x, value, true);
            }

            // Newton step when the Hessian is negative definite. Near the
            // peak the value is flat to machine precision, so a step that
            // halves the gradient norm is also accepted as progress.
            let h = self.sample.hessian_unchecked(&x);
            let mut moved = false;
            if Cholesky::new(-h.clone()).is_some() {
                let rhs = DVector::from_column_slice(&g);
                if let Some(step) = h.clone().lu().solve(&rhs) {
                    let dir: Vec<f64> = (-step).iter().cloned().collect();
                    let ascent = dir.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
                    if ascent > 0.0 {
                        let flat_tol = 1e-14 * (1.0 + value.abs());
                        let mut t = 1.0;
                        for _ in 0..40 {
                            let mut cand: Vec<f64> =
                                x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
                            self.clamp(&mut cand);
                            let v = self.sample.value_unchecked(&cand);
                            if v > value {
                                x = cand;
                                value = v;
                                moved = true;
                                break;
                            }
                            if v >= value - flat_tol {
                                let gc = self.sample.gradient_unchecked(&cand);
                                let pgc = self.projected_gradient(&cand, &gc);
                                let norm = pgc.iter().map(|u| u * u).sum::<f64>().sqrt();
                                if norm < 0.5 * pg_norm {
                                    x = cand;
                                    value = value.max(v);
                                    moved = true;
                                    break;
                                }
                            }
                            t *= 0.5;
                        }
                    }
                }
            }
            if moved {
                continue;
            }

            // Fallback: projected gradient ascent with an adaptive step.
            let mut improved = false;
            while grad_step > 1e-18 * max_width {
                let mut cand: Vec<f64> =
                    (0..d).map(|i| x[i] + grad_step * pg[i] / pg_norm).collect();
                self.clamp(&mut cand);
                let v = self.sample.value_unchecked(&cand);
                if v > value {
                    x = cand;
                    value = v;
                    grad_step *= 2.0;
                    improved = true;
                    break;
                }
                grad_step *= 0.5;
            }
            if !improved {
                // No direction improves: stationary to floating precision.
                let g = self.sample.gradient_unchecked(&x);
                let pg = self.projected_gradient(&x, &g);
                let ok = pg.iter().map(|v| v * v).sum::<f64>().sqrt() <= self.grad_tol.max(1e-7);
                return (x, value, ok);
            }
        }
        (x, value, false)
    }
}

/// Multistart ascent over one sample path.
pub fn find_max(sample: &FieldSample, opts: &MaximizerOptions) -> Result<MaxResult> {
    let domain = sample.spec().domain();
    let d = domain.dim();
    let lower = domain.lower().to_vec();
    let upper = domain.upper().to_vec();
    let widths = domain.widths();

    let ascent = Ascent {
        sample,
        lower: lower.clone(),
        upper: upper.clone(),
        grad_tol: opts.grad_tol,
        max_iter: opts.max_iter,
    };

    // Starts sit strictly inside the box; iterates may still reach ∂D.
    let inset: Vec<f64> = widths.iter().map(|w| opts.boundary_frac * w).collect();
    let n_starts = opts.start_count(d).max(1);
    let starts = kronecker_starts(d, n_starts);

    let mut results: Vec<(Vec<f64>, f64)> = Vec::new();
    for unit in &starts {
        let start: Vec<f64> = (0..d)
            .map(|i| lower[i] + inset[i] + (widths[i] - 2.0 * inset[i]) * unit[i])
            .collect();
        let (x, value, converged) = ascent.run(&start);
        if converged {
            results.push((x, value));
        }
    }
    if results.is_empty() {
        return Err(Error::NoConvergence);
    }

    let best = results
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.1.partial_cmp(&b.1).expect("NaN value").then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("nonempty");
    let (x0, value) = results[best].clone();

    let agree_tol = opts.value_tol * (1.0 + value.abs());
    let mut n_starts_agreeing = 0usize;
    let mut min_abs_det = f64::INFINITY;
    for (x, v) in &results {
        if (value - v).abs() <= agree_tol {
            n_starts_agreeing += 1;
            let det = sample.hessian_unchecked(x).determinant().abs();
            min_abs_det = min_abs_det.min(det);
        }
    }

    let interior = (0..d).all(|i| {
        x0[i] > lower[i] + inset[i].max(1e-300) && x0[i] < upper[i] - inset[i].max(1e-300)
    });
    let hessian = sample.hessian_unchecked(&x0);

    Ok(MaxResult {
        value,
        argmax: x0,
        hessian,
        interior,
        min_abs_det,
        n_starts_agreeing,
    })
}

/// Exhaustive tensor-grid maximum, endpoints included. Always a lower bound
/// on the true maximum over the closure.
pub fn brute_force_max(sample: &FieldSample, points_per_axis: usize) -> Result<(f64, Vec<f64>)> {
    if points_per_axis < 2 {
        return Err(Error::InvalidInput(
            "points_per_axis must be at least 2".into(),
        ));
    }
    let domain = sample.spec().domain();
    let d = domain.dim();
    let total = (points_per_axis as u128).pow(d as u32);
    if total > 200_000_000 {
        return Err(Error::GridTooLarge(total));
    }
    let lower = domain.lower();
    let upper = domain.upper();
    let mut best_v = f64::NEG_INFINITY;
    let mut best_x = vec![0.0; d];
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let total = total as u64;
    for _ in 0..total {
        for i in 0..d {
            x[i] = lower[i] + (upper[i] - lower[i]) * idx[i] as f64 / (points_per_axis - 1) as f64;
        }
        let v = sample.value_unchecked(&x);
        if v > best_v {
            best_v = v;
            best_x.copy_from_slice(&x);
        }
        for i in 0..d {
            idx[i] += 1;
            if idx[i] < points_per_axis {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok((best_v, best_x))
}

/// True iff the maximum is interior, `|det η(x0)|` clears `det_tolerance`,
/// and every Hessian eigenvalue is ≤ a small positive slack (a maximum, not
/// a saddle).
pub fn check_nondegeneracy(result: &MaxResult, det_tolerance: f64) -> bool {
    if !result.interior {
        return false;
    }
    let det = result.hessian.determinant().abs();
    if det <= det_tolerance {
        return false;
    }
    let scale = result.hessian.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let eigen_tol = 1e-7 * scale;
    result
        .hessian
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .all(|&ev| ev <= eigen_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_field, BasisTerm, CoefficientLaw, Domain, FieldSpec, Monomial};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn quadratic_peak_spec() -> Arc<FieldSpec> {
        // 1 - (x - 0.3)^2 = 0.91 + 0.6 x - x^2
        Arc::new(
            FieldSpec::deterministic(
                Domain::unit_interval(),
                vec![
                    Monomial {
                        coeff: 0.91,
                        powers: vec![0],
                    },
                    Monomial {
                        coeff: 0.6,
                        powers: vec![1],
                    },
                    Monomial {
                        coeff: -1.0,
                        powers: vec![2],
                    },
                ],
            )
            .unwrap(),
        )
    }

    fn gaussian_trig_spec(seed: u64) -> Arc<FieldSpec> {
        Arc::new(
            FieldSpec::new(
                Domain::unit_interval(),
                vec![],
                vec![
                    BasisTerm {
                        frequency: vec![1.0],
                        phase: vec![0.0],
                        law: CoefficientLaw::Gaussian { sd: 1.0 },
                    },
                    BasisTerm {
                        frequency: vec![1.0],
                        phase: vec![std::f64::consts::FRAC_PI_2],
                        law: CoefficientLaw::Gaussian { sd: 1.0 },
                    },
                    BasisTerm {
                        frequency: vec![2.0],
                        phase: vec![0.7],
                        law: CoefficientLaw::Gaussian { sd: 0.5 },
                    },
                ],
                seed,
            )
            .unwrap(),
        )
    }

    #[test]
    fn analytic_quadratic_maximum() {
        let s = sample_field(&quadratic_peak_spec(), 0);
        let r = find_max(&s, &MaximizerOptions::default()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.argmax[0], 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(r.hessian[(0, 0)], -2.0, epsilon = 1e-12);
        assert!(r.interior);
        assert!(check_nondegeneracy(&r, 1e-6));
        assert!(r.n_starts_agreeing >= 20);
    }

    #[test]
    fn monotone_field_hits_the_boundary() {
        let spec = Arc::new(
            FieldSpec::deterministic(
                Domain::unit_interval(),
                vec![Monomial {
                    coeff: 1.0,
                    powers: vec![1],
                }],
            )
            .unwrap(),
        );
        let s = sample_field(&spec, 0);
        let r = find_max(&s, &MaximizerOptions::default()).unwrap();
        assert!(!r.interior);
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
        assert!(!check_nondegeneracy(&r, 1e-6));
    }

    #[test]
    fn matches_polished_grid_oracle() {
        for seed in 0..5 {
            let s = sample_field(&gaussian_trig_spec(100 + seed), seed);
            let r = find_max(&s, &MaximizerOptions::default()).unwrap();
            let (gv, gx) = brute_force_max(&s, 1_000_000).unwrap();
            // Polish the grid argmax with a few Newton steps.
            let mut x = gx.clone();
            for _ in 0..60 {
                let g = s.gradient(&x).unwrap()[0];
                let h = s.hessian(&x).unwrap()[(0, 0)];
                if h >= 0.0 || g.abs() < 1e-14 {
                    break;
                }
                x[0] = (x[0] - g / h).clamp(0.0, 1.0);
            }
            let polished = s.value(&x).unwrap().max(gv);
            assert!(
                (r.value - polished).abs() < 1e-8,
                "seed {seed}: {} vs {polished}",
                r.value
            );
        }
    }

    #[test]
    fn constant_field_brute_force() {
        let spec = Arc::new(
            FieldSpec::deterministic(
                Domain::unit_interval(),
                vec![Monomial {
                    coeff: 2.5,
                    powers: vec![0],
                }],
            )
            .unwrap(),
        );
        let s = sample_field(&spec, 0);
        let (v, x) = brute_force_max(&s, 11).unwrap();
        assert_abs_diff_eq!(v, 2.5);
        assert_abs_diff_eq!(x[0], 0.0);
    }

    #[test]
    fn quadratic_brute_force_resolution() {
        let s = sample_field(&quadratic_peak_spec(), 0);
        let (v, _) = brute_force_max(&s, 1_000_000).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_is_a_lower_bound() {
        for seed in 0..20 {
            let s = sample_field(&gaussian_trig_spec(7), seed);
            let r = find_max(&s, &MaximizerOptions::default()).unwrap();
            let (gv, _) = brute_force_max(&s, 10_000).unwrap();
            assert!(gv <= r.value + 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn oracle_sandwich_on_many_samples() {
        // 500 random samples, 1e5-point grids: gap within 1e-6, never negative.
        let spec = gaussian_trig_spec(2024);
        for rep in 0..500 {
            let s = sample_field(&spec, rep);
            let r = find_max(&s, &MaximizerOptions::default()).unwrap();
            let (gv, _) = brute_force_max(&s, 100_000).unwrap();
            assert!(gv <= r.value + 1e-9, "rep {rep}");
            assert!(r.value - gv <= 1e-6, "rep {rep}: gap {}", r.value - gv);
        }
    }

    #[test]
    fn interior_maxima_satisfy_first_and_second_order_conditions() {
        let spec = gaussian_trig_spec(55);
        let opts = MaximizerOptions::default();
        for rep in 0..50 {
            let s = sample_field(&spec, rep);
            let r = find_max(&s, &opts).unwrap();
            if !r.interior {
                continue;
            }
            let g = s.gradient(&r.argmax).unwrap();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= 1e-8, "rep {rep}: grad norm {norm}");
            let top = r.hessian.clone().symmetric_eigen().eigenvalues.max();
            assert!(top <= 1e-7, "rep {rep}: eigenvalue {top}");
        }
    }

    #[test]
    fn shift_equivariance() {
        let spec = gaussian_trig_spec(91);
        let s = sample_field(&spec, 3);
        let r = find_max(&s, &MaximizerOptions::default()).unwrap();

        let shifted_spec = Arc::new(
            FieldSpec::new(
                spec.domain().clone(),
                vec![Monomial {
                    coeff: 5.0,
                    powers: vec![0],
                }],
                spec.terms().to_vec(),
                spec.base_seed(),
            )
            .unwrap(),
        );
        let s2 = sample_field(&shifted_spec, 3);
        assert_eq!(s.coefficients(), s2.coefficients());
        let r2 = find_max(&s2, &MaximizerOptions::default()).unwrap();
        assert_abs_diff_eq!(r2.value, r.value + 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r2.argmax[0], r.argmax[0], epsilon = 1e-6);
    }

    #[test]
    fn nondegeneracy_rejection_rate_is_tiny() {
        let spec = gaussian_trig_spec(4242);
        let opts = MaximizerOptions::default();
        let n = 10_000u64;
        let mut failing = 0usize;
        for rep in 0..n {
            let s = sample_field(&spec, rep);
            match find_max(&s, &opts) {
                Ok(r) if check_nondegeneracy(&r, 1e-8) => {}
                _ => failing += 1,
            }
        }
        let frac = failing as f64 / n as f64;
        assert!(frac < 0.01, "degenerate fraction {frac}");
    }

    #[test]
    fn no_convergence_is_reported() {
        let s = sample_field(&gaussian_trig_spec(1), 0);
        let opts = MaximizerOptions {
            grad_tol: 0.0,
            max_iter: 1,
            ..Default::default()
        };
        assert!(matches!(find_max(&s, &opts), Err(Error::NoConvergence)));
    }

    #[test]
    fn grid_budget_is_enforced() {
        let spec = Arc::new(
            FieldSpec::deterministic(Domain::new(vec![0.0; 3], vec![1.0; 3]).unwrap(), vec![])
                .unwrap(),
        );
        let s = sample_field(&spec, 0);
        assert!(matches!(
            brute_force_max(&s, 1000),
            Err(Error::GridTooLarge(_))
        ));
        assert!(matches!(
            brute_force_max(&s, 1),
            Err(Error::InvalidInput(_))
        ));
    }
}
