//! Adaptive tensor-product Gauss–Legendre quadrature in log-space.
//!
//! Integrands are supplied as `x -> ln f(x)` with `f ≥ 0` (`-inf` encodes a
//! zero integrand). Each cell is scored by the discrepancy between a full
//! and a half-order rule; the worst cells are split dyadically until the
//! accumulated error estimate drops below the requested relative tolerance.
//! All reductions go through [`LogValue::sum`], so results do not depend on
//! evaluation order.

use crate::error::{Error, Result};
use crate::logspace::LogValue;

/// Nodes and weights of an n-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the Legendre polynomial from the Chebyshev guess.
    pub fn new(order: usize) -> Self {
        assert!(order >= 2, "rule order must be at least 2");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[n - 1 - k] = x;
            weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }
}

/// Options shared by every integral in the crate.
#[derive(Clone, Debug)]
pub struct QuadratureOptions {
    /// Gauss–Legendre order per cell (the error scan uses `order / 2`).
    pub order: usize,
    /// Stop once `Σ cell errors ≤ rel_tol · Σ cell values`.
    pub rel_tol: f64,
    /// Hard budget on the number of leaf cells.
    pub max_cells: usize,
    /// Uniform dyadic pre-splits per axis (callers size this from the
    /// integrand's peak width).
    pub initial_splits: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            order: 16,
            rel_tol: 1e-8,
            max_cells: 40_000,
            initial_splits: 0,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Debug)]
pub struct IntegralEstimate {
    pub value: LogValue,
    /// Log-space bound on the absolute error.
    pub error: LogValue,
    pub n_evals: usize,
    pub n_cells: usize,
}

struct Cell {
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: LogValue,
    error: LogValue,
}

fn eval_cell<F>(
    f: &F,
    lower: &[f64],
    upper: &[f64],
    hi: &GaussLegendre,
    lo: &GaussLegendre,
) -> (LogValue, LogValue, usize)
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let rule_value = |rule: &GaussLegendre| -> (LogValue, usize) {
        let d = lower.len();
        let n = rule.nodes.len();
        let total = n.pow(d as u32);
        let mut log_jacobian = 0.0;
        for (l, u) in lower.iter().zip(upper) {
            log_jacobian += (0.5 * (u - l)).ln();
        }
        let mut terms = Vec::with_capacity(total);
        let mut x = vec![0.0; d];
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let mut log_w = log_jacobian;
            for i in 0..d {
                let t = rule.nodes[idx[i]];
                x[i] = 0.5 * (lower[i] + upper[i]) + 0.5 * (upper[i] - lower[i]) * t;
                log_w += rule.weights[idx[i]].ln();
            }
            let log_f = f(&x);
            if log_f > f64::NEG_INFINITY {
                terms.push(LogValue::from_log(log_f + log_w));
            }
            // Advance the tensor index odometer.
            for i in 0..d {
                idx[i] += 1;
                if idx[i] < n {
                    break;
                }
                idx[i] = 0;
            }
        }
        (LogValue::sum(&terms), total)
    };
    let (v_hi, n_hi) = rule_value(hi);
    let (v_lo, n_lo) = rule_value(lo);
    let err = v_hi.sub(&v_lo);
    (v_hi, LogValue::from_log(err.log_abs()), n_hi + n_lo)
}

fn split_cell(cell: &Cell) -> Vec<(Vec<f64>, Vec<f64>)> {
    let d = cell.lower.len();
    let mut out = Vec::with_capacity(1 << d);
    for mask in 0..(1u32 << d) {
        let mut lo = cell.lower.clone();
        let mut hi = cell.upper.clone();
        for i in 0..d {
            let mid = 0.5 * (cell.lower[i] + cell.upper[i]);
            if mask >> i & 1 == 0 {
                hi[i] = mid;
            } else {
                lo[i] = mid;
            }
        }
        out.push((lo, hi));
    }
    out
}

/// Integrate `exp(log_f)` over the box `[lower, upper]`.
pub fn integrate_log<F>(
    log_f: &F,
    lower: &[f64],
    upper: &[f64],
    opts: &QuadratureOptions,
) -> Result<IntegralEstimate>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    assert_eq!(lower.len(), upper.len());
    let d = lower.len();
    let hi_rule = GaussLegendre::new(opts.order);
    let lo_rule = GaussLegendre::new((opts.order / 2).max(2));

    // Initial uniform dyadic grid.
    let per_axis = 1usize << opts.initial_splits.min(12);
    let mut cells: Vec<Cell> = Vec::new();
    let mut n_evals = 0usize;
    let mut idx = vec![0usize; d];
    let n_init = per_axis.pow(d as u32);
    if n_init > opts.max_cells {
        return Err(Error::InvalidInput(format!(
            "initial grid of {n_init} cells exceeds max_cells {}",
            opts.max_cells
        )));
    }
    for _ in 0..n_init {
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for i in 0..d {
            let w = (upper[i] - lower[i]) / per_axis as f64;
            lo[i] = lower[i] + idx[i] as f64 * w;
            hi[i] = lo[i] + w;
        }
        let (value, error, ne) = eval_cell(log_f, &lo, &hi, &hi_rule, &lo_rule);
        n_evals += ne;
        cells.push(Cell {
            lower: lo,
            upper: hi,
            value,
            error,
        });
        for i in 0..d {
            idx[i] += 1;
            if idx[i] < per_axis {
                break;
            }
            idx[i] = 0;
        }
    }

    loop {
        let total: LogValue = LogValue::sum(&cells.iter().map(|c| c.value).collect::<Vec<_>>());
        let err: LogValue = LogValue::sum(&cells.iter().map(|c| c.error).collect::<Vec<_>>());
        let achieved = if total.is_zero() {
            if err.is_zero() {
                return Ok(IntegralEstimate {
                    value: total,
                    error: err,
                    n_evals,
                    n_cells: cells.len(),
                });
            }
            f64::INFINITY
        } else {
            (err.log_abs() - total.log_abs()).exp()
        };
        if achieved <= opts.rel_tol {
            return Ok(IntegralEstimate {
                value: total,
                error: err,
                n_evals,
                n_cells: cells.len(),
            });
        }
        if cells.len() >= opts.max_cells {
            return Err(Error::QuadratureNotConverged {
                tol: opts.rel_tol,
                achieved,
                cells: cells.len(),
            });
        }

        // Split the worst eighth of the cells (at least one).
        let mut order: Vec<usize> = (0..cells.len()).collect();
        order.sort_by(|&a, &b| {
            cells[b]
                .error
                .log_abs()
                .partial_cmp(&cells[a].error.log_abs())
                .expect("NaN cell error")
                .then(a.cmp(&b))
        });
        let n_split = (cells.len() / 8).max(1).min(order.len());
        let mut to_split: Vec<usize> = order[..n_split].to_vec();
        to_split.sort_unstable();
        for &i in to_split.iter().rev() {
            let cell = cells.swap_remove(i);
            for (lo, hi) in split_cell(&cell) {
                let (value, error, ne) = eval_cell(log_f, &lo, &hi, &hi_rule, &lo_rule);
                n_evals += ne;
                cells.push(Cell {
                    lower: lo,
                    upper: hi,
                    value,
                    error,
                });
            }
        }
    }
}
