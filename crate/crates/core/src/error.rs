//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by field construction, sampling, optimization and the
/// numerical transforms.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field spec: {0}")]
    InvalidSpec(String),

    #[error("point {0:?} lies outside the closed domain")]
    OutOfDomain(Vec<f64>),

    #[error("operation requires Gaussian coefficient laws on every basis term")]
    NonGaussianSpec,

    #[error("no start converged within the iteration budget")]
    NoConvergence,

    #[error("tensor grid of {0} points exceeds the evaluation budget")]
    GridTooLarge(u128),

    #[error(
        "quadrature did not reach relative tolerance {tol:.1e} \
         (achieved {achieved:.1e} with {cells} cells)"
    )]
    QuadratureNotConverged {
        tol: f64,
        achieved: f64,
        cells: usize,
    },

    #[error("maximum is degenerate or lies on the boundary")]
    DegenerateMaximum,

    #[error("effective sample size {ess:.2} below the reliability floor {min}")]
    EssTooSmall {
        ess: f64,
        min: f64,
        log_estimate: f64,
    },

    #[error("samples are not centered: |mean| = {mean:.3e} exceeds 3 SE = {threshold:.3e}")]
    NotCentered { mean: f64, threshold: f64 },

    #[error("empirical moment generating function unstable on the whole grid")]
    MgfUnstable,

    #[error("r = {0} exceeds the range of the tabulated generator")]
    RExceedsRange(f64),

    #[error("no candidate exponential rate passes the uniform tail bound")]
    NoCandidatePasses,

    #[error("need at least {need} resolvable scales, found {found}")]
    InsufficientScales { need: usize, found: usize },

    #[error("degenerate fit: residual profile has no interior minimum over the candidates")]
    DegenerateFit { residuals: Vec<(f64, f64)> },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("empty output directory: {0}")]
    EmptyDirectory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
