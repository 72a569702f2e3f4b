//! Experiment configuration: a single TOML file with one `[experiment]`
//! block plus per-module sections. Unknown keys are hard errors so a typo in
//! a tolerance name cannot silently fall back to a default.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremum::MaximizerOptions;
use crate::field::{BasisTerm, CoefficientLaw, Domain, FieldSpec, Monomial};
use crate::orlicz::{read_phi_table, PhiFunction};
use crate::quadrature::QuadratureOptions;

/// The seven batch studies the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SaddlePathwise,
    Theorem1,
    Corollary1,
    Entropy,
    Norms,
    Tauberian,
    TailShape,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::SaddlePathwise => "saddle-pathwise",
            Self::Theorem1 => "theorem1",
            Self::Corollary1 => "corollary1",
            Self::Entropy => "entropy",
            Self::Norms => "norms",
            Self::Tauberian => "tauberian",
            Self::TailShape => "tail-shape",
        }
    }

    fn needs_field(&self) -> bool {
        // Tauberian runs on analytic inputs alone; norms may run on
        // reference draws (checked separately once its source is known).
        !matches!(self, Self::Tauberian | Self::Norms)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: ExperimentSection,
    field: Option<FieldSection>,
    maximizer: Option<MaximizerSection>,
    quadrature: Option<QuadratureSection>,
    entropy: Option<EntropySection>,
    norms: Option<NormsSection>,
    tauberian: Option<TauberianSection>,
    tail_shape: Option<TailShapeSection>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    kind: ExperimentKind,
    output_dir: String,
    #[serde(default)]
    seed: u64,
    n_replicates: Option<usize>,
    lambda_grid: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldSection {
    domain: DomainSection,
    #[serde(default)]
    mean: Vec<MonomialSection>,
    #[serde(default)]
    terms: Vec<TermSection>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSection {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonomialSection {
    powers: Vec<u8>,
    coeff: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermSection {
    frequency: Vec<f64>,
    phase: Vec<f64>,
    law: LawSection,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum LawSection {
    /// `mean` must be zero: non-zero means belong to the field mean `a(x)`.
    Gaussian {
        #[serde(default)]
        mean: f64,
        sd: f64,
    },
    SymmetricWeibull {
        p: f64,
    },
    /// Must be symmetric (`lo = -hi`) for the same reason.
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl LawSection {
    fn to_law(&self) -> Result<CoefficientLaw> {
        let law = match *self {
            LawSection::Gaussian { mean, sd } => {
                if mean != 0.0 {
                    return Err(Error::Config(
                        "gaussian coefficient mean must be 0; put means in [field] mean".into(),
                    ));
                }
                CoefficientLaw::Gaussian { sd }
            }
            LawSection::SymmetricWeibull { p } => CoefficientLaw::SymmetricWeibull { p },
            LawSection::Uniform { lo, hi } => {
                if lo != -hi {
                    return Err(Error::Config(
                        "uniform coefficient law must be symmetric (lo = -hi)".into(),
                    ));
                }
                CoefficientLaw::Uniform { half_width: hi }
            }
        };
        law.validate()?;
        Ok(law)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaximizerSection {
    starts: Option<usize>,
    #[serde(default = "default_grad_tol")]
    grad_tol: f64,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
    #[serde(default = "default_det_tol")]
    det_tol: f64,
    #[serde(default = "default_value_tol")]
    value_tol: f64,
    #[serde(default = "default_boundary_frac")]
    boundary_frac: f64,
}

fn default_grad_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    200
}
fn default_det_tol() -> f64 {
    1e-8
}
fn default_value_tol() -> f64 {
    1e-9
}
fn default_boundary_frac() -> f64 {
    1e-6
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadratureSection {
    #[serde(default = "default_order")]
    order: usize,
    #[serde(default = "default_rel_tol")]
    rel_tol: f64,
    #[serde(default = "default_max_cells")]
    max_cells: usize,
}

fn default_order() -> usize {
    16
}
fn default_rel_tol() -> f64 {
    1e-8
}
fn default_max_cells() -> usize {
    40_000
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntropySection {
    #[serde(default = "default_points_per_axis")]
    points_per_axis: usize,
    #[serde(default = "default_n_max")]
    n_max: usize,
}

fn default_points_per_axis() -> usize {
    257
}
fn default_n_max() -> usize {
    8
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum NormsSource {
    StandardNormal,
    FieldPoint,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormsSection {
    #[serde(default = "default_norm_samples")]
    n_samples: usize,
    source: Option<NormsSource>,
    x: Option<Vec<f64>>,
    phi: Option<PhiSection>,
    #[serde(default = "default_c_values")]
    c_values: Vec<f64>,
    #[serde(default = "default_mu_candidates")]
    mu_candidates: Vec<f64>,
}

fn default_norm_samples() -> usize {
    100_000
}
fn default_c_values() -> Vec<f64> {
    vec![1.5, 0.1]
}
fn default_mu_candidates() -> Vec<f64> {
    vec![0.05, 0.1, 0.25, 0.5, 1.0, 2.0]
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum PhiSection {
    Gaussian,
    Power { p: f64 },
    PurePower { p: f64 },
    Tabulated { path: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TauberianSection {
    #[serde(default)]
    alpha: f64,
    #[serde(default = "default_c_r")]
    c_r: f64,
    #[serde(default = "default_q")]
    q: f64,
    #[serde(default = "default_fit_noise")]
    fit_noise: f64,
}

fn default_c_r() -> f64 {
    1.0
}
fn default_q() -> f64 {
    2.0
}
fn default_fit_noise() -> f64 {
    0.01
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailShapeSection {
    p: Option<f64>,
    #[serde(default = "default_tail_points")]
    n_tail_points: usize,
}

fn default_tail_points() -> usize {
    32
}

/// Entropy study parameters.
#[derive(Clone, Debug)]
pub struct EntropyParams {
    pub points_per_axis: usize,
    pub n_max: usize,
}

/// Norm study parameters.
#[derive(Clone, Debug)]
pub struct NormsParams {
    pub n_samples: usize,
    pub field_point: Option<Vec<f64>>,
    pub phi: PhiFunction,
    pub c_values: Vec<f64>,
    pub mu_candidates: Vec<f64>,
}

/// Tauberian study parameters.
#[derive(Clone, Debug)]
pub struct TauberianParams {
    pub alpha: f64,
    pub c_r: f64,
    pub q: f64,
    pub fit_noise: f64,
}

/// Tail-shape study parameters.
#[derive(Clone, Debug)]
pub struct TailShapeParams {
    pub p: f64,
    pub n_tail_points: usize,
}

/// A parsed and validated experiment, ready to run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub n_replicates: usize,
    pub lambda_grid: Vec<f64>,
    pub field: Option<Arc<FieldSpec>>,
    pub maximizer: MaximizerOptions,
    pub quadrature: QuadratureOptions,
    pub entropy: EntropyParams,
    pub norms: NormsParams,
    pub tauberian: TauberianParams,
    pub tail_shape: TailShapeParams,
    /// Verbatim config text, echoed into the manifest.
    pub raw_toml: String,
}

fn default_replicates(kind: ExperimentKind) -> usize {
    match kind {
        ExperimentKind::SaddlePathwise => 200,
        ExperimentKind::Theorem1 => 10_000,
        ExperimentKind::Corollary1 => 2_000,
        ExperimentKind::TailShape => 100_000,
        _ => 1,
    }
}

fn default_lambda_grid(kind: ExperimentKind) -> Vec<f64> {
    match kind {
        ExperimentKind::SaddlePathwise => vec![25.0, 50.0, 100.0, 200.0],
        ExperimentKind::Theorem1 => vec![100.0],
        ExperimentKind::Corollary1 => vec![100.0],
        ExperimentKind::Tauberian => vec![2.5, 5.0, 10.0, 20.0],
        _ => vec![],
    }
}

/// Render a field spec back into its standalone TOML document form; the
/// inverse of [`parse_field_spec`] up to formatting.
pub fn field_spec_to_toml(spec: &FieldSpec) -> Result<String> {
    let section = FieldSection {
        domain: DomainSection {
            lower: spec.domain().lower().to_vec(),
            upper: spec.domain().upper().to_vec(),
        },
        mean: spec
            .mean()
            .iter()
            .map(|m| MonomialSection {
                powers: m.powers.clone(),
                coeff: m.coeff,
            })
            .collect(),
        terms: spec
            .terms()
            .iter()
            .map(|t| TermSection {
                frequency: t.frequency.clone(),
                phase: t.phase.clone(),
                law: match t.law {
                    CoefficientLaw::Gaussian { sd } => LawSection::Gaussian { mean: 0.0, sd },
                    CoefficientLaw::SymmetricWeibull { p } => LawSection::SymmetricWeibull { p },
                    CoefficientLaw::Uniform { half_width } => LawSection::Uniform {
                        lo: -half_width,
                        hi: half_width,
                    },
                },
            })
            .collect(),
    };
    toml::to_string(&section).map_err(|e| Error::Config(format!("serialize: {e}")))
}

/// Parse a standalone field-spec document (the contents of a `[field]`
/// section as a top-level TOML document) with an explicit base seed. This is
/// the entry point used by foreign-language bindings.
pub fn parse_field_spec(text: &str, seed: u64) -> Result<Arc<FieldSpec>> {
    let fs: FieldSection =
        toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
    let domain = Domain::new(fs.domain.lower.clone(), fs.domain.upper.clone())?;
    let mean = fs
        .mean
        .iter()
        .map(|m| Monomial {
            coeff: m.coeff,
            powers: m.powers.clone(),
        })
        .collect();
    let terms = fs
        .terms
        .iter()
        .map(|t| {
            Ok(BasisTerm {
                frequency: t.frequency.clone(),
                phase: t.phase.clone(),
                law: t.law.to_law()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(FieldSpec::new(domain, mean, terms, seed)?))
}

/// Parse and validate a config file; `seed_override` comes from the CLI.
pub fn parse_config(text: &str, seed_override: Option<u64>) -> Result<ExperimentConfig> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
    let kind = file.experiment.kind;
    let seed = seed_override.unwrap_or(file.experiment.seed);

    let field = match &file.field {
        Some(fs) => {
            let domain = Domain::new(fs.domain.lower.clone(), fs.domain.upper.clone())?;
            let mean = fs
                .mean
                .iter()
                .map(|m| Monomial {
                    coeff: m.coeff,
                    powers: m.powers.clone(),
                })
                .collect();
            let terms = fs
                .terms
                .iter()
                .map(|t| {
                    Ok(BasisTerm {
                        frequency: t.frequency.clone(),
                        phase: t.phase.clone(),
                        law: t.law.to_law()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(Arc::new(FieldSpec::new(domain, mean, terms, seed)?))
        }
        None => None,
    };
    if kind.needs_field() && field.is_none() {
        return Err(Error::Config(format!(
            "experiment kind {} requires a [field] section",
            kind.as_str()
        )));
    }

    let n_replicates = file
        .experiment
        .n_replicates
        .unwrap_or_else(|| default_replicates(kind));
    if n_replicates == 0 {
        return Err(Error::Config("n_replicates must be positive".into()));
    }

    let lambda_grid = file
        .experiment
        .lambda_grid
        .clone()
        .unwrap_or_else(|| default_lambda_grid(kind));
    if lambda_grid.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Config("lambda_grid entries must be positive".into()));
    }
    if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "lambda_grid must be strictly increasing".into(),
        ));
    }
    let needs_lambda = matches!(
        kind,
        ExperimentKind::SaddlePathwise
            | ExperimentKind::Theorem1
            | ExperimentKind::Corollary1
            | ExperimentKind::Tauberian
    );
    if needs_lambda && lambda_grid.is_empty() {
        return Err(Error::Config(
            "this experiment kind needs a lambda_grid".into(),
        ));
    }

    let maximizer = match &file.maximizer {
        Some(m) => MaximizerOptions {
            starts: m.starts,
            grad_tol: m.grad_tol,
            max_iter: m.max_iter,
            det_tol: m.det_tol,
            value_tol: m.value_tol,
            boundary_frac: m.boundary_frac,
        },
        None => MaximizerOptions::default(),
    };
    if maximizer.max_iter == 0 || !(maximizer.grad_tol >= 0.0) {
        return Err(Error::Config("invalid maximizer options".into()));
    }

    let quadrature = match &file.quadrature {
        Some(q) => QuadratureOptions {
            order: q.order,
            rel_tol: q.rel_tol,
            max_cells: q.max_cells,
            initial_splits: 0,
        },
        None => QuadratureOptions::default(),
    };
    if quadrature.order < 2 || !(quadrature.rel_tol > 0.0) || quadrature.max_cells < 4 {
        return Err(Error::Config("invalid quadrature options".into()));
    }

    let entropy = match &file.entropy {
        Some(e) => EntropyParams {
            points_per_axis: e.points_per_axis,
            n_max: e.n_max,
        },
        None => EntropyParams {
            points_per_axis: 257,
            n_max: 8,
        },
    };
    if entropy.points_per_axis < 2 || entropy.n_max == 0 {
        return Err(Error::Config("invalid entropy options".into()));
    }

    let norms = {
        let section = file.norms.as_ref();
        let phi = match section.and_then(|n| n.phi.as_ref()) {
            None | Some(PhiSection::Gaussian) => PhiFunction::Gaussian,
            Some(PhiSection::Power { p }) => PhiFunction::power_p(*p)?,
            Some(PhiSection::PurePower { p }) => PhiFunction::pure_power(*p)?,
            Some(PhiSection::Tabulated { path }) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("phi table {path}: {e}")))?;
                PhiFunction::Tabulated(read_phi_table(&text)?)
            }
        };
        let field_point = match section.and_then(|n| n.source.as_ref()) {
            Some(NormsSource::FieldPoint) => {
                let x = section
                    .and_then(|n| n.x.clone())
                    .ok_or_else(|| Error::Config("field-point source needs x".into()))?;
                Some(x)
            }
            _ => None,
        };
        NormsParams {
            n_samples: section.map_or(100_000, |n| n.n_samples),
            field_point,
            phi,
            c_values: section.map_or_else(default_c_values, |n| n.c_values.clone()),
            mu_candidates: section.map_or_else(default_mu_candidates, |n| n.mu_candidates.clone()),
        }
    };
    if norms.n_samples == 0 {
        return Err(Error::Config("norms.n_samples must be positive".into()));
    }
    if kind == ExperimentKind::Norms {
        if let Some(x) = &norms.field_point {
            let spec = field.as_ref().ok_or_else(|| {
                Error::Config("norms with a field-point source need a [field] section".into())
            })?;
            spec.domain().check_point(x)?;
        }
    }

    let tauberian = match &file.tauberian {
        Some(t) => TauberianParams {
            alpha: t.alpha,
            c_r: t.c_r,
            q: t.q,
            fit_noise: t.fit_noise,
        },
        None => TauberianParams {
            alpha: 0.0,
            c_r: 1.0,
            q: 2.0,
            fit_noise: 0.01,
        },
    };
    if kind == ExperimentKind::Tauberian {
        crate::tail::AsymptoticParams::new(tauberian.alpha, tauberian.c_r, tauberian.q)?;
    }

    let tail_shape = {
        let section = file.tail_shape.as_ref();
        let p = match section.and_then(|t| t.p) {
            Some(p) => p,
            None => field
                .as_ref()
                .and_then(|spec| {
                    spec.terms().iter().find_map(|t| match t.law {
                        CoefficientLaw::SymmetricWeibull { p } => Some(p),
                        _ => None,
                    })
                })
                .unwrap_or(2.0),
        };
        TailShapeParams {
            p,
            n_tail_points: section.map_or(32, |t| t.n_tail_points),
        }
    };
    if kind == ExperimentKind::TailShape && !(tail_shape.p > 1.0) {
        return Err(Error::Config("tail_shape.p must exceed 1".into()));
    }

    Ok(ExperimentConfig {
        kind,
        output_dir: PathBuf::from(&file.experiment.output_dir),
        seed,
        n_replicates,
        lambda_grid,
        field,
        maximizer,
        quadrature,
        entropy,
        norms,
        tauberian,
        tail_shape,
        raw_toml: text.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [experiment]
        kind = "saddle-pathwise"
        output_dir = "out"
        seed = 7
        lambda_grid = [25.0, 100.0]

        [field]
        domain = { lower = [0.0], upper = [1.0] }

        [[field.terms]]
        frequency = [1.0]
        phase = [0.0]
        law = { kind = "gaussian", sd = 1.0 }
    "#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(MINIMAL, None).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::SaddlePathwise);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.lambda_grid, vec![25.0, 100.0]);
        let spec = cfg.field.unwrap();
        assert_eq!(spec.terms().len(), 1);
        assert_eq!(spec.base_seed(), 7);
    }

    #[test]
    fn seed_override_wins() {
        let cfg = parse_config(MINIMAL, Some(99)).unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.field.unwrap().base_seed(), 99);
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let bad = MINIMAL.replace("seed = 7", "seed = 7\n        grad_tolerance = 1e-10");
        match parse_config(&bad, None) {
            Err(Error::Config(msg)) => assert!(msg.contains("grad_tolerance"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unsorted_lambda_grid_is_rejected() {
        let bad = MINIMAL.replace("[25.0, 100.0]", "[100.0, 25.0]");
        assert!(matches!(parse_config(&bad, None), Err(Error::Config(_))));
    }

    #[test]
    fn nonzero_gaussian_mean_is_rejected() {
        let bad = MINIMAL.replace(
            "law = { kind = \"gaussian\", sd = 1.0 }",
            "law = { kind = \"gaussian\", mean = 0.5, sd = 1.0 }",
        );
        assert!(parse_config(&bad, None).is_err());
    }

    #[test]
    fn asymmetric_uniform_is_rejected() {
        let bad = MINIMAL.replace(
            "law = { kind = \"gaussian\", sd = 1.0 }",
            "law = { kind = \"uniform\", lo = -1.0, hi = 2.0 }",
        );
        assert!(parse_config(&bad, None).is_err());
        let good = MINIMAL.replace(
            "law = { kind = \"gaussian\", sd = 1.0 }",
            "law = { kind = \"uniform\", lo = -2.0, hi = 2.0 }",
        );
        assert!(parse_config(&good, None).is_ok());
    }

    #[test]
    fn missing_field_section_is_rejected_when_needed() {
        let bad = r#"
            [experiment]
            kind = "theorem1"
            output_dir = "out"
        "#;
        assert!(matches!(parse_config(bad, None), Err(Error::Config(_))));
    }

    #[test]
    fn tauberian_needs_no_field() {
        let ok = r#"
            [experiment]
            kind = "tauberian"
            output_dir = "out"

            [tauberian]
            alpha = 0.0
            c_r = 1.0
            q = 2.0
        "#;
        let cfg = parse_config(ok, None).unwrap();
        assert!(cfg.field.is_none());
        assert_eq!(cfg.lambda_grid, vec![2.5, 5.0, 10.0, 20.0]);
    }

    #[test]
    fn field_spec_round_trips_through_toml() {
        let cfg = parse_config(MINIMAL, None).unwrap();
        let spec = cfg.field.unwrap();
        let text = field_spec_to_toml(&spec).unwrap();
        let back = parse_field_spec(&text, spec.base_seed()).unwrap();
        assert_eq!(spec.domain(), back.domain());
        assert_eq!(spec.terms(), back.terms());
        assert_eq!(spec.mean(), back.mean());
        // Same seed, same coefficients: the law is fully preserved.
        let a = crate::field::sample_field(&spec, 11);
        let b = crate::field::sample_field(&back, 11);
        assert_eq!(a.coefficients(), b.coefficients());
    }

    #[test]
    fn weibull_p_is_inferred_for_tail_shape() {
        let toml = r#"
            [experiment]
            kind = "tail-shape"
            output_dir = "out"
            n_replicates = 100

            [field]
            domain = { lower = [0.0], upper = [1.0] }

            [[field.terms]]
            frequency = [1.0]
            phase = [1.5707963267948966]
            law = { kind = "symmetric-weibull", p = 3.0 }
        "#;
        let cfg = parse_config(toml, None).unwrap();
        assert_eq!(cfg.tail_shape.p, 3.0);
    }
}
