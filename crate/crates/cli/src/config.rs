//! Scenario files: schema, parsing and validation.

use std::fmt;
use std::path::Path;

use hardy_lab::scenario::SubspaceFamily;
use hardy_lab::{BlaschkeProduct, HardyFunction, SymbolSpec, TruncationConfig, C64};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Configuration problem, reported with exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.file)?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, ":{l}:{c}")?;
        }
        if !self.field.is_empty() {
            write!(f, ": field `{}`", self.field)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn field(file: &str, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            file: file.to_string(),
            line: None,
            column: None,
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub id: Option<String>,
    pub tag: Option<String>,
    pub truncation: TruncationSection,
    pub seed: u64,
    pub repetitions: usize,
    pub scenario: Scenario,
}

/// File layout before the scenario body is resolved by its `kind`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    /// Defaults to the file stem.
    #[serde(default)]
    id: Option<String>,
    /// Aggregation label in suites; defaults to the scenario kind.
    #[serde(default)]
    tag: Option<String>,
    #[serde(default)]
    truncation: TruncationSection,
    #[serde(default)]
    seed: u64,
    #[serde(default = "one")]
    repetitions: usize,
    scenario: serde_json::Value,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_guard")]
    pub guard: usize,
    #[serde(default = "default_eps_residual")]
    pub eps_residual: f64,
    #[serde(default = "default_eps_rank")]
    pub eps_rank: f64,
}

fn default_degree() -> usize {
    64
}

fn default_guard() -> usize {
    16
}

fn default_eps_residual() -> f64 {
    TruncationConfig::DEFAULT_EPS_RESIDUAL
}

fn default_eps_rank() -> f64 {
    TruncationConfig::DEFAULT_EPS_RANK
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self {
            degree: default_degree(),
            guard: default_guard(),
            eps_residual: default_eps_residual(),
            eps_rank: default_eps_rank(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Symbol {
    Z,
    ZBar,
    Monomial {
        power: usize,
    },
    /// Blaschke product with the given zeros.
    Blaschke {
        zeros: BlaschkeProduct,
    },
    AnalyticPolynomial {
        coeffs: Vec<C64>,
    },
    CoAnalyticPolynomial {
        coeffs: Vec<C64>,
    },
    /// Fourier coefficients for lags `-K..=K`.
    FourierWindow {
        coeffs: Vec<C64>,
    },
    /// `conj(constant + z^d / Π (1 − a_j z))`.
    CoAnalyticRational {
        d: usize,
        #[serde(default)]
        poles: Vec<C64>,
        #[serde(default)]
        constant: C64,
    },
}

impl Symbol {
    pub fn spec(&self, cfg: &TruncationConfig) -> hardy_lab::Result<SymbolSpec> {
        Ok(match self {
            Self::Z => SymbolSpec::z(),
            Self::ZBar => SymbolSpec::z_bar(),
            Self::Monomial { power } => SymbolSpec::monomial(*power),
            Self::Blaschke { zeros } => SymbolSpec::Blaschke {
                zeros: zeros.clone(),
            },
            Self::AnalyticPolynomial { coeffs } => SymbolSpec::AnalyticPolynomial {
                coeffs: coeffs.clone(),
            },
            Self::CoAnalyticPolynomial { coeffs } => SymbolSpec::CoAnalyticPolynomial {
                coeffs: coeffs.clone(),
            },
            Self::FourierWindow { coeffs } => SymbolSpec::FourierWindow {
                coeffs: coeffs.clone(),
            },
            Self::CoAnalyticRational { d, poles, constant } => {
                hardy_lab::nearly::coanalytic_rational(*d, poles, *constant, cfg)?
            }
        })
    }

    fn is_inner_vanishing_at_origin(&self) -> bool {
        match self {
            Self::Z => true,
            Self::Monomial { power } => *power >= 1,
            Self::Blaschke { zeros } => zeros.has_zero_at_origin(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantSubspace {
    pub family: SubspaceFamily,
    /// Number of rank-one terms.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum BridgeSubspace {
    /// Krylov space of the base operator made invariant by `rank` terms.
    Random { rank: usize },
    /// Span of the listed coefficient vectors; only the converse direction runs.
    Span { vectors: Vec<Vec<C64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum NearlySubspace {
    /// The model space of `z B`.
    ModelSpace,
    /// Leading Schur vectors of `T_z^* − Σ T_z^* k_i ⊗ k_i`.
    KernelPerturbation {
        dim: usize,
    },
    Span {
        vectors: Vec<Vec<C64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "choice", rename_all = "snake_case", deny_unknown_fields)]
pub enum Basis {
    KernelGram,
    /// Kernel-Gram basis mixed by a unitary drawn from the scenario seed.
    Rotated,
    UserSupplied {
        vectors: Vec<Vec<C64>>,
    },
}

fn default_samples() -> usize {
    8
}

fn default_functions() -> usize {
    1
}

/// Scenario body. In files the variant is named by a `kind` field next to
/// the parameters; [`parse`] rewrites that into the external tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    Decompose {
        symbol: Symbol,
        subspace: InvariantSubspace,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        max_iterations: Option<usize>,
    },
    Sarason {
        symbol: Symbol,
        subspace: InvariantSubspace,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        max_iterations: Option<usize>,
    },
    ForwardDual {
        rank: usize,
        #[serde(default = "default_samples")]
        probes: usize,
    },
    AlmostBridge {
        /// `T = T_φ^*`.
        symbol: Symbol,
        subspace: BridgeSubspace,
    },
    Nearly {
        zeros: BlaschkeProduct,
        subspace: NearlySubspace,
    },
    ToeplitzKernel {
        symbol: Symbol,
        zeros: BlaschkeProduct,
        basis: Basis,
    },
    Counterexample {
        b_minor: BlaschkeProduct,
    },
    C0Profile {
        symbol: Symbol,
        /// Size of the orthonormal family spanning `W`.
        #[serde(default = "default_functions")]
        functions: usize,
        #[serde(default = "default_samples")]
        samples: usize,
        /// Number of iterations; `100 (N + 1)` when absent.
        #[serde(default)]
        steps: Option<usize>,
    },
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Decompose { .. } => "decompose",
            Self::Sarason { .. } => "sarason",
            Self::ForwardDual { .. } => "forward_dual",
            Self::AlmostBridge { .. } => "almost_bridge",
            Self::Nearly { .. } => "nearly",
            Self::ToeplitzKernel { .. } => "toeplitz_kernel",
            Self::Counterexample { .. } => "counterexample",
            Self::C0Profile { .. } => "c0_profile",
        }
    }
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub degree: Option<usize>,
    pub guard: Option<usize>,
    pub eps_residual: Option<f64>,
    pub eps_rank: Option<f64>,
    pub seed: Option<u64>,
}

/// Parsed, overridden and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub id: String,
    pub tag: String,
    pub cfg: TruncationConfig,
    pub config: ScenarioConfig,
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Loaded, ConfigError> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::field(&file, "", format!("cannot read: {e}")))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse(&text, &file, &stem, overrides)
}

pub fn parse(
    text: &str,
    file: &str,
    stem: &str,
    overrides: &Overrides,
) -> Result<Loaded, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError {
            file: file.to_string(),
            line: Some(inner.line()),
            column: Some(inner.column()),
            field: if field == "." { String::new() } else { field },
            message: strip_position(&inner.to_string()),
        }
    })?;
    let scenario = scenario_body(raw.scenario).map_err(|(field, message)| {
        let (line, column) = locate(text, &field).unzip();
        ConfigError {
            file: file.to_string(),
            line,
            column,
            field,
            message,
        }
    })?;
    let mut config = ScenarioConfig {
        schema_version: raw.schema_version,
        id: raw.id,
        tag: raw.tag,
        truncation: raw.truncation,
        seed: raw.seed,
        repetitions: raw.repetitions,
        scenario,
    };
    if config.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::field(
            file,
            "schema_version",
            format!(
                "unsupported version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            ),
        ));
    }
    let t = &mut config.truncation;
    if let Some(d) = overrides.degree {
        t.degree = d;
    }
    if let Some(g) = overrides.guard {
        t.guard = g;
    }
    if let Some(e) = overrides.eps_residual {
        t.eps_residual = e;
    }
    if let Some(e) = overrides.eps_rank {
        t.eps_rank = e;
    }
    if let Some(s) = overrides.seed {
        config.seed = s;
    }
    let cfg = TruncationConfig {
        degree: t.degree,
        guard: t.guard,
        eps_residual: t.eps_residual,
        eps_rank: t.eps_rank,
    };
    cfg.validate()
        .map_err(|e| ConfigError::field(file, "truncation", e.to_string()))?;
    if config.repetitions == 0 {
        return Err(ConfigError::field(
            file,
            "repetitions",
            "must be at least 1",
        ));
    }
    validate_scenario(&config.scenario, &cfg, file)?;
    Ok(Loaded {
        id: config.id.clone().unwrap_or_else(|| stem.to_string()),
        tag: config
            .tag
            .clone()
            .unwrap_or_else(|| config.scenario.kind().to_string()),
        cfg,
        config,
    })
}

fn scenario_body(value: serde_json::Value) -> Result<Scenario, (String, String)> {
    let serde_json::Value::Object(mut map) = value else {
        return Err(("scenario".into(), "expected an object".into()));
    };
    let kind = match map.remove("kind") {
        Some(serde_json::Value::String(k)) => k,
        Some(_) => return Err(("scenario.kind".into(), "expected a string".into())),
        None => return Err(("scenario.kind".into(), "missing field `kind`".into())),
    };
    let mut wrapped = serde_json::Map::new();
    wrapped.insert(kind, serde_json::Value::Object(map));
    serde_path_to_error::deserialize(serde_json::Value::Object(wrapped)).map_err(|e| {
        let path = e.path().to_string();
        let field = match path.split_once('.') {
            Some((_, rest)) if !rest.is_empty() => format!("scenario.{rest}"),
            _ => "scenario.kind".to_string(),
        };
        (field, e.into_inner().to_string())
    })
}

/// Line and column of the last key of a dotted field path, searched after
/// the `"scenario"` key.
fn locate(text: &str, field: &str) -> Option<(usize, usize)> {
    let start = text.find("\"scenario\"")?;
    let key = field.rsplit('.').next()?.split('[').next()?;
    let offset = start + text[start..].find(&format!("\"{key}\""))?;
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, column))
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

fn validate_scenario(s: &Scenario, cfg: &TruncationConfig, file: &str) -> Result<(), ConfigError> {
    let err =
        |field: &str, msg: String| Err(ConfigError::field(file, format!("scenario.{field}"), msg));
    let origin = |field: &str, b: &BlaschkeProduct| {
        if b.has_zero_at_origin() {
            Ok(())
        } else {
            err(
                field,
                "the Blaschke product must vanish at the origin".into(),
            )
        }
    };
    match s {
        Scenario::Decompose {
            symbol,
            subspace,
            samples,
            ..
        }
        | Scenario::Sarason {
            symbol,
            subspace,
            samples,
            ..
        } => {
            if !symbol.is_inner_vanishing_at_origin() {
                return err(
                    "symbol",
                    "must be an inner function vanishing at the origin (z, monomial or blaschke)"
                        .into(),
                );
            }
            if subspace.rank == 0 {
                return err("subspace.rank", "must be at least 1".into());
            }
            if *samples == 0 {
                return err("samples", "must be at least 1".into());
            }
        }
        Scenario::ForwardDual { rank, .. } => {
            if *rank == 0 {
                return err("rank", "must be at least 1".into());
            }
        }
        Scenario::AlmostBridge { symbol, subspace } => {
            if !matches!(
                symbol,
                Symbol::Z
                    | Symbol::Monomial { .. }
                    | Symbol::Blaschke { .. }
                    | Symbol::AnalyticPolynomial { .. }
            ) {
                return err("symbol", "must be analytic".into());
            }
            match subspace {
                BridgeSubspace::Random { rank } if *rank == 0 => {
                    return err("subspace.rank", "must be at least 1".into())
                }
                BridgeSubspace::Span { vectors } => {
                    check_vectors("subspace.vectors", vectors, cfg, file)?
                }
                _ => {}
            }
        }
        Scenario::Nearly { zeros, subspace } => {
            origin("zeros", zeros)?;
            match subspace {
                NearlySubspace::KernelPerturbation { dim } if *dim == 0 || *dim > cfg.dim() => {
                    return err("subspace.dim", format!("must lie in 1..={}", cfg.dim()))
                }
                NearlySubspace::Span { vectors } => {
                    check_vectors("subspace.vectors", vectors, cfg, file)?
                }
                _ => {}
            }
        }
        Scenario::ToeplitzKernel {
            symbol,
            zeros,
            basis,
        } => {
            origin("zeros", zeros)?;
            if let Symbol::CoAnalyticRational { poles, .. } = symbol {
                for (i, p) in poles.iter().enumerate() {
                    if p.norm() >= 1.0 {
                        return err(
                            &format!("symbol.poles[{i}]"),
                            format!("modulus {} must be below 1", p.norm()),
                        );
                    }
                }
            }
            if let Basis::UserSupplied { vectors } = basis {
                check_vectors("basis.vectors", vectors, cfg, file)?;
                if vectors.len() != zeros.n() {
                    return err(
                        "basis.vectors",
                        format!("expected {} vectors, found {}", zeros.n(), vectors.len()),
                    );
                }
            }
        }
        Scenario::Counterexample { b_minor } => origin("b_minor", b_minor)?,
        Scenario::C0Profile {
            symbol,
            functions,
            samples,
            steps,
        } => {
            if !symbol.is_inner_vanishing_at_origin() {
                return err(
                    "symbol",
                    "must be an inner function vanishing at the origin".into(),
                );
            }
            if *functions == 0 || *functions >= cfg.dim() {
                return err("functions", format!("must lie in 1..{}", cfg.dim()));
            }
            if *samples == 0 {
                return err("samples", "must be at least 1".into());
            }
            if *steps == Some(0) {
                return err("steps", "must be at least 1".into());
            }
        }
    }
    Ok(())
}

fn check_vectors(
    field: &str,
    vectors: &[Vec<C64>],
    cfg: &TruncationConfig,
    file: &str,
) -> Result<(), ConfigError> {
    if vectors.is_empty() {
        return Err(ConfigError::field(
            file,
            format!("scenario.{field}"),
            "at least one vector is required",
        ));
    }
    for (i, v) in vectors.iter().enumerate() {
        if v.len() > cfg.dim() {
            return Err(ConfigError::field(
                file,
                format!("scenario.{field}[{i}]"),
                format!(
                    "{} coefficients exceed the truncation degree {}",
                    v.len(),
                    cfg.degree
                ),
            ));
        }
    }
    Ok(())
}

pub fn functions(vectors: &[Vec<C64>], cfg: &TruncationConfig) -> Vec<HardyFunction> {
    vectors
        .iter()
        .map(|v| HardyFunction::from_coeffs(cfg.degree, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(text: &str) -> Result<Loaded, ConfigError> {
        parse(text, "t.json", "t", &Overrides::default())
    }

    #[test]
    fn minimal_counterexample() {
        let l = parse_str(
            r#"{"schema_version":1,"scenario":{"kind":"counterexample","b_minor":[[0,0]]}}"#,
        )
        .unwrap();
        assert_eq!(l.id, "t");
        assert_eq!(l.tag, "counterexample");
        assert_eq!(l.cfg.degree, 64);
        assert_eq!(l.cfg.guard, 16);
    }

    #[test]
    fn zero_outside_disc_names_the_field() {
        let e = parse_str("{\"schema_version\":1,\n\"scenario\":{\"kind\":\"counterexample\",\"b_minor\":[[0,0],[1.5,0]]}}")
            .unwrap_err();
        assert!(e.field.contains("b_minor"), "{e}");
        assert_eq!(e.line, Some(2));
        assert!(e.to_string().contains("disc"), "{e}");
    }

    #[test]
    fn unknown_fields_and_versions_are_rejected() {
        assert!(parse_str(r#"{"schema_version":1,"extra":1,"scenario":{"kind":"counterexample","b_minor":[[0,0]]}}"#).is_err());
        let e = parse_str(
            r#"{"schema_version":2,"scenario":{"kind":"counterexample","b_minor":[[0,0]]}}"#,
        )
        .unwrap_err();
        assert_eq!(e.field, "schema_version");
    }

    #[test]
    fn origin_zero_is_required() {
        let e = parse_str(
            r#"{"schema_version":1,"scenario":{"kind":"counterexample","b_minor":[[0.5,0]]}}"#,
        )
        .unwrap_err();
        assert_eq!(e.field, "scenario.b_minor");
    }

    #[test]
    fn overrides_apply_before_validation() {
        let o = Overrides {
            degree: Some(8),
            guard: Some(20),
            ..Default::default()
        };
        let e = parse(
            r#"{"schema_version":1,"scenario":{"kind":"counterexample","b_minor":[[0,0]]}}"#,
            "t.json",
            "t",
            &o,
        )
        .unwrap_err();
        assert_eq!(e.field, "truncation");
        let o = Overrides {
            eps_residual: Some(0.0),
            seed: Some(9),
            ..Default::default()
        };
        let l = parse(
            r#"{"schema_version":1,"seed":3,"scenario":{"kind":"counterexample","b_minor":[[0,0]]}}"#,
            "t.json",
            "t",
            &o,
        )
        .unwrap();
        assert_eq!(l.cfg.eps_residual, 0.0);
        assert_eq!(l.config.seed, 9);
    }

    #[test]
    fn malformed_json_reports_position() {
        let e = parse_str("{\"schema_version\":1,\n  \"scenario\": }").unwrap_err();
        assert_eq!(e.line, Some(2));
    }
}
