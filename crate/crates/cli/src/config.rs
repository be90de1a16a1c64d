//! Command line, config files and their merge into an [`ExperimentConfig`].
//!
//! A config file is a JSON object with the top-level keys `kind`, `seed`,
//! `workers`, `out`, `format` and `params`. Flags are overlaid on the parsed
//! JSON before it is deserialized, so a flag always wins over the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use typlab::ensembles::BathSpectrum;
use typlab::typicality::DEFAULT_EPSILONS;

use crate::failure::Failure;

pub const DEFAULT_OUT: &str = "typlab-out";

#[derive(Debug, Parser)]
#[command(
    name = "typlab",
    version,
    about = "Monte Carlo checks of canonical typicality and sphere concentration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance of reduced random states to the canonical state.
    Typicality {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        flags: TypicalityFlags,
    },
    /// Canonical state of an energy shell versus the Gibbs state.
    Thermal {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        flags: ThermalFlags,
    },
    /// First and second moments of uniform state coefficients.
    Moments {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        flags: MomentsFlags,
    },
    /// Measure of spherical caps against exp(−nε²/2).
    Cap {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        flags: SphereFlags,
    },
    /// Measure of equatorial belts against 1 − 2exp(−nε²/2).
    Belt {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        flags: SphereFlags,
    },
    /// Median-centred concentration of a Lipschitz function on the sphere.
    Levy {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        flags: LevyFlags,
    },
    /// Ordering of Hilbert–Schmidt, trace and operator norms.
    Norms {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        flags: NormsFlags,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Typicality,
    Thermal,
    Moments,
    Cap,
    Belt,
    Levy,
    Norms,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Typicality => "typicality",
            Kind::Thermal => "thermal",
            Kind::Moments => "moments",
            Kind::Cap => "cap",
            Kind::Belt => "belt",
            Kind::Levy => "levy",
            Kind::Norms => "norms",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct CommonFlags {
    /// JSON config file; flags override its values.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo loops (default: all cores).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Output formats.
    #[arg(long, value_enum, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub format: Vec<Format>,
}

#[derive(Debug, Args, Serialize)]
pub struct TypicalityFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ds: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub db: Option<usize>,
    /// Dimension of a random subspace (default: the full space).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dr: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ThermalFlags {
    /// System levels 0, 1, …, ds−1 unless explicit system levels are given.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ds: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub db: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_e: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_delta: Option<f64>,
    /// Bath levels the default window width is sized to contain.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_levels: Option<usize>,
    /// Explicit system energies, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub system_levels: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentsFlags {
    /// Hilbert space dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SphereFlags {
    /// Ambient dimension of the sphere S^{n−1} ⊂ ℝ^n.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct LevyFlags {
    /// Ambient dimension (first-coordinate function only).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<LevyFunction>,
    /// System dimension (canonical-distance function only).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ds: Option<usize>,
    /// Bath dimension (canonical-distance function only).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub db: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct NormsFlags {
    /// Matrix dimensions (repeatable).
    #[arg(long)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    /// Random Hermitian matrices per dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LevyFunction {
    /// f(x) = x₁, Lipschitz constant 1.
    FirstCoordinate,
    /// ‖ρ_S − Ω_S‖₁ on the full space of ℂ^{ds}⊗ℂ^{db}, lifted to ℝ^{2·ds·db}; Lipschitz constant 2.
    CanonicalDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypicalityParams {
    #[serde(default = "two")]
    pub ds: usize,
    #[serde(default = "sixty_four")]
    pub db: usize,
    #[serde(default)]
    pub dr: Option<usize>,
    #[serde(default = "typicality_samples")]
    pub samples: u64,
    #[serde(default = "typicality_epsilons")]
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalParams {
    #[serde(default)]
    pub ds: Option<usize>,
    #[serde(default)]
    pub system_levels: Option<Vec<f64>>,
    #[serde(default = "thermal_db")]
    pub db: usize,
    #[serde(default = "thermal_bath")]
    pub bath: BathSpectrum,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub window_e: Option<f64>,
    #[serde(default)]
    pub window_delta: Option<f64>,
    #[serde(default = "window_levels")]
    pub window_levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsParams {
    #[serde(default = "sixty_four")]
    pub n: usize,
    #[serde(default = "moments_samples")]
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereParams {
    pub n: usize,
    pub samples: u64,
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyParams {
    #[serde(default = "levy_function")]
    pub function: LevyFunction,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub ds: Option<usize>,
    #[serde(default)]
    pub db: Option<usize>,
    #[serde(default = "levy_samples")]
    pub samples: u64,
    #[serde(default = "levy_epsilons")]
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsParams {
    #[serde(default = "norms_dims")]
    pub n: Vec<usize>,
    #[serde(default = "norms_samples")]
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Typicality(TypicalityParams),
    Thermal(ThermalParams),
    Moments(MomentsParams),
    Cap(SphereParams),
    Belt(SphereParams),
    Levy(LevyParams),
    Norms(NormsParams),
}

/// Fully resolved run configuration; serialized verbatim into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    /// `None` means one worker per available core.
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub format: Vec<Format>,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn wants(&self, format: Format) -> bool {
        self.format.contains(&format)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopLevel {
    kind: Kind,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default = "default_out")]
    out: PathBuf,
    #[serde(default = "default_formats")]
    format: Vec<Format>,
    #[serde(default)]
    params: Value,
}

impl Command {
    pub fn kind(&self) -> Kind {
        match self {
            Command::Typicality { .. } => Kind::Typicality,
            Command::Thermal { .. } => Kind::Thermal,
            Command::Moments { .. } => Kind::Moments,
            Command::Cap { .. } => Kind::Cap,
            Command::Belt { .. } => Kind::Belt,
            Command::Levy { .. } => Kind::Levy,
            Command::Norms { .. } => Kind::Norms,
        }
    }

    pub fn common(&self) -> &CommonFlags {
        match self {
            Command::Typicality { common, .. }
            | Command::Thermal { common, .. }
            | Command::Moments { common, .. }
            | Command::Cap { common, .. }
            | Command::Belt { common, .. }
            | Command::Levy { common, .. }
            | Command::Norms { common, .. } => common,
        }
    }

    fn flag_params(&self) -> Value {
        let value = match self {
            Command::Typicality { flags, .. } => serde_json::to_value(flags),
            Command::Thermal { flags, .. } => serde_json::to_value(flags),
            Command::Moments { flags, .. } => serde_json::to_value(flags),
            Command::Cap { flags, .. } | Command::Belt { flags, .. } => serde_json::to_value(flags),
            Command::Levy { flags, .. } => serde_json::to_value(flags),
            Command::Norms { flags, .. } => serde_json::to_value(flags),
        };
        value.expect("flag structs serialize to JSON objects")
    }
}

/// Merges the config file (if any) with the flags and validates the result.
pub fn resolve(command: &Command) -> Result<ExperimentConfig, Failure> {
    let kind = command.kind();
    let common = command.common();
    let mut root = match &common.config {
        Some(path) => read_config(path)?,
        None => Map::new(),
    };
    match root.get("kind") {
        Some(Value::String(k)) if k == kind.name() => {}
        Some(other) => {
            return Err(Failure::usage(
                "kind",
                format!("config file is for kind {other}, but the subcommand is {}", kind.name()),
            ))
        }
        None => {
            root.insert("kind".into(), Value::String(kind.name().into()));
        }
    }
    overlay(&mut root, serde_json::to_value(common).expect("flags serialize"));
    let mut params = match root.remove("params") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(map)) => map,
        Some(_) => return Err(Failure::usage("params", "must be a JSON object")),
    };
    overlay(&mut params, command.flag_params());
    root.insert("params".into(), Value::Object(params));

    let top: TopLevel = deserialize(Value::Object(root), "")?;
    if top.format.is_empty() {
        return Err(Failure::usage("format", "at least one output format is required"));
    }
    if top.workers == Some(0) {
        return Err(Failure::usage("workers", "must be at least 1"));
    }
    let params = match kind {
        Kind::Typicality => Params::Typicality(deserialize(top.params, "params")?),
        Kind::Thermal => Params::Thermal(deserialize(top.params, "params")?),
        Kind::Moments => Params::Moments(deserialize(top.params, "params")?),
        Kind::Cap => Params::Cap(deserialize(with_defaults(top.params, 100, 100_000, 0.3), "params")?),
        Kind::Belt => Params::Belt(deserialize(with_defaults(top.params, 1000, 20_000, 0.1), "params")?),
        Kind::Levy => Params::Levy(deserialize(top.params, "params")?),
        Kind::Norms => Params::Norms(deserialize(top.params, "params")?),
    };
    let config = ExperimentConfig {
        kind: top.kind,
        seed: top.seed,
        workers: top.workers,
        out: top.out,
        format: dedup(top.format),
        params,
    };
    validate(&config.params)?;
    Ok(config)
}

fn read_config(path: &Path) -> Result<Map<String, Value>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage("config", format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Failure::usage(
            "config",
            format!("{} must contain a JSON object", path.display()),
        )),
        Err(e) => Err(Failure::usage("config", format!("{}: {e}", path.display()))),
    }
}

fn overlay(target: &mut Map<String, Value>, flags: Value) {
    if let Value::Object(flags) = flags {
        target.extend(flags);
    }
}

fn with_defaults(params: Value, n: usize, samples: u64, epsilon: f64) -> Value {
    let mut map = match params {
        Value::Object(map) => map,
        Value::Null => Map::new(),
        other => return other,
    };
    map.entry("n").or_insert(n.into());
    map.entry("samples").or_insert(samples.into());
    map.entry("epsilon").or_insert(Value::from(vec![epsilon]));
    Value::Object(map)
}

fn deserialize<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, Failure> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let key = match (prefix.is_empty(), path.as_str()) {
            (_, ".") => prefix.to_string(),
            (true, p) => p.to_string(),
            (false, p) => format!("{prefix}.{p}"),
        };
        let inner = e.into_inner().to_string();
        // a missing field is named only in the message, not in the path
        let key = match field_in_message(&inner) {
            Some(f) if !key.ends_with(f) => join(&key, f),
            _ => key,
        };
        Failure::usage(key, inner)
    })
}

fn field_in_message(message: &str) -> Option<&str> {
    ["unknown field `", "missing field `"].iter().find_map(|pat| {
        let rest = message.strip_prefix(pat)?;
        rest.split('`').next()
    })
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

fn dedup(formats: Vec<Format>) -> Vec<Format> {
    let mut out = Vec::new();
    for f in formats {
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out
}

fn validate(params: &Params) -> Result<(), Failure> {
    match params {
        Params::Typicality(p) => {
            positive("params.ds", p.ds)?;
            positive("params.db", p.db)?;
            if let Some(dr) = p.dr {
                if dr == 0 || dr > p.ds * p.db {
                    return Err(Failure::usage(
                        "params.dr",
                        format!("must lie in 1..={}, got {dr}", p.ds * p.db),
                    ));
                }
            }
            positive("params.samples", p.samples as usize)?;
            epsilons("params.epsilon", &p.epsilon, f64::INFINITY)
        }
        Params::Thermal(p) => {
            if let (Some(ds), Some(levels)) = (p.ds, &p.system_levels) {
                if ds != levels.len() {
                    return Err(Failure::usage(
                        "params.ds",
                        format!("{ds} disagrees with {} system levels", levels.len()),
                    ));
                }
            }
            positive("params.ds", p.ds.unwrap_or(2))?;
            positive("params.db", p.db)?;
            positive("params.window_levels", p.window_levels)
        }
        Params::Moments(p) => {
            positive("params.n", p.n)?;
            positive("params.samples", p.samples as usize)
        }
        Params::Cap(p) | Params::Belt(p) => {
            positive("params.n", p.n)?;
            positive("params.samples", p.samples as usize)?;
            epsilons("params.epsilon", &p.epsilon, 1.0)
        }
        Params::Levy(p) => {
            match p.function {
                LevyFunction::FirstCoordinate => {
                    if p.ds.is_some() || p.db.is_some() {
                        return Err(Failure::usage(
                            "params.ds",
                            "ds/db only apply to the canonical-distance function",
                        ));
                    }
                    positive("params.n", p.n.unwrap_or(200))?;
                }
                LevyFunction::CanonicalDistance => {
                    if p.n.is_some() {
                        return Err(Failure::usage(
                            "params.n",
                            "n is 2·ds·db for the canonical-distance function",
                        ));
                    }
                    positive("params.ds", p.ds.unwrap_or(2))?;
                    positive("params.db", p.db.unwrap_or(4))?;
                }
            }
            positive("params.samples", p.samples as usize)?;
            epsilons("params.epsilon", &p.epsilon, f64::INFINITY)
        }
        Params::Norms(p) => {
            if p.n.is_empty() {
                return Err(Failure::usage("params.n", "at least one dimension is required"));
            }
            for &d in &p.n {
                positive("params.n", d)?;
            }
            positive("params.samples", p.samples as usize)
        }
    }
}

fn positive(key: &str, value: usize) -> Result<(), Failure> {
    if value == 0 {
        Err(Failure::usage(key, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn epsilons(key: &str, values: &[f64], upper: f64) -> Result<(), Failure> {
    if values.is_empty() {
        return Err(Failure::usage(key, "at least one value is required"));
    }
    match values.iter().find(|&&e| !(e > 0.0 && e < upper)) {
        Some(e) if upper.is_finite() => Err(Failure::usage(key, format!("values must lie in (0, {upper}), got {e}"))),
        Some(e) => Err(Failure::usage(
            key,
            format!("values must be positive and finite, got {e}"),
        )),
        None => Ok(()),
    }
}

fn default_out() -> PathBuf {
    PathBuf::from(DEFAULT_OUT)
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

fn two() -> usize {
    2
}

fn sixty_four() -> usize {
    64
}

fn typicality_samples() -> u64 {
    2000
}

fn typicality_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}

fn thermal_db() -> usize {
    512
}

fn thermal_bath() -> BathSpectrum {
    BathSpectrum::RandomUniform { spacing: 0.01 }
}

fn window_levels() -> usize {
    32
}

fn moments_samples() -> u64 {
    10_000
}

fn levy_function() -> LevyFunction {
    LevyFunction::FirstCoordinate
}

fn levy_samples() -> u64 {
    100_000
}

fn levy_epsilons() -> Vec<f64> {
    vec![0.2, 0.3, 0.5]
}

fn norms_dims() -> Vec<usize> {
    vec![2, 4, 8, 16, 64]
}

fn norms_samples() -> u64 {
    500
}
