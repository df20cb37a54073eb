//! Run configuration: a TOML document with flat sections, optionally layered
//! over a shipped preset.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thinfilm::{FilmState, Forcing, InitialData, Params, PeriodicGrid, SchemeOptions};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Syntax(String),
    #[error("unknown configuration keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("unknown preset `{0}` (available: fig2, fig3, fig4)")]
    UnknownPreset(String),
    #[error("invalid value: {0}")]
    Type(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

impl ConfigError {
    fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Run,
    Steady,
    Sweep,
    Bounds,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Steady => "steady",
            Mode::Sweep => "sweep",
            Mode::Bounds => "bounds",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub half_length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: 256,
            half_length: PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    #[default]
    None,
    /// `w = sign * amplitude * sin x`
    Sine,
    Fourier,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    pub kind: ForcingKind,
    pub amplitude: f64,
    pub sign: f64,
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub values: Vec<f64>,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig {
            kind: ForcingKind::None,
            amplitude: 1.0,
            sign: 1.0,
            mean: 0.0,
            cos: Vec::new(),
            sin: Vec::new(),
            values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    #[default]
    Fig2,
    Fig3,
    Fig4,
    Constant,
    Fourier,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub value: f64,
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub values: Vec<f64>,
    /// Add `ε^θ` before evolving when ε > 0.
    pub lift: bool,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: InitialKind::Fig2,
            value: 0.3,
            mean: 0.0,
            cos: Vec::new(),
            sin: Vec::new(),
            values: Vec::new(),
            lift: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyKind {
    Moffatt,
    #[default]
    Pukhnachov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyConfig {
    pub kind: SteadyKind,
    pub q: f64,
    pub mu: f64,
    pub chi: f64,
    /// Grid on which a surface-tension profile is checked against the
    /// evolution operator.
    pub cross_check_n: usize,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        SteadyConfig {
            kind: SteadyKind::Pukhnachov,
            q: 0.1,
            mu: 1.0,
            chi: 1.0,
            cross_check_n: 1024,
        }
    }
}

/// Cartesian product of fluxes and parameters. `chi = 0` selects the
/// zero-surface-tension profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub q: Vec<f64>,
    pub mu: Vec<f64>,
    pub chi: Vec<f64>,
}

/// Plain values first: TOML needs them ahead of the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub output_times: Vec<f64>,
    pub output_stride: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub output_dir: PathBuf,
    pub params: Params,
    pub grid: GridConfig,
    pub forcing: ForcingConfig,
    pub initial: InitialConfig,
    pub scheme: SchemeOptions,
    pub steady: SteadyConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Run,
            preset: None,
            t_end: None,
            output_times: Vec::new(),
            output_stride: 1,
            alpha: None,
            output_dir: PathBuf::from("out"),
            params: Params::default(),
            grid: GridConfig::default(),
            forcing: ForcingConfig::default(),
            initial: InitialConfig::default(),
            scheme: SchemeOptions::default(),
            steady: SteadyConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

const PRESETS: [(&str, &str); 3] = [
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Optional keys are absent from the serialized defaults.
const OPTIONAL_KEYS: [&str; 3] = ["preset", "t_end", "alpha"];

fn known_keys() -> Table {
    let mut t = Table::try_from(RunConfig::default()).expect("defaults serialize");
    for k in OPTIONAL_KEYS {
        t.insert(k.to_string(), Value::Boolean(true));
    }
    t
}

fn collect_unknown(table: &Table, schema: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in table {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match (schema.get(k), v) {
            (None, _) => out.push(path),
            (Some(Value::Table(s)), Value::Table(t)) => collect_unknown(t, s, &path, out),
            _ => {}
        }
    }
}

/// `over` wins; tables merge key by key.
fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_table(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>().map_err(|e| ConfigError::Syntax(e.to_string()))
}

/// Parses with an optional preset override (the `--preset` flag).
pub fn parse_config_with(text: &str, preset_override: Option<&str>) -> Result<RunConfig, ConfigError> {
    let mut user = parse_table(text)?;
    if let Some(p) = preset_override {
        user.insert("preset".into(), Value::String(p.to_string()));
    }
    let mut merged = match user.get("preset") {
        None => Table::new(),
        Some(Value::String(name)) => {
            let text = preset_text(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?;
            parse_table(text).expect("shipped presets parse")
        }
        Some(other) => {
            return Err(ConfigError::Type(format!(
                "`preset` must be a string, got {}",
                other.type_str()
            )));
        }
    };
    merge(&mut merged, user);

    let mut unknown = Vec::new();
    collect_unknown(&merged, &known_keys(), "", &mut unknown);
    if !unknown.is_empty() {
        return Err(ConfigError::UnknownKeys(unknown));
    }
    // a round trip through text keeps the key path in type errors
    let canonical = toml::to_string(&merged).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let cfg: RunConfig = toml::from_str(&canonical).map_err(|e| ConfigError::Type(e.to_string().trim().to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, None)
}

pub fn load_config(path: &std::path::Path, preset_override: Option<&str>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_with(&text, preset_override)
}

fn core_error(section: &str, e: thinfilm::Error) -> ConfigError {
    match e {
        thinfilm::Error::InvalidParameter { name, reason } => ConfigError::invalid(format!("{section}.{name}"), reason),
        other => ConfigError::invalid(section, other.to_string()),
    }
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    cfg.params.validate().map_err(|e| core_error("params", e))?;
    cfg.scheme.validate().map_err(|e| core_error("scheme", e))?;
    cfg.build_grid()?;
    if cfg.output_stride == 0 {
        return Err(ConfigError::invalid("output_stride", "must be at least 1"));
    }
    if let Some(a) = cfg.alpha {
        thinfilm::mobility::check_alpha(a).map_err(|e| core_error("", e))?;
    }
    if cfg.output_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(ConfigError::invalid(
            "output_times",
            "entries must be finite and nonnegative",
        ));
    }
    match cfg.mode {
        Mode::Run => {
            let t = cfg.t_end.ok_or(ConfigError::Missing("t_end"))?;
            if !(t.is_finite() && t >= 0.0) {
                return Err(ConfigError::invalid(
                    "t_end",
                    format!("must be finite and nonnegative, got {t}"),
                ));
            }
        }
        Mode::Bounds => {
            if let Some(t) = cfg.t_end {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(ConfigError::invalid(
                        "t_end",
                        format!("must be finite and nonnegative, got {t}"),
                    ));
                }
            }
        }
        Mode::Steady => {
            let s = &cfg.steady;
            positive("steady.q", s.q)?;
            positive("steady.mu", s.mu)?;
            if s.kind == SteadyKind::Pukhnachov {
                positive("steady.chi", s.chi)?;
            }
            if s.cross_check_n < 8 {
                return Err(ConfigError::invalid("steady.cross_check_n", "must be at least 8"));
            }
        }
        Mode::Sweep => {
            let s = &cfg.sweep;
            for (key, list) in [("sweep.q", &s.q), ("sweep.mu", &s.mu)] {
                if list.is_empty() {
                    return Err(ConfigError::invalid(key, "must list at least one value"));
                }
                list.iter().try_for_each(|v| positive(key, *v))?;
            }
            if s.chi.is_empty() {
                return Err(ConfigError::invalid("sweep.chi", "must list at least one value"));
            }
            if s.chi.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(ConfigError::invalid("sweep.chi", "entries must be nonnegative"));
            }
        }
    }
    if matches!(cfg.mode, Mode::Run | Mode::Bounds) {
        cfg.initial_state().map(|_| ())?;
        cfg.build_forcing().map(|_| ())?;
    }
    Ok(())
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Canonical TOML text; parsing it gives back the same configuration.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Hex SHA-256 of the canonical text with `output_dir` reset, so that
    /// the same computation hashes the same wherever it is written.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.without_output_dir().to_toml_string().as_bytes()))
    }

    fn without_output_dir(&self) -> RunConfig {
        RunConfig {
            output_dir: RunConfig::default().output_dir,
            ..self.clone()
        }
    }

    /// Every key that enters the hash as `section.key = value` lines.
    pub fn flattened(&self) -> Vec<(String, String)> {
        fn walk(t: &Table, prefix: &str, out: &mut Vec<(String, String)>) {
            for (k, v) in t {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                match v {
                    Value::Table(inner) => walk(inner, &path, out),
                    v => out.push((path, v.to_string())),
                }
            }
        }
        let mut out = Vec::new();
        walk(&Table::try_from(self).expect("configuration serializes"), "", &mut out);
        out.retain(|(k, _)| k != "output_dir");
        out
    }

    pub fn build_grid(&self) -> Result<PeriodicGrid, ConfigError> {
        PeriodicGrid::new(self.grid.n, self.grid.half_length).map_err(|e| ConfigError::invalid("grid", e.to_string()))
    }

    pub fn build_forcing(&self) -> Result<Forcing, ConfigError> {
        let g = self.build_grid()?;
        let f = &self.forcing;
        Ok(match f.kind {
            ForcingKind::None => Forcing::none(&g),
            ForcingKind::Sine => {
                if f.sign != 1.0 && f.sign != -1.0 {
                    return Err(ConfigError::invalid(
                        "forcing.sign",
                        format!("must be 1 or -1, got {}", f.sign),
                    ));
                }
                Forcing::sine(&g, f.amplitude, f.sign)
            }
            ForcingKind::Fourier => Forcing::fourier(&g, f.mean, &f.cos, &f.sin),
            ForcingKind::Table => Forcing::from_samples(&g, f.values.clone())
                .map_err(|e| ConfigError::invalid("forcing.values", e.to_string()))?,
        })
    }

    /// Initial samples before any lift.
    pub fn initial_state(&self) -> Result<FilmState, ConfigError> {
        let g = self.build_grid()?;
        let i = &self.initial;
        let spec = match i.kind {
            InitialKind::Fig2 => InitialData::Fig2,
            InitialKind::Fig3 => InitialData::Fig3,
            InitialKind::Fig4 => InitialData::Fig4,
            InitialKind::Constant => InitialData::Constant(i.value),
            InitialKind::Fourier => InitialData::Fourier {
                mean: i.mean,
                cos: i.cos.clone(),
                sin: i.sin.clone(),
            },
            InitialKind::Table => InitialData::Table(i.values.clone()),
        };
        thinfilm::sample_initial_data(&spec, &g).map_err(|e| ConfigError::invalid("initial", e.to_string()))
    }

    /// Initial state the evolution starts from, lifted by `ε^θ` if asked.
    pub fn start_state(&self) -> Result<FilmState, ConfigError> {
        let h0 = self.initial_state()?;
        if self.initial.lift && self.params.epsilon > 0.0 {
            thinfilm::lift_initial_data(&h0, self.params.epsilon, self.params.theta)
                .map_err(|e| core_error("params", e))
        } else {
            Ok(h0)
        }
    }

    /// Every key that the schema accepts, as dotted paths.
    pub fn schema_keys() -> BTreeSet<String> {
        fn walk(t: &Table, prefix: &str, out: &mut BTreeSet<String>) {
            for (k, v) in t {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                if let Value::Table(inner) = v {
                    walk(inner, &path, out);
                } else {
                    out.insert(path);
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(&known_keys(), "", &mut out);
        out
    }
}
