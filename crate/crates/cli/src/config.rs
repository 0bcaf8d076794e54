use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Kls,
    Vectorize,
    Ladder,
    Rotor,
    Rp,
    Criterion,
}

impl Suite {
    /// Dependency order.
    pub const ALL: [Suite; 6] = [
        Suite::Kls,
        Suite::Vectorize,
        Suite::Ladder,
        Suite::Rotor,
        Suite::Rp,
        Suite::Criterion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Kls => "kls",
            Suite::Vectorize => "vectorize",
            Suite::Ladder => "ladder",
            Suite::Rotor => "rotor",
            Suite::Rp => "rp",
            Suite::Criterion => "criterion",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    #[default]
    Cutoff,
    Edge,
    Dim,
    Inertia,
    Coupling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    /// Lattice edge `2N`.
    pub edge: usize,
    pub cutoff: usize,
    pub inertia: f64,
    pub coupling: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            edge: 4,
            cutoff: 2,
            inertia: 1.0,
            coupling: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn half_edge(&self) -> usize {
        self.edge / 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomConfig {
    pub trials: usize,
    /// Largest matrix side in the randomized suites.
    pub max_dim: usize,
    pub seed: u64,
    /// Random fields for the energy inequalities.
    pub rp_fields: usize,
    /// Random fields for the curvature cross-check.
    pub curvature_fields: usize,
}

impl Default for RandomConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            max_dim: 16,
            seed: 1,
            rp_fields: 20,
            curvature_fields: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative inequality slack, scaled by `1 + rhs`.
    pub inequality: f64,
    /// Relative defect of exact identities.
    pub identity: f64,
    /// Absolute tolerance on momentum observables.
    pub observable: f64,
    /// Relative agreement of the two susceptibility routes.
    pub chi_agreement: f64,
    /// Relative agreement of finite-difference and perturbative curvature.
    pub curvature: f64,
    /// Quadrature tolerance.
    pub integral: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        use klsrp_core::tol;
        Self {
            inequality: tol::INEQ,
            identity: tol::ID,
            observable: tol::OBS,
            chi_agreement: tol::CHI,
            curvature: tol::MATCH,
            integral: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderConfig {
    pub sizes: Vec<usize>,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            sizes: vec![8, 16, 32, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            param: SweepParam::Cutoff,
            values: vec![1.0, 2.0, 3.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
    /// Report or table path; stdout when absent.
    pub out: Option<PathBuf>,
    /// Directory used when `out` is absent.
    pub dir: Option<PathBuf>,
    /// Sparse Hamiltonian export from `diagonalize`.
    pub coo: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub suites: Vec<Suite>,
    pub model: ModelConfig,
    pub random: RandomConfig,
    pub tolerances: Tolerances,
    pub ladder: LadderConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            model: ModelConfig::default(),
            random: RandomConfig::default(),
            tolerances: Tolerances::default(),
            ladder: LadderConfig::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Invalid configuration, tagged with the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        toml::from_str(s).map_err(|e| {
            let msg = e.message().to_string();
            ConfigError::new(field_from_toml(s, &e), msg)
        })
    }
}

fn field_from_toml(src: &str, e: &toml::de::Error) -> String {
    let Some(span) = e.span() else {
        return "config".into();
    };
    let line_start = src[..span.start].rfind('\n').map_or(0, |i| i + 1);
    let table = src[..line_start]
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix('[').and_then(|l| l.strip_suffix(']')))
        .map(str::trim);
    let line = src[line_start..].lines().next().unwrap_or("");
    let key = if line.contains('=') { line.split('=').next().unwrap_or("").trim() } else { "" };
    match (table, key.is_empty()) {
        (Some(t), false) => format!("{t}.{key}"),
        (Some(t), true) => t.to_string(),
        (None, false) => key.to_string(),
        (None, true) => "config".into(),
    }
}

impl RunConfig {
    /// Reads a TOML file, or a JSON report whose `config` block is reused.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let mut v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| ConfigError::new("config", format!("invalid JSON: {e}")))?;
            if let Some(inner) = v.get_mut("config") {
                v = inner.take();
            }
            serde_json::from_value(v).map_err(|e| ConfigError::new("config", e.to_string()))
        } else {
            text.parse()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_model(&self.model)?;
        let r = &self.random;
        if r.trials == 0 {
            return Err(ConfigError::new("random.trials", "must be at least 1"));
        }
        if r.max_dim == 0 {
            return Err(ConfigError::new("random.max_dim", "must be at least 1"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("inequality", t.inequality),
            ("identity", t.identity),
            ("observable", t.observable),
            ("chi_agreement", t.chi_agreement),
            ("curvature", t.curvature),
            ("integral", t.integral),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new(format!("tolerances.{name}"), format!("must be positive, got {v}")));
            }
        }
        let s = &self.ladder.sizes;
        if s.is_empty() || s[0] == 0 || s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::new(
                "ladder.sizes",
                format!("must be positive and strictly ascending, got {s:?}"),
            ));
        }
        if self.sweep.values.is_empty() {
            return Err(ConfigError::new("sweep.values", "must not be empty"));
        }
        let integral = matches!(self.sweep.param, SweepParam::Cutoff | SweepParam::Edge | SweepParam::Dim);
        for (i, &v) in self.sweep.values.iter().enumerate() {
            let field = format!("sweep.values[{i}]");
            if !v.is_finite() || (integral && (v < 1.0 || v.fract() != 0.0)) {
                return Err(ConfigError::new(field, format!("invalid value {v}")));
            }
            let mut m = self.model.clone();
            apply_sweep(&mut m, self.sweep.param, v);
            validate_model(&m).map_err(|e| ConfigError::new(field, e.to_string()))?;
        }
        Ok(())
    }
}

fn validate_model(m: &ModelConfig) -> Result<(), ConfigError> {
    if m.dim == 0 {
        return Err(ConfigError::new("model.dim", "must be at least 1"));
    }
    if m.edge < 2 || !m.edge.is_multiple_of(2) {
        return Err(ConfigError::new("model.edge", format!("must be even and at least 2, got {}", m.edge)));
    }
    if m.cutoff == 0 {
        return Err(ConfigError::new("model.cutoff", "must be at least 1"));
    }
    if !(m.inertia > 0.0 && m.inertia.is_finite()) {
        return Err(ConfigError::new("model.inertia", format!("must be positive, got {}", m.inertia)));
    }
    if !(m.coupling >= 0.0 && m.coupling.is_finite()) {
        return Err(ConfigError::new("model.coupling", format!("must be nonnegative, got {}", m.coupling)));
    }
    Ok(())
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Cutoff => "cutoff",
            SweepParam::Edge => "edge",
            SweepParam::Dim => "dim",
            SweepParam::Inertia => "inertia",
            SweepParam::Coupling => "coupling",
        }
    }
}

pub fn sweep_value(model: &ModelConfig, param: SweepParam) -> f64 {
    match param {
        SweepParam::Cutoff => model.cutoff as f64,
        SweepParam::Edge => model.edge as f64,
        SweepParam::Dim => model.dim as f64,
        SweepParam::Inertia => model.inertia,
        SweepParam::Coupling => model.coupling,
    }
}

pub fn apply_sweep(model: &mut ModelConfig, param: SweepParam, v: f64) {
    match param {
        SweepParam::Cutoff => model.cutoff = v as usize,
        SweepParam::Edge => model.edge = v as usize,
        SweepParam::Dim => model.dim = v as usize,
        SweepParam::Inertia => model.inertia = v,
        SweepParam::Coupling => model.coupling = v,
    }
}
