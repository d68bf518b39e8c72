use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srld_core::dynamics::{GeneralDynamics, Method, SamplerConfig};
use srld_core::nalgebra::DMatrix;
use srld_core::targets::TargetSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    #[default]
    Independent,
    CoupledNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Langevin,
    Srld,
    General,
}

/// `D` and `Q` for the general dynamics, as nested rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralSpec {
    pub diffusion: Vec<Vec<f64>>,
    pub curl: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub name: String,
    pub method: MethodKind,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub general: Option<GeneralSpec>,
    /// Name of a repulsive entry whose drift magnitude this entry's step
    /// size is scaled to match.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_step_to: Option<String>,
}

impl MethodEntry {
    pub fn build_method(&self, dim: usize) -> Result<Method, ConfigError> {
        let field = |f: &str| format!("methods.{}.{f}", self.name);
        match (self.method, &self.general) {
            (MethodKind::Langevin, _) => Ok(Method::Langevin),
            (MethodKind::Srld, _) => Ok(Method::Srld),
            (MethodKind::General, None) => Ok(Method::General(GeneralDynamics::identity(dim))),
            (MethodKind::General, Some(g)) => {
                let d = to_matrix(&g.diffusion, dim).map_err(|r| invalid(field("general.diffusion"), r))?;
                let q = to_matrix(&g.curl, dim).map_err(|r| invalid(field("general.curl"), r))?;
                GeneralDynamics::new(d, q)
                    .map(Method::General)
                    .map_err(|e| invalid(field("general"), e))
            }
        }
    }
}

fn to_matrix(rows: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>, String> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(format!("expected a {dim}x{dim} matrix"));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

/// Where the metric baseline comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub draws: usize,
    pub seed: u64,
    /// Ignore the target's exact sampler and use the long Langevin run.
    pub force_langevin: bool,
    pub langevin_step: f64,
    pub langevin_steps: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            draws: 5_000,
            seed: 0x5eed,
            force_langevin: false,
            langevin_step: 1e-4,
            langevin_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportingConfig {
    /// Overrides every method's `keep_every` when set.
    pub keep_every: Option<usize>,
    pub max_lag: usize,
    /// Points per side entering MMD and W1.
    pub metric_points: usize,
    pub moment_window: usize,
    /// Fixed MMD bandwidth; default is the median rule on the reference.
    pub mmd_bandwidth: Option<f64>,
    pub write_traces: bool,
}

impl Default for ReportingConfig {
    fn default() -> Self {
        Self {
            keep_every: None,
            max_lag: 50,
            metric_points: 500,
            moment_window: 1000,
            mmd_bandwidth: None,
            write_traces: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub methods: Vec<MethodEntry>,
    #[serde(default)]
    pub pairing: Pairing,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub reporting: ReportingConfig,
    /// Method compared against in paired differences; defaults to the last entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
    /// Pinned starting point; otherwise a standard normal draw per seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    #[serde(default = "default_pilot_steps")]
    pub pilot_steps: usize,
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

fn default_pilot_steps() -> usize {
    20_000
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn baseline_name(&self) -> Option<&str> {
        self.baseline
            .as_deref()
            .or_else(|| self.methods.last().map(|m| m.name.as_str()))
    }

    pub fn method(&self, name: &str) -> Option<&MethodEntry> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.target.validate().map_err(|e| invalid("target", e))?;
        let dim = srld_core::targets::make_target(&self.target)
            .map_err(|e| invalid("target", e))?
            .dim();
        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method required"));
        }
        let mut names = HashSet::new();
        for m in &self.methods {
            if m.name.is_empty() || m.name.contains(['/', '\\', ',']) {
                return Err(invalid("methods.name", format!("`{}` is not a usable file-name stem", m.name)));
            }
            if !names.insert(m.name.as_str()) {
                return Err(invalid("methods.name", format!("duplicate method `{}`", m.name)));
            }
            m.sampler
                .validate()
                .map_err(|e| invalid(format!("methods.{}.sampler", m.name), e))?;
            m.build_method(dim)?;
            if let Some(other) = &m.match_step_to {
                let Some(src) = self.method(other) else {
                    return Err(invalid(format!("methods.{}.match_step_to", m.name), format!("no method `{other}`")));
                };
                if src.match_step_to.is_some() || src.method == MethodKind::Langevin {
                    return Err(invalid(
                        format!("methods.{}.match_step_to", m.name),
                        format!("`{other}` must be a repulsive method with its own step size"),
                    ));
                }
            }
        }
        if self.pairing == Pairing::CoupledNoise {
            if self.methods.len() != 2 {
                return Err(invalid("pairing", "coupled-noise pairing needs exactly 2 methods"));
            }
            if self.methods[0].sampler.total_steps != self.methods[1].sampler.total_steps {
                return Err(invalid("pairing", "coupled-noise methods must share total_steps"));
            }
        }
        if let Some(b) = &self.baseline {
            if self.method(b).is_none() {
                return Err(invalid("baseline", format!("no method `{b}`")));
            }
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed required"));
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return Err(invalid("seeds", "duplicate seeds"));
        }
        if let Some(t) = &self.theta0 {
            if t.len() != dim || t.iter().any(|x| !x.is_finite()) {
                return Err(invalid("theta0", format!("expected {dim} finite values")));
            }
        }
        if self.reference.draws < 2 {
            return Err(invalid("reference.draws", "need at least 2"));
        }
        if self.reporting.keep_every == Some(0) {
            return Err(invalid("reporting.keep_every", "must be positive"));
        }
        if self.reporting.metric_points < 2 {
            return Err(invalid("reporting.metric_points", "need at least 2"));
        }
        if let Some(s) = self.reporting.mmd_bandwidth {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("reporting.mmd_bandwidth", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Parses compact target descriptions used on the command line:
/// `banana`, `gaussian:d=2,var=1`, `mixture:d=2,offset=1,var=1`.
pub fn parse_target(s: &str) -> Result<TargetSpec, ConfigError> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut d = None;
    let mut var = 1.0;
    let mut offset = 1.0;
    for kv in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| invalid("target", format!("expected key=value, got `{kv}`")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| invalid("target", format!("bad number `{v}`")));
        match k {
            "d" | "dim" => d = Some(v.parse::<usize>().map_err(|_| invalid("target", format!("bad dimension `{v}`")))?),
            "var" | "variance" => var = num(v)?,
            "offset" => offset = num(v)?,
            _ => return Err(invalid("target", format!("unknown key `{k}`"))),
        }
    }
    let spec = match kind {
        "banana" | "banana2d" => TargetSpec::Banana2d,
        "gaussian" => TargetSpec::IsotropicGaussian {
            dim: d.unwrap_or(2),
            variance: var,
        },
        "mixture" => {
            let dim = d.unwrap_or(2);
            TargetSpec::GaussMixture {
                means: vec![vec![offset; dim], vec![-offset; dim]],
                weights: vec![0.5, 0.5],
                variance: var,
            }
        }
        _ => return Err(invalid("target", format!("unknown target `{kind}` (banana, gaussian, mixture)"))),
    };
    spec.validate().map_err(|e| invalid("target", e))?;
    Ok(spec)
}
