use krs_core::geometry::BackendId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Identities,
    Continuity,
    Family,
    InvariantFlow,
    SolitonField,
    Infimum,
    Algebra,
    All,
}

impl Experiment {
    pub const EACH: [Experiment; 7] = [
        Experiment::Algebra,
        Experiment::Identities,
        Experiment::Continuity,
        Experiment::Family,
        Experiment::InvariantFlow,
        Experiment::SolitonField,
        Experiment::Infimum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Identities => "identities",
            Experiment::Continuity => "continuity",
            Experiment::Family => "family",
            Experiment::InvariantFlow => "invariant-flow",
            Experiment::SolitonField => "soliton-field",
            Experiment::Infimum => "infimum",
            Experiment::Algebra => "algebra",
            Experiment::All => "all",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Experiment::EACH
            .into_iter()
            .chain([Experiment::All])
            .find(|e| e.name() == s)
            .ok_or_else(|| ConfigError(format!("unknown experiment `{s}`")))
    }
}

/// Either a fixed coefficient or the soliton coefficient found on the fly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Kappa {
    Value(f64),
    Named(KappaName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaName {
    Soliton,
}

impl FromStr for Kappa {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        if s == "soliton" {
            return Ok(Kappa::Named(KappaName::Soliton));
        }
        s.parse()
            .map(Kappa::Value)
            .map_err(|_| ConfigError(format!("kappa must be a number or `soliton`, got `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownMode {
    /// Expect breakdown exactly when `𝓕_X(W) ≠ 0`.
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub backend: BackendId,
    pub grid: usize,
    pub kappa: Kappa,
    /// Cubic perturbation of the momentum profile; `None` picks `0.5` on
    /// `p1_radial` and `0` on `calabi_fiber`.
    pub perturbation: Option<f64>,
    pub seed: u64,
    pub t_max: f64,
    pub expect_breakdown: BreakdownMode,
    /// Overrides of [`default_tolerances`].
    pub tolerances: BTreeMap<String, f64>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::All,
            backend: BackendId::P1Radial,
            grid: 64,
            kappa: Kappa::Value(0.0),
            perturbation: None,
            seed: 7,
            t_max: 0.999,
            expect_breakdown: BreakdownMode::Auto,
            tolerances: BTreeMap::new(),
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("eq25", 1e-8),
        ("eq27", 1e-8),
        ("pali", 1e-8),
        ("cocycle", 1e-7),
        ("path_independence", 1e-8),
        ("constant_shift", 1e-9),
        ("i_minus_j", 1e-10),
        ("i_nonnegative", 1e-12),
        ("lemma_bound", 1e-8),
        ("ma_residual", 1e-10),
        ("conservation", 1e-8),
        ("u_identity", 1e-8),
        ("cone", 1e-10),
        ("monotone", 1e-9),
        ("path_identity", 1e-6),
        ("limit", 1e-5),
        ("infimum", 1e-5),
        ("family_equation", 1e-8),
        ("family_normalization", 1e-10),
        ("deformation_ratio", 1e-3),
        ("lower_bound", 1e-5),
        ("metric_independence", 1e-8),
        ("flow_fd", 1e-6),
        ("slope_zero", 1e-7),
        ("slope", 1e-6),
        ("g_drift", 1e-7),
        ("linear_fit", 1e-7),
        ("soliton_residual", 1e-10),
        ("shooting_digits", 4.0),
        ("algebra_float", 1e-12),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.grid < 16 {
            return Err(ConfigError(format!("grid must be at least 16, got {}", self.grid)));
        }
        if !(self.t_max > 0.0 && self.t_max < 1.0) {
            return Err(ConfigError(format!("t_max must lie in (0, 1), got {}", self.t_max)));
        }
        let known = default_tolerances();
        for (k, v) in &self.tolerances {
            if !known.contains_key(k) {
                return Err(ConfigError(format!("unknown tolerance `{k}`")));
            }
            if !(v.is_finite() && *v >= 0.0) {
                return Err(ConfigError(format!("tolerance `{k}` must be finite and nonnegative")));
            }
        }
        if let Kappa::Value(k) = self.kappa {
            if !k.is_finite() {
                return Err(ConfigError("kappa must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances
            .get(key)
            .copied()
            .or_else(|| default_tolerances().get(key).copied())
            .unwrap_or_else(|| panic!("no tolerance named `{key}`"))
    }

    pub fn perturbation(&self) -> f64 {
        self.perturbation.unwrap_or(match self.backend {
            BackendId::P1Radial => 0.5,
            BackendId::CalabiFiber => 0.0,
        })
    }

    /// The same settings aimed at a single experiment.
    pub fn for_experiment(&self, e: Experiment) -> Self {
        Self {
            experiment: e,
            ..self.clone()
        }
    }
}
