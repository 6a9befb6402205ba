use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sphp::evaluation::{Anchoring, BenchmarkConfig, DEFAULT_WINDOWS_MIN};
use sphp::ingestion::PreprocessConfig;
use sphp::learner::{BasisSelection, FitConfig, DEFAULT_GAMMA_GRID};
use sphp::simulator::{FeatureGeneratorConfig, ThinningConfig};
use sphp::ModelKind;

use crate::error::{CliError, CliResult};

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "TVSPHP_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossValidationConfig {
    pub enabled: bool,
    pub grid: Vec<f64>,
    pub folds: usize,
}

impl Default for CrossValidationConfig {
    fn default() -> Self {
        Self { enabled: false, grid: DEFAULT_GAMMA_GRID.to_vec(), folds: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    pub window_min: f64,
    pub trials: usize,
    pub threshold: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self { window_min: 60.0, trials: 20, threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub sequences: usize,
    pub horizon: f64,
    /// Training prefix for the train/test split written next to the dataset.
    pub train_hours: f64,
    pub features: FeatureGeneratorConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { sequences: 200, horizon: 96.0, train_hours: 72.0, features: FeatureGeneratorConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSettings {
    pub kinds: Vec<ModelKind>,
    pub windows_min: Vec<f64>,
    pub repeats: usize,
    pub anchoring: Anchoring,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self {
            kinds: ModelKind::ALL.to_vec(),
            windows_min: DEFAULT_WINDOWS_MIN.to_vec(),
            repeats: 5,
            anchoring: Anchoring::TestStart,
        }
    }
}

/// Every tunable of every subcommand. Loaded from `--config` (or the
/// environment default), then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub fit: FitConfig,
    pub basis: BasisSelection,
    pub cross_validation: CrossValidationConfig,
    pub predict: PredictConfig,
    pub thinning: ThinningConfig,
    pub preprocess: PreprocessConfig,
    pub synth: SynthConfig,
    pub benchmark: BenchmarkSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            fit: FitConfig::default(),
            basis: BasisSelection::default(),
            cross_validation: CrossValidationConfig::default(),
            predict: PredictConfig::default(),
            thinning: ThinningConfig::default(),
            preprocess: PreprocessConfig::default(),
            synth: SynthConfig::default(),
            benchmark: BenchmarkSettings::default(),
        }
    }
}

/// Flag values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub kind: Option<ModelKind>,
    pub gamma: Option<f64>,
    pub iters: Option<usize>,
    pub lr: Option<f64>,
    pub rho: Option<f64>,
    pub window_min: Option<f64>,
    pub trials: Option<usize>,
    pub delta_min: Option<f64>,
}

impl RunConfig {
    /// Reads a config file. A run manifest is accepted too; its embedded config is used.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if value.get("tool").is_some() {
            value = value.get("config").cloned().ok_or_else(|| {
                CliError::Config(format!("{}: manifest has no `config` field", path.display()))
            })?;
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.kind {
            self.fit.kind = v;
        }
        if let Some(v) = o.gamma {
            self.fit.gamma = v;
        }
        if let Some(v) = o.iters {
            self.fit.iterations = v;
        }
        if let Some(v) = o.lr {
            self.fit.learning_rate = v;
        }
        if let Some(v) = o.rho {
            self.fit.rho = v;
        }
        if let Some(v) = o.window_min {
            self.predict.window_min = v;
        }
        if let Some(v) = o.trials {
            self.predict.trials = v;
        }
        if let Some(v) = o.delta_min {
            self.thinning.delta = v / 60.0;
        }
        // Module seeds are substreams of the single run seed.
        self.fit.seed = self.seed;
    }

    /// Field-level validation of everything a subcommand may use.
    pub fn validate(&self) -> CliResult<()> {
        let cfg = |field: &str, e: sphp::Error| CliError::Config(format!("{field}.{}", strip(e)));
        self.fit.validate().map_err(|e| cfg("fit", e))?;
        self.thinning.validate().map_err(|e| cfg("thinning", e))?;
        self.preprocess.layout.validate().map_err(|e| cfg("preprocess.layout", e))?;
        let bad = |msg: &str| Err(CliError::Config(msg.to_string()));
        if !(self.basis.support > 0.0) || self.basis.max_basis == 0 {
            return bad("basis: support must be > 0 and max_basis ≥ 1");
        }
        if !(self.predict.window_min > 0.0) {
            return bad("predict.window_min: must be > 0");
        }
        if self.predict.trials == 0 {
            return bad("predict.trials: must be ≥ 1");
        }
        if self.cross_validation.enabled && (self.cross_validation.grid.is_empty() || self.cross_validation.folds < 2) {
            return bad("cross_validation: needs a nonempty grid and at least 2 folds");
        }
        if self.synth.sequences == 0 || !(self.synth.horizon > 0.0) {
            return bad("synth: sequences must be ≥ 1 and horizon > 0");
        }
        self.benchmark_config().validate().map_err(|e| cfg("benchmark", e))?;
        Ok(())
    }

    pub fn benchmark_config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            kinds: self.benchmark.kinds.clone(),
            windows_min: self.benchmark.windows_min.clone(),
            trials: self.predict.trials,
            repeats: self.benchmark.repeats,
            threshold: self.predict.threshold,
            anchoring: self.benchmark.anchoring,
            fit: self.fit.clone(),
            thinning: self.thinning,
            seed: self.seed,
        }
    }
}

fn strip(e: sphp::Error) -> String {
    match e {
        sphp::Error::Contract(m) => m,
        other => other.to_string(),
    }
}
