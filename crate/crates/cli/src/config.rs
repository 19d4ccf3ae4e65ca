use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sigposs::predictor::{LocationLoss, PredictorConfig, TrainConfig};
use sigposs::sig::logsig_dim;
use sigposs::value::Phi;
use sigposs_service::sha256_hex;

use crate::error::CliError;

/// Allowed values of each tuning axis.
pub const GRID_LAMBDA: [f64; 2] = [1.0, 5.0];
pub const GRID_HIDDEN: [usize; 3] = [64, 128, 256];
pub const GRID_BATCH: [usize; 3] = [4, 10, 32];
pub const GRID_SIG_ORDER: [usize; 2] = [3, 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Raw provider-neutral events (input of `ingest`).
    pub raw_events: PathBuf,
    /// Canonical events (output of `ingest`).
    pub events: PathBuf,
    pub data_dir: PathBuf,
    pub model_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Zone partition for the KL metric; the built-in seven zones when absent.
    pub partition: Option<PathBuf>,
    /// Canonical events of the separate league the value models are fitted on.
    pub value_events: PathBuf,
    pub value_models: PathBuf,
    /// Optional CSV `match_id,team_id,goals,external_xg`.
    pub outcomes: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            raw_events: "raw.jsonl".into(),
            events: "work/events.jsonl".into(),
            data_dir: "work/data".into(),
            model_dir: "work/models".into(),
            output_dir: "work/output".into(),
            partition: None,
            value_events: "work/value_events.jsonl".into(),
            value_models: "work/value_models.json".into(),
            outcomes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Optimizer {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for Optimizer {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Split {
    /// Share of matches held out for testing.
    pub test_fraction: f64,
    /// Share of matches used for best-epoch selection.
    pub validation_fraction: f64,
}

impl Default for Split {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValueSettings {
    /// History length whose model drives `value`, `report` and `serve`.
    pub n_r: usize,
    pub phi: Phi,
    /// Competitions ignored when fitting the value models.
    pub exclude_competitions: Vec<String>,
}

impl Default for ValueSettings {
    fn default() -> Self {
        Self {
            n_r: 3,
            phi: Phi::Harmonic,
            exclude_competitions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneGrid {
    pub lambda: Vec<f64>,
    pub hidden: Vec<usize>,
    pub batch_size: Vec<usize>,
    pub sig_order: Vec<usize>,
}

impl Default for TuneGrid {
    fn default() -> Self {
        Self {
            lambda: GRID_LAMBDA.to_vec(),
            hidden: GRID_HIDDEN.to_vec(),
            batch_size: GRID_BATCH.to_vec(),
            sig_order: GRID_SIG_ORDER.to_vec(),
        }
    }
}

impl TuneGrid {
    pub fn validate(&self) -> Result<(), CliError> {
        fn check<T: PartialEq + std::fmt::Debug>(name: &str, values: &[T], allowed: &[T]) -> Result<(), CliError> {
            if values.is_empty() {
                return Err(CliError::Usage(format!("tune grid axis {name} is empty")));
            }
            match values.iter().find(|v| !allowed.contains(v)) {
                Some(v) => Err(CliError::Usage(format!(
                    "tune grid value {v:?} for {name} is outside {allowed:?}"
                ))),
                None => Ok(()),
            }
        }
        check("lambda", &self.lambda, &GRID_LAMBDA)?;
        check("hidden", &self.hidden, &GRID_HIDDEN)?;
        check("batch_size", &self.batch_size, &GRID_BATCH)?;
        check("sig_order", &self.sig_order, &GRID_SIG_ORDER)
    }

    pub fn len(&self) -> usize {
        self.lambda.len() * self.hidden.len() * self.batch_size.len() * self.sig_order.len()
    }
}

/// Everything a pipeline command needs. Loaded from JSON, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    /// History lengths to build, train and evaluate.
    pub n_r: Vec<usize>,
    pub sig_order: usize,
    pub lambda: f64,
    pub hidden: usize,
    pub emb_dim: usize,
    pub leaky_alpha: f64,
    pub location_loss: LocationLoss,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub split: Split,
    pub value: ValueSettings,
    pub tune: TuneGrid,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = PredictorConfig::default();
        Self {
            paths: Paths::default(),
            n_r: vec![3, 4, 5, 6, 7],
            sig_order: model.sig_order,
            lambda: model.lambda,
            hidden: model.hidden,
            emb_dim: model.emb_dim,
            leaky_alpha: model.leaky_alpha,
            location_loss: model.location_loss,
            seed: TrainConfig::default().seed,
            optimizer: Optimizer::default(),
            split: Split::default(),
            value: ValueSettings::default(),
            tune: TuneGrid::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_r.is_empty() || self.n_r.iter().any(|&n| n == 0) {
            return Err(CliError::Usage(format!("n_r must be a non-empty list of positive values, got {:?}", self.n_r)));
        }
        if self.sig_order == 0 {
            return Err(CliError::Usage("sig_order must be positive".into()));
        }
        if self.hidden == 0 || self.emb_dim == 0 {
            return Err(CliError::Usage("hidden and emb_dim must be positive".into()));
        }
        let s = &self.split;
        if !(s.test_fraction > 0.0 && s.validation_fraction >= 0.0 && s.test_fraction + s.validation_fraction < 1.0) {
            return Err(CliError::Usage(format!(
                "split fractions test {} / validation {} must be non-negative and sum below 1",
                s.test_fraction, s.validation_fraction
            )));
        }
        Ok(())
    }

    pub fn model(&self, sig_order: usize) -> PredictorConfig {
        PredictorConfig {
            sig_order,
            logsig_dim: logsig_dim(5, sig_order),
            emb_dim: self.emb_dim,
            hidden: self.hidden,
            leaky_alpha: self.leaky_alpha,
            lambda: self.lambda,
            location_loss: self.location_loss,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let o = &self.optimizer;
        TrainConfig {
            epochs: o.epochs,
            batch_size: o.batch_size,
            learning_rate: o.learning_rate,
            beta1: o.beta1,
            beta2: o.beta2,
            epsilon: o.epsilon,
            seed: self.seed,
        }
    }

    /// Hash of the settings, leaving out file locations so that the same
    /// experiment run in two directories hashes identically.
    pub fn settings_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("paths");
        }
        sha256_hex(v.to_string().as_bytes())
    }
}
