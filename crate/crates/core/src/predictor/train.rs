use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{loss_and_grad_scaled, loss_refs, LossBreakdown, PredictorConfig, PredictorParams, TermScales};
use crate::dataset::Sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 4,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train: LossBreakdown,
    pub validation: Option<LossBreakdown>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss
    /// (training loss when no validation set is given).
    pub params: PredictorParams,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite values at epoch {epoch}, batch {batch}: {detail}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        detail: String,
        /// Parameters before the failing update.
        last_good: Box<PredictorParams>,
    },
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    fn new(params: &PredictorParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update(&mut self, params: &mut PredictorParams, grad: &PredictorParams, cfg: &TrainConfig) {
        self.step += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.step);
        let bc2 = 1.0 - cfg.beta2.powi(self.step);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Mean loss over a sample set, evaluated in chunks.
pub fn dataset_loss(params: &PredictorParams, samples: &[Sample]) -> LossBreakdown {
    assert!(!samples.is_empty(), "dataset_loss needs samples");
    let refs: Vec<&Sample> = samples.iter().collect();
    // location term is not additive over chunks, so run it in one pass
    loss_refs(params, &refs)
}

/// Mini-batch Adam on the combined location + cross-entropy loss.
pub fn train(
    train_set: &[Sample],
    validation: &[Sample],
    model: PredictorConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    let init = PredictorParams::init(model, cfg.seed);
    train_from(init, train_set, validation, cfg)
}

/// Continues training from given parameters.
pub fn train_from(
    mut params: PredictorParams,
    train_set: &[Sample],
    validation: &[Sample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if train_set.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(TrainError::Config(format!(
            "batch_size {} / learning_rate {}",
            cfg.batch_size, cfg.learning_rate
        )));
    }
    let scales = TermScales {
        location: 1.0,
        cel: params.config.lambda,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut adam = Adam::new(&params);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, PredictorParams)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (lb, grad, finite) = loss_and_grad_scaled(&params, &batch, scales);
            if !finite || !lb.total.is_finite() || !grad.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch,
                    batch: b,
                    detail: format!(
                        "loss {} (location {}, cel {}), finite activations: {finite}",
                        lb.total, lb.location, lb.cel
                    ),
                    last_good: Box::new(params),
                });
            }
            adam.update(&mut params, &grad, cfg);
        }
        let train_loss = dataset_loss(&params, train_set);
        let val_loss = (!validation.is_empty()).then(|| dataset_loss(&params, validation));
        let score = val_loss.map_or(train_loss.total, |v| v.total);
        if !score.is_finite() {
            return Err(TrainError::NonFinite {
                epoch,
                batch: usize::MAX,
                detail: format!("epoch loss {score}"),
                last_good: Box::new(best.map_or(params, |b| b.2)),
            });
        }
        log::debug!("epoch {epoch}: train {:.5} val {:?}", train_loss.total, val_loss.map(|v| v.total));
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, epoch, params.clone()));
        }
        log.push(EpochLog {
            epoch,
            train: train_loss,
            validation: val_loss,
        });
    }
    let (_, best_epoch, best_params) = best.unwrap_or((f64::NAN, 0, params));
    Ok(TrainOutcome {
        params: best_params,
        best_epoch,
        log,
    })
}
