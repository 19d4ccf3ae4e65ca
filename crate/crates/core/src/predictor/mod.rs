//! Next-action model: recency-weighted action embedding concatenated with
//! the log-signature and score advantage, two LeakyReLU layers, and a
//! 9-wide output (7 action logits, `x`, `y`). Gradients are hand-derived.

mod checkpoint;
mod gradcheck;
mod model;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use gradcheck::{gradient_check, relative_error, GradCheckEntry};
pub use model::{
    cel_weight, forward, location_error, loss, loss_and_grad, loss_and_grad_scaled, predict_all, recency_weights,
    softmax, weighted_action_embedding, weighted_cel, LocationLoss, LossBreakdown, Prediction, PredictorConfig,
    PredictorParams, TermScales, OUTPUT_DIM, TENSOR_NAMES,
};
pub use train::{dataset_loss, train, train_from, EpochLog, TrainConfig, TrainError, TrainOutcome};

use crate::dataset::Sample;

/// Anything that maps samples to predictions.
pub trait Predictor {
    fn predict_samples(&self, samples: &[Sample]) -> Vec<Prediction>;
}

impl Predictor for PredictorParams {
    fn predict_samples(&self, samples: &[Sample]) -> Vec<Prediction> {
        predict_all(self, samples)
    }
}

/// Predicts the true next action and location with certainty.
#[derive(Debug, Clone, Copy, Default)]
pub struct OraclePredictor;

impl Predictor for OraclePredictor {
    fn predict_samples(&self, samples: &[Sample]) -> Vec<Prediction> {
        samples
            .iter()
            .map(|s| Prediction::one_hot(s.target_action, s.target_xy))
            .collect()
    }
}

/// Uniform action distribution, fixed location.
#[derive(Debug, Clone, Copy)]
pub struct UniformPredictor {
    pub xy: [f64; 2],
}

impl Predictor for UniformPredictor {
    fn predict_samples(&self, samples: &[Sample]) -> Vec<Prediction> {
        let p = 1.0 / crate::events::NUM_ACTIONS as f64;
        samples
            .iter()
            .map(|_| Prediction {
                action_probs: [p; crate::events::NUM_ACTIONS],
                xy: self.xy,
            })
            .collect()
    }
}
