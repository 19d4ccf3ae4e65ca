//! Test-time metrics: loss terms, multi-class Brier score and
//! zone-conditioned KL divergence.

use serde::{Deserialize, Serialize};

use crate::dataset::Sample;
use crate::error::DataError;
use crate::events::{ActionType, PitchPartition, NUM_ACTIONS};
use crate::predictor::{location_error, weighted_cel, LocationLoss, Prediction, Predictor};

/// Smoothing mass added to every class when a zone's empirical distribution
/// has an empty class that the prediction covers.
pub const KL_EPSILON: f64 = 1e-9;

/// KL divergence of one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneKl {
    pub zone: String,
    pub n_samples: usize,
    pub kl: f64,
    /// Mean predicted distribution.
    pub predicted: [f64; NUM_ACTIONS],
    /// Empirical distribution of true next actions.
    pub observed: [f64; NUM_ACTIONS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub test_loss: f64,
    /// RMSE (or MSE) of the location head.
    pub location_error: f64,
    pub location_loss: LocationLoss,
    pub cel: f64,
    pub lambda: f64,
    pub brier: f64,
    pub kl: f64,
    pub per_zone_kl: Vec<ZoneKl>,
    pub n_samples: usize,
}

/// `(1/N) Σ_i Σ_k (f_ik − 1{a_i = k})²` over all seven classes.
pub fn brier(predictions: &[Prediction], targets: &[ActionType]) -> Result<f64, DataError> {
    check_aligned(predictions.len(), targets.len())?;
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, a)| {
            p.action_probs
                .iter()
                .enumerate()
                .map(|(k, &f)| {
                    let o = if k == a.index() { 1.0 } else { 0.0 };
                    (f - o) * (f - o)
                })
                .sum::<f64>()
        })
        .sum();
    Ok(total / predictions.len() as f64)
}

fn check_aligned(n_pred: usize, n_target: usize) -> Result<(), DataError> {
    if n_pred == 0 {
        return Err(DataError::Contract("metric needs at least one sample".into()));
    }
    if n_pred != n_target {
        return Err(DataError::Contract(format!(
            "{n_pred} predictions but {n_target} targets"
        )));
    }
    Ok(())
}

/// `Σ_a p_a ln(p_a / q_a)`, with `0 ln 0 = 0`.
///
/// If some class has `p > 0` and `q = 0`, both distributions are first
/// smoothed with [`KL_EPSILON`] and renormalized so the result stays finite.
pub fn kl_divergence(p: &[f64; NUM_ACTIONS], q: &[f64; NUM_ACTIONS]) -> f64 {
    let needs_smoothing = p.iter().zip(q).any(|(&a, &b)| a > 0.0 && b <= 0.0);
    let (p, q) = if needs_smoothing {
        (smooth(p), smooth(q))
    } else {
        (*p, *q)
    };
    p.iter()
        .zip(&q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum::<f64>()
        .max(0.0)
}

fn smooth(p: &[f64; NUM_ACTIONS]) -> [f64; NUM_ACTIONS] {
    let total: f64 = p.iter().sum::<f64>() + KL_EPSILON * NUM_ACTIONS as f64;
    p.map(|v| (v + KL_EPSILON) / total)
}

/// Per-zone KL between the mean predicted action distribution and the
/// empirical distribution of true actions, zones taken at the true next
/// location. Returns the sample-weighted mean over non-empty zones and the
/// per-zone breakdown.
pub fn zone_kl(
    predictions: &[Prediction],
    targets: &[(ActionType, [f64; 2])],
    partition: &PitchPartition,
) -> Result<(f64, Vec<ZoneKl>), DataError> {
    check_aligned(predictions.len(), targets.len())?;
    let nz = partition.num_zones();
    let mut pred_sum = vec![[0.0; NUM_ACTIONS]; nz];
    let mut counts = vec![[0usize; NUM_ACTIONS]; nz];
    let mut n = vec![0usize; nz];
    for (p, (a, xy)) in predictions.iter().zip(targets) {
        let z = partition.zone_of(xy[0], xy[1]);
        n[z] += 1;
        counts[z][a.index()] += 1;
        for (s, v) in pred_sum[z].iter_mut().zip(p.action_probs) {
            *s += v;
        }
    }
    let mut zones = Vec::new();
    let mut weighted = 0.0;
    for z in 0..nz {
        if n[z] == 0 {
            continue;
        }
        let nf = n[z] as f64;
        let predicted = pred_sum[z].map(|s| s / nf);
        let observed = counts[z].map(|c| c as f64 / nf);
        let kl = kl_divergence(&predicted, &observed);
        weighted += nf * kl;
        zones.push(ZoneKl {
            zone: partition.zone_names()[z].clone(),
            n_samples: n[z],
            kl,
            predicted,
            observed,
        });
    }
    Ok((weighted / predictions.len() as f64, zones))
}

/// Runs a predictor over a test set and assembles every metric.
pub fn evaluate(
    predictor: &dyn Predictor,
    test_set: &[Sample],
    partition: &PitchPartition,
    lambda: f64,
    location_loss: LocationLoss,
) -> Result<EvalReport, DataError> {
    if test_set.is_empty() {
        return Err(DataError::Contract("empty test set".into()));
    }
    let predictions = predictor.predict_samples(test_set);
    evaluate_predictions(&predictions, test_set, partition, lambda, location_loss)
}

/// [`evaluate`] on precomputed predictions.
pub fn evaluate_predictions(
    predictions: &[Prediction],
    test_set: &[Sample],
    partition: &PitchPartition,
    lambda: f64,
    location_loss: LocationLoss,
) -> Result<EvalReport, DataError> {
    check_aligned(predictions.len(), test_set.len())?;
    let actions: Vec<ActionType> = test_set.iter().map(|s| s.target_action).collect();
    let pred_xy: Vec<[f64; 2]> = predictions.iter().map(|p| p.xy).collect();
    let true_xy: Vec<[f64; 2]> = test_set.iter().map(|s| s.target_xy).collect();
    let probs: Vec<[f64; NUM_ACTIONS]> = predictions.iter().map(|p| p.action_probs).collect();
    let location = location_error(location_loss, &pred_xy, &true_xy);
    let cel = weighted_cel(&probs, &actions);
    let targets: Vec<(ActionType, [f64; 2])> = actions.iter().copied().zip(true_xy).collect();
    let (kl, per_zone_kl) = zone_kl(predictions, &targets, partition)?;
    Ok(EvalReport {
        test_loss: location + lambda * cel,
        location_error: location,
        location_loss,
        cel,
        lambda,
        brier: brier(predictions, &actions)?,
        kl,
        per_zone_kl,
        n_samples: test_set.len(),
    })
}

/// Header matching [`table_row`].
pub fn table_header() -> String {
    format!(
        "{:>4}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}  {:>7}",
        "n_r", "test_loss", "location", "cel", "brier", "kl", "n"
    )
}

/// One fixed-width result row.
pub fn table_row(n_r: usize, r: &EvalReport) -> String {
    format!(
        "{:>4}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
        n_r, r.test_loss, r.location_error, r.cel, r.brier, r.kl, r.n_samples
    )
}
