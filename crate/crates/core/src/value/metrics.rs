use serde::{Deserialize, Serialize};

use super::xg::XgModel;
use super::xt::XtModel;
use crate::dataset::Sample;
use crate::error::DataError;
use crate::events::{ActionType, PitchPartition, NUM_ACTIONS};
use crate::predictor::Prediction;

/// Smallest predicted LPV for which a relative difference is reported.
pub const REL_DIFF_EPS: f64 = 1e-9;

/// The xG and xT sub-models used for location-based values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueModels {
    pub xg: XgModel,
    pub xt: XtModel,
}

/// Recency weighting of HPUS; `k = 1` is the last action of the possession.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phi {
    /// `φ(k) = 1/k`
    #[default]
    Harmonic,
    /// `φ(k) = 1`
    Flat,
}

impl Phi {
    pub fn weight(self, k: usize) -> f64 {
        match self {
            Phi::Harmonic => 1.0 / k as f64,
            Phi::Flat => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueConfig {
    /// Areas used by the zone value, in ladder order.
    pub areas: PitchPartition,
    /// Zone value of each area.
    pub area_values: Vec<f64>,
    pub phi: Phi,
}

impl Default for ValueConfig {
    fn default() -> Self {
        Self {
            areas: PitchPartition::default_areas(),
            area_values: vec![0.0, 5.0, 10.0],
            phi: Phi::Harmonic,
        }
    }
}

impl ValueConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.area_values.len() != self.areas.num_zones() {
            return Err(DataError::Partition(format!(
                "{} area values for {} areas",
                self.area_values.len(),
                self.areas.num_zones()
            )));
        }
        Ok(())
    }

    /// Zone value at a location.
    pub fn zone_value(&self, x: f64, y: f64) -> f64 {
        self.area_values[self.areas.zone_of(x, y)]
    }
}

fn p(probs: &[f64; NUM_ACTIONS], a: ActionType) -> f64 {
    probs[a.index()]
}

/// `Σ_i (P_i(x) + P_i(s)) · c`, `c = +1` if the possession had a cross or
/// shot and `−1` otherwise. Pass one-hot vectors for the observed variant.
pub fn poss_util(probs: &[[f64; NUM_ACTIONS]], had_attack: bool) -> f64 {
    let c = if had_attack { 1.0 } else { -1.0 };
    c * probs
        .iter()
        .map(|q| p(q, ActionType::Cross) + p(q, ActionType::Shot))
        .sum::<f64>()
}

/// Action value: `5·P(d, p) + 10·P(x, s)`.
pub fn action_value(probs: &[f64; NUM_ACTIONS]) -> f64 {
    5.0 * (p(probs, ActionType::Dribble) + p(probs, ActionType::Pass))
        + 10.0 * (p(probs, ActionType::Cross) + p(probs, ActionType::Shot))
}

/// `sqrt(AV · ZV) / t`.
pub fn has(av: f64, zv: f64, t: f64) -> f64 {
    (av * zv).sqrt() / t
}

/// `Σ_i φ(N + 1 − i) · HAS_i` for `i = 1..N`.
pub fn hpus(has_values: &[f64], phi: Phi) -> f64 {
    let n = has_values.len();
    has_values
        .iter()
        .enumerate()
        .map(|(i, h)| phi.weight(n - i) * h)
        .sum()
}

/// `xG(xy) · P(s) + xT(xy) · P(d, p, x)` at a (clamped) location.
pub fn lav(probs: &[f64; NUM_ACTIONS], xy: [f64; 2], models: &ValueModels) -> f64 {
    let (x, y) = (xy[0].clamp(0.0, 1.0), xy[1].clamp(0.0, 1.0));
    let moving = p(probs, ActionType::Dribble) + p(probs, ActionType::Pass) + p(probs, ActionType::Cross);
    models.xg.xg(x, y) * p(probs, ActionType::Shot) + models.xt.xt(x, y) * moving
}

/// Value of an observed action: xG for a shot, xT for a move, 0 otherwise.
pub fn observed_lav(action: ActionType, xy: [f64; 2], models: &ValueModels) -> f64 {
    let (x, y) = (xy[0].clamp(0.0, 1.0), xy[1].clamp(0.0, 1.0));
    match action {
        ActionType::Shot => models.xg.xg(x, y),
        a if a.is_move() => models.xt.xt(x, y),
        _ => 0.0,
    }
}

/// LAV of every style action chosen with certainty at `xy`, in p, d, x, s order.
pub fn hypothetical_lav(xy: [f64; 2], models: &ValueModels) -> [(ActionType, f64); 4] {
    [ActionType::Pass, ActionType::Dribble, ActionType::Cross, ActionType::Shot]
        .map(|a| (a, lav(&Prediction::one_hot(a, xy).action_probs, xy, models)))
}

/// `(pred − obs) / pred`, or `None` when the prediction is (near) zero.
pub fn rel_diff(pred: f64, obs: f64) -> Option<f64> {
    (pred > REL_DIFF_EPS).then(|| (pred - obs) / pred)
}

/// Predicted and observed values of one forecast position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionValue {
    pub position: usize,
    pub action: ActionType,
    pub action_probs: [f64; NUM_ACTIONS],
    pub predicted_xy: [f64; 2],
    pub observed_xy: [f64; 2],
    pub lav_pred: f64,
    pub lav_obs: f64,
    pub av_pred: f64,
    pub av_obs: f64,
    pub zv_pred: f64,
    pub zv_obs: f64,
    pub has_pred: f64,
    pub has_obs: f64,
}

/// A possession valued from the model's forecasts and from what happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuedPossession {
    pub match_id: String,
    pub team_id: String,
    pub possession_index: usize,
    pub had_attack: bool,
    pub actions: Vec<ActionValue>,
    pub lpv_pred: f64,
    pub lpv_obs: f64,
    pub hpus_pred: f64,
    pub hpus_obs: f64,
    pub poss_util_pred: f64,
    pub poss_util_obs: f64,
    pub rel_diff: Option<f64>,
}

/// Values one possession from the samples built on it and their predictions.
///
/// `had_attack` says whether the whole possession contained a cross or shot.
/// Time is ignored in HAS (`t = 1`) for both variants.
pub fn value_possession(
    samples: &[Sample],
    predictions: &[Prediction],
    had_attack: bool,
    models: &ValueModels,
    cfg: &ValueConfig,
) -> Result<ValuedPossession, DataError> {
    if samples.is_empty() || samples.len() != predictions.len() {
        return Err(DataError::Contract(format!(
            "{} samples and {} predictions for one possession",
            samples.len(),
            predictions.len()
        )));
    }
    let first = &samples[0];
    let actions: Vec<ActionValue> = samples
        .iter()
        .zip(predictions)
        .map(|(s, pr)| {
            let pred_xy = pr.clamped_xy();
            let onehot = Prediction::one_hot(s.target_action, s.target_xy).action_probs;
            let av_pred = action_value(&pr.action_probs);
            let av_obs = action_value(&onehot);
            let zv_pred = cfg.zone_value(pred_xy[0], pred_xy[1]);
            let zv_obs = cfg.zone_value(s.target_xy[0], s.target_xy[1]);
            ActionValue {
                position: s.position,
                action: s.target_action,
                action_probs: pr.action_probs,
                predicted_xy: pred_xy,
                observed_xy: s.target_xy,
                lav_pred: lav(&pr.action_probs, pred_xy, models),
                lav_obs: observed_lav(s.target_action, s.target_xy, models),
                av_pred,
                av_obs,
                zv_pred,
                zv_obs,
                has_pred: has(av_pred, zv_pred, 1.0),
                has_obs: has(av_obs, zv_obs, 1.0),
            }
        })
        .collect();
    let probs_pred: Vec<[f64; NUM_ACTIONS]> = actions.iter().map(|a| a.action_probs).collect();
    let probs_obs: Vec<[f64; NUM_ACTIONS]> = samples
        .iter()
        .map(|s| Prediction::one_hot(s.target_action, s.target_xy).action_probs)
        .collect();
    let has_pred: Vec<f64> = actions.iter().map(|a| a.has_pred).collect();
    let has_obs: Vec<f64> = actions.iter().map(|a| a.has_obs).collect();
    let lpv_pred: f64 = actions.iter().map(|a| a.lav_pred).sum();
    let lpv_obs: f64 = actions.iter().map(|a| a.lav_obs).sum();
    Ok(ValuedPossession {
        match_id: first.match_id.clone(),
        team_id: first.team_id.clone(),
        possession_index: first.possession_index,
        had_attack,
        lpv_pred,
        lpv_obs,
        hpus_pred: hpus(&has_pred, cfg.phi),
        hpus_obs: hpus(&has_obs, cfg.phi),
        poss_util_pred: poss_util(&probs_pred, had_attack),
        poss_util_obs: poss_util(&probs_obs, had_attack),
        rel_diff: rel_diff(lpv_pred, lpv_obs),
        actions,
    })
}
