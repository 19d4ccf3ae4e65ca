use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::dataset::Sample;
use crate::events::{ActionType, NUM_ACTIONS};
use crate::sig::{logsig_dim, POSSESSION_SIG_ORDER};

/// Action logits plus `(x, y)`.
pub const OUTPUT_DIM: usize = NUM_ACTIONS + 2;

/// Which location error enters the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationLoss {
    /// `sqrt(mean over samples and both coordinates of the squared error)`
    #[default]
    Rmse,
    /// The same quantity without the square root.
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub sig_order: usize,
    pub logsig_dim: usize,
    pub emb_dim: usize,
    pub hidden: usize,
    pub leaky_alpha: f64,
    /// Weight of the cross-entropy term.
    pub lambda: f64,
    #[serde(default)]
    pub location_loss: LocationLoss,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self::with_order(POSSESSION_SIG_ORDER)
    }
}

impl PredictorConfig {
    pub fn with_order(sig_order: usize) -> Self {
        Self {
            sig_order,
            logsig_dim: logsig_dim(5, sig_order),
            emb_dim: 16,
            hidden: 256,
            leaky_alpha: 0.2,
            lambda: 1.0,
            location_loss: LocationLoss::Rmse,
        }
    }

    /// Width of the concatenated input: log-signature, weighted embedding, scrad.
    pub fn input_dim(&self) -> usize {
        self.logsig_dim + self.emb_dim + 1
    }
}

/// Everything the trainer updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    pub config: PredictorConfig,
    /// One row per action type.
    pub embedding: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

/// Names of the parameter tensors, in the order of [`PredictorParams::tensors`].
pub const TENSOR_NAMES: [&str; 7] = ["embedding", "w1", "b1", "w2", "b2", "w3", "b3"];

impl PredictorParams {
    pub fn zeros(config: PredictorConfig) -> Self {
        let (i, h, e) = (config.input_dim(), config.hidden, config.emb_dim);
        Self {
            embedding: Array2::zeros((NUM_ACTIONS, e)),
            w1: Array2::zeros((i, h)),
            b1: Array1::zeros(h),
            w2: Array2::zeros((h, h)),
            b2: Array1::zeros(h),
            w3: Array2::zeros((h, OUTPUT_DIM)),
            b3: Array1::zeros(OUTPUT_DIM),
            config,
        }
    }

    /// Uniform fan-in scaled initialization, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`
    /// for the hidden layers. The output layer is drawn at a tenth of that
    /// scale so the untrained model starts close to uniform. Biases start at 0.
    pub fn init(config: PredictorConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(config);
        let mut fill = |a: &mut Array2<f64>, bound: f64| a.iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
        fill(&mut p.embedding, 1.0);
        let he = |fan_in: usize| (6.0 / fan_in as f64).sqrt();
        let (i, h) = (p.config.input_dim(), p.config.hidden);
        fill(&mut p.w1, he(i));
        fill(&mut p.w2, he(h));
        fill(&mut p.w3, 0.1 * he(h));
        p
    }

    pub fn tensors(&self) -> [&[f64]; 7] {
        [
            self.embedding.as_slice().expect("standard layout"),
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
            self.w3.as_slice().expect("standard layout"),
            self.b3.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 7] {
        [
            self.embedding.as_slice_mut().expect("standard layout"),
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
            self.w3.as_slice_mut().expect("standard layout"),
            self.b3.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Output of the model for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Softmax over the seven action types, in [`ActionType::ALL`] order.
    pub action_probs: [f64; NUM_ACTIONS],
    /// Unclamped location head.
    pub xy: [f64; 2],
}

impl Prediction {
    pub fn prob(&self, a: ActionType) -> f64 {
        self.action_probs[a.index()]
    }

    /// Location clamped to the pitch.
    pub fn clamped_xy(&self) -> [f64; 2] {
        [self.xy[0].clamp(0.0, 1.0), self.xy[1].clamp(0.0, 1.0)]
    }

    /// A point-mass prediction at a known action and location.
    pub fn one_hot(action: ActionType, xy: [f64; 2]) -> Self {
        let mut action_probs = [0.0; NUM_ACTIONS];
        action_probs[action.index()] = 1.0;
        Self { action_probs, xy }
    }
}

/// Recency weights `(1/k) / sum_j (1/j)`, `k = 1` for the most recent action.
pub fn recency_weights(n: usize) -> Vec<f64> {
    let total: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    (1..=n).map(|k| (1.0 / k as f64) / total).collect()
}

/// Recency-weighted average of embedding rows. `recent_actions` is most recent first.
pub fn weighted_action_embedding(recent_actions: &[ActionType], embedding: &Array2<f64>) -> Array1<f64> {
    let mut out = Array1::zeros(embedding.ncols());
    for (w, a) in recency_weights(recent_actions.len()).into_iter().zip(recent_actions) {
        out.scaled_add(w, &embedding.row(a.index()));
    }
    out
}

/// Numerically stable softmax.
pub fn softmax(logits: ArrayView1<f64>) -> [f64; NUM_ACTIONS] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_ACTIONS];
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits.iter()) {
        *o = (l - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
    out
}

fn leaky(z: &Array2<f64>, alpha: f64) -> Array2<f64> {
    z.mapv(|v| if v > 0.0 { v } else { alpha * v })
}

/// Intermediate values of a batched forward pass.
pub(crate) struct ForwardCache {
    pub input: Array2<f64>,
    pub z1: Array2<f64>,
    pub a1: Array2<f64>,
    pub z2: Array2<f64>,
    pub a2: Array2<f64>,
    pub out: Array2<f64>,
    pub probs: Vec<[f64; NUM_ACTIONS]>,
}

impl ForwardCache {
    pub fn predictions(&self) -> Vec<Prediction> {
        self.probs
            .iter()
            .zip(self.out.rows())
            .map(|(p, row)| Prediction {
                action_probs: *p,
                xy: [row[NUM_ACTIONS], row[NUM_ACTIONS + 1]],
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.out.iter().all(|v| v.is_finite()) && self.probs.iter().flatten().all(|v| v.is_finite())
    }
}

/// Builds the input rows `[logsig | weighted embedding | scrad]`.
pub(crate) fn input_matrix(params: &PredictorParams, samples: &[&Sample]) -> Array2<f64> {
    let cfg = &params.config;
    let mut x = Array2::zeros((samples.len(), cfg.input_dim()));
    for (mut row, s) in x.rows_mut().into_iter().zip(samples) {
        assert_eq!(
            s.logsig.len(),
            cfg.logsig_dim,
            "sample log-signature length does not match the model"
        );
        row.slice_mut(s![..cfg.logsig_dim])
            .assign(&ArrayView1::from(&s.logsig.coeffs[..]));
        row.slice_mut(s![cfg.logsig_dim..cfg.logsig_dim + cfg.emb_dim])
            .assign(&weighted_action_embedding(&s.recent_actions, &params.embedding));
        row[cfg.input_dim() - 1] = s.scrad as f64;
    }
    x
}

pub(crate) fn forward_batch(params: &PredictorParams, samples: &[&Sample]) -> ForwardCache {
    let alpha = params.config.leaky_alpha;
    let input = input_matrix(params, samples);
    let z1 = input.dot(&params.w1) + &params.b1;
    let a1 = leaky(&z1, alpha);
    let z2 = a1.dot(&params.w2) + &params.b2;
    let a2 = leaky(&z2, alpha);
    let out = a2.dot(&params.w3) + &params.b3;
    let probs = out
        .rows()
        .into_iter()
        .map(|r| softmax(r.slice(s![..NUM_ACTIONS])))
        .collect();
    ForwardCache {
        input,
        z1,
        a1,
        z2,
        a2,
        out,
        probs,
    }
}

/// Runs the model on one sample.
pub fn forward(params: &PredictorParams, sample: &Sample) -> Prediction {
    forward_batch(params, &[sample]).predictions().remove(0)
}

/// Batched inference.
pub fn predict_all(params: &PredictorParams, samples: &[Sample]) -> Vec<Prediction> {
    let refs: Vec<&Sample> = samples.iter().collect();
    refs.chunks(256)
        .flat_map(|chunk| forward_batch(params, chunk).predictions())
        .collect()
}

/// Loss value split into its terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    /// RMSE (or MSE, per config) of the location head.
    pub location: f64,
    /// Weighted cross-entropy over style actions.
    pub cel: f64,
    pub lambda: f64,
}

/// Cross-entropy weight of a target class: style actions count, contextual ones do not.
pub fn cel_weight(a: ActionType) -> f64 {
    if a.is_style() {
        1.0
    } else {
        0.0
    }
}

/// Computes the location error term from predicted and true locations.
pub fn location_error(kind: LocationLoss, pred: &[[f64; 2]], truth: &[[f64; 2]]) -> f64 {
    let n = pred.len();
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2))
        .sum();
    let mse = sq / (2.0 * n as f64);
    match kind {
        LocationLoss::Rmse => mse.sqrt(),
        LocationLoss::Mse => mse,
    }
}

/// Weighted cross-entropy, averaged over samples with non-zero weight.
pub fn weighted_cel(probs: &[[f64; NUM_ACTIONS]], targets: &[ActionType]) -> f64 {
    let mut sum = 0.0;
    let mut n_eff = 0usize;
    for (p, &a) in probs.iter().zip(targets) {
        let w = cel_weight(a);
        if w > 0.0 {
            sum += w * -p[a.index()].max(f64::MIN_POSITIVE).ln();
            n_eff += 1;
        }
    }
    if n_eff == 0 {
        0.0
    } else {
        sum / n_eff as f64
    }
}

fn breakdown(cfg: &PredictorConfig, cache: &ForwardCache, samples: &[&Sample]) -> LossBreakdown {
    let pred_xy: Vec<[f64; 2]> = cache
        .out
        .rows()
        .into_iter()
        .map(|r| [r[NUM_ACTIONS], r[NUM_ACTIONS + 1]])
        .collect();
    let truth: Vec<[f64; 2]> = samples.iter().map(|s| s.target_xy).collect();
    let targets: Vec<ActionType> = samples.iter().map(|s| s.target_action).collect();
    let location = location_error(cfg.location_loss, &pred_xy, &truth);
    let cel = weighted_cel(&cache.probs, &targets);
    LossBreakdown {
        total: location + cfg.lambda * cel,
        location,
        cel,
        lambda: cfg.lambda,
    }
}

/// Loss of the model on a batch.
pub fn loss(params: &PredictorParams, batch: &[Sample]) -> LossBreakdown {
    let refs: Vec<&Sample> = batch.iter().collect();
    loss_refs(params, &refs)
}

pub(crate) fn loss_refs(params: &PredictorParams, batch: &[&Sample]) -> LossBreakdown {
    assert!(!batch.is_empty(), "loss needs a non-empty batch");
    let cache = forward_batch(params, batch);
    breakdown(&params.config, &cache, batch)
}

/// Scales applied to the two loss terms when differentiating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermScales {
    pub location: f64,
    pub cel: f64,
}

/// Loss and its exact gradient with respect to every parameter tensor.
pub fn loss_and_grad(params: &PredictorParams, batch: &[&Sample]) -> (LossBreakdown, PredictorParams) {
    let scales = TermScales {
        location: 1.0,
        cel: params.config.lambda,
    };
    let (l, g, _) = loss_and_grad_scaled(params, batch, scales);
    (l, g)
}

/// Gradient of `scales.location * location + scales.cel * cel`.
/// Also returns the forward cache's finiteness.
pub fn loss_and_grad_scaled(
    params: &PredictorParams,
    batch: &[&Sample],
    scales: TermScales,
) -> (LossBreakdown, PredictorParams, bool) {
    assert!(!batch.is_empty(), "gradient needs a non-empty batch");
    let cfg = &params.config;
    let cache = forward_batch(params, batch);
    let finite = cache.is_finite();
    let lb = breakdown(cfg, &cache, batch);
    let n = batch.len() as f64;

    // d loss / d output
    let mut d_out = Array2::<f64>::zeros(cache.out.raw_dim());
    let loc_coef = match cfg.location_loss {
        LocationLoss::Rmse if lb.location > 0.0 => scales.location / (2.0 * n * lb.location),
        LocationLoss::Rmse => 0.0,
        LocationLoss::Mse => scales.location / n,
    };
    let n_eff = batch.iter().filter(|s| cel_weight(s.target_action) > 0.0).count();
    for (i, s) in batch.iter().enumerate() {
        let mut row = d_out.row_mut(i);
        row[NUM_ACTIONS] = loc_coef * (cache.out[[i, NUM_ACTIONS]] - s.target_xy[0]);
        row[NUM_ACTIONS + 1] = loc_coef * (cache.out[[i, NUM_ACTIONS + 1]] - s.target_xy[1]);
        let w = cel_weight(s.target_action);
        if w > 0.0 && scales.cel != 0.0 {
            let c = scales.cel * w / n_eff as f64;
            let target = s.target_action.index();
            for k in 0..NUM_ACTIONS {
                let onehot = if k == target { 1.0 } else { 0.0 };
                row[k] = c * (cache.probs[i][k] - onehot);
            }
        }
    }

    let alpha = cfg.leaky_alpha;
    let leaky_grad = |z: &Array2<f64>| z.mapv(|v| if v > 0.0 { 1.0 } else { alpha });

    let mut grad = PredictorParams::zeros(cfg.clone());
    grad.w3 = cache.a2.t().dot(&d_out);
    grad.b3 = d_out.sum_axis(Axis(0));
    let d_z2 = d_out.dot(&params.w3.t()) * leaky_grad(&cache.z2);
    grad.w2 = cache.a1.t().dot(&d_z2);
    grad.b2 = d_z2.sum_axis(Axis(0));
    let d_z1 = d_z2.dot(&params.w2.t()) * leaky_grad(&cache.z1);
    grad.w1 = cache.input.t().dot(&d_z1);
    grad.b1 = d_z1.sum_axis(Axis(0));

    let d_input = d_z1.dot(&params.w1.t());
    let emb_start = cfg.logsig_dim;
    let emb_end = cfg.logsig_dim + cfg.emb_dim;
    for (i, s) in batch.iter().enumerate() {
        let d_emb = d_input.slice(s![i, emb_start..emb_end]);
        for (w, a) in recency_weights(s.recent_actions.len()).into_iter().zip(&s.recent_actions) {
            grad.embedding.row_mut(a.index()).scaled_add(w, &d_emb);
        }
    }
    (lb, grad, finite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::LogSigVector;

    pub(crate) fn sample(target: ActionType, xy: [f64; 2]) -> Sample {
        Sample {
            match_id: "m".into(),
            team_id: "A".into(),
            possession_index: 0,
            position: 3,
            logsig: LogSigVector::new(5, 3, (0..55).map(|i| (i as f64 * 0.37).sin() * 0.3).collect()),
            recent_actions: vec![ActionType::Pass, ActionType::Dribble, ActionType::Pass],
            scrad: 1,
            target_action: target,
            target_xy: xy,
        }
    }

    #[test]
    fn recency_weights_three() {
        let w = recency_weights(3);
        assert!((w[0] - 6.0 / 11.0).abs() < 1e-15);
        assert!((w[1] - 3.0 / 11.0).abs() < 1e-15);
        assert!((w[2] - 2.0 / 11.0).abs() < 1e-15);
        assert_eq!(recency_weights(1), vec![1.0]);
    }

    #[test]
    fn identical_actions_give_the_row() {
        let p = PredictorParams::init(PredictorConfig::default(), 3);
        let e = weighted_action_embedding(&[ActionType::Cross; 3], &p.embedding);
        for (a, b) in e.iter().zip(p.embedding.row(ActionType::Cross.index())) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_params_are_uniform() {
        let p = PredictorParams::zeros(PredictorConfig::default());
        let pred = forward(&p, &sample(ActionType::Pass, [0.5, 0.5]));
        for q in pred.action_probs {
            assert!((q - 1.0 / 7.0).abs() < 1e-15);
        }
        assert_eq!(pred.xy, [0.0, 0.0]);
    }

    #[test]
    fn input_width() {
        assert_eq!(PredictorConfig::default().input_dim(), 72);
        assert_eq!(PredictorConfig::with_order(4).input_dim(), 205 + 17);
    }

    #[test]
    fn forward_is_deterministic_and_on_simplex() {
        let p = PredictorParams::init(PredictorConfig::default(), 11);
        let s = sample(ActionType::Shot, [0.9, 0.5]);
        let a = forward(&p, &s);
        assert_eq!(a, forward(&p, &s));
        assert!((a.action_probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_loss() {
        let p = PredictorParams::zeros(PredictorConfig::default());
        let l = loss(&p, &[sample(ActionType::Pass, [0.3, 0.4])]);
        let rmse = ((0.09f64 + 0.16) / 2.0).sqrt();
        assert!((l.location - rmse).abs() < 1e-12);
        assert!((l.cel - 7f64.ln()).abs() < 1e-12);
        assert!((l.total - 2.29946).abs() < 1e-5);
    }

    #[test]
    fn contextual_targets_have_no_cel() {
        let p = PredictorParams::init(PredictorConfig::default(), 5);
        let batch = vec![sample(ActionType::Goal, [1.0, 0.5]), sample(ActionType::Goal, [0.9, 0.4])];
        let l = loss(&p, &batch);
        assert_eq!(l.cel, 0.0);
        assert_eq!(l.total, l.location);
    }

    #[test]
    fn perfect_prediction_has_zero_loss() {
        let probs = [[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]];
        assert_eq!(weighted_cel(&probs, &[ActionType::Shot]), 0.0);
        assert_eq!(location_error(LocationLoss::Rmse, &[[0.2, 0.3]], &[[0.2, 0.3]]), 0.0);
    }

    #[test]
    fn lambda_zero_kills_cel_gradient() {
        let mut cfg = PredictorConfig::default();
        cfg.lambda = 0.0;
        let p = PredictorParams::init(cfg, 9);
        let batch = [sample(ActionType::Pass, [0.3, 0.4]), sample(ActionType::Cross, [0.8, 0.1])];
        let refs: Vec<&Sample> = batch.iter().collect();
        let (_, g) = loss_and_grad(&p, &refs);
        // the action-logit columns of the output layer only see the CEL term
        for row in g.w3.rows() {
            assert!(row.iter().take(NUM_ACTIONS).all(|&v| v == 0.0));
        }
        assert!(g.b3.iter().take(NUM_ACTIONS).all(|&v| v == 0.0));
    }
}
