use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::model::{loss_and_grad_scaled, loss_refs, PredictorParams, TermScales, TENSOR_NAMES};
use crate::dataset::Sample;

/// Analytic versus central-difference derivative of one coordinate.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckEntry {
    pub tensor: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compares the hand-derived gradient of
/// `scales.location · location + scales.cel · cel` with central differences
/// on `per_tensor` distinct random coordinates of each parameter tensor
/// (all of them for smaller tensors).
pub fn gradient_check(
    params: &PredictorParams,
    batch: &[&Sample],
    scales: TermScales,
    eps: f64,
    per_tensor: usize,
    seed: u64,
) -> Vec<GradCheckEntry> {
    let (_, grad, _) = loss_and_grad_scaled(params, batch, scales);
    let objective = |p: &PredictorParams| {
        let l = loss_refs(p, batch);
        scales.location * l.location + scales.cel * l.cel
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = params.clone();
    let mut out = Vec::new();
    for (t, name) in TENSOR_NAMES.iter().enumerate() {
        let len = params.tensors()[t].len();
        let mut picks = sample(&mut rng, len, per_tensor.min(len)).into_vec();
        picks.sort_unstable();
        for i in picks {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + eps;
            let up = objective(&probe);
            probe.tensors_mut()[t][i] = orig - eps;
            let down = objective(&probe);
            probe.tensors_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grad.tensors()[t][i];
            out.push(GradCheckEntry {
                tensor: name,
                index: i,
                analytic,
                numeric,
                rel_error: relative_error(analytic, numeric, 1e-6),
            });
        }
    }
    out
}
