use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::events::{ActionType, MatchEvent, DEFAULT_PITCH_LENGTH, DEFAULT_PITCH_WIDTH};

/// Width of the goal mouth in meters.
pub const GOAL_WIDTH_M: f64 = 7.32;
/// Minimum number of shots needed to fit the model.
pub const MIN_SHOTS: usize = 50;
/// Penalty used when the data are separable.
pub const RIDGE_FALLBACK: f64 = 1e-6;

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 200;

/// A shot and whether it was scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub x: f64,
    pub y: f64,
    pub goal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub competition: Option<String>,
}

/// Distance in meters from `(x, y)` on the unit pitch to the goal center.
pub fn goal_distance(x: f64, y: f64) -> f64 {
    ((1.0 - x) * DEFAULT_PITCH_LENGTH).hypot((0.5 - y) * DEFAULT_PITCH_WIDTH)
}

/// Angle in radians subtended by the goal mouth at `(x, y)`; π on the goal
/// line between the posts, 0 on the line outside them.
pub fn goal_angle(x: f64, y: f64) -> f64 {
    let px = (1.0 - x) * DEFAULT_PITCH_LENGTH;
    let py = (y - 0.5) * DEFAULT_PITCH_WIDTH;
    let half = GOAL_WIDTH_M / 2.0;
    let d1 = px.hypot(py - half);
    let d2 = px.hypot(py + half);
    if d1 == 0.0 || d2 == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let c = (d1 * d1 + d2 * d2 - GOAL_WIDTH_M * GOAL_WIDTH_M) / (2.0 * d1 * d2);
    c.clamp(-1.0, 1.0).acos()
}

/// Design row `(1, distance, angle)`.
pub fn xg_features(x: f64, y: f64) -> [f64; 3] {
    [1.0, goal_distance(x, y), goal_angle(x, y)]
}

/// Logistic shot model on distance and angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XgModel {
    /// Intercept, distance coefficient, angle coefficient.
    pub gamma: [f64; 3],
    #[serde(default)]
    pub std_errors: Option<[f64; 3]>,
    #[serde(default)]
    pub n_shots: usize,
    #[serde(default)]
    pub iterations: usize,
    /// Ridge penalty used in the fit (0 for plain maximum likelihood).
    #[serde(default)]
    pub ridge: f64,
    /// Data-source tags of the shots the model was fitted on.
    #[serde(default)]
    pub sources: Vec<String>,
}

impl XgModel {
    pub fn from_gamma(gamma: [f64; 3]) -> Self {
        Self {
            gamma,
            std_errors: None,
            n_shots: 0,
            iterations: 0,
            ridge: 0.0,
            sources: Vec::new(),
        }
    }

    pub fn log_odds(&self, x: f64, y: f64) -> f64 {
        let f = xg_features(x, y);
        self.gamma.iter().zip(f).map(|(g, v)| g * v).sum()
    }

    /// Scoring probability of a shot from `(x, y)`.
    pub fn xg(&self, x: f64, y: f64) -> f64 {
        sigmoid(self.log_odds(x, y))
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Log-likelihood and its gradient and negative Hessian at `gamma`.
fn penalized(rows: &[([f64; 3], f64)], gamma: &Vector3<f64>, ridge: f64) -> (f64, Vector3<f64>, Matrix3<f64>) {
    let mut ll = -0.5 * ridge * gamma.norm_squared();
    let mut grad = -ridge * gamma;
    let mut info = Matrix3::identity() * ridge;
    for (f, y) in rows {
        let v = Vector3::from(*f);
        let z = gamma.dot(&v);
        let p = sigmoid(z);
        // log p = -log(1 + e^-z), log(1 - p) = -log(1 + e^z)
        ll += if *y > 0.5 { -softplus(-z) } else { -softplus(z) };
        grad += v * (y - p);
        info += v * v.transpose() * (p * (1.0 - p));
    }
    (ll, grad, info)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Newton iterations from zero. Returns `None` when they diverge, fail to
/// converge, or end in a fit that classifies every shot with certainty.
fn newton(rows: &[([f64; 3], f64)], ridge: f64) -> Option<(Vector3<f64>, Matrix3<f64>, usize)> {
    let mut gamma = Vector3::zeros();
    let (mut ll, mut grad, mut info) = penalized(rows, &gamma, ridge);
    let separated = |ll: f64, gamma: &Vector3<f64>| ridge == 0.0 && (ll > -1e-6 || gamma.amax() > 1e3);
    // tolerance on the gradient of the mean log-likelihood
    let tol = GRAD_TOL * rows.len() as f64;
    for iter in 0..MAX_ITER {
        if grad.norm() < tol {
            return (!separated(ll, &gamma)).then_some((gamma, info, iter));
        }
        let step = info.lu().solve(&grad)?;
        let mut t = 1.0;
        loop {
            let cand = gamma + step * t;
            let (cll, cgrad, cinfo) = penalized(rows, &cand, ridge);
            if cll >= ll || t < 1e-10 {
                gamma = cand;
                ll = cll;
                grad = cgrad;
                info = cinfo;
                break;
            }
            t *= 0.5;
        }
        if !gamma.iter().all(|g| g.is_finite()) || gamma.norm() > 1e6 {
            return None;
        }
    }
    (grad.norm() < tol && !separated(ll, &gamma)).then_some((gamma, info, MAX_ITER))
}

/// Maximum-likelihood logistic fit by damped Newton iterations.
///
/// Falls back to a small ridge penalty, with a warning, when the plain fit
/// does not converge (perfectly separable data).
pub fn fit_xg(shots: &[Shot]) -> Result<XgModel, DataError> {
    if shots.len() < MIN_SHOTS {
        return Err(DataError::Contract(format!(
            "xG fit needs at least {MIN_SHOTS} shots, got {}",
            shots.len()
        )));
    }
    let rows: Vec<([f64; 3], f64)> = shots
        .iter()
        .map(|s| (xg_features(s.x, s.y), if s.goal { 1.0 } else { 0.0 }))
        .collect();
    let (fit, ridge) = match newton(&rows, 0.0) {
        Some(f) => (f, 0.0),
        None => {
            log::warn!("xG fit did not converge (separable shots?); refitting with ridge {RIDGE_FALLBACK}");
            let f = newton(&rows, RIDGE_FALLBACK)
                .ok_or_else(|| DataError::Contract("xG fit did not converge with ridge penalty".into()))?;
            (f, RIDGE_FALLBACK)
        }
    };
    let (gamma, info, iterations) = fit;
    let std_errors = info
        .try_inverse()
        .map(|cov| [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt(), cov[(2, 2)].sqrt()]);
    let mut sources: Vec<String> = shots.iter().filter_map(|s| s.competition.clone()).collect();
    sources.sort();
    sources.dedup();
    Ok(XgModel {
        gamma: [gamma[0], gamma[1], gamma[2]],
        std_errors,
        n_shots: shots.len(),
        iterations,
        ridge,
        sources,
    })
}

/// Every shot in a canonical event stream; a shot is scored when the next
/// event of the match is a goal by the same team.
pub fn shots_from_events(events: &[MatchEvent]) -> Vec<Shot> {
    events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.action == ActionType::Shot)
        .map(|(i, e)| {
            let goal = events.get(i + 1).is_some_and(|n| {
                n.match_id == e.match_id && n.team_id == e.team_id && n.action == ActionType::Goal
            });
            Shot {
                x: e.x,
                y: e.y,
                goal,
                competition: e.competition.clone(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_gamma_is_half() {
        let m = XgModel::from_gamma([0.0; 3]);
        for (x, y) in [(0.0, 0.0), (0.9, 0.5), (1.0, 1.0)] {
            assert_eq!(m.xg(x, y), 0.5);
        }
    }

    #[test]
    fn angle_on_goal_line_is_pi() {
        assert!((goal_angle(1.0, 0.5) - std::f64::consts::PI).abs() < 1e-12);
        assert!((goal_angle(1.0, 0.52) - std::f64::consts::PI).abs() < 1e-12);
        assert!(goal_angle(1.0, 0.9).abs() < 1e-12);
    }

    #[test]
    fn penalty_spot_geometry() {
        let x = 1.0 - 11.0 / 105.0;
        assert!((goal_distance(x, 0.5) - 11.0).abs() < 1e-12);
        let want = 2.0 * (3.66f64 / 11.0).atan();
        assert!((goal_angle(x, 0.5) - want).abs() < 1e-12);
    }

    #[test]
    fn too_few_shots() {
        let shots = vec![
            Shot {
                x: 0.9,
                y: 0.5,
                goal: true,
                competition: None
            };
            10
        ];
        assert!(fit_xg(&shots).is_err());
    }

    #[test]
    fn separable_data_falls_back_to_ridge() {
        let shots: Vec<Shot> = (0..100)
            .map(|i| {
                let x = 0.6 + 0.004 * i as f64;
                Shot {
                    x,
                    y: 0.5,
                    goal: x > 0.8,
                    competition: None,
                }
            })
            .collect();
        let m = fit_xg(&shots).unwrap();
        assert_eq!(m.ridge, RIDGE_FALLBACK);
        assert!(m.gamma.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn fit_recovers_planted_coefficients() {
        let truth = XgModel::from_gamma([-1.0, -0.1, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shots: Vec<Shot> = (0..5000)
            .map(|_| {
                let (x, y) = (rng.random_range(0.6..1.0), rng.random_range(0.1..0.9));
                Shot {
                    x,
                    y,
                    goal: rng.random::<f64>() < truth.xg(x, y),
                    competition: Some("A".into()),
                }
            })
            .collect();
        let m = fit_xg(&shots).unwrap();
        let se = m.std_errors.unwrap();
        for k in 0..3 {
            assert!((m.gamma[k] - truth.gamma[k]).abs() < 4.0 * se[k], "{m:?}");
        }
        assert_eq!(m.sources, vec!["A".to_string()]);
    }
}
