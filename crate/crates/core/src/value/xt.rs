use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::xg::{Shot, XgModel};
use crate::events::MatchEvent;

pub const XT_ROWS: usize = 12;
pub const XT_COLS: usize = 16;
pub const XT_TOL: f64 = 1e-6;
pub const XT_MAX_ITER: usize = 50;

/// A ball movement (pass, dribble or cross) between two pitch locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub successful: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub competition: Option<String>,
}

/// Grid cell of a point: column from `x` (16 bins), row from `y` (12 bins),
/// flattened as `row * 16 + col`.
pub fn cell_of(x: f64, y: f64) -> usize {
    let col = ((x.clamp(0.0, 1.0) * XT_COLS as f64).floor() as usize).min(XT_COLS - 1);
    let row = ((y.clamp(0.0, 1.0) * XT_ROWS as f64).floor() as usize).min(XT_ROWS - 1);
    row * XT_COLS + col
}

/// Center of a grid cell on the unit pitch.
pub fn cell_center(cell: usize) -> [f64; 2] {
    let (row, col) = (cell / XT_COLS, cell % XT_COLS);
    [(col as f64 + 0.5) / XT_COLS as f64, (row as f64 + 0.5) / XT_ROWS as f64]
}

/// Expected-threat grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XtModel {
    pub rows: usize,
    pub cols: usize,
    /// `P(shot | cell)`.
    pub shot_prob: Vec<f64>,
    /// xG at each cell center.
    pub zone_xg: Vec<f64>,
    /// Row-stochastic (or all-zero) successful-move transition matrix.
    pub transition: Array2<f64>,
    pub values: Vec<f64>,
    pub iterations: usize,
    #[serde(default)]
    pub sources: Vec<String>,
}

impl XtModel {
    /// Value of the cell containing `(x, y)`.
    pub fn xt(&self, x: f64, y: f64) -> f64 {
        self.values[cell_of(x, y)]
    }

    /// A grid with every value set to `v`, for tests and fixtures.
    pub fn constant(v: f64) -> Self {
        let n = XT_ROWS * XT_COLS;
        Self {
            rows: XT_ROWS,
            cols: XT_COLS,
            shot_prob: vec![0.0; n],
            zone_xg: vec![0.0; n],
            transition: Array2::zeros((n, n)),
            values: vec![v; n],
            iterations: 0,
            sources: Vec::new(),
        }
    }
}

/// One sweep of `xT(z) = s_z · xg_z + (1 − s_z) Σ_i T_{z,i} xT(i)`.
pub fn xt_step(shot_prob: &[f64], zone_xg: &[f64], transition: &Array2<f64>, current: &[f64]) -> Vec<f64> {
    (0..shot_prob.len())
        .map(|z| {
            let flow: f64 = transition.row(z).iter().zip(current).map(|(t, v)| t * v).sum();
            shot_prob[z] * zone_xg[z] + (1.0 - shot_prob[z]) * flow
        })
        .collect()
}

/// Iterates [`xt_step`] from zero until the sup-norm change is below `tol`
/// or `max_iter` sweeps have run. Returns the values and the sweeps used.
pub fn xt_iterate(
    shot_prob: &[f64],
    zone_xg: &[f64],
    transition: &Array2<f64>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let mut values = vec![0.0; shot_prob.len()];
    for iter in 1..=max_iter {
        let next = xt_step(shot_prob, zone_xg, transition, &values);
        let change = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        if change < tol {
            return (values, iter);
        }
    }
    (values, max_iter)
}

/// Builds the grid from shots and moves and solves for the cell values.
pub fn fit_xt(shots: &[Shot], moves: &[Move], xg: &XgModel) -> XtModel {
    let n = XT_ROWS * XT_COLS;
    let mut shot_count = vec![0.0; n];
    let mut move_count = vec![0.0; n];
    let mut transition = Array2::<f64>::zeros((n, n));
    for s in shots {
        shot_count[cell_of(s.x, s.y)] += 1.0;
    }
    for m in moves {
        let from = cell_of(m.from[0], m.from[1]);
        move_count[from] += 1.0;
        if m.successful {
            transition[[from, cell_of(m.to[0], m.to[1])]] += 1.0;
        }
    }
    for mut row in transition.rows_mut() {
        let total: f64 = row.sum();
        if total > 0.0 {
            row.mapv_inplace(|v| v / total);
        }
    }
    let shot_prob: Vec<f64> = shot_count
        .iter()
        .zip(&move_count)
        .map(|(s, m)| if s + m > 0.0 { s / (s + m) } else { 0.0 })
        .collect();
    let zone_xg: Vec<f64> = (0..n)
        .map(|c| {
            let [x, y] = cell_center(c);
            xg.xg(x, y)
        })
        .collect();
    let (values, iterations) = xt_iterate(&shot_prob, &zone_xg, &transition, XT_TOL, XT_MAX_ITER);
    let mut sources: Vec<String> = shots
        .iter()
        .filter_map(|s| s.competition.clone())
        .chain(moves.iter().filter_map(|m| m.competition.clone()))
        .collect();
    sources.sort();
    sources.dedup();
    XtModel {
        rows: XT_ROWS,
        cols: XT_COLS,
        shot_prob,
        zone_xg,
        transition,
        values,
        iterations,
        sources,
    }
}

/// Every pass, dribble and cross in a canonical event stream. The end point
/// is the next event's location; the move is successful when that event is
/// an on-ball action (p, d, x, s) by the same team in the same match.
pub fn moves_from_events(events: &[MatchEvent]) -> Vec<Move> {
    events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.action.is_move())
        .filter_map(|(i, e)| {
            let next = events.get(i + 1).filter(|n| n.match_id == e.match_id)?;
            Some(Move {
                from: [e.x, e.y],
                to: [next.x, next.y],
                successful: next.team_id == e.team_id && next.action.is_style(),
                competition: e.competition.clone(),
            })
        })
        .collect()
}
