//! Possession valuation: expected goals and expected threat sub-models,
//! poss-util, HPUS and LPV in predicted and observed variants, and
//! team/match aggregation with correlation reports.

mod aggregate;
mod metrics;
mod xg;
mod xt;

pub use aggregate::{
    aggregate, attach_goals, attach_outcomes, correlation_matrix, future_correlations, pearson, read_outcomes,
    write_rows_csv, CorrelationTable, Outcome, TeamMatchRow, METRIC_COLUMNS, OUTCOME_COLUMNS,
};
pub use metrics::{
    action_value, has, hpus, hypothetical_lav, lav, observed_lav, poss_util, rel_diff, value_possession, ActionValue,
    Phi, ValueConfig, ValueModels, ValuedPossession, REL_DIFF_EPS,
};
pub use xg::{
    fit_xg, goal_angle, goal_distance, shots_from_events, xg_features, Shot, XgModel, GOAL_WIDTH_M, MIN_SHOTS,
    RIDGE_FALLBACK,
};
pub use xt::{
    cell_center, cell_of, fit_xt, moves_from_events, xt_iterate, xt_step, Move, XtModel, XT_COLS, XT_MAX_ITER,
    XT_ROWS, XT_TOL,
};

use std::collections::{BTreeMap, BTreeSet};

use crate::dataset::Sample;
use crate::error::DataError;
use crate::events::{MatchEvent, Possession};
use crate::predictor::Prediction;

/// Fits xG and then xT on every event whose competition is not excluded.
pub fn fit_value_models(events: &[MatchEvent], exclude: &[String]) -> Result<ValueModels, DataError> {
    let kept: Vec<MatchEvent> = events
        .iter()
        .filter(|e| e.competition.as_ref().is_none_or(|c| !exclude.contains(c)))
        .cloned()
        .collect();
    let shots = shots_from_events(&kept);
    let xg = fit_xg(&shots)?;
    let xt = fit_xt(&shots, &moves_from_events(&kept), &xg);
    Ok(ValueModels { xg, xt })
}

/// Fails when the value models were fitted on any competition present in
/// the events to be valued.
pub fn check_disjoint_sources(models: &ValueModels, events: &[MatchEvent]) -> Result<(), DataError> {
    let evaluated: BTreeSet<&str> = events.iter().filter_map(|e| e.competition.as_deref()).collect();
    let overlap: Vec<&str> = models
        .xg
        .sources
        .iter()
        .chain(&models.xt.sources)
        .map(String::as_str)
        .filter(|s| evaluated.contains(s))
        .collect();
    if overlap.is_empty() {
        Ok(())
    } else {
        Err(DataError::Contract(format!(
            "value models were fitted on the evaluated competition(s): {}",
            overlap.join(", ")
        )))
    }
}

/// Values every possession that has forecast samples.
///
/// `samples` and `predictions` are aligned; samples are matched to
/// possessions by `(match_id, possession_index)`. Output follows the
/// possession order.
pub fn value_dataset(
    possessions: &[Possession],
    samples: &[Sample],
    predictions: &[Prediction],
    models: &ValueModels,
    cfg: &ValueConfig,
) -> Result<Vec<ValuedPossession>, DataError> {
    if samples.len() != predictions.len() {
        return Err(DataError::Contract(format!(
            "{} samples but {} predictions",
            samples.len(),
            predictions.len()
        )));
    }
    cfg.validate()?;
    let mut groups: BTreeMap<(&str, usize), (Vec<Sample>, Vec<Prediction>)> = BTreeMap::new();
    for (s, p) in samples.iter().zip(predictions) {
        let g = groups.entry((s.match_id.as_str(), s.possession_index)).or_default();
        g.0.push(s.clone());
        g.1.push(p.clone());
    }
    possessions
        .iter()
        .filter_map(|poss| {
            let (s, p) = groups.get(&(poss.match_id.as_str(), poss.index))?;
            Some(value_possession(s, p, poss.has_attacking_action(), models, cfg))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::build_dataset;
    use crate::events::{segment_possessions, ActionType};
    use crate::predictor::{OraclePredictor, Predictor};
    use crate::sig::POSSESSION_SIG_ORDER;

    fn ev(m: &str, team: &str, a: ActionType, x: f64, y: f64, t: f64, comp: &str) -> MatchEvent {
        MatchEvent {
            match_id: m.into(),
            team_id: team.into(),
            action: a,
            x,
            y,
            t,
            scrad: 0,
            competition: Some(comp.into()),
        }
    }

    fn stream() -> Vec<MatchEvent> {
        use ActionType::*;
        vec![
            ev("m", "A", Pass, 0.3, 0.5, 0.01, "L"),
            ev("m", "A", Dribble, 0.5, 0.4, 0.02, "L"),
            ev("m", "A", Pass, 0.7, 0.3, 0.03, "L"),
            ev("m", "A", Cross, 0.8, 0.1, 0.04, "L"),
            ev("m", "A", Shot, 0.9, 0.5, 0.05, "L"),
            ev("m", "A", Goal, 1.0, 0.5, 0.06, "L"),
            ev("m", "B", Pass, 0.4, 0.5, 0.07, "L"),
            ev("m", "B", Pass, 0.5, 0.5, 0.08, "L"),
            ev("m", "B", Pass, 0.6, 0.6, 0.09, "L"),
            ev("m", "B", PossessionEnd, 0.6, 0.6, 0.10, "L"),
            ev("m", "B", MatchEnd, 0.5, 0.5, 1.0, "L"),
        ]
    }

    #[test]
    fn one_hot_predictions_match_observed() {
        let events = stream();
        let poss = segment_possessions(&events);
        let samples = build_dataset(&poss, 3, POSSESSION_SIG_ORDER).unwrap();
        let preds = OraclePredictor.predict_samples(&samples);
        let models = ValueModels {
            xg: XgModel::from_gamma([-1.0, -0.1, 2.0]),
            xt: XtModel::constant(0.03),
        };
        let valued = value_dataset(&poss, &samples, &preds, &models, &ValueConfig::default()).unwrap();
        assert_eq!(valued.len(), 2);
        for v in &valued {
            assert_eq!(v.lpv_pred, v.lpv_obs);
            assert_eq!(v.hpus_pred, v.hpus_obs);
            assert_eq!(v.poss_util_pred, v.poss_util_obs);
        }
        assert!(valued[0].had_attack && valued[0].poss_util_obs == 2.0);
        assert!(!valued[1].had_attack && valued[1].poss_util_obs == 0.0);
        assert_eq!(valued[1].hpus_obs, 0.0);
    }

    #[test]
    fn source_exclusion() {
        let mut events = stream();
        let models = ValueModels {
            xg: XgModel {
                sources: vec!["Other".into()],
                ..XgModel::from_gamma([0.0; 3])
            },
            xt: XtModel::constant(0.0),
        };
        assert!(check_disjoint_sources(&models, &events).is_ok());
        events[0].competition = Some("Other".into());
        assert!(check_disjoint_sources(&models, &events).is_err());
    }
}
