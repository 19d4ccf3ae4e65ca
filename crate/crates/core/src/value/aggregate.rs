use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{rel_diff, ValuedPossession};
use crate::error::DataError;
use crate::events::{ActionType, MatchEvent};

/// Per-team, per-match sums of the possession metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamMatchRow {
    pub match_id: String,
    pub team_id: String,
    pub n_possessions: usize,
    pub lpv_pred: f64,
    pub lpv_obs: f64,
    pub hpus_pred: f64,
    pub hpus_obs: f64,
    pub poss_util_pred: f64,
    pub poss_util_obs: f64,
    /// Relative difference of the summed LPVs.
    pub rel_diff: Option<f64>,
    pub goals: Option<f64>,
    pub external_xg: Option<f64>,
}

/// Metric columns of [`TeamMatchRow`], in output order.
pub const METRIC_COLUMNS: [&str; 7] = [
    "lpv_pred",
    "lpv_obs",
    "hpus_pred",
    "hpus_obs",
    "poss_util_pred",
    "poss_util_obs",
    "rel_diff",
];

/// Outcome columns that can be joined onto [`TeamMatchRow`].
pub const OUTCOME_COLUMNS: [&str; 2] = ["goals", "external_xg"];

impl TeamMatchRow {
    pub fn column(&self, name: &str) -> Option<f64> {
        match name {
            "lpv_pred" => Some(self.lpv_pred),
            "lpv_obs" => Some(self.lpv_obs),
            "hpus_pred" => Some(self.hpus_pred),
            "hpus_obs" => Some(self.hpus_obs),
            "poss_util_pred" => Some(self.poss_util_pred),
            "poss_util_obs" => Some(self.poss_util_obs),
            "rel_diff" => self.rel_diff,
            "goals" => self.goals,
            "external_xg" => self.external_xg,
            _ => None,
        }
    }
}

/// Sums valued possessions per `(match, team)`, sorted by match then team.
pub fn aggregate(valued: &[ValuedPossession]) -> Vec<TeamMatchRow> {
    let mut rows: BTreeMap<(String, String), TeamMatchRow> = BTreeMap::new();
    for v in valued {
        let row = rows
            .entry((v.match_id.clone(), v.team_id.clone()))
            .or_insert_with(|| TeamMatchRow {
                match_id: v.match_id.clone(),
                team_id: v.team_id.clone(),
                n_possessions: 0,
                lpv_pred: 0.0,
                lpv_obs: 0.0,
                hpus_pred: 0.0,
                hpus_obs: 0.0,
                poss_util_pred: 0.0,
                poss_util_obs: 0.0,
                rel_diff: None,
                goals: None,
                external_xg: None,
            });
        row.n_possessions += 1;
        row.lpv_pred += v.lpv_pred;
        row.lpv_obs += v.lpv_obs;
        row.hpus_pred += v.hpus_pred;
        row.hpus_obs += v.hpus_obs;
        row.poss_util_pred += v.poss_util_pred;
        row.poss_util_obs += v.poss_util_obs;
    }
    rows.into_values()
        .map(|mut r| {
            r.rel_diff = rel_diff(r.lpv_pred, r.lpv_obs);
            r
        })
        .collect()
}

/// Sets `goals` from the goal events in a canonical stream.
pub fn attach_goals(rows: &mut [TeamMatchRow], events: &[MatchEvent]) {
    let mut goals: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for e in events.iter().filter(|e| e.action == ActionType::Goal) {
        *goals.entry((&e.match_id, &e.team_id)).or_default() += 1.0;
    }
    for r in rows {
        r.goals = Some(goals.get(&(r.match_id.as_str(), r.team_id.as_str())).copied().unwrap_or(0.0));
    }
}

/// One line of an outcomes file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub match_id: String,
    pub team_id: String,
    pub goals: Option<f64>,
    pub external_xg: Option<f64>,
}

/// Reads a CSV with header `match_id,team_id,goals,external_xg`.
pub fn read_outcomes(path: impl AsRef<Path>) -> Result<Vec<Outcome>, DataError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| DataError::Parse(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| DataError::Parse(format!("{}: {e}", path.display()))))
        .collect()
}

/// Joins outcomes onto rows; supplied values override existing ones.
pub fn attach_outcomes(rows: &mut [TeamMatchRow], outcomes: &[Outcome]) {
    let by_key: BTreeMap<(&str, &str), &Outcome> = outcomes
        .iter()
        .map(|o| ((o.match_id.as_str(), o.team_id.as_str()), o))
        .collect();
    for r in rows {
        if let Some(o) = by_key.get(&(r.match_id.as_str(), r.team_id.as_str())) {
            if o.goals.is_some() {
                r.goals = o.goals;
            }
            if o.external_xg.is_some() {
                r.external_xg = o.external_xg;
            }
        }
    }
}

/// Pearson correlation; `None` for fewer than two points or a constant column.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlations between `rows` columns and `cols` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    /// Number of paired observations behind each entry.
    pub n: Vec<Vec<usize>>,
}

impl CorrelationTable {
    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.cols.iter().position(|c| c == col)?;
        self.values[i][j]
    }

    /// CSV with a header row; undefined correlations are written as `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> = std::iter::once("metric").chain(self.cols.iter().map(String::as_str)).collect();
        w.write_record(&header).map_err(csv_err)?;
        for (name, vals) in self.rows.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(vals.iter().map(|v| v.map_or("NA".to_string(), |c| format!("{c:.6}"))));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| DataError::Format(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> DataError {
    DataError::Format(e.to_string())
}

fn pairwise(pairs: &[(Option<f64>, Option<f64>)]) -> (Option<f64>, usize) {
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().filter_map(|(a, b)| Some(((*a)?, (*b)?))).unzip();
    (pearson(&x, &y), x.len())
}

/// Pairwise-complete Pearson correlations among the given columns.
pub fn correlation_matrix(rows: &[TeamMatchRow], columns: &[&str]) -> CorrelationTable {
    let names: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
    let mut values = Vec::new();
    let mut counts = Vec::new();
    for a in columns {
        let (v, n): (Vec<_>, Vec<_>) = columns
            .iter()
            .map(|b| {
                let pairs: Vec<_> = rows.iter().map(|r| (r.column(a), r.column(b))).collect();
                pairwise(&pairs)
            })
            .unzip();
        values.push(v);
        counts.push(n);
    }
    CorrelationTable {
        rows: names.clone(),
        cols: names,
        values,
        n: counts,
    }
}

/// Correlates each team-match's metrics with the same team's next match
/// (matches ordered by id). Teams with a single match contribute nothing.
pub fn future_correlations(rows: &[TeamMatchRow], metrics: &[&str], targets: &[&str]) -> CorrelationTable {
    let mut by_team: BTreeMap<&str, Vec<&TeamMatchRow>> = BTreeMap::new();
    for r in rows {
        by_team.entry(&r.team_id).or_default().push(r);
    }
    let mut pairs: Vec<(&TeamMatchRow, &TeamMatchRow)> = Vec::new();
    for list in by_team.values_mut() {
        list.sort_by(|a, b| a.match_id.cmp(&b.match_id));
        pairs.extend(list.windows(2).map(|w| (w[0], w[1])));
    }
    let mut values = Vec::new();
    let mut counts = Vec::new();
    for m in metrics {
        let (v, n): (Vec<_>, Vec<_>) = targets
            .iter()
            .map(|t| {
                let col: Vec<_> = pairs.iter().map(|(now, next)| (now.column(m), next.column(t))).collect();
                pairwise(&col)
            })
            .unzip();
        values.push(v);
        counts.push(n);
    }
    CorrelationTable {
        rows: metrics.iter().map(|m| m.to_string()).collect(),
        cols: targets.iter().map(|t| format!("next_{t}")).collect(),
        values,
        n: counts,
    }
}

/// Writes team-match rows as CSV.
pub fn write_rows_csv<W: Write>(rows: &[TeamMatchRow], out: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| DataError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(m: &str, t: &str, lpv: f64, goals: f64) -> TeamMatchRow {
        TeamMatchRow {
            match_id: m.into(),
            team_id: t.into(),
            n_possessions: 1,
            lpv_pred: lpv,
            lpv_obs: 2.0 * lpv,
            hpus_pred: 1.0,
            hpus_obs: 1.0,
            poss_util_pred: lpv,
            poss_util_obs: 0.0,
            rel_diff: None,
            goals: Some(goals),
            external_xg: None,
        }
    }

    #[test]
    fn pearson_by_hand() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
        assert_eq!(pearson(&[1.0], &[1.0]), None);
    }

    #[test]
    fn matrix_identity_and_constant() {
        let rows = vec![row("m1", "A", 1.0, 0.0), row("m1", "B", 2.0, 1.0), row("m2", "A", 4.0, 3.0)];
        let c = correlation_matrix(&rows, &["lpv_pred", "poss_util_pred", "hpus_obs", "external_xg"]);
        assert!((c.get("lpv_pred", "poss_util_pred").unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(c.get("lpv_pred", "hpus_obs"), None);
        assert_eq!(c.get("lpv_pred", "external_xg"), None);
        let mut csv = Vec::new();
        c.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("metric,lpv_pred,poss_util_pred,hpus_obs,external_xg\n"));
        assert!(text.contains("NA"));
    }

    #[test]
    fn future_pairs_skip_single_match_teams() {
        let rows = vec![
            row("m1", "A", 1.0, 0.0),
            row("m2", "A", 2.0, 1.0),
            row("m3", "A", 3.0, 3.0),
            row("m1", "B", 9.0, 9.0),
        ];
        let f = future_correlations(&rows, &["lpv_pred"], &["goals"]);
        assert_eq!(f.n[0][0], 2);
        assert!((f.get("lpv_pred", "next_goals").unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn outcomes_override() {
        let mut rows = vec![row("m1", "A", 1.0, 0.0)];
        attach_outcomes(
            &mut rows,
            &[Outcome {
                match_id: "m1".into(),
                team_id: "A".into(),
                goals: None,
                external_xg: Some(1.3),
            }],
        );
        assert_eq!(rows[0].goals, Some(0.0));
        assert_eq!(rows[0].external_xg, Some(1.3));
    }
}
