//! Newline-delimited JSON ingestion and the canonical event file.
//!
//! Raw records carry pitch coordinates in meters and a per-period clock.
//! Ingestion scales them to the unit square, orients every event so the
//! acting team attacks left to right, scales the clock by the match maximum
//! and derives the running score advantage.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActionType, MatchEvent};
use crate::error::DataError;

pub const DEFAULT_PITCH_LENGTH: f64 = 105.0;
pub const DEFAULT_PITCH_WIDTH: f64 = 68.0;

/// One line of the raw input format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    pub match_id: String,
    pub team_id: String,
    pub action: String,
    pub x_raw: f64,
    pub y_raw: f64,
    pub t_raw_sec: f64,
    pub period: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_width: Option<f64>,
    /// `false` when the raw coordinates have the acting team attacking right to left.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_left_to_right: Option<bool>,
    /// Data-source tag, e.g. the league.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub competition: Option<String>,
}

/// A record that was dropped during ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line number in the input.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub events: Vec<MatchEvent>,
    pub rejections: Vec<Rejection>,
    pub warnings: Vec<String>,
}

/// Seconds elapsed before the start of a period.
fn period_offset(period: u8) -> f64 {
    match period {
        0 | 1 => 0.0,
        2 => 45.0 * 60.0,
        3 => 90.0 * 60.0,
        4 => 105.0 * 60.0,
        _ => 120.0 * 60.0,
    }
}

struct Parsed {
    line: usize,
    raw: RawEvent,
    action: ActionType,
    clock: f64,
}

/// Ingests a raw events file.
pub fn ingest_events(path: impl AsRef<Path>) -> Result<IngestReport, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    ingest_reader(BufReader::new(file))
}

pub fn ingest_reader<R: BufRead>(reader: R) -> Result<IngestReport, DataError> {
    let mut report = IngestReport::default();
    let mut by_match: BTreeMap<String, Vec<Parsed>> = BTreeMap::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DataError::Parse(format!("line {line_no}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEvent = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                report.rejections.push(Rejection {
                    line: line_no,
                    reason: format!("malformed record: {e}"),
                });
                continue;
            }
        };
        let action = match raw.action.parse::<ActionType>() {
            Ok(a) => a,
            Err(e) => {
                report.rejections.push(Rejection {
                    line: line_no,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if !(raw.x_raw.is_finite() && raw.y_raw.is_finite() && raw.t_raw_sec.is_finite()) {
            report.rejections.push(Rejection {
                line: line_no,
                reason: "non-finite coordinate or time".into(),
            });
            continue;
        }
        let clock = period_offset(raw.period) + raw.t_raw_sec;
        by_match.entry(raw.match_id.clone()).or_default().push(Parsed {
            line: line_no,
            raw,
            action,
            clock,
        });
    }

    for (match_id, mut records) in by_match {
        if let Some(w) = records.windows(2).find(|w| w[1].clock < w[0].clock) {
            report.warnings.push(format!(
                "match {match_id}: timestamps not monotone (line {} after line {}); stable-sorted",
                w[1].line, w[0].line
            ));
            records.sort_by(|a, b| a.clock.total_cmp(&b.clock));
        }
        let max_clock = records.iter().map(|r| r.clock).fold(0.0, f64::max);
        let teams: BTreeSet<&str> = records.iter().map(|r| r.raw.team_id.as_str()).collect();
        if teams.len() > 2 {
            report
                .warnings
                .push(format!("match {match_id}: {} distinct teams", teams.len()));
        }
        let mut goals: BTreeMap<String, i32> = BTreeMap::new();
        let mut total_goals = 0;
        for r in &records {
            let own = goals.get(&r.raw.team_id).copied().unwrap_or(0);
            let scrad = own - (total_goals - own);
            report.events.push(scale(&r.raw, r.action, r.clock, max_clock, scrad));
            if r.action == ActionType::Goal {
                *goals.entry(r.raw.team_id.clone()).or_insert(0) += 1;
                total_goals += 1;
            }
        }
    }
    Ok(report)
}

fn scale(raw: &RawEvent, action: ActionType, clock: f64, max_clock: f64, scrad: i32) -> MatchEvent {
    let length = raw.pitch_length.unwrap_or(DEFAULT_PITCH_LENGTH);
    let width = raw.pitch_width.unwrap_or(DEFAULT_PITCH_WIDTH);
    let mut x = (raw.x_raw / length).clamp(0.0, 1.0);
    let mut y = (raw.y_raw / width).clamp(0.0, 1.0);
    if raw.attack_left_to_right == Some(false) {
        x = 1.0 - x;
        y = 1.0 - y;
    }
    let t = if max_clock > 0.0 {
        (clock / max_clock).clamp(0.0, 1.0)
    } else {
        0.0
    };
    MatchEvent {
        match_id: raw.match_id.clone(),
        team_id: raw.team_id.clone(),
        action,
        x,
        y,
        t,
        scrad,
        competition: raw.competition.clone(),
    }
}

/// Writes canonical events as JSON lines.
pub fn write_canonical(path: impl AsRef<Path>, events: &[MatchEvent]) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(|e| DataError::io(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

/// Reads a canonical events file written by [`write_canonical`].
pub fn read_canonical(path: impl AsRef<Path>) -> Result<Vec<MatchEvent>, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: MatchEvent =
            serde_json::from_str(&line).map_err(|e| DataError::Parse(format!("line {}: {e}", i + 1)))?;
        out.push(ev);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_line(team: &str, action: &str, x: f64, y: f64, t: f64, period: u8) -> String {
        format!(
            r#"{{"match_id":"m1","team_id":"{team}","action":"{action}","x_raw":{x},"y_raw":{y},"t_raw_sec":{t},"period":{period}}}"#
        )
    }

    #[test]
    fn empty_input() {
        let r = ingest_reader("".as_bytes()).unwrap();
        assert!(r.events.is_empty() && r.rejections.is_empty());
    }

    #[test]
    fn scales_by_pitch_dimensions() {
        let input = raw_line("A", "p", 52.5, 34.0, 10.0, 1);
        let r = ingest_reader(input.as_bytes()).unwrap();
        assert_eq!(r.events.len(), 1);
        assert_eq!(r.events[0].x, 0.5);
        assert_eq!(r.events[0].y, 0.5);
    }

    #[test]
    fn unknown_action_is_rejected_with_line_number() {
        let input = [
            raw_line("A", "p", 10.0, 10.0, 1.0, 1),
            raw_line("A", "q", 10.0, 10.0, 2.0, 1),
            "not json".to_string(),
        ]
        .join("\n");
        let r = ingest_reader(input.as_bytes()).unwrap();
        assert_eq!(r.events.len(), 1);
        assert_eq!(r.rejections.len(), 2);
        assert_eq!(r.rejections[0].line, 2);
        assert!(r.rejections[0].reason.contains("q"));
        assert_eq!(r.rejections[1].line, 3);
    }

    #[test]
    fn non_monotone_times_are_sorted_with_warning() {
        let input = [
            raw_line("A", "p", 10.0, 10.0, 5.0, 1),
            raw_line("A", "d", 20.0, 10.0, 3.0, 1),
            raw_line("A", "x", 30.0, 10.0, 60.0, 2),
        ]
        .join("\n");
        let r = ingest_reader(input.as_bytes()).unwrap();
        assert_eq!(r.warnings.len(), 1);
        let codes: String = r.events.iter().map(|e| e.action.code()).collect();
        assert_eq!(codes, "dpx");
        // second half clock dominates the scaling
        assert_eq!(r.events[2].t, 1.0);
        assert!((r.events[0].t - 3.0 / 2760.0).abs() < 1e-15);
    }

    #[test]
    fn flips_right_to_left_records() {
        let input = r#"{"match_id":"m","team_id":"A","action":"p","x_raw":84.0,"y_raw":17.0,"t_raw_sec":0,"period":1,"attack_left_to_right":false}"#;
        let r = ingest_reader(input.as_bytes()).unwrap();
        assert!((r.events[0].x - 0.2).abs() < 1e-12);
        assert!((r.events[0].y - 0.75).abs() < 1e-12);
    }

    #[test]
    fn scrad_follows_goals() {
        let input = [
            raw_line("A", "s", 100.0, 34.0, 1.0, 1),
            raw_line("A", "g", 105.0, 34.0, 2.0, 1),
            raw_line("B", "p", 50.0, 34.0, 3.0, 1),
            raw_line("A", "p", 50.0, 34.0, 4.0, 1),
        ]
        .join("\n");
        let r = ingest_reader(input.as_bytes()).unwrap();
        let scrads: Vec<i32> = r.events.iter().map(|e| e.scrad).collect();
        assert_eq!(scrads, vec![0, 0, -1, 1]);
    }
}
