//! Match events, possessions and pitch geometry.

mod ingest;
mod partition;

pub use ingest::{
    ingest_events, ingest_reader, read_canonical, write_canonical, IngestReport, RawEvent, Rejection,
    DEFAULT_PITCH_LENGTH, DEFAULT_PITCH_WIDTH,
};
pub use partition::{PitchPartition, Rect};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The seven action categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ActionType {
    Pass,
    Dribble,
    Cross,
    Shot,
    Goal,
    PossessionEnd,
    MatchEnd,
}

pub const NUM_ACTIONS: usize = 7;

impl ActionType {
    /// Canonical order; also the order of the model's action logits.
    pub const ALL: [ActionType; NUM_ACTIONS] = [
        ActionType::Pass,
        ActionType::Dribble,
        ActionType::Cross,
        ActionType::Shot,
        ActionType::Goal,
        ActionType::PossessionEnd,
        ActionType::MatchEnd,
    ];

    pub fn code(self) -> char {
        match self {
            ActionType::Pass => 'p',
            ActionType::Dribble => 'd',
            ActionType::Cross => 'x',
            ActionType::Shot => 's',
            ActionType::Goal => 'g',
            ActionType::PossessionEnd => '_',
            ActionType::MatchEnd => '@',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.code() == c)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Style actions (pass, dribble, cross, shot) as opposed to contextual ones.
    pub fn is_style(self) -> bool {
        matches!(
            self,
            ActionType::Pass | ActionType::Dribble | ActionType::Cross | ActionType::Shot
        )
    }

    /// Cross or shot.
    pub fn is_attacking(self) -> bool {
        matches!(self, ActionType::Cross | ActionType::Shot)
    }

    /// Ball-moving actions valued by expected threat: pass, dribble, cross.
    pub fn is_move(self) -> bool {
        matches!(self, ActionType::Pass | ActionType::Dribble | ActionType::Cross)
    }
}

impl fmt::Display for ActionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown action code {0:?}")]
pub struct UnknownAction(pub String);

impl FromStr for ActionType {
    type Err = UnknownAction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Self::from_code(c).ok_or_else(|| UnknownAction(s.to_string())),
            _ => Err(UnknownAction(s.to_string())),
        }
    }
}

impl TryFrom<String> for ActionType {
    type Error = UnknownAction;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ActionType> for String {
    fn from(a: ActionType) -> String {
        a.code().to_string()
    }
}

/// One canonical event. Coordinates are unit-scaled and oriented so the
/// acting team attacks towards `x = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEvent {
    pub match_id: String,
    pub team_id: String,
    pub action: ActionType,
    pub x: f64,
    pub y: f64,
    /// Match clock scaled to `[0, 1]`.
    pub t: f64,
    /// Goal difference from the acting team's view, before this event.
    pub scrad: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub competition: Option<String>,
}

impl MatchEvent {
    pub fn xyt(&self) -> [f64; 3] {
        [self.x, self.y, self.t]
    }
}

/// How a possession ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    /// Closed by a possession-end (`_`) event, which belongs to it.
    Loss,
    /// Closed by a goal (`g`) event, which belongs to it.
    Goal,
    /// The other team acted next.
    TeamChange,
    /// A match-end (`@`) delimiter followed.
    MatchEnd,
    /// The event stream ran out.
    StreamEnd,
}

/// A maximal run of consecutive events by one team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Possession {
    pub match_id: String,
    pub team_id: String,
    /// Position of this possession within its match.
    pub index: usize,
    pub events: Vec<MatchEvent>,
    pub terminal: Terminal,
}

impl Possession {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn path_xyt(&self) -> Vec<[f64; 3]> {
        self.events.iter().map(MatchEvent::xyt).collect()
    }

    pub fn has_attacking_action(&self) -> bool {
        self.events.iter().any(|e| e.action.is_attacking())
    }
}

/// Output of segmentation: possessions interleaved with match-end delimiters.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Possession(Possession),
    MatchEnd(MatchEvent),
}

/// Splits a time-ordered event stream into possessions and `@` delimiters.
///
/// A possession is closed before a team change, after a `_` or `g` event
/// (which stays in the possession), and before a `@` event (which becomes a
/// delimiter of its own).
pub fn segment_stream(events: &[MatchEvent]) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut current: Vec<MatchEvent> = Vec::new();
    let mut index_in_match: BTreeMap<String, usize> = BTreeMap::new();

    let mut close = |current: &mut Vec<MatchEvent>, terminal: Terminal, out: &mut Vec<Segment>| {
        if current.is_empty() {
            return;
        }
        let events = std::mem::take(current);
        let counter = index_in_match.entry(events[0].match_id.clone()).or_insert(0);
        out.push(Segment::Possession(Possession {
            match_id: events[0].match_id.clone(),
            team_id: events[0].team_id.clone(),
            index: *counter,
            events,
            terminal,
        }));
        *counter += 1;
    };

    for ev in events {
        if ev.action == ActionType::MatchEnd {
            close(&mut current, Terminal::MatchEnd, &mut out);
            out.push(Segment::MatchEnd(ev.clone()));
            continue;
        }
        if let Some(last) = current.last() {
            if last.team_id != ev.team_id || last.match_id != ev.match_id {
                close(&mut current, Terminal::TeamChange, &mut out);
            }
        }
        current.push(ev.clone());
        match ev.action {
            ActionType::PossessionEnd => close(&mut current, Terminal::Loss, &mut out),
            ActionType::Goal => close(&mut current, Terminal::Goal, &mut out),
            _ => {}
        }
    }
    close(&mut current, Terminal::StreamEnd, &mut out);
    out
}

/// Possessions only, delimiters dropped.
pub fn segment_possessions(events: &[MatchEvent]) -> Vec<Possession> {
    segment_stream(events)
        .into_iter()
        .filter_map(|s| match s {
            Segment::Possession(p) => Some(p),
            Segment::MatchEnd(_) => None,
        })
        .collect()
}

/// Groups events by match id, keeping each match's event order.
pub fn group_by_match(events: &[MatchEvent]) -> BTreeMap<String, Vec<MatchEvent>> {
    let mut out: BTreeMap<String, Vec<MatchEvent>> = BTreeMap::new();
    for e in events {
        out.entry(e.match_id.clone()).or_default().push(e.clone());
    }
    out
}
