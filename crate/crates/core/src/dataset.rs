//! Supervised samples from possessions.
//!
//! Each sample encodes a possession prefix: the log-signature of the whole
//! prefix path, the `n_r` most recent actions and the current score
//! advantage. The target is the event right after the prefix.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::events::{ActionType, MatchEvent, Possession};
use crate::sig::{logsig_of_possession_with, LogSigVector, POSSESSION_SIG_ORDER};

pub const DATASET_FORMAT: &str = "sigposs-dataset";
pub const DATASET_VERSION: u32 = 1;

/// Values of `n_r` used for forecasting from the 4th to the 8th action.
pub const N_RECENT_RANGE: std::ops::RangeInclusive<usize> = 3..=7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub match_id: String,
    pub team_id: String,
    pub possession_index: usize,
    /// Zero-based index of the target event within its possession.
    pub position: usize,
    pub logsig: LogSigVector,
    /// Most recent first.
    pub recent_actions: Vec<ActionType>,
    pub scrad: i32,
    pub target_action: ActionType,
    pub target_xy: [f64; 2],
}

/// Samples for every prefix of length `n_r..len` of a possession.
pub fn build_samples(possession: &Possession, n_r: usize) -> Result<Vec<Sample>, DataError> {
    build_samples_with(possession, n_r, POSSESSION_SIG_ORDER)
}

pub fn build_samples_with(possession: &Possession, n_r: usize, order: usize) -> Result<Vec<Sample>, DataError> {
    if n_r == 0 {
        return Err(DataError::Contract("n_r must be at least 1".into()));
    }
    let events = &possession.events;
    let path = possession.path_xyt();
    let mut out = Vec::new();
    for prefix_len in n_r..events.len() {
        let target = &events[prefix_len];
        if target.action == ActionType::MatchEnd {
            continue;
        }
        out.push(encode_prefix(possession, &path[..prefix_len], n_r, order, prefix_len)?);
    }
    Ok(out)
}

fn encode_prefix(
    possession: &Possession,
    path: &[[f64; 3]],
    n_r: usize,
    order: usize,
    prefix_len: usize,
) -> Result<Sample, DataError> {
    let events = &possession.events;
    let target = &events[prefix_len];
    Ok(Sample {
        match_id: possession.match_id.clone(),
        team_id: possession.team_id.clone(),
        possession_index: possession.index,
        position: prefix_len,
        logsig: logsig_of_possession_with(path, order)?,
        recent_actions: recent_actions(&events[..prefix_len], n_r),
        scrad: events[prefix_len - 1].scrad,
        target_action: target.action,
        target_xy: [target.x, target.y],
    })
}

/// The sample for forecasting the action after `prefix`, encoded exactly as
/// [`build_samples`] encodes a prefix of the same events. The next action is
/// unknown, so the target fields hold `@` at the last event's location.
pub fn query_sample(prefix: &[MatchEvent], n_r: usize, order: usize) -> Result<Sample, DataError> {
    if n_r == 0 {
        return Err(DataError::Contract("n_r must be at least 1".into()));
    }
    let Some(last) = prefix.last() else {
        return Err(DataError::Contract("empty prefix".into()));
    };
    if prefix.len() < n_r {
        return Err(DataError::Contract(format!(
            "prefix has {} actions, need at least {n_r}",
            prefix.len()
        )));
    }
    let path: Vec<[f64; 3]> = prefix.iter().map(MatchEvent::xyt).collect();
    Ok(Sample {
        match_id: last.match_id.clone(),
        team_id: last.team_id.clone(),
        possession_index: 0,
        position: prefix.len(),
        logsig: logsig_of_possession_with(&path, order)?,
        recent_actions: recent_actions(prefix, n_r),
        scrad: last.scrad,
        target_action: ActionType::MatchEnd,
        target_xy: [last.x, last.y],
    })
}

/// The last `n_r` actions of a prefix, most recent first.
pub fn recent_actions(prefix: &[MatchEvent], n_r: usize) -> Vec<ActionType> {
    prefix.iter().rev().take(n_r).map(|e| e.action).collect()
}

/// Samples for a batch of possessions, in possession order.
pub fn build_dataset(possessions: &[Possession], n_r: usize, order: usize) -> Result<Vec<Sample>, DataError> {
    let per: Result<Vec<Vec<Sample>>, DataError> = possessions
        .par_iter()
        .map(|p| build_samples_with(p, n_r, order))
        .collect();
    Ok(per?.into_iter().flatten().collect())
}

/// Splits match ids into train and test sets. Deterministic for a seed.
pub fn split_train_test(matches: &[String], seed: u64, ratio: f64) -> Result<(Vec<String>, Vec<String>), DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::Contract(format!("split ratio {ratio} not in (0, 1)")));
    }
    let mut ids: Vec<String> = matches.to_vec();
    ids.sort();
    ids.dedup();
    if ids.len() < 2 {
        return Err(DataError::Contract(format!(
            "need at least 2 matches to split, got {}",
            ids.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let n_train = ((ratio * ids.len() as f64).round() as usize).clamp(1, ids.len() - 1);
    let test = ids.split_off(n_train);
    ids.sort();
    let mut test = test;
    test.sort();
    Ok((ids, test))
}

/// On-disk dataset with a version header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub format: String,
    pub version: u32,
    pub n_r: usize,
    pub sig_order: usize,
    pub samples: Vec<Sample>,
}

impl DatasetFile {
    pub fn new(n_r: usize, sig_order: usize, samples: Vec<Sample>) -> Self {
        Self {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            n_r,
            sig_order,
            samples,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| DataError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        let file: DatasetFile = serde_json::from_str(&text)?;
        if file.format != DATASET_FORMAT || file.version != DATASET_VERSION {
            return Err(DataError::Format(format!(
                "{}: expected {DATASET_FORMAT} v{DATASET_VERSION}, found {} v{}",
                path.display(),
                file.format,
                file.version
            )));
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Terminal;

    fn possession(codes: &str) -> Possession {
        let events = codes
            .chars()
            .enumerate()
            .map(|(i, c)| MatchEvent {
                match_id: "m".into(),
                team_id: "A".into(),
                action: ActionType::from_code(c).unwrap(),
                x: 0.1 * i as f64,
                y: 0.5,
                t: 0.01 * i as f64,
                scrad: i as i32,
                competition: None,
            })
            .collect();
        Possession {
            match_id: "m".into(),
            team_id: "A".into(),
            index: 0,
            events,
            terminal: Terminal::StreamEnd,
        }
    }

    #[test]
    fn sample_counts() {
        assert_eq!(build_samples(&possession("ppp"), 3).unwrap().len(), 0);
        assert_eq!(build_samples(&possession("ppdxs"), 3).unwrap().len(), 2);
        assert_eq!(build_samples(&possession("ppdxs"), 4).unwrap().len(), 1);
    }

    #[test]
    fn sample_fields() {
        let s = build_samples(&possession("pdxsg"), 3).unwrap();
        assert_eq!(s[0].recent_actions, vec![ActionType::Cross, ActionType::Dribble, ActionType::Pass]);
        assert_eq!(s[0].target_action, ActionType::Shot);
        assert_eq!(s[0].target_xy, [0.1 * 3.0, 0.5]);
        assert_eq!(s[0].scrad, 2);
        assert_eq!(s[0].position, 3);
        assert_eq!(s[1].target_action, ActionType::Goal);
        assert_eq!(s[0].logsig.len(), 55);
    }

    #[test]
    fn earlier_samples_ignore_later_events() {
        let short = build_samples(&possession("pdxsp"), 3).unwrap();
        let long = build_samples(&possession("pdxspppd_"), 3).unwrap();
        assert_eq!(short[..], long[..short.len()]);
    }

    #[test]
    fn query_sample_matches_built_sample() {
        let p = possession("pdxsg");
        let built = build_samples(&p, 3).unwrap();
        for s in &built {
            let q = query_sample(&p.events[..s.position], 3, POSSESSION_SIG_ORDER).unwrap();
            assert_eq!(q.logsig, s.logsig);
            assert_eq!(q.recent_actions, s.recent_actions);
            assert_eq!(q.scrad, s.scrad);
        }
        assert!(query_sample(&p.events[..2], 3, POSSESSION_SIG_ORDER).is_err());
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let ids: Vec<String> = (0..10).map(|i| format!("m{i}")).collect();
        let (tr, te) = split_train_test(&ids, 7, 0.8).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        assert!(tr.iter().all(|m| !te.contains(m)));
        assert_eq!(split_train_test(&ids, 7, 0.8).unwrap(), (tr, te));
        assert!(split_train_test(&ids[..1], 7, 0.8).is_err());
        assert!(split_train_test(&ids, 7, 1.0).is_err());
    }
}
