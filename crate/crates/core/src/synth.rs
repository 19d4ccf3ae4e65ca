//! Synthetic data: planted-rule samples and a small simulated league.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Sample;
use crate::events::{ActionType, RawEvent, DEFAULT_PITCH_LENGTH, DEFAULT_PITCH_WIDTH};
use crate::sig::logsig_of_possession;

/// Deterministic next action given the last one.
pub fn planted_next_action(last: ActionType) -> ActionType {
    match last {
        ActionType::Pass => ActionType::Dribble,
        ActionType::Dribble => ActionType::Cross,
        ActionType::Cross => ActionType::Shot,
        _ => ActionType::Pass,
    }
}

/// Samples whose next action is a function of the last action and whose
/// next location is an affine map of the path's net `(x, y)` displacement
/// (the first two level-1 log-signature coordinates).
pub fn planted_samples(n: usize, n_r: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let style = [ActionType::Pass, ActionType::Dribble, ActionType::Cross, ActionType::Shot];
    (0..n)
        .map(|i| {
            let len = rng.random_range(n_r.max(2)..=n_r.max(2) + 6);
            let mut path = Vec::with_capacity(len);
            let (mut x, mut y, mut t): (f64, f64, f64) =
                (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..0.9));
            for _ in 0..len {
                path.push([x, y, t]);
                x = (x + rng.random_range(-0.25..0.25)).clamp(0.0, 1.0);
                y = (y + rng.random_range(-0.25..0.25)).clamp(0.0, 1.0);
                t = (t + rng.random_range(0.0..0.01)).min(1.0);
            }
            let logsig = logsig_of_possession(&path).expect("non-empty path");
            let recent: Vec<ActionType> = (0..n_r).map(|_| style[rng.random_range(0..4)]).collect();
            let (dx, dy) = (logsig.coeffs[0], logsig.coeffs[1]);
            Sample {
                match_id: format!("planted{}", i / 100),
                team_id: "P".into(),
                possession_index: i,
                position: len,
                target_action: planted_next_action(recent[0]),
                target_xy: [0.5 + 0.4 * dx, 0.5 - 0.3 * dy],
                logsig,
                recent_actions: recent,
                scrad: rng.random_range(-2..=2),
            }
        })
        .collect()
}

/// Knobs for [`synthetic_league`].
#[derive(Debug, Clone)]
pub struct LeagueConfig {
    pub n_matches: usize,
    pub n_teams: usize,
    /// Approximate number of events per match.
    pub events_per_match: usize,
    pub competition: String,
    pub seed: u64,
}

impl Default for LeagueConfig {
    fn default() -> Self {
        Self {
            n_matches: 10,
            n_teams: 6,
            events_per_match: 300,
            competition: "synthetic".into(),
            seed: 7,
        }
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct Sim<'a> {
    rng: ChaCha8Rng,
    step: Normal<f64>,
    out: Vec<RawEvent>,
    cfg: &'a LeagueConfig,
}

impl Sim<'_> {
    #[allow(clippy::too_many_arguments)]
    fn emit(&mut self, match_id: &str, team: &str, action: ActionType, x: f64, y: f64, clock: f64, flipped: bool) {
        let (period, t) = if clock < 2700.0 { (1, clock) } else { (2, clock - 2700.0) };
        let (mut xr, mut yr) = (x * DEFAULT_PITCH_LENGTH, y * DEFAULT_PITCH_WIDTH);
        if flipped {
            xr = DEFAULT_PITCH_LENGTH - xr;
            yr = DEFAULT_PITCH_WIDTH - yr;
        }
        self.out.push(RawEvent {
            match_id: match_id.to_string(),
            team_id: team.to_string(),
            action: action.code().to_string(),
            x_raw: (xr * 100.0).round() / 100.0,
            y_raw: (yr * 100.0).round() / 100.0,
            t_raw_sec: (t * 10.0).round() / 10.0,
            period,
            pitch_length: None,
            pitch_width: None,
            attack_left_to_right: flipped.then_some(false),
            competition: Some(self.cfg.competition.clone()),
        });
    }

    /// Simulates one possession; returns the updated clock.
    fn possession(&mut self, match_id: &str, team: &str, strength: f64, mut clock: f64, flipped: bool) -> f64 {
        let mut x: f64 = self.rng.random_range(0.1..0.6);
        let mut y: f64 = self.rng.random_range(0.1..0.9);
        loop {
            clock += self.rng.random_range(2.0..8.0);
            let central = (0.25..=0.75).contains(&y);
            let in_box = x > 0.84 && central;
            let wide_final = x > 0.72 && !central;
            let lose = 0.16 - 0.06 * strength + if x > 0.6 { 0.06 } else { 0.0 };
            let u: f64 = self.rng.random();
            if u < lose {
                self.emit(match_id, team, ActionType::PossessionEnd, x, y, clock, flipped);
                return clock;
            }
            let v: f64 = self.rng.random();
            let action = if in_box && v < 0.35 + 0.2 * strength {
                ActionType::Shot
            } else if wide_final && v < 0.4 {
                ActionType::Cross
            } else if x > 0.7 && central && v < 0.12 {
                ActionType::Shot
            } else if v < 0.7 {
                ActionType::Pass
            } else {
                ActionType::Dribble
            };
            self.emit(match_id, team, action, x, y, clock, flipped);
            match action {
                ActionType::Shot => {
                    let dist = ((1.0 - x) * 105.0).hypot((0.5 - y) * 68.0);
                    let p_goal = logistic(0.2 - 0.15 * dist + 0.5 * strength);
                    clock += self.rng.random_range(1.0..3.0);
                    let scored = self.rng.random::<f64>() < p_goal;
                    let end = if scored { ActionType::Goal } else { ActionType::PossessionEnd };
                    self.emit(match_id, team, end, 1.0, 0.5, clock, flipped);
                    return clock;
                }
                ActionType::Cross => {
                    x = self.rng.random_range(0.86..0.97);
                    y = self.rng.random_range(0.35..0.65);
                }
                ActionType::Dribble => {
                    x = (x + 0.05 + 0.5 * self.step.sample(&mut self.rng)).clamp(0.0, 1.0);
                    y = (y + self.step.sample(&mut self.rng)).clamp(0.0, 1.0);
                }
                _ => {
                    x = (x + 0.07 + 0.04 * strength + self.step.sample(&mut self.rng)).clamp(0.0, 1.0);
                    y = (y + 2.0 * self.step.sample(&mut self.rng)).clamp(0.0, 1.0);
                }
            }
        }
    }
}

/// Simulates a round-robin league and returns raw event records.
///
/// Teams have fixed strengths, which shape how often they lose the ball,
/// how far they advance and how often they shoot and score. The second team
/// of every match is recorded with flipped coordinates.
pub fn synthetic_league(cfg: &LeagueConfig) -> Vec<RawEvent> {
    let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sim = Sim {
        rng,
        step: Normal::new(0.0, 0.06).expect("valid normal"),
        out: Vec::new(),
        cfg,
    };
    let n_teams = cfg.n_teams.max(2);
    let strengths: Vec<f64> = (0..n_teams)
        .map(|i| i as f64 / (n_teams - 1) as f64)
        .collect();
    let mut pairings = Vec::new();
    for round in 0.. {
        for a in 0..n_teams {
            for b in (a + 1)..n_teams {
                if (a + b + round) % 2 == 0 {
                    pairings.push((a, b));
                } else {
                    pairings.push((b, a));
                }
            }
        }
        if pairings.len() >= cfg.n_matches {
            break;
        }
    }
    // interleave so each team appears early and often
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(pairings.len());
    let stride = 3.min(pairings.len());
    for start in 0..stride {
        order.extend(pairings.iter().skip(start).step_by(stride));
    }
    let seconds_per_event = 5400.0 / cfg.events_per_match.max(10) as f64;

    for (m, &(home, away)) in order.iter().take(cfg.n_matches).enumerate() {
        let match_id = format!("M{m:03}");
        let teams = [format!("T{home}"), format!("T{away}")];
        let strength = [strengths[home], strengths[away]];
        let mut clock = 0.0;
        let mut side = sim.rng.random_range(0..2usize);
        let mut last_team = 0;
        while clock < 5400.0 - 30.0 {
            let start = sim.out.len();
            let t0 = clock;
            clock = sim.possession(&match_id, &teams[side], strength[side], clock, side == 1);
            // stretch the clock so matches have roughly the configured number of events
            let produced = (sim.out.len() - start) as f64;
            clock = clock.max(t0 + produced * seconds_per_event);
            last_team = side;
            side = 1 - side;
        }
        let flipped = last_team == 1;
        sim.emit(&match_id, &teams[last_team], ActionType::MatchEnd, 0.5, 0.5, clock.max(5399.0), flipped);
    }
    sim.out
}

/// Serializes raw events as JSON lines.
pub fn to_jsonl(events: &[RawEvent]) -> String {
    let mut s = String::new();
    for e in events {
        s.push_str(&serde_json::to_string(e).expect("raw events serialize"));
        s.push('\n');
    }
    s
}
