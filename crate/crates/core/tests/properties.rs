use proptest::prelude::*;

use sigposs::dataset::Sample;
use sigposs::events::{read_canonical, segment_stream, write_canonical, ActionType, MatchEvent, Segment};
use sigposs::predictor::{loss, softmax, PredictorConfig, PredictorParams};
use sigposs::sig::{lyndon_words, path_signature, witt_count, AugmentedPath, TruncatedTensor};
use sigposs::synth::planted_samples;

fn points(dim: usize, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, dim), len)
}

fn sig(points: Vec<Vec<f64>>, order: usize) -> TruncatedTensor {
    path_signature(&AugmentedPath::plain(points).unwrap(), order).unwrap()
}

fn is_lyndon(w: &[usize]) -> bool {
    (1..w.len()).all(|k| w < &w[k..])
}

fn brute_force_lyndon(d: usize, m: usize) -> usize {
    let mut count = 0;
    for len in 1..=m {
        for code in 0..d.pow(len as u32) {
            let mut w = vec![0; len];
            let mut c = code;
            for slot in w.iter_mut().rev() {
                *slot = c % d;
                c /= d;
            }
            if is_lyndon(&w) {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn lyndon_counts_match_brute_force() {
    for d in 1..=6 {
        for m in 1..=4 {
            let words = lyndon_words(d, m);
            assert_eq!(words.len(), brute_force_lyndon(d, m), "d={d} m={m}");
            assert_eq!(words.len(), (1..=m).map(|n| witt_count(d, n)).sum::<usize>());
            assert!(words.iter().all(|w| is_lyndon(w)));
        }
    }
}

fn action() -> impl Strategy<Value = ActionType> {
    prop::sample::select(ActionType::ALL.to_vec())
}

fn stream() -> impl Strategy<Value = Vec<MatchEvent>> {
    prop::collection::vec((0usize..2, 0usize..2, action(), 0.0f64..=1.0, 0.0f64..=1.0), 0..40).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (m, team, action, x, y))| MatchEvent {
                match_id: format!("m{}", if i < 20 { 0 } else { m }),
                team_id: format!("T{team}"),
                action,
                x,
                y,
                t: i as f64 / 40.0,
                scrad: team as i32 - 1,
                competition: None,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chen_identity(a in points(3, 2..8), b in points(3, 1..8)) {
        let mut joined = a.clone();
        let mut tail = vec![a.last().unwrap().clone()];
        tail.extend(b.iter().cloned());
        joined.extend(b);
        let lhs = sig(joined, 4);
        let rhs = sig(a, 4).mul(&sig(tail, 4)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn shuffle_and_repetition(p in points(4, 2..10)) {
        let s = sig(p, 3);
        for i in 0..4 {
            prop_assert!((s.coeff(&[i, i]) - 0.5 * s.coeff(&[i]).powi(2)).abs() < 1e-10);
            for j in 0..4 {
                let lhs = s.coeff(&[i]) * s.coeff(&[j]);
                prop_assert!((lhs - s.coeff(&[i, j]) - s.coeff(&[j, i])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn log_exp_roundtrip(p in points(3, 2..10)) {
        let s = sig(p, 4);
        let back = s.log().unwrap().exp().unwrap();
        prop_assert!(s.max_abs_diff(&back) < 1e-10);
    }

    #[test]
    fn duplicated_points_do_not_change_signature(p in points(3, 2..8), k in 0usize..8) {
        let mut dup = p.clone();
        let at = k % p.len();
        dup.insert(at, p[at].clone());
        prop_assert!(sig(p, 3).max_abs_diff(&sig(dup, 3)) < 1e-12);
    }

    #[test]
    fn segmentation_partitions_the_stream(events in stream()) {
        let mut rebuilt = Vec::new();
        for seg in segment_stream(&events) {
            match seg {
                Segment::Possession(p) => {
                    prop_assert!(!p.events.is_empty());
                    prop_assert!(p.events.iter().all(|e| e.team_id == p.team_id && e.match_id == p.match_id));
                    prop_assert!(p.events.iter().all(|e| e.action != ActionType::MatchEnd));
                    let closers = p.events.iter().filter(|e| matches!(e.action, ActionType::Goal | ActionType::PossessionEnd)).count();
                    prop_assert!(closers <= 1);
                    rebuilt.extend(p.events);
                }
                Segment::MatchEnd(e) => rebuilt.push(e),
            }
        }
        prop_assert_eq!(rebuilt, events);
    }

    #[test]
    fn canonical_roundtrip(events in stream()) {
        let path = std::env::temp_dir().join(format!("sigposs-prop-{}.jsonl", std::process::id()));
        write_canonical(&path, &events).unwrap();
        let back = read_canonical(&path).unwrap();
        std::fs::remove_file(&path).ok();
        prop_assert_eq!(back, events);
    }

    #[test]
    fn softmax_is_on_simplex(logits in prop::collection::vec(-500.0f64..500.0, 7)) {
        let p = softmax(ndarray::ArrayView1::from(&logits[..]));
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn loss_is_invariant_to_batch_order(seed in 0u64..1000, rot in 0usize..8) {
        let mut cfg = PredictorConfig::default();
        cfg.hidden = 16;
        let params = PredictorParams::init(cfg, seed);
        let batch: Vec<Sample> = planted_samples(8, 3, seed);
        let mut rotated = batch.clone();
        rotated.rotate_left(rot);
        let (a, b) = (loss(&params, &batch), loss(&params, &rotated));
        prop_assert!((a.total - b.total).abs() < 1e-12);
    }
}
