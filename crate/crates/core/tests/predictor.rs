use sigposs::dataset::Sample;
use sigposs::eval::evaluate;
use sigposs::events::PitchPartition;
use sigposs::predictor::{
    gradient_check, train, LocationLoss, PredictorConfig, PredictorParams, TermScales, TrainConfig,
};
use sigposs::synth::planted_samples;

fn check(scales: TermScales) {
    let samples = planted_samples(6, 4, 17);
    let params = PredictorParams::init(PredictorConfig::default(), 3);
    let batch: Vec<&Sample> = samples.iter().collect();
    let entries = gradient_check(&params, &batch, scales, 1e-5, 50, 99);
    assert_eq!(entries.len(), 6 * 50 + 9);
    let worst = entries
        .iter()
        .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
        .unwrap();
    assert!(worst.rel_error < 1e-4, "{worst:?}");
}

#[test]
fn gradient_matches_finite_differences_location_term() {
    check(TermScales {
        location: 1.0,
        cel: 0.0,
    });
}

#[test]
fn gradient_matches_finite_differences_cel_term() {
    check(TermScales {
        location: 0.0,
        cel: 1.0,
    });
}

#[test]
fn learns_planted_rule() {
    let data = planted_samples(1200, 3, 5);
    let (train_set, test_set) = data.split_at(1000);
    let cfg = PredictorConfig::default();
    let out = train(train_set, &[], cfg.clone(), &TrainConfig::default()).unwrap();
    let part = PitchPartition::default_zones();
    let report = evaluate(&out.params, test_set, &part, cfg.lambda, LocationLoss::Rmse).unwrap();
    let untrained = evaluate(
        &PredictorParams::init(cfg.clone(), TrainConfig::default().seed),
        test_set,
        &part,
        cfg.lambda,
        LocationLoss::Rmse,
    )
    .unwrap();
    eprintln!("trained {report:?}\nuntrained brier {}", untrained.brier);
    assert!(report.brier < 0.30, "brier {}", report.brier);
    assert!(report.location_error < 0.05, "rmse {}", report.location_error);
    assert!((untrained.brier - 42.0 / 49.0).abs() < 0.05, "untrained brier {}", untrained.brier);
}
