use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sigposs::dataset::{build_dataset, split_train_test, DatasetFile, Sample};
use sigposs::eval::{evaluate, table_header, table_row, EvalReport};
use sigposs::events::{ingest_events, read_canonical, segment_possessions, MatchEvent, PitchPartition};
use sigposs::predictor::{
    predict_all, train, Checkpoint, EpochLog, OraclePredictor, Predictor, TrainConfig, UniformPredictor,
};
use sigposs::synth::{synthetic_league, to_jsonl, LeagueConfig};
use sigposs::value::{
    aggregate, attach_goals, attach_outcomes, check_disjoint_sources, correlation_matrix, fit_value_models,
    future_correlations, read_outcomes, value_dataset, write_rows_csv, TeamMatchRow, ValueConfig, ValueModels,
    ValuedPossession, METRIC_COLUMNS, OUTCOME_COLUMNS,
};
use sigposs_service::{AppState, ModelBundle, ServiceConfig};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::OutputSet;

pub fn dataset_path(dir: &Path, n_r: usize) -> PathBuf {
    dir.join(format!("dataset_nr{n_r}.json"))
}

pub fn split_path(dir: &Path) -> PathBuf {
    dir.join("split.json")
}

pub fn checkpoint_path(dir: &Path, n_r: usize) -> PathBuf {
    dir.join(format!("model_nr{n_r}.json"))
}

pub fn loss_log_path(dir: &Path, n_r: usize) -> PathBuf {
    dir.join(format!("loss_nr{n_r}.csv"))
}

/// Match ids assigned to each part of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub seed: u64,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl SplitFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    /// Splits samples into train, validation and test parts by match.
    pub fn partition(&self, samples: &[Sample]) -> [Vec<Sample>; 3] {
        let sets = [&self.train, &self.validation, &self.test].map(|ids| ids.iter().collect::<BTreeSet<_>>());
        let mut parts: [Vec<Sample>; 3] = Default::default();
        for s in samples {
            if let Some(k) = sets.iter().position(|set| set.contains(&s.match_id)) {
                parts[k].push(s.clone());
            }
        }
        parts
    }
}

pub fn make_split(events: &[MatchEvent], cfg: &RunConfig) -> Result<SplitFile, CliError> {
    let ids: Vec<String> = events
        .iter()
        .map(|e| e.match_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if ids.len() < 2 {
        log::warn!("only {} match(es); everything goes to the training part", ids.len());
        return Ok(SplitFile {
            seed: cfg.seed,
            train: ids,
            validation: Vec::new(),
            test: Vec::new(),
        });
    }
    let s = &cfg.split;
    let (rest, test) = split_train_test(&ids, cfg.seed, 1.0 - s.test_fraction)?;
    let (train, validation) = if s.validation_fraction > 0.0 && rest.len() >= 2 {
        split_train_test(&rest, cfg.seed.wrapping_add(1), 1.0 - s.validation_fraction / (1.0 - s.test_fraction))?
    } else {
        (rest, Vec::new())
    };
    Ok(SplitFile {
        seed: cfg.seed,
        train,
        validation,
        test,
    })
}

fn load_events(path: &Path) -> Result<Vec<MatchEvent>, CliError> {
    let events = read_canonical(path)?;
    if events.is_empty() {
        return Err(CliError::Data(format!("{} contains no events", path.display())));
    }
    Ok(events)
}

fn load_partition(cfg: &RunConfig) -> Result<PitchPartition, CliError> {
    match &cfg.paths.partition {
        Some(p) => Ok(PitchPartition::load(p)?),
        None => Ok(PitchPartition::default_zones()),
    }
}

fn load_value_models(path: &Path) -> Result<ValueModels, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_checkpoint(path: &Path, n_r: usize, sig_order: usize) -> Result<Checkpoint, CliError> {
    let ck = Checkpoint::load(path)?;
    if ck.n_r != n_r || ck.params.config.sig_order != sig_order {
        return Err(CliError::Data(format!(
            "{} was trained for n_r {} and order {}, data uses n_r {n_r} and order {sig_order}",
            path.display(),
            ck.n_r,
            ck.params.config.sig_order
        )));
    }
    Ok(ck)
}

fn load_dataset(dir: &Path, n_r: usize) -> Result<DatasetFile, CliError> {
    let path = dataset_path(dir, n_r);
    let file = DatasetFile::load(&path)?;
    if file.n_r != n_r {
        return Err(CliError::Data(format!("{} holds n_r {}, expected {n_r}", path.display(), file.n_r)));
    }
    Ok(file)
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn check_finite(what: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("{what} produced non-finite values")))
    }
}

fn report_values(r: &EvalReport) -> [f64; 5] {
    [r.test_loss, r.location_error, r.cel, r.brier, r.kl]
}

pub struct SynthOptions {
    pub output: PathBuf,
    pub league: LeagueConfig,
}

pub fn synth(opts: &SynthOptions, cfg: &RunConfig) -> Result<(), CliError> {
    let raw = synthetic_league(&opts.league);
    let mut out = OutputSet::new("synth");
    out.write(&opts.output, to_jsonl(&raw))?;
    log::info!("{} raw events over {} matches", raw.len(), opts.league.n_matches);
    out.commit(parent(&opts.output), cfg.settings_hash(), opts.league.seed)?;
    Ok(())
}

fn parent(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

pub fn ingest(cfg: &RunConfig, report_path: Option<&Path>) -> Result<(), CliError> {
    let report = ingest_events(&cfg.paths.raw_events)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    for r in &report.rejections {
        log::warn!("line {} rejected: {}", r.line, r.reason);
    }
    if report.events.is_empty() {
        return Err(CliError::Data(format!(
            "no valid events in {} ({} rejected)",
            cfg.paths.raw_events.display(),
            report.rejections.len()
        )));
    }
    let mut text = String::new();
    for e in &report.events {
        text.push_str(&serde_json::to_string(e).map_err(|e| CliError::Data(e.to_string()))?);
        text.push('\n');
    }
    let mut out = OutputSet::new("ingest");
    out.write(&cfg.paths.events, text)?;
    if let Some(p) = report_path {
        #[derive(Serialize)]
        struct Summary<'a> {
            events: usize,
            rejections: &'a [sigposs::events::Rejection],
            warnings: &'a [String],
        }
        out.write_json(
            p,
            &Summary {
                events: report.events.len(),
                rejections: &report.rejections,
                warnings: &report.warnings,
            },
        )?;
    }
    println!(
        "{} events written, {} rejected",
        report.events.len(),
        report.rejections.len()
    );
    out.commit(parent(&cfg.paths.events), cfg.settings_hash(), cfg.seed)?;
    Ok(())
}

pub fn build(cfg: &RunConfig) -> Result<(), CliError> {
    let events = load_events(&cfg.paths.events)?;
    let possessions = segment_possessions(&events);
    let split = make_split(&events, cfg)?;
    let dir = &cfg.paths.data_dir;
    let mut out = OutputSet::new("build");
    out.write_json(&split_path(dir), &split)?;
    for &n_r in &cfg.n_r {
        let samples = build_dataset(&possessions, n_r, cfg.sig_order)?;
        if samples.is_empty() {
            log::warn!("n_r {n_r}: no possession is long enough");
        }
        println!("n_r {n_r}: {} samples", samples.len());
        let file = DatasetFile::new(n_r, cfg.sig_order, samples);
        out.write(
            &dataset_path(dir, n_r),
            serde_json::to_string(&file).map_err(|e| CliError::Data(e.to_string()))?,
        )?;
    }
    out.commit(dir, cfg.settings_hash(), cfg.seed)?;
    Ok(())
}

fn loss_log_csv(log: &[EpochLog]) -> Result<Vec<u8>, CliError> {
    let rows: Vec<Vec<String>> = log
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                e.train.total.to_string(),
                e.train.location.to_string(),
                e.train.cel.to_string(),
                opt(e.validation.map(|v| v.total)),
                opt(e.validation.map(|v| v.location)),
                opt(e.validation.map(|v| v.cel)),
            ]
        })
        .collect();
    csv_bytes(
        &[
            "epoch",
            "train_total",
            "train_location",
            "train_cel",
            "validation_total",
            "validation_location",
            "validation_cel",
        ],
        &rows,
    )
}

pub fn train_models(cfg: &RunConfig) -> Result<(), CliError> {
    let split = SplitFile::load(&split_path(&cfg.paths.data_dir))?;
    let tcfg = cfg.train_config();
    let dir = &cfg.paths.model_dir;
    let mut out = OutputSet::new("train");
    for &n_r in &cfg.n_r {
        let file = load_dataset(&cfg.paths.data_dir, n_r)?;
        let [train_set, val_set, _] = split.partition(&file.samples);
        let outcome = train(&train_set, &val_set, cfg.model(file.sig_order), &tcfg)?;
        println!(
            "n_r {n_r}: {} train / {} validation samples, best epoch {}",
            train_set.len(),
            val_set.len(),
            outcome.best_epoch
        );
        let ck = Checkpoint::new(n_r, tcfg.clone(), outcome.best_epoch, outcome.params);
        out.write(&checkpoint_path(dir, n_r), ck.to_json()?)?;
        out.write(&loss_log_path(dir, n_r), loss_log_csv(&outcome.log)?)?;
    }
    out.commit(dir, cfg.settings_hash(), cfg.seed)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PredictorKind {
    /// The trained checkpoint of each history length.
    Model,
    /// The true next action and location (every loss is zero).
    Oracle,
    /// A uniform action distribution at the pitch center.
    Uniform,
}

impl PredictorKind {
    fn prefix(self) -> &'static str {
        match self {
            PredictorKind::Model => "eval",
            PredictorKind::Oracle => "eval_oracle",
            PredictorKind::Uniform => "eval_uniform",
        }
    }
}

const EVAL_COLUMNS: [&str; 7] = ["n_r", "test_loss", "location_error", "cel", "brier", "kl", "n_samples"];

fn eval_row(n_r: usize, r: &EvalReport) -> Vec<String> {
    let mut row = vec![n_r.to_string()];
    row.extend(report_values(r).iter().map(|v| v.to_string()));
    row.push(r.n_samples.to_string());
    row
}

pub fn eval(cfg: &RunConfig, kind: PredictorKind) -> Result<(), CliError> {
    let split = SplitFile::load(&split_path(&cfg.paths.data_dir))?;
    let partition = load_partition(cfg)?;
    let dir = &cfg.paths.output_dir;
    let prefix = kind.prefix();
    let mut out = OutputSet::new(prefix);
    let mut rows = Vec::new();
    println!("{}", table_header());
    for &n_r in &cfg.n_r {
        let file = load_dataset(&cfg.paths.data_dir, n_r)?;
        let [_, _, test] = split.partition(&file.samples);
        if test.is_empty() {
            return Err(CliError::Data(format!("n_r {n_r}: the test part has no samples")));
        }
        let ck;
        let (predictor, lambda, location_loss): (&dyn Predictor, f64, _) = match kind {
            PredictorKind::Model => {
                ck = load_checkpoint(&checkpoint_path(&cfg.paths.model_dir, n_r), n_r, file.sig_order)?;
                (&ck.params, ck.params.config.lambda, ck.params.config.location_loss)
            }
            PredictorKind::Oracle => (&OraclePredictor, cfg.lambda, cfg.location_loss),
            PredictorKind::Uniform => (&UniformPredictor { xy: [0.5, 0.5] }, cfg.lambda, cfg.location_loss),
        };
        let report = evaluate(predictor, &test, &partition, lambda, location_loss)?;
        check_finite("evaluation", &report_values(&report))?;
        println!("{}", table_row(n_r, &report));
        out.write_json(&dir.join(format!("{prefix}_nr{n_r}.json")), &report)?;
        rows.push(eval_row(n_r, &report));
    }
    out.write(&dir.join(format!("{prefix}_table.csv")), csv_bytes(&EVAL_COLUMNS, &rows)?)?;
    out.commit(dir, cfg.settings_hash(), cfg.seed)?;
    Ok(())
}

pub fn fit_models(cfg: &RunConfig) -> Result<(), CliError> {
    let events = load_events(&cfg.paths.value_events)?;
    let models = fit_value_models(&events, &cfg.value.exclude_competitions)?;
    check_finite("value model fit", &models.xg.gamma)?;
    let xg = &models.xg;
    println!(
        "xG: gamma {:?} from {} shots ({} Newton steps, ridge {}); xT: {} sweeps",
        xg.gamma, xg.n_shots, xg.iterations, xg.ridge, models.xt.iterations
    );
    let mut out = OutputSet::new("fit_value_models");
    out.write_json(&cfg.paths.value_models, &models)?;
    out.commit(parent(&cfg.paths.value_models), cfg.settings_hash(), cfg.seed)?;
    Ok(())
}

const POSSESSION_COLUMNS: [&str; 12] = [
    "match_id",
    "team_id",
    "possession_index",
    "had_attack",
    "n_forecasts",
    "lpv_pred",
    "lpv_obs",
    "hpus_pred",
    "hpus_obs",
    "poss_util_pred",
    "poss_util_obs",
    "rel_diff",
];

fn possession_row(v: &ValuedPossession) -> Vec<String> {
    vec![
        v.match_id.clone(),
        v.team_id.clone(),
        v.possession_index.to_string(),
        v.had_attack.to_string(),
        v.actions.len().to_string(),
        v.lpv_pred.to_string(),
        v.lpv_obs.to_string(),
        v.hpus_pred.to_string(),
        v.hpus_obs.to_string(),
        v.poss_util_pred.to_string(),
        v.poss_util_obs.to_string(),
        opt(v.rel_diff),
    ]
}

pub fn value(cfg: &RunConfig) -> Result<(), CliError> {
    let n_r = cfg.value.n_r;
    let events = load_events(&cfg.paths.events)?;
    let models = load_value_models(&cfg.paths.value_models)?;
    check_disjoint_sources(&models, &events)?;
    let possessions = segment_possessions(&events);
    let file = load_dataset(&cfg.paths.data_dir, n_r)?;
    let ck = load_checkpoint(&checkpoint_path(&cfg.paths.model_dir, n_r), n_r, file.sig_order)?;
    let preds = predict_all(&ck.params, &file.samples);
    let vcfg = ValueConfig {
        phi: cfg.value.phi,
        ..ValueConfig::default()
    };
    let valued = value_dataset(&possessions, &file.samples, &preds, &models, &vcfg)?;
    let totals: Vec<f64> = valued.iter().flat_map(|v| [v.lpv_pred, v.hpus_pred, v.poss_util_pred]).collect();
    check_finite("valuation", &totals)?;

    let dir = &cfg.paths.output_dir;
    let mut out = OutputSet::new("value");
    let mut jsonl = String::new();
    for v in &valued {
        jsonl.push_str(&serde_json::to_string(v).map_err(|e| CliError::Data(e.to_string()))?);
        jsonl.push('\n');
    }
    out.write(&dir.join(format!("valued_nr{n_r}.jsonl")), jsonl)?;
    let rows: Vec<Vec<String>> = valued.iter().map(possession_row).collect();
    out.write(
        &dir.join(format!("possession_values_nr{n_r}.csv")),
        csv_bytes(&POSSESSION_COLUMNS, &rows)?,
    )?;
    let mut team_rows = aggregate(&valued);
    attach_goals(&mut team_rows, &events);
    let mut buf = Vec::new();
    write_rows_csv(&team_rows, &mut buf)?;
    out.write(&dir.join(format!("team_match_nr{n_r}.csv")), buf)?;
    println!(
        "{} possessions valued, {} team-match rows",
        valued.len(),
        team_rows.len()
    );
    out.commit(dir, cfg.settings_hash(), cfg.seed)?;
    Ok(())
}

pub fn read_team_rows(path: &Path) -> Result<Vec<TeamMatchRow>, CliError> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    reader
        .deserialize()
        .map(|r| r.map_err(|e| CliError::Data(format!("{}: {e}", path.display()))))
        .collect()
}

pub fn report(cfg: &RunConfig) -> Result<(), CliError> {
    let n_r = cfg.value.n_r;
    let dir = &cfg.paths.output_dir;
    let mut rows = read_team_rows(&dir.join(format!("team_match_nr{n_r}.csv")))?;
    if let Some(p) = &cfg.paths.outcomes {
        attach_outcomes(&mut rows, &read_outcomes(p)?);
    }
    let columns: Vec<&str> = METRIC_COLUMNS.iter().chain(&OUTCOME_COLUMNS).copied().collect();
    let same = correlation_matrix(&rows, &columns);
    let next = future_correlations(&rows, &METRIC_COLUMNS, &OUTCOME_COLUMNS);
    let mut out = OutputSet::new("report");
    for (name, table) in [("correlations", &same), ("future_correlations", &next)] {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        out.write(&dir.join(format!("{name}_nr{n_r}.csv")), buf)?;
    }
    for m in ["lpv_pred", "hpus_pred", "poss_util_pred"] {
        let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.3}"));
        println!(
            "{m}: r(goals) {}, r(next goals) {}",
            fmt(same.get(m, "goals")),
            fmt(next.get(m, "next_goals"))
        );
    }
    out.commit(dir, cfg.settings_hash(), cfg.seed)?;
    Ok(())
}

/// One trained and evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct TunePoint {
    pub n_r: usize,
    pub lambda: f64,
    pub hidden: usize,
    pub batch_size: usize,
    pub sig_order: usize,
    pub best_epoch: usize,
    pub validation_loss: Option<f64>,
    pub report: EvalReport,
}

const TUNE_COLUMNS: [&str; 13] = [
    "n_r",
    "lambda",
    "hidden",
    "batch_size",
    "sig_order",
    "best_epoch",
    "validation_loss",
    "test_loss",
    "location_error",
    "cel",
    "brier",
    "kl",
    "n_samples",
];

pub fn tune(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.tune.validate()?;
    let events = load_events(&cfg.paths.events)?;
    let possessions = segment_possessions(&events);
    let split_file = split_path(&cfg.paths.data_dir);
    let split = if split_file.exists() {
        SplitFile::load(&split_file)?
    } else {
        make_split(&events, cfg)?
    };
    let partition = load_partition(cfg)?;
    let grid = &cfg.tune;
    log::info!("{} grid points per history length", grid.len());
    let mut points = Vec::new();
    for &n_r in &cfg.n_r {
        for &order in &grid.sig_order {
            let samples = build_dataset(&possessions, n_r, order)?;
            let [train_set, val_set, test] = split.partition(&samples);
            if test.is_empty() {
                return Err(CliError::Data(format!("n_r {n_r}: the test part has no samples")));
            }
            for &lambda in &grid.lambda {
                for &hidden in &grid.hidden {
                    for &batch_size in &grid.batch_size {
                        let mut model = cfg.model(order);
                        model.lambda = lambda;
                        model.hidden = hidden;
                        let tcfg = TrainConfig {
                            batch_size,
                            ..cfg.train_config()
                        };
                        let outcome = train(&train_set, &val_set, model, &tcfg)?;
                        let report = evaluate(&outcome.params, &test, &partition, lambda, cfg.location_loss)?;
                        check_finite("evaluation", &report_values(&report))?;
                        let validation_loss = outcome
                            .log
                            .iter()
                            .find(|e| e.epoch == outcome.best_epoch)
                            .and_then(|e| e.validation.map(|v| v.total));
                        log::info!(
                            "n_r {n_r} M {order} lambda {lambda} hidden {hidden} batch {batch_size}: test loss {:.4}",
                            report.test_loss
                        );
                        points.push(TunePoint {
                            n_r,
                            lambda,
                            hidden,
                            batch_size,
                            sig_order: order,
                            best_epoch: outcome.best_epoch,
                            validation_loss,
                            report,
                        });
                    }
                }
            }
        }
    }
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let mut r = vec![
                p.n_r.to_string(),
                p.lambda.to_string(),
                p.hidden.to_string(),
                p.batch_size.to_string(),
                p.sig_order.to_string(),
                p.best_epoch.to_string(),
                opt(p.validation_loss),
            ];
            r.extend(report_values(&p.report).iter().map(|v| v.to_string()));
            r.push(p.report.n_samples.to_string());
            r
        })
        .collect();
    let marginal = marginals(&points);
    let dir = &cfg.paths.output_dir;
    let mut out = OutputSet::new("tune");
    out.write(&dir.join("tune_grid.csv"), csv_bytes(&TUNE_COLUMNS, &rows)?)?;
    out.write(
        &dir.join("tune_marginals.csv"),
        csv_bytes(
            &["n_r", "parameter", "value", "runs", "mean_test_loss", "mean_brier", "mean_kl"],
            &marginal,
        )?,
    )?;
    for r in &marginal {
        println!("n_r {} {:>10} = {:<4} mean test loss {}", r[0], r[1], r[2], r[4]);
    }
    out.commit(dir, cfg.settings_hash(), cfg.seed)?;
    Ok(())
}

/// Mean metrics per value of each hyperparameter, per history length.
pub fn marginals(points: &[TunePoint]) -> Vec<Vec<String>> {
    type Key = (usize, &'static str, String);
    let mut groups: BTreeMap<Key, Vec<&TunePoint>> = BTreeMap::new();
    for p in points {
        let keys: [(&'static str, String); 4] = [
            ("batch_size", p.batch_size.to_string()),
            ("hidden", p.hidden.to_string()),
            ("lambda", p.lambda.to_string()),
            ("sig_order", p.sig_order.to_string()),
        ];
        for (name, value) in keys {
            groups.entry((p.n_r, name, value)).or_default().push(p);
        }
    }
    groups
        .into_iter()
        .map(|((n_r, name, value), ps)| {
            let mean = |f: fn(&EvalReport) -> f64| ps.iter().map(|p| f(&p.report)).sum::<f64>() / ps.len() as f64;
            vec![
                n_r.to_string(),
                name.to_string(),
                value,
                ps.len().to_string(),
                mean(|r| r.test_loss).to_string(),
                mean(|r| r.brier).to_string(),
                mean(|r| r.kl).to_string(),
            ]
        })
        .collect()
}

pub fn serve(cfg: &RunConfig, addr: SocketAddr, with_model: bool) -> Result<(), CliError> {
    let bundle = if with_model {
        let n_r = cfg.value.n_r;
        Some(ModelBundle::load(
            checkpoint_path(&cfg.paths.model_dir, n_r),
            &cfg.paths.value_models,
        )?)
    } else {
        None
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Data(format!("cannot start runtime: {e}")))?;
    runtime
        .block_on(sigposs_service::serve(addr, AppState::new(bundle), ServiceConfig::default()))
        .map_err(|e| CliError::Data(format!("server on {addr}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sigposs::events::ActionType;

    fn ev(m: &str) -> MatchEvent {
        MatchEvent {
            match_id: m.into(),
            team_id: "A".into(),
            action: ActionType::Pass,
            x: 0.5,
            y: 0.5,
            t: 0.1,
            scrad: 0,
            competition: None,
        }
    }

    #[test]
    fn split_covers_every_match_once() {
        let events: Vec<MatchEvent> = (0..10).map(|i| ev(&format!("M{i}"))).collect();
        let s = make_split(&events, &RunConfig::default()).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (7, 1, 2));
        let mut all: Vec<String> = s.train.iter().chain(&s.validation).chain(&s.test).cloned().collect();
        all.sort();
        let want: Vec<String> = (0..10).map(|i| format!("M{i}")).collect();
        assert_eq!(all, want);
        assert_eq!(s, make_split(&events, &RunConfig::default()).unwrap());
    }

    #[test]
    fn single_match_trains_on_everything() {
        let s = make_split(&[ev("only")], &RunConfig::default()).unwrap();
        assert_eq!(s.train, vec!["only".to_string()]);
        assert!(s.validation.is_empty() && s.test.is_empty());
    }

    #[test]
    fn marginals_average_per_value() {
        let report = |loss: f64| EvalReport {
            test_loss: loss,
            location_error: 0.0,
            location_loss: Default::default(),
            cel: 0.0,
            lambda: 1.0,
            brier: loss,
            kl: 0.0,
            per_zone_kl: Vec::new(),
            n_samples: 1,
        };
        let point = |hidden: usize, loss: f64| TunePoint {
            n_r: 3,
            lambda: 1.0,
            hidden,
            batch_size: 4,
            sig_order: 3,
            best_epoch: 1,
            validation_loss: None,
            report: report(loss),
        };
        let rows = marginals(&[point(64, 1.0), point(128, 3.0)]);
        let hidden64 = rows.iter().find(|r| r[1] == "hidden" && r[2] == "64").unwrap();
        assert_eq!(hidden64[4], "1");
        let lambda = rows.iter().find(|r| r[1] == "lambda").unwrap();
        assert_eq!((lambda[3].as_str(), lambda[4].as_str()), ("2", "2"));
    }
}
