mod commands;
mod config;
mod error;
mod output;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sigposs::predictor::LocationLoss;
use sigposs::synth::LeagueConfig;
use sigposs::value::Phi;

use commands::{PredictorKind, SynthOptions};
use config::RunConfig;
use error::CliError;

/// Possession forecasting and valuation pipeline.
#[derive(Debug, Parser)]
#[command(name = "sigposs", version)]
struct Cli {
    /// JSON run configuration; flags given on the command line win over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a league and write raw events.
    Synth(SynthArgs),
    /// Normalize raw events into the canonical event file.
    Ingest(IngestArgs),
    /// Split matches and build one forecasting dataset per history length.
    Build(BuildArgs),
    /// Train one model per history length; writes checkpoints and loss logs.
    Train(TrainArgs),
    /// Score models on the test matches and print a loss table.
    Eval(EvalArgs),
    /// Fit the shot and threat models on a separate event file.
    FitValueModels(FitArgs),
    /// Value every possession and aggregate per team and match.
    Value(ValueArgs),
    /// Correlate team-match metrics with each other and with outcomes.
    Report(ReportArgs),
    /// Train and evaluate every point of the hyperparameter grid.
    Tune(TuneArgs),
    /// Serve predictions over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Raw events file to write.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 10)]
    matches: usize,
    #[arg(long, default_value_t = 6)]
    teams: usize,
    /// Approximate number of events per match.
    #[arg(long, default_value_t = 300)]
    events_per_match: usize,
    /// Competition tag stamped on every event.
    #[arg(long, default_value = "synthetic")]
    competition: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Raw events (JSON lines).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Canonical events file to write.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write rejected lines and warnings as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Canonical events file.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Directory holding the split and the datasets.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[command(flatten)]
    data: DataArgs,
    /// History lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_r: Option<Vec<usize>>,
    /// Log-signature truncation order.
    #[arg(long)]
    sig_order: Option<usize>,
    /// Seed of the match split.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Weight of the cross-entropy term.
    #[arg(long)]
    lambda: Option<f64>,
    /// Width of both hidden layers.
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Seed of initialization and shuffling.
    #[arg(long)]
    seed: Option<u64>,
    /// Location error in the loss.
    #[arg(long, value_enum)]
    location_loss: Option<LocationLossArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum LocationLossArg {
    Rmse,
    Mse,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Directory holding the split and the datasets.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Directory for checkpoints and loss logs.
    #[arg(long)]
    model_dir: Option<PathBuf>,
    /// History lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_r: Option<Vec<usize>>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    model_dir: Option<PathBuf>,
    /// Directory for reports and the loss table.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// History lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_r: Option<Vec<usize>>,
    /// Zone partition (JSON) for the KL metric.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// What produces the forecasts.
    #[arg(long, value_enum, default_value_t = PredictorKind::Model)]
    predictor: PredictorKind,
    /// Weight of the cross-entropy term for the reference predictors.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Canonical events the models are fitted on.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Value model file to write.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Competition to leave out; repeatable.
    #[arg(long)]
    exclude: Vec<String>,
}

#[derive(Debug, Args)]
struct ValueArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model_dir: Option<PathBuf>,
    /// Value model file from `fit-value-models`.
    #[arg(long)]
    value_models: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// History length of the model to use.
    #[arg(long)]
    n_r: Option<usize>,
    /// Recency weighting of the utilization score.
    #[arg(long, value_enum)]
    phi: Option<PhiArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum PhiArg {
    Harmonic,
    Flat,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// History length whose valuation is reported.
    #[arg(long)]
    n_r: Option<usize>,
    /// CSV with columns match_id,team_id,goals,external_xg.
    #[arg(long)]
    outcomes: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// History lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_r: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    grid_lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    grid_hidden: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    grid_batch_size: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    grid_sig_order: Option<Vec<usize>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long)]
    model_dir: Option<PathBuf>,
    #[arg(long)]
    value_models: Option<PathBuf>,
    /// History length of the model to serve.
    #[arg(long)]
    n_r: Option<usize>,
    /// Start without a model; prediction routes answer 409.
    #[arg(long)]
    without_model: bool,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_data(cfg: &mut RunConfig, a: DataArgs) {
    set(&mut cfg.paths.events, a.events);
    set(&mut cfg.paths.data_dir, a.data_dir);
}

fn apply_model(cfg: &mut RunConfig, a: ModelArgs) {
    set(&mut cfg.lambda, a.lambda);
    set(&mut cfg.hidden, a.hidden);
    set(&mut cfg.optimizer.epochs, a.epochs);
    set(&mut cfg.optimizer.batch_size, a.batch_size);
    set(&mut cfg.optimizer.learning_rate, a.learning_rate);
    set(&mut cfg.seed, a.seed);
    set(
        &mut cfg.location_loss,
        a.location_loss.map(|l| match l {
            LocationLossArg::Rmse => LocationLoss::Rmse,
            LocationLossArg::Mse => LocationLoss::Mse,
        }),
    );
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth(a) => {
            let opts = SynthOptions {
                output: a.output,
                league: LeagueConfig {
                    n_matches: a.matches,
                    n_teams: a.teams,
                    events_per_match: a.events_per_match,
                    competition: a.competition,
                    seed: a.seed,
                },
            };
            if opts.league.n_matches == 0 {
                return Err(CliError::Usage("--matches must be positive".into()));
            }
            commands::synth(&opts, &cfg)
        }
        Command::Ingest(a) => {
            set(&mut cfg.paths.raw_events, a.input);
            set(&mut cfg.paths.events, a.output);
            commands::ingest(&cfg, a.report.as_deref())
        }
        Command::Build(a) => {
            apply_data(&mut cfg, a.data);
            set(&mut cfg.n_r, a.n_r);
            set(&mut cfg.sig_order, a.sig_order);
            set(&mut cfg.seed, a.seed);
            cfg.validate()?;
            commands::build(&cfg)
        }
        Command::Train(a) => {
            set(&mut cfg.paths.data_dir, a.data_dir);
            set(&mut cfg.paths.model_dir, a.model_dir);
            set(&mut cfg.n_r, a.n_r);
            apply_model(&mut cfg, a.model);
            cfg.validate()?;
            commands::train_models(&cfg)
        }
        Command::Eval(a) => {
            set(&mut cfg.paths.data_dir, a.data_dir);
            set(&mut cfg.paths.model_dir, a.model_dir);
            set(&mut cfg.paths.output_dir, a.output_dir);
            set(&mut cfg.n_r, a.n_r);
            set(&mut cfg.lambda, a.lambda);
            if a.partition.is_some() {
                cfg.paths.partition = a.partition;
            }
            cfg.validate()?;
            commands::eval(&cfg, a.predictor)
        }
        Command::FitValueModels(a) => {
            set(&mut cfg.paths.value_events, a.events);
            set(&mut cfg.paths.value_models, a.output);
            cfg.value.exclude_competitions.extend(a.exclude);
            commands::fit_models(&cfg)
        }
        Command::Value(a) => {
            apply_data(&mut cfg, a.data);
            set(&mut cfg.paths.model_dir, a.model_dir);
            set(&mut cfg.paths.value_models, a.value_models);
            set(&mut cfg.paths.output_dir, a.output_dir);
            set(&mut cfg.value.n_r, a.n_r);
            set(
                &mut cfg.value.phi,
                a.phi.map(|p| match p {
                    PhiArg::Harmonic => Phi::Harmonic,
                    PhiArg::Flat => Phi::Flat,
                }),
            );
            commands::value(&cfg)
        }
        Command::Report(a) => {
            set(&mut cfg.paths.output_dir, a.output_dir);
            set(&mut cfg.value.n_r, a.n_r);
            if a.outcomes.is_some() {
                cfg.paths.outcomes = a.outcomes;
            }
            commands::report(&cfg)
        }
        Command::Tune(a) => {
            apply_data(&mut cfg, a.data);
            set(&mut cfg.paths.output_dir, a.output_dir);
            set(&mut cfg.n_r, a.n_r);
            set(&mut cfg.tune.lambda, a.grid_lambda);
            set(&mut cfg.tune.hidden, a.grid_hidden);
            set(&mut cfg.tune.batch_size, a.grid_batch_size);
            set(&mut cfg.tune.sig_order, a.grid_sig_order);
            set(&mut cfg.optimizer.epochs, a.epochs);
            set(&mut cfg.seed, a.seed);
            cfg.validate()?;
            commands::tune(&cfg)
        }
        Command::Serve(a) => {
            set(&mut cfg.paths.model_dir, a.model_dir);
            set(&mut cfg.paths.value_models, a.value_models);
            set(&mut cfg.value.n_r, a.n_r);
            commands::serve(&cfg, a.addr, !a.without_model)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                // --help and --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{} (see --help)", first.trim());
            return ExitCode::from(1);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.one_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
