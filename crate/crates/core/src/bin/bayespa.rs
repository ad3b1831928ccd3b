use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use bayespa::config::RunConfig;
use bayespa::pa::PaConfig;
use bayespa::predict::{save_predictions, InferenceConfig, PredictMode};
use bayespa::run::{
    load_corpus, pa_baseline, preset_sensitivity, render_table, run_eval, run_train, write_json, write_metrics_csv,
    write_regret_csv, write_sensitivity_csv, GridSpec,
};
use bayespa::{Error, Result};

#[derive(Parser)]
#[command(name = "bayespa", version, about = "Online Bayesian passive-aggressive topic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a config file.
    Train(TrainArgs),
    /// Evaluate a snapshot on a labeled corpus.
    Eval(EvalArgs),
    /// Train over a grid of sampler settings and tabulate accuracy.
    Sensitivity(SensitivityArgs),
    /// Emit the regret curve of classic PA and averaging BayesPA.
    PaBaseline(PaArgs),
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for intra-batch parallelism.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Any config assignment, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        cfg.apply_overrides(self.set.iter().map(String::as_str))?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = Some(t);
        }
        if let Some(p) = &self.train {
            cfg.train = Some(p.clone());
        }
        if let Some(p) = &self.test {
            cfg.test = Some(p.clone());
        }
        Ok(())
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    snapshot_out: Option<PathBuf>,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "mean")]
    mode: PredictMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    burn_in: usize,
    #[arg(long, default_value_t = 20)]
    keep: usize,
    /// Metrics JSON; printed to stdout when absent.
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    #[arg(long)]
    predictions_out: Option<PathBuf>,
}

#[derive(Args)]
struct SensitivityArgs {
    /// `published`, `jb=J:beta,...`, `i=...`, `batch=...`, joined by `;`.
    #[arg(long)]
    grid: GridSpec,
    /// Base configuration naming the data and the model.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Results CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PaArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    task: usize,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Regret CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| io_err(p, e))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn io_err(path: &std::path::Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    args.overrides.apply(&mut cfg)?;
    if args.snapshot_out.is_some() {
        cfg.snapshot_out = args.snapshot_out;
    }
    if args.metrics_out.is_some() {
        cfg.metrics_out = args.metrics_out;
    }
    if args.resume.is_some() {
        cfg.resume = args.resume;
    }
    let report = run_train(&cfg)?;
    if cfg.metrics_out.is_none() {
        write_metrics_csv(&report.rows, std::io::stdout().lock()).map_err(|e| io_err("<stdout>".as_ref(), e))?;
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let inference = InferenceConfig {
        burn_in: args.burn_in,
        keep: args.keep,
    };
    let ev = run_eval(&args.snapshot, &args.test, args.mode, inference, args.seed)?;
    match &args.metrics_out {
        Some(p) => write_json(p, &ev)?,
        None => {
            let text = serde_json::to_string_pretty(&ev).map_err(|e| Error::Snapshot(e.to_string()))?;
            println!("{text}");
        }
    }
    if let Some(p) = &args.predictions_out {
        save_predictions(&ev.rows, p)?;
    }
    Ok(())
}

fn sensitivity(args: SensitivityArgs) -> Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    args.overrides.apply(&mut cfg)?;
    let cells = preset_sensitivity(&cfg, &args.grid)?;
    eprint!("{}", render_table(&cells));
    let mut out = open_out(&args.out)?;
    write_sensitivity_csv(&cells, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| io_err("<output>".as_ref(), e))
}

fn pa(args: PaArgs) -> Result<()> {
    let corpus = load_corpus(&args.train, bayespa::corpus::DEFAULT_MAX_DOC_LEN)?;
    let rows = pa_baseline(
        &corpus,
        PaConfig::new(args.epsilon, args.c)?,
        args.task,
        args.epochs,
        args.seed,
    )?;
    let mut out = open_out(&args.out)?;
    write_regret_csv(&rows, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| io_err("<output>".as_ref(), e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("BAYESPA_LOG", "info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sensitivity(a) => sensitivity(a),
        Command::PaBaseline(a) => pa(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
