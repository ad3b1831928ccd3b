//! A full training run driven by a `key = value` configuration, as the
//! command line tool performs it: periodic held-out metrics, then a summary.

use bayespa::config::RunConfig;
use bayespa::run::{run_train, write_metrics_csv};
use bayespa::synthetic::SyntheticSpec;

fn main() -> bayespa::Result<()> {
    let dir = std::env::temp_dir().join(format!("bayespa-config-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| bayespa::Error::Config(e.to_string()))?;
    SyntheticSpec::default()
        .binary()?
        .corpus
        .save_svmlight(dir.join("train.svm"))?;
    SyntheticSpec {
        num_docs: 1000,
        seed: 2,
        ..SyntheticSpec::default()
    }
    .binary()?
    .corpus
    .save_svmlight(dir.join("test.svm"))?;

    let mut cfg = RunConfig::from_text(
        "
        model = pamedhdp      # truncation-free topics
        batch_size = 64
        epochs = 2
        eval_every = 8
        seed = 11
        ",
    )?;
    cfg.train = Some(dir.join("train.svm"));
    cfg.test = Some(dir.join("test.svm"));
    let report = run_train(&cfg)?;
    write_metrics_csv(&report.rows, std::io::stdout().lock()).expect("stdout");
    println!(
        "final accuracy {:.3} with {} topics after {:.0} ms of training",
        report.evaluation.metrics.accuracy,
        report.snapshot.models.num_topics().unwrap_or(0),
        report.train_ms
    );
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
