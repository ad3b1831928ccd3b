//! Multi-class classification with one independent binary model per class,
//! trained in parallel on the same stream and combined by arg-max score.

use bayespa::config::{ModelKind, RunConfig};
use bayespa::corpus::{minibatch_stream, Corpus, Label, LabelKind, SparseDoc};
use bayespa::predict::PredictMode;
use bayespa::run::{build_models, evaluate_set, train_batch};
use bayespa::synthetic::SyntheticSpec;

/// Four generating topics; each document's class is its dominant topic.
fn corpus(num_docs: usize, seed: u64) -> bayespa::Result<Corpus> {
    let spec = SyntheticSpec {
        num_docs,
        num_words: 80,
        num_topics: 4,
        seed,
        ..SyntheticSpec::default()
    };
    let s = spec.multilabel(0.0)?;
    let docs = s
        .corpus
        .docs()
        .iter()
        .zip(&s.zbar)
        .map(|(d, z)| {
            let class = bayespa::predict::argmax(z);
            SparseDoc::new(
                d.tokens().to_vec(),
                (0..4).map(|t| (t, Label::from_sign(t == class))).collect(),
            )
        })
        .collect::<bayespa::Result<Vec<_>>>()?;
    let names = ["alpha", "beta", "gamma", "delta"].map(String::from).to_vec();
    Corpus::new(docs, 80, names, LabelKind::MultiLabel)
}

fn main() -> bayespa::Result<()> {
    let train = corpus(3000, 1)?;
    let test = corpus(1000, 2)?;
    let cfg = RunConfig {
        model: ModelKind::MedLda,
        num_topics: 6,
        epsilon: Some(16.0),
        ..RunConfig::default()
    };
    let mut set = build_models(&cfg, &train, train.num_words())?;
    println!("{} binary models", set.models().len());
    for batch in minibatch_stream(&train, 64, 1, 1)? {
        train_batch(&mut set, &train, &batch.indices, cfg.pa_config()?)?;
    }
    let eval = evaluate_set(&set, &test, PredictMode::Mean, cfg.inference(), 0)?;
    println!("arg-max accuracy {:.3}", eval.metrics.accuracy);
    for t in &eval.metrics.tasks {
        println!("{}: F1 {:.3}", t.name, t.f1);
    }
    Ok(())
}
