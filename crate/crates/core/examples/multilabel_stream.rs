//! Multi-task learning on a 20,000-document multi-label stream: one shared
//! topic model with a classifier per label, every label supervising the
//! topics. Reports per-label and macro F1.

use std::time::Instant;

use bayespa::corpus::minibatch_stream;
use bayespa::medlda::{LdaHyper, MedLda};
use bayespa::predict::{InferenceConfig, PredictMode};
use bayespa::run::evaluate_set;
use bayespa::snapshot::{AnyModel, ModelSet};
use bayespa::synthetic::SyntheticSpec;

fn main() -> bayespa::Result<()> {
    let spec = SyntheticSpec {
        num_docs: 20_000,
        num_words: 200,
        num_topics: 5,
        alpha: 0.3,
        ..SyntheticSpec::default()
    };
    let train = spec.multilabel(0.3)?.corpus;
    let test = SyntheticSpec {
        num_docs: 2000,
        seed: 2,
        ..spec
    }
    .multilabel(0.3)?
    .corpus;
    let tasks: Vec<usize> = (0..train.num_tasks()).collect();

    let hyper = LdaHyper {
        epsilon: 16.0,
        ..LdaHyper::defaults(10)
    };
    let mut model = MedLda::multitask(10, train.num_words(), tasks, hyper, 1)?;
    let start = Instant::now();
    for batch in minibatch_stream(&train, 256, 1, 1)? {
        bayespa::model::TopicModel::process_minibatch(&mut model, &train, &batch.indices)?;
    }
    println!("trained on {} documents in {:.2?}", train.len(), start.elapsed());

    let set = ModelSet::Single {
        model: AnyModel::Lda(model),
    };
    let eval = evaluate_set(&set, &test, PredictMode::Mean, InferenceConfig::default(), 0)?;
    for t in &eval.metrics.tasks {
        println!(
            "{}: precision {:.3} recall {:.3} F1 {:.3}",
            t.name, t.precision, t.recall, t.f1
        );
    }
    println!("macro F1 {:.3}", eval.metrics.macro_f1);
    Ok(())
}
