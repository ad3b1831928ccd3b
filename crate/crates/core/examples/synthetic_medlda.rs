//! Online MedLDA on a synthetic two-topic corpus whose labels are linear in
//! the true topic proportions. Prints held-out accuracy as the stream
//! progresses.

use bayespa::corpus::minibatch_stream;
use bayespa::medlda::{LdaHyper, MedLda};
use bayespa::model::TopicModel;
use bayespa::predict::{binary_rows, evaluate_rows, score_corpus, InferenceConfig, PredictMode};
use bayespa::synthetic::SyntheticSpec;

fn main() -> bayespa::Result<()> {
    let train = SyntheticSpec::default().binary()?.corpus;
    let test = SyntheticSpec {
        num_docs: 1000,
        seed: 2,
        ..SyntheticSpec::default()
    }
    .binary()?
    .corpus;

    let mut model = MedLda::new(2, train.num_words(), LdaHyper::defaults(2), 1)?;
    for batch in minibatch_stream(&train, 64, 1, 1)? {
        let stats = model.process_minibatch(&train, &batch.indices)?;
        if batch.step % 8 == 7 {
            let scores = score_corpus(&model, &test, PredictMode::Mean, InferenceConfig::default(), 0)?;
            let metrics = evaluate_rows(&binary_rows(&model, &test, &scores)?, test.task_names())?;
            println!(
                "batch {:>2}: objective {:>9.2}, train accuracy {:.3}, test accuracy {:.3}",
                batch.step + 1,
                stats.objective,
                stats.train_accuracy,
                metrics.accuracy
            );
        }
    }
    for k in 0..2 {
        println!("topic {k} top words {:?}", model.topics().top_words(k, 8));
    }
    println!("weight mean {:.2?}", model.heads()[0].mean());
    Ok(())
}
