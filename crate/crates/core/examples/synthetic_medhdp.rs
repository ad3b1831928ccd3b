//! Online MedHDP starting from a single topic: new topics are created as
//! the stream demands them. Prints the number of represented topics per
//! round and where the token mass ends up.

use bayespa::corpus::minibatch_stream;
use bayespa::medhdp::{HdpHyper, MedHdp};
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

    let mut model = MedHdp::new(train.num_words(), HdpHyper::default(), 3)?;
    let mut trajectory = Vec::new();
    for batch in minibatch_stream(&train, 64, 1, 3)? {
        trajectory.push(model.process_minibatch(&train, &batch.indices)?.num_topics);
    }
    println!("represented topics per round: {trajectory:?}");
    println!("topic births: {}", model.growth_log().len());

    let mass = model.topic_mass();
    let total: f64 = mass.iter().sum();
    for (k, m) in mass.iter().enumerate() {
        println!(
            "topic {k}: {:.1}% of tokens, top words {:?}",
            100.0 * m / total,
            model.topics().top_words(k, 6)
        );
    }
    let scores = score_corpus(&model, &test, PredictMode::Mean, InferenceConfig::default(), 0)?;
    let metrics = evaluate_rows(&binary_rows(&model, &test, &scores)?, test.task_names())?;
    println!("test accuracy {:.3}", metrics.accuracy);
    Ok(())
}
