//! Saving a model mid-stream and resuming it: the restored model carries its
//! random stream, so it continues exactly as the uninterrupted one.

use bayespa::corpus::minibatch_stream;
use bayespa::medhdp::{HdpHyper, MedHdp};
use bayespa::model::TopicModel;
use bayespa::snapshot::{AnyModel, ModelSet, Snapshot};
use bayespa::synthetic::SyntheticSpec;

fn main() -> bayespa::Result<()> {
    let train = SyntheticSpec::default().binary()?.corpus;
    let batches: Vec<_> = minibatch_stream(&train, 64, 1, 4)?.collect();
    let (first, rest) = batches.split_at(batches.len() / 2);

    let mut uninterrupted = MedHdp::new(train.num_words(), HdpHyper::default(), 4)?;
    for b in first {
        uninterrupted.process_minibatch(&train, &b.indices)?;
    }
    let path = std::env::temp_dir().join(format!("bayespa-example-{}.json", std::process::id()));
    Snapshot::new(
        ModelSet::Single {
            model: AnyModel::Hdp(uninterrupted.clone()),
        },
        first.len() as u64,
        4,
    )
    .save(&path)?;
    println!("saved after {} batches to {}", first.len(), path.display());

    let restored = Snapshot::load(&path)?;
    std::fs::remove_file(&path).ok();
    let ModelSet::Single { model: mut resumed } = restored.models else {
        unreachable!("saved a single model")
    };
    for b in rest {
        uninterrupted.process_minibatch(&train, &b.indices)?;
        resumed.process_minibatch(&train, &b.indices)?;
    }
    let same = AnyModel::Hdp(uninterrupted) == resumed;
    println!("resumed model identical to uninterrupted run: {same}");
    Ok(())
}
