//! Accuracy as a function of the sampler settings: samples per round `J`
//! against burn-in `β`, laid out as a table.

use bayespa::config::{ModelKind, RunConfig};
use bayespa::run::{preset_sensitivity, render_table, GridSpec};
use bayespa::synthetic::SyntheticSpec;

fn main() -> bayespa::Result<()> {
    let dir = std::env::temp_dir().join(format!("bayespa-grid-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| bayespa::Error::Config(e.to_string()))?;
    let train = dir.join("train.svm");
    let test = dir.join("test.svm");
    SyntheticSpec::default().binary()?.corpus.save_svmlight(&train)?;
    SyntheticSpec {
        num_docs: 1000,
        seed: 2,
        ..SyntheticSpec::default()
    }
    .binary()?
    .corpus
    .save_svmlight(&test)?;

    let base = RunConfig {
        model: ModelKind::MedLda,
        num_topics: 2,
        train: Some(train),
        test: Some(test),
        ..RunConfig::default()
    };
    let grid: GridSpec = "jb=1:0,3:0,5:0,5:2,9:6".parse()?;
    let cells = preset_sensitivity(&base, &grid)?;
    print!("{}", render_table(&cells));
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
