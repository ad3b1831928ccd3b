//! Versioned JSON snapshots of trained models. Floats are written with
//! round-trip precision and the random stream state is included, so a
//! restored model continues training exactly as the saved one would have.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::medhdp::MedHdp;
use crate::medlda::MedLda;
use crate::model::{GaussianPosterior, Margin, RoundStats, TopicModel, TopicPosterior};
use crate::pa::PaState;

pub const SNAPSHOT_VERSION: u32 = 1;

/// Either online topic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnyModel {
    Lda(MedLda),
    Hdp(MedHdp),
}

impl AnyModel {
    fn inner(&self) -> &dyn TopicModel {
        match self {
            AnyModel::Lda(m) => m,
            AnyModel::Hdp(m) => m,
        }
    }
}

impl TopicModel for AnyModel {
    fn num_topics(&self) -> usize {
        self.inner().num_topics()
    }

    fn num_words(&self) -> usize {
        self.inner().num_words()
    }

    fn topics(&self) -> &TopicPosterior {
        self.inner().topics()
    }

    fn heads(&self) -> &[GaussianPosterior] {
        self.inner().heads()
    }

    fn tasks(&self) -> &[usize] {
        self.inner().tasks()
    }

    fn doc_prior(&self) -> Vec<f64> {
        self.inner().doc_prior()
    }

    fn round(&self) -> u64 {
        self.inner().round()
    }

    fn margin(&self) -> Margin {
        self.inner().margin()
    }

    fn process_minibatch(&mut self, corpus: &Corpus, batch: &[usize]) -> Result<RoundStats> {
        match self {
            AnyModel::Lda(m) => m.process_minibatch(corpus, batch),
            AnyModel::Hdp(m) => m.process_minibatch(corpus, batch),
        }
    }
}

/// What a run trained: one (possibly multi-task) model, or one independent
/// binary model per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ModelSet {
    Single {
        model: AnyModel,
    },
    OneVsAll {
        classes: Vec<String>,
        models: Vec<AnyModel>,
    },
    /// Plain PA weights: one vector for a binary task, or one per class.
    Pa {
        classes: Vec<String>,
        states: Vec<PaState>,
    },
}

impl ModelSet {
    pub fn models(&self) -> &[AnyModel] {
        match self {
            ModelSet::Single { model } => std::slice::from_ref(model),
            ModelSet::OneVsAll { models, .. } => models,
            ModelSet::Pa { .. } => &[],
        }
    }

    pub fn models_mut(&mut self) -> &mut [AnyModel] {
        match self {
            ModelSet::Single { model } => std::slice::from_mut(model),
            ModelSet::OneVsAll { models, .. } => models,
            ModelSet::Pa { .. } => &mut [],
        }
    }

    /// Represented topics of the first topic model, if any.
    pub fn num_topics(&self) -> Option<usize> {
        self.models().first().map(|m| m.num_topics())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub models: ModelSet,
    /// Mini-batches consumed so far, so a resumed run can skip them.
    pub batches_done: u64,
    #[serde(default)]
    pub docs_seen: u64,
    /// Seed of the mini-batch stream.
    pub stream_seed: u64,
    /// Arbitrary run metadata, such as the flattened configuration.
    #[serde(default)]
    pub meta: Vec<(String, String)>,
}

impl Snapshot {
    pub fn new(models: ModelSet, batches_done: u64, stream_seed: u64) -> Self {
        Self {
            version: SNAPSHOT_VERSION,
            models,
            batches_done,
            docs_seen: 0,
            stream_seed,
            meta: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
        if header.version != SNAPSHOT_VERSION {
            return Err(Error::SnapshotVersion {
                expected: SNAPSHOT_VERSION,
                found: header.version,
            });
        }
        serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medhdp::HdpHyper;
    use crate::medlda::LdaHyper;
    use crate::synthetic::SyntheticSpec;

    fn corpus() -> Corpus {
        SyntheticSpec {
            num_docs: 60,
            num_words: 20,
            ..SyntheticSpec::default()
        }
        .binary()
        .unwrap()
        .corpus
    }

    #[test]
    fn lda_round_trip_is_exact() {
        let c = corpus();
        let mut m = MedLda::new(3, 20, LdaHyper::defaults(3), 5).unwrap();
        m.process_minibatch(&c, &(0..30).collect::<Vec<_>>()).unwrap();
        let snap = Snapshot::new(
            ModelSet::Single {
                model: AnyModel::Lda(m),
            },
            1,
            9,
        );
        let back = Snapshot::from_json(&snap.to_json().unwrap()).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.to_json().unwrap(), snap.to_json().unwrap());
    }

    #[test]
    fn hdp_resume_continues_identically() {
        let c = corpus();
        let mut a = MedHdp::new(20, HdpHyper::default(), 5).unwrap();
        a.process_minibatch(&c, &(0..30).collect::<Vec<_>>()).unwrap();
        let text = Snapshot::new(
            ModelSet::Single {
                model: AnyModel::Hdp(a.clone()),
            },
            1,
            0,
        )
        .to_json()
        .unwrap();
        let mut b = match Snapshot::from_json(&text).unwrap().models {
            ModelSet::Single {
                model: AnyModel::Hdp(m),
            } => m,
            _ => unreachable!(),
        };
        let rest: Vec<usize> = (30..60).collect();
        a.process_minibatch(&c, &rest).unwrap();
        b.process_minibatch(&c, &rest).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_version_is_refused() {
        let m = MedLda::new(2, 5, LdaHyper::defaults(2), 1).unwrap();
        let mut snap = Snapshot::new(
            ModelSet::Single {
                model: AnyModel::Lda(m),
            },
            0,
            0,
        );
        snap.version = 99;
        let err = Snapshot::from_json(&snap.to_json().unwrap()).unwrap_err();
        assert!(matches!(err, Error::SnapshotVersion { expected: 1, found: 99 }));
        assert!(err.to_string().contains("expected 1, found 99"));
    }
}
