//! Synthetic labeled corpora drawn from a known topic model. Labels are a
//! deterministic linear function of each document's true topic proportions,
//! so a linear rule on the true `z̄` classifies them perfectly.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::corpus::{Corpus, Label, LabelKind, SparseDoc};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use std::collections::BTreeMap;

type Tokens = Vec<(u32, u32)>;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_docs: usize,
    pub num_words: usize,
    /// Number of generating topics. Each owns a contiguous block of the
    /// vocabulary.
    pub num_topics: usize,
    /// Document lengths are uniform on this inclusive range.
    pub min_len: usize,
    pub max_len: usize,
    /// Symmetric Dirichlet concentration of document proportions.
    pub alpha: f64,
    /// Fraction of each topic's mass spread uniformly over the whole
    /// vocabulary.
    pub overlap: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_docs: 2000,
            num_words: 50,
            num_topics: 2,
            min_len: 40,
            max_len: 80,
            alpha: 0.5,
            overlap: 0.1,
            seed: 1,
        }
    }
}

/// A generated corpus together with its ground truth.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub corpus: Corpus,
    /// True `z̄` of every document.
    pub zbar: Vec<Vec<f64>>,
    /// True topic-word distributions, `num_topics × num_words`.
    pub topics: Vec<Vec<f64>>,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.num_docs == 0 || self.num_topics == 0 || self.num_words < self.num_topics {
            return Err(Error::Config(
                "synthetic corpus needs docs, topics and num_words >= num_topics".into(),
            ));
        }
        if self.min_len == 0 || self.max_len < self.min_len {
            return Err(Error::Config("synthetic lengths need 1 <= min_len <= max_len".into()));
        }
        if !(self.alpha > 0.0) || !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::Config(
                "synthetic alpha must be positive and overlap in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn topic_word(&self) -> Vec<Vec<f64>> {
        let (k, w) = (self.num_topics, self.num_words);
        (0..k)
            .map(|t| {
                let lo = t * w / k;
                let hi = (t + 1) * w / k;
                (0..w)
                    .map(|v| {
                        let own = if (lo..hi).contains(&v) {
                            1.0 / (hi - lo) as f64
                        } else {
                            0.0
                        };
                        (1.0 - self.overlap) * own + self.overlap / w as f64
                    })
                    .collect()
            })
            .collect()
    }

    fn draw_docs(&self) -> Result<(Vec<Tokens>, Vec<Vec<f64>>)> {
        self.validate()?;
        let mut rng = RngStream::new(self.seed);
        let phi = self.topic_word();
        let gamma = Gamma::new(self.alpha, 1.0).map_err(|e| Error::Config(e.to_string()))?;
        let mut docs = Vec::with_capacity(self.num_docs);
        let mut zbars = Vec::with_capacity(self.num_docs);
        for _ in 0..self.num_docs {
            let mut theta: Vec<f64> = (0..self.num_topics).map(|_| gamma.sample(&mut rng)).collect();
            let s: f64 = theta.iter().sum();
            if s > 0.0 {
                theta.iter_mut().for_each(|t| *t /= s);
            } else {
                theta = vec![1.0 / self.num_topics as f64; self.num_topics];
            }
            let len = rng.random_range(self.min_len..=self.max_len);
            let mut counts = BTreeMap::new();
            let mut zc = vec![0usize; self.num_topics];
            for _ in 0..len {
                let z = pick(&theta, &mut rng);
                zc[z] += 1;
                *counts.entry(pick(&phi[z], &mut rng) as u32).or_insert(0u32) += 1;
            }
            zbars.push(zc.iter().map(|&c| c as f64 / len as f64).collect());
            docs.push(counts.into_iter().collect());
        }
        Ok((docs, zbars))
    }

    /// Binary corpus: `y = +1` iff the true share of topic 0 is at least
    /// that of topic 1.
    pub fn binary(&self) -> Result<Synthetic> {
        let (tokens, zbar) = self.draw_docs()?;
        let docs = tokens
            .into_iter()
            .zip(&zbar)
            .map(|(t, z)| SparseDoc::binary(t, Label::from_sign(z[0] >= z.get(1).copied().unwrap_or(0.0))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Synthetic {
            corpus: Corpus::new(docs, self.num_words, vec!["task0".into()], LabelKind::Binary)?,
            zbar,
            topics: self.topic_word(),
        })
    }

    /// One task per generating topic: task `t` is positive iff the true
    /// share of topic `t` is at least `threshold`.
    pub fn multilabel(&self, threshold: f64) -> Result<Synthetic> {
        let (tokens, zbar) = self.draw_docs()?;
        let docs = tokens
            .into_iter()
            .zip(&zbar)
            .map(|(t, z)| {
                let labels = z
                    .iter()
                    .enumerate()
                    .map(|(task, &share)| (task, Label::from_sign(share >= threshold)))
                    .collect();
                SparseDoc::new(t, labels)
            })
            .collect::<Result<Vec<_>>>()?;
        let names = (0..self.num_topics).map(|t| format!("task{t}")).collect();
        Ok(Synthetic {
            corpus: Corpus::new(docs, self.num_words, names, LabelKind::MultiLabel)?,
            zbar,
            topics: self.topic_word(),
        })
    }
}

fn pick<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * p.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}
