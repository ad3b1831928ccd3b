//! Test-time topic inference, classification rules, and evaluation metrics.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, SparseDoc};
use crate::error::{Error, Result};
use crate::model::{GaussianPosterior, TopicModel, TopicPosterior};
use crate::numerics::{dot, sample_gaussian_vector, RngStream};

/// Sweeps used by test-time inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InferenceConfig {
    pub burn_in: usize,
    pub keep: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self { burn_in: 20, keep: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestInference {
    pub zbar: Vec<f64>,
    /// Tokens skipped because their word id is outside the model vocabulary.
    pub oov: usize,
}

/// Infers `z̄` for an unseen document by collapsed Gibbs sampling with the
/// topics fixed at their posterior mean: token `i` takes topic `k` with
/// probability proportional to `(prior_k + C_dk) E[φ_k,w_i]`. The result
/// averages `C_d / n_d` over the kept sweeps. A document with no known words
/// gets the normalized prior.
pub fn infer_zbar_test<R: Rng + ?Sized>(
    doc: &SparseDoc,
    topics: &TopicPosterior,
    doc_prior: &[f64],
    cfg: InferenceConfig,
    rng: &mut R,
) -> Result<TestInference> {
    let k = topics.num_topics();
    if doc_prior.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: doc_prior.len(),
        });
    }
    if cfg.keep == 0 {
        return Err(Error::Config("test inference needs at least one kept sweep".into()));
    }
    let all = doc.expand();
    let words: Vec<usize> = all
        .iter()
        .map(|&w| w as usize)
        .filter(|&w| w < topics.num_words())
        .collect();
    let oov = all.len() - words.len();
    if words.is_empty() {
        let s: f64 = doc_prior.iter().sum();
        return Ok(TestInference {
            zbar: doc_prior.iter().map(|p| p / s).collect(),
            oov,
        });
    }
    let phi: Vec<Vec<f64>> = words
        .iter()
        .map(|&w| (0..k).map(|j| topics.expected_phi(j, w)).collect())
        .collect();
    let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
    let mut counts = vec![0u32; k];
    for &t in &z {
        counts[t] += 1;
    }
    let n = words.len() as f64;
    let mut zbar = vec![0.0; k];
    let mut cum = vec![0.0; k];
    for sweep in 0..cfg.burn_in + cfg.keep {
        for (i, p) in phi.iter().enumerate() {
            counts[z[i]] -= 1;
            let mut total = 0.0;
            for j in 0..k {
                total += (doc_prior[j] + counts[j] as f64) * p[j];
                cum[j] = total;
            }
            let u = rng.random::<f64>() * total;
            let t = cum.iter().position(|&c| u < c).unwrap_or(k - 1);
            z[i] = t;
            counts[t] += 1;
        }
        if sweep >= cfg.burn_in {
            for (acc, &c) in zbar.iter_mut().zip(&counts) {
                *acc += c as f64 / n;
            }
        }
    }
    zbar.iter_mut().for_each(|x| *x /= cfg.keep as f64);
    Ok(TestInference { zbar, oov })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictMode {
    /// Score with the posterior mean `μ`; deterministic.
    Mean,
    /// Score with one weight vector drawn from the posterior per head.
    Sampled,
}

impl std::str::FromStr for PredictMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "sampled" => Ok(Self::Sampled),
            other => Err(Error::Config(format!(
                "unknown prediction mode {other:?} (mean|sampled)"
            ))),
        }
    }
}

/// Classification weights of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedHead {
    pub posterior: GaussianPosterior,
    pub sampled: Option<Vec<f64>>,
}

impl TrainedHead {
    pub fn new<R: Rng + ?Sized>(posterior: &GaussianPosterior, mode: PredictMode, rng: &mut R) -> Result<Self> {
        let sampled = match mode {
            PredictMode::Mean => None,
            PredictMode::Sampled => {
                let factor = posterior.covariance().cholesky_psd(1e-12)?;
                Some(sample_gaussian_vector(rng, posterior.mean(), &factor)?)
            }
        };
        Ok(Self {
            posterior: posterior.clone(),
            sampled,
        })
    }

    pub fn weights(&self) -> &[f64] {
        self.sampled.as_deref().unwrap_or(self.posterior.mean())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub score: f64,
    /// `+1` or `-1`; a zero score counts as `+1`.
    pub label: f64,
}

pub fn predict_binary(head: &TrainedHead, zbar: &[f64]) -> Result<Prediction> {
    let w = head.weights();
    if w.len() != zbar.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            found: zbar.len(),
        });
    }
    let score = dot(w, zbar);
    Ok(Prediction {
        score,
        label: if score >= 0.0 { 1.0 } else { -1.0 },
    })
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Inference output for one document under one topic model.
#[derive(Debug, Clone, PartialEq)]
pub struct DocScores {
    pub zbar: Vec<f64>,
    /// One score per head of the model.
    pub scores: Vec<f64>,
    pub oov: usize,
}

/// Scores every document with every head of `model`. Document `i` draws
/// from `seed`'s stream forked by `i`, so results do not depend on the
/// number of threads.
pub fn score_corpus(
    model: &dyn SyncTopicModel,
    corpus: &Corpus,
    mode: PredictMode,
    cfg: InferenceConfig,
    seed: u64,
) -> Result<Vec<DocScores>> {
    let base = RngStream::new(seed);
    let mut head_rng = base.fork(u64::MAX);
    let heads = model
        .heads()
        .iter()
        .map(|p| TrainedHead::new(p, mode, &mut head_rng))
        .collect::<Result<Vec<_>>>()?;
    let prior = model.doc_prior();
    let topics = model.topics();
    (0..corpus.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = base.fork(i as u64);
            let inf = infer_zbar_test(corpus.doc(i), topics, &prior, cfg, &mut rng)?;
            let scores = heads
                .iter()
                .map(|h| predict_binary(h, &inf.zbar).map(|p| p.score))
                .collect::<Result<Vec<_>>>()?;
            Ok(DocScores {
                zbar: inf.zbar,
                scores,
                oov: inf.oov,
            })
        })
        .collect()
}

/// Topic models that can be shared across evaluation threads.
pub trait SyncTopicModel: TopicModel + Sync {}
impl<T: TopicModel + Sync> SyncTopicModel for T {}

/// One line of the predictions file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRow {
    pub doc_id: usize,
    pub task: String,
    pub score: f64,
    pub label: i64,
    pub gold: i64,
}

pub fn write_predictions<W: Write>(rows: &[PredictionRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "doc_id,task,score,label,gold")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.doc_id, r.task, r.score, r.label, r.gold)?;
    }
    Ok(())
}

pub fn save_predictions(rows: &[PredictionRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_predictions(rows, std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

/// Binary or multi-task predictions: one row per (document, trained task)
/// with a gold label. Fails if a document carries none of the trained
/// tasks' labels.
pub fn binary_rows(model: &dyn SyncTopicModel, corpus: &Corpus, scores: &[DocScores]) -> Result<Vec<PredictionRow>> {
    let per_doc: Vec<Vec<f64>> = scores.iter().map(|s| s.scores.clone()).collect();
    task_rows(corpus, model.tasks(), &task_names_for(corpus, model.tasks()), &per_doc)
}

/// Names for every task id in `tasks`, taken from `corpus` where it has
/// them.
pub fn task_names_for(corpus: &Corpus, tasks: &[usize]) -> Vec<String> {
    let n = tasks.iter().map(|&t| t + 1).max().unwrap_or(0).max(corpus.num_tasks());
    (0..n)
        .map(|t| {
            corpus
                .task_names()
                .get(t)
                .cloned()
                .unwrap_or_else(|| format!("task{t}"))
        })
        .collect()
}

/// Rows for `scores[doc][head]`, where head `h` predicts task `tasks[h]`
/// and `names` maps task ids to names.
pub fn task_rows(
    corpus: &Corpus,
    tasks: &[usize],
    names: &[String],
    scores: &[Vec<f64>],
) -> Result<Vec<PredictionRow>> {
    let mut rows = Vec::new();
    for (i, s) in scores.iter().enumerate() {
        let doc = corpus.doc(i);
        let before = rows.len();
        for (h, &task) in tasks.iter().enumerate() {
            let Some(gold) = doc.label(task) else { continue };
            let score = s[h];
            rows.push(PredictionRow {
                doc_id: i,
                task: names.get(task).cloned().unwrap_or_else(|| format!("task{task}")),
                score,
                label: if score >= 0.0 { 1 } else { -1 },
                gold: gold.sign() as i64,
            });
        }
        if rows.len() == before {
            return Err(Error::MissingLabel(format!(
                "test document {i} has no label for any trained task"
            )));
        }
    }
    Ok(rows)
}

/// One-vs-all predictions: one row per document with the winning class and
/// its score.
pub fn one_vs_all_rows(corpus: &Corpus, class_scores: &[Vec<f64>]) -> Result<Vec<PredictionRow>> {
    class_scores
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let gold = corpus
                .class_of(i)
                .ok_or_else(|| Error::MissingLabel(format!("test document {i} does not have exactly one class")))?;
            let best = argmax(s);
            Ok(PredictionRow {
                doc_id: i,
                task: "class".into(),
                score: s[best],
                label: best as i64,
                gold: gold as i64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TaskMetrics {
    pub name: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl TaskMetrics {
    fn finish(mut self) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        self.precision = ratio(self.tp, self.tp + self.fp);
        self.recall = ratio(self.tp, self.tp + self.fn_);
        let pr = self.precision + self.recall;
        self.f1 = if pr > 0.0 {
            2.0 * self.precision * self.recall / pr
        } else {
            0.0
        };
        self
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub n: usize,
    pub accuracy: f64,
    pub tasks: Vec<TaskMetrics>,
    /// Mean of the per-task F1 scores.
    pub macro_f1: f64,
}

impl Metrics {
    fn from_tasks(n: usize, correct: usize, tasks: Vec<TaskMetrics>) -> Self {
        let tasks: Vec<TaskMetrics> = tasks.into_iter().map(TaskMetrics::finish).collect();
        let macro_f1 = if tasks.is_empty() {
            0.0
        } else {
            tasks.iter().map(|t| t.f1).sum::<f64>() / tasks.len() as f64
        };
        Self {
            n,
            accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
            tasks,
            macro_f1,
        }
    }
}

/// Metrics over aligned `(task, positive?)` predictions and gold labels.
pub fn evaluate(predicted: &[(usize, bool)], gold: &[(usize, bool)], task_names: &[String]) -> Result<Metrics> {
    if predicted.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            found: predicted.len(),
        });
    }
    let mut tasks: Vec<TaskMetrics> = task_names
        .iter()
        .map(|n| TaskMetrics {
            name: n.clone(),
            ..TaskMetrics::default()
        })
        .collect();
    let mut correct = 0;
    for (&(tp, p), &(tg, g)) in predicted.iter().zip(gold) {
        if tp != tg || tg >= tasks.len() {
            return Err(Error::Domain(format!(
                "misaligned prediction for task {tp} vs gold task {tg}"
            )));
        }
        let m = &mut tasks[tg];
        match (p, g) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, true) => m.fn_ += 1,
            (false, false) => m.tn += 1,
        }
        correct += usize::from(p == g);
    }
    Ok(Metrics::from_tasks(gold.len(), correct, tasks))
}

/// Multi-class metrics; each class also gets its one-vs-rest confusion.
pub fn evaluate_multiclass(predicted: &[usize], gold: &[usize], class_names: &[String]) -> Result<Metrics> {
    if predicted.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            found: predicted.len(),
        });
    }
    let mut tasks: Vec<TaskMetrics> = class_names
        .iter()
        .map(|n| TaskMetrics {
            name: n.clone(),
            ..TaskMetrics::default()
        })
        .collect();
    let mut correct = 0;
    for (&p, &g) in predicted.iter().zip(gold) {
        for (c, m) in tasks.iter_mut().enumerate() {
            match (p == c, g == c) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, true) => m.fn_ += 1,
                (false, false) => m.tn += 1,
            }
        }
        correct += usize::from(p == g);
    }
    Ok(Metrics::from_tasks(gold.len(), correct, tasks))
}

/// Metrics for prediction rows produced by [`binary_rows`].
pub fn evaluate_rows(rows: &[PredictionRow], task_names: &[String]) -> Result<Metrics> {
    let index = |name: &str| {
        task_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Domain(format!("unknown task {name}")))
    };
    let mut pred = Vec::with_capacity(rows.len());
    let mut gold = Vec::with_capacity(rows.len());
    for r in rows {
        let t = index(&r.task)?;
        pred.push((t, r.label > 0));
        gold.push((t, r.gold > 0));
    }
    evaluate(&pred, &gold, task_names)
}
