//! Training and evaluation runs driven by a [`RunConfig`], the sensitivity
//! grid over sampler settings, and the plain PA regret baseline.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ModelKind, RunConfig};
use crate::corpus::{load_svmlight_with, Corpus, LabelKind, LoadOptions, MinibatchStream};
use crate::error::{Error, Result};
use crate::medhdp::MedHdp;
use crate::medlda::MedLda;
use crate::model::TopicModel;
use crate::pa::{bayespa_avg_update, doc_features, hinge, pa_update, PaConfig, PaState};
use crate::predict::{
    argmax, evaluate_multiclass, evaluate_rows, one_vs_all_rows, save_predictions, score_corpus, task_names_for,
    task_rows, InferenceConfig, Metrics, PredictMode, PredictionRow,
};
use crate::snapshot::{AnyModel, ModelSet, Snapshot};

/// Seed of the mini-batch order derived from the run seed.
pub fn stream_seed(seed: u64) -> u64 {
    seed ^ 0xD1B5_4A32_D192_ED03
}

/// Seed of the independent model trained for class `class` in one-vs-all
/// mode.
pub fn class_seed(seed: u64, class: usize) -> u64 {
    seed.wrapping_add((class as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn load_corpus(path: &Path, max_doc_len: usize) -> Result<Corpus> {
    load_svmlight_with(path, &LoadOptions { max_doc_len })
}

/// True when every document has exactly one positive task.
pub fn is_multiclass(corpus: &Corpus) -> bool {
    corpus.kind() == LabelKind::MultiLabel && (0..corpus.len()).all(|i| corpus.class_of(i).is_some())
}

/// Fresh, untrained models for `cfg` over a vocabulary of `num_words`.
/// Binary corpora get one model; multi-label corpora get one independent
/// model per class, or one shared model for the multi-task variants.
pub fn build_models(cfg: &RunConfig, train: &Corpus, num_words: usize) -> Result<ModelSet> {
    let tasks = train.num_tasks();
    if tasks == 0 {
        return Err(Error::MissingLabel("training corpus has no tasks".into()));
    }
    let names = train.task_names().to_vec();
    for t in 0..tasks {
        if !train.docs().iter().any(|d| d.label(t).is_some_and(|l| l.is_pos())) {
            warn!("task {} has no positive training documents", names[t]);
        }
    }
    let make = |task_ids: Vec<usize>, seed: u64| -> Result<AnyModel> {
        Ok(if cfg.model.is_hdp() {
            AnyModel::Hdp(MedHdp::multitask(num_words, task_ids, cfg.hdp_hyper(), seed)?)
        } else {
            AnyModel::Lda(MedLda::multitask(
                cfg.num_topics,
                num_words,
                task_ids,
                cfg.lda_hyper(),
                seed,
            )?)
        })
    };
    Ok(match cfg.model {
        ModelKind::Pa => ModelSet::Pa {
            classes: names,
            states: vec![PaState::new(num_words); tasks],
        },
        m if m.is_multitask() || train.kind() == LabelKind::Binary => ModelSet::Single {
            model: make((0..tasks).collect(), cfg.seed)?,
        },
        _ => ModelSet::OneVsAll {
            models: (0..tasks)
                .map(|t| make(vec![t], class_seed(cfg.seed, t)))
                .collect::<Result<_>>()?,
            classes: names,
        },
    })
}

/// Processes one mini-batch with every model of the set and returns the
/// mean round objective. For PA it is the mean pre-update hinge loss.
pub fn train_batch(set: &mut ModelSet, corpus: &Corpus, batch: &[usize], pa: PaConfig) -> Result<f64> {
    match set {
        ModelSet::Pa { states, .. } => {
            let w = states.first().map_or(0, |s| s.mu.len());
            let mut total = 0.0;
            let mut n = 0usize;
            for &i in batch {
                let doc = corpus.doc(i);
                let x = doc_features(doc, w);
                if x.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for (t, state) in states.iter_mut().enumerate() {
                    let Some(y) = doc.label(t) else { continue };
                    total += hinge(&state.mu, &x, y.sign(), pa.epsilon);
                    n += 1;
                    *state = pa_update(state, &pa, &x, y.sign())?;
                }
            }
            Ok(if n == 0 { 0.0 } else { total / n as f64 })
        }
        ModelSet::Single { model } => Ok(model.process_minibatch(corpus, batch)?.objective),
        ModelSet::OneVsAll { models, .. } => {
            let objectives = models
                .par_iter_mut()
                .map(|m| m.process_minibatch(corpus, batch).map(|s| s.objective))
                .collect::<Result<Vec<_>>>()?;
            Ok(objectives.iter().sum::<f64>() / objectives.len() as f64)
        }
    }
}

/// Held-out predictions and their metrics.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub mode: PredictMode,
    pub metrics: Metrics,
    /// Test tokens outside the model vocabulary.
    pub oov_tokens: usize,
    #[serde(skip)]
    pub rows: Vec<PredictionRow>,
}

/// Scores `corpus` with every model of `set`. One-vs-all sets predict the
/// arg-max class when every test document has exactly one class and fall
/// back to per-class binary decisions otherwise.
pub fn evaluate_set(
    set: &ModelSet,
    corpus: &Corpus,
    mode: PredictMode,
    inference: InferenceConfig,
    seed: u64,
) -> Result<Evaluation> {
    let (scores, tasks, names, oov): (Vec<Vec<f64>>, Vec<usize>, Vec<String>, usize) = match set {
        ModelSet::Single { model } => {
            let s = score_corpus(model, corpus, mode, inference, seed)?;
            let oov = s.iter().map(|d| d.oov).sum();
            let names = task_names_for(corpus, model.tasks());
            (
                s.into_iter().map(|d| d.scores).collect(),
                model.tasks().to_vec(),
                names,
                oov,
            )
        }
        ModelSet::OneVsAll { classes, models } => {
            let mut per_doc = vec![Vec::with_capacity(models.len()); corpus.len()];
            let mut oov = 0;
            for (c, m) in models.iter().enumerate() {
                let s = score_corpus(m, corpus, mode, inference, class_seed(seed, c))?;
                // Every model shares the vocabulary, so any one gives the count.
                oov = s.iter().map(|d| d.oov).sum();
                for (row, d) in per_doc.iter_mut().zip(s) {
                    row.push(d.scores[0]);
                }
            }
            (per_doc, (0..models.len()).collect(), classes.clone(), oov)
        }
        ModelSet::Pa { classes, states } => {
            let w = states.first().map_or(0, |s| s.mu.len());
            let oov = corpus
                .docs()
                .iter()
                .flat_map(|d| d.tokens())
                .filter(|&&(word, _)| word as usize >= w)
                .map(|&(_, c)| c as usize)
                .sum();
            let per_doc = corpus
                .docs()
                .iter()
                .map(|d| {
                    let x = doc_features(d, w);
                    states.iter().map(|s| crate::numerics::dot(&s.mu, &x)).collect()
                })
                .collect();
            (per_doc, (0..states.len()).collect(), classes.clone(), oov)
        }
    };
    let argmax_classes = !matches!(set, ModelSet::Single { .. }) && tasks.len() > 1 && is_multiclass(corpus);
    let (rows, metrics) = if argmax_classes {
        let rows = one_vs_all_rows(corpus, &scores)?;
        let pred: Vec<usize> = scores.iter().map(|s| argmax(s)).collect();
        let gold: Vec<usize> = rows.iter().map(|r| r.gold as usize).collect();
        let metrics = evaluate_multiclass(&pred, &gold, &names)?;
        (rows, metrics)
    } else {
        let rows = task_rows(corpus, &tasks, &names, &scores)?;
        let metrics = evaluate_rows(&rows, &names)?;
        (rows, metrics)
    };
    Ok(Evaluation {
        mode,
        metrics,
        oov_tokens: oov,
        rows,
    })
}

/// F1 reported in metrics rows: the positive-class F1 of a single binary
/// task, the macro average otherwise.
pub fn headline_f1(m: &Metrics) -> f64 {
    match m.tasks.as_slice() {
        [only] => only.f1,
        _ => m.macro_f1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    /// Mini-batches processed so far.
    pub step: u64,
    pub docs_seen: u64,
    /// Training wall time so far, evaluation excluded.
    pub wall_ms: f64,
    pub accuracy: f64,
    pub f1: f64,
    /// Represented topics; 0 for the PA baseline.
    pub k_rep: usize,
    pub objective: f64,
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "step,docs_seen,wall_ms,accuracy,f1,k_rep,objective")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.3},{},{},{},{}",
            r.step, r.docs_seen, r.wall_ms, r.accuracy, r.f1, r.k_rep, r.objective
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub rows: Vec<MetricsRow>,
    /// Mean objective of every processed round.
    pub objectives: Vec<f64>,
    pub evaluation: Evaluation,
    pub snapshot: Snapshot,
    pub train_ms: f64,
    /// Whether the objective tolerance stopped training early.
    pub converged: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a [(String, String)],
    batches: u64,
    docs_seen: u64,
    train_ms: f64,
    converged: bool,
    k_rep: usize,
    evaluation: &'a Evaluation,
}

/// Trains according to `cfg` and writes the configured artifacts: metrics
/// CSV, JSON summary, predictions CSV and final snapshot.
pub fn run_train(cfg: &RunConfig) -> Result<TrainReport> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?
            .install(|| train_inner(cfg)),
        None => train_inner(cfg),
    }
}

fn train_inner(cfg: &RunConfig) -> Result<TrainReport> {
    let train_path = cfg
        .train
        .as_deref()
        .ok_or_else(|| Error::Config("`train` path is required".into()))?;
    let train = load_corpus(train_path, cfg.max_doc_len)?;
    let test = cfg
        .test
        .as_deref()
        .map(|p| load_corpus(p, cfg.max_doc_len))
        .transpose()?;
    let num_words = cfg
        .num_words
        .unwrap_or_else(|| train.num_words().max(test.as_ref().map_or(0, Corpus::num_words)));
    if num_words < train.num_words() {
        return Err(Error::Config(format!(
            "num_words = {num_words} is smaller than the training vocabulary ({})",
            train.num_words()
        )));
    }
    let eval_corpus = match &test {
        Some(t) => t,
        None => {
            warn!("no test corpus configured; evaluating on the training corpus");
            &train
        }
    };
    let stream_seed = stream_seed(cfg.seed);
    let (mut set, skip, mut docs_seen) = match &cfg.resume {
        Some(path) => {
            let snap = Snapshot::load(path)?;
            if snap.stream_seed != stream_seed {
                warn!("resuming with a different seed than the snapshot was trained with");
            }
            info!("resuming after {} mini-batches", snap.batches_done);
            (snap.models, snap.batches_done, snap.docs_seen)
        }
        None => (build_models(cfg, &train, num_words)?, 0, 0),
    };
    let pa = cfg.pa_config()?;
    let k_rep = |s: &ModelSet| s.num_topics().unwrap_or(0);
    let mut stream = MinibatchStream::new(train.len(), cfg.batch_size, cfg.epochs, stream_seed)?;
    for _ in 0..skip {
        stream.next();
    }
    let mut step = skip;
    let mut rows = Vec::new();
    let mut objectives = Vec::new();
    let mut train_ms = 0.0;
    let mut converged = false;
    for batch in stream {
        let start = Instant::now();
        let obj = train_batch(&mut set, &train, &batch.indices, pa)?;
        train_ms += start.elapsed().as_secs_f64() * 1e3;
        step += 1;
        docs_seen += batch.indices.len() as u64;
        if let (Some(tol), Some(&prev)) = (cfg.converge_tol, objectives.last()) {
            let prev: f64 = prev;
            converged = ((obj - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < tol;
        }
        objectives.push(obj);
        if !obj.is_finite() {
            return Err(Error::Numeric(format!("round objective became {obj} at step {step}")));
        }
        if cfg.eval_every > 0 && step % cfg.eval_every as u64 == 0 {
            let ev = evaluate_set(&set, eval_corpus, cfg.eval_mode, cfg.inference(), cfg.seed)?;
            info!(
                "step {step}: accuracy {:.4}, k_rep {}, {:.0} ms",
                ev.metrics.accuracy,
                k_rep(&set),
                train_ms
            );
            rows.push(MetricsRow {
                step,
                docs_seen,
                wall_ms: train_ms,
                accuracy: ev.metrics.accuracy,
                f1: headline_f1(&ev.metrics),
                k_rep: k_rep(&set),
                objective: obj,
            });
        }
        if converged {
            info!("objective converged after {step} mini-batches");
            break;
        }
    }
    let evaluation = evaluate_set(&set, eval_corpus, cfg.eval_mode, cfg.inference(), cfg.seed)?;
    if rows.last().map(|r| r.step) != Some(step) {
        rows.push(MetricsRow {
            step,
            docs_seen,
            wall_ms: train_ms,
            accuracy: evaluation.metrics.accuracy,
            f1: headline_f1(&evaluation.metrics),
            k_rep: k_rep(&set),
            objective: objectives.last().copied().unwrap_or(f64::NAN),
        });
    }
    let mut snapshot = Snapshot::new(set, step, stream_seed);
    snapshot.docs_seen = docs_seen;
    snapshot.meta = cfg.describe();

    if let Some(p) = &cfg.snapshot_out {
        snapshot.save(p)?;
    }
    if let Some(p) = &cfg.metrics_out {
        let f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
        write_metrics_csv(&rows, std::io::BufWriter::new(f)).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &cfg.predictions_out {
        save_predictions(&evaluation.rows, p)?;
    }
    if let Some(p) = &cfg.summary_out {
        let summary = Summary {
            config: &snapshot.meta,
            batches: step,
            docs_seen,
            train_ms,
            converged,
            k_rep: snapshot.models.num_topics().unwrap_or(0),
            evaluation: &evaluation,
        };
        write_json(p, &summary)?;
    }
    Ok(TrainReport {
        rows,
        objectives,
        evaluation,
        snapshot,
        train_ms,
        converged,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Snapshot(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Loads a snapshot and evaluates it on `test`.
pub fn run_eval(
    snapshot: &Path,
    test: &Path,
    mode: PredictMode,
    inference: InferenceConfig,
    seed: u64,
) -> Result<Evaluation> {
    let snap = Snapshot::load(snapshot)?;
    let corpus = load_corpus(test, crate::corpus::DEFAULT_MAX_DOC_LEN)?;
    evaluate_set(&snap.models, &corpus, mode, inference, seed)
}

/// Sampler settings to sweep: `(J, β)` cells crossed with outer iteration
/// counts and batch sizes. Empty axes keep the base configuration's value.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GridSpec {
    pub cells: Vec<(usize, usize)>,
    pub outer_iters: Vec<usize>,
    pub batch_sizes: Vec<usize>,
}

/// `(J, β)` cells of the published samples-versus-burn-in table.
pub const PUBLISHED_CELLS: [(usize, usize); 11] = [
    (1, 0),
    (3, 0),
    (3, 2),
    (5, 0),
    (5, 2),
    (5, 4),
    (9, 0),
    (9, 2),
    (9, 4),
    (9, 6),
    (9, 8),
];

/// Published accuracy of a `(J, β)` cell (full 20-class task, `K = 40`,
/// `|B| = 512`).
pub fn published_accuracy(samples: usize, burn_in: usize) -> Option<f64> {
    Some(match (samples, burn_in) {
        (1, 0) => 0.783,
        (3, 0) => 0.803,
        (3, 2) => 0.799,
        (5, 0) => 0.808,
        (5, 2) => 0.803,
        (5, 4) => 0.792,
        (9, 0) | (9, 2) | (9, 4) => 0.806,
        (9, 6) => 0.804,
        (9, 8) => 0.796,
        _ => return None,
    })
}

/// Cells that keep three samples each and are expected to agree.
pub fn equal_kept_family(samples: usize, burn_in: usize) -> bool {
    matches!((samples, burn_in), (3, 0) | (5, 2) | (9, 6))
}

impl FromStr for GridSpec {
    type Err = Error;

    /// Semicolon-separated axes: `published` for every cell of the published table,
    /// `jb=J:β,J:β,...`, `i=1,2,...` and `batch=64,512,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: String| Error::Config(format!("grid spec: {m}"));
        let num = |v: &str| v.trim().parse::<usize>().map_err(|_| bad(format!("bad number `{v}`")));
        let mut g = GridSpec::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "published" {
                g.cells.extend(PUBLISHED_CELLS);
                continue;
            }
            let (axis, values) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected axis=values, got `{part}`")))?;
            let values = values.split(',').map(str::trim).filter(|v| !v.is_empty());
            match axis.trim() {
                "jb" => {
                    for v in values {
                        let (j, b) = v
                            .split_once(':')
                            .ok_or_else(|| bad(format!("expected J:beta, got `{v}`")))?;
                        g.cells.push((num(j)?, num(b)?));
                    }
                }
                "i" | "I" => g.outer_iters = values.map(num).collect::<Result<_>>()?,
                "batch" | "B" => g.batch_sizes = values.map(num).collect::<Result<_>>()?,
                other => return Err(bad(format!("unknown axis `{other}`"))),
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCell {
    pub samples: usize,
    pub burn_in: usize,
    pub outer_iters: usize,
    pub batch_size: usize,
    pub accuracy: f64,
    pub f1: f64,
    pub train_ms: f64,
    pub reference_accuracy: Option<f64>,
    pub equal_kept_family: bool,
}

/// Trains one model per grid point on top of `base` and reports the final
/// held-out accuracy of each.
pub fn preset_sensitivity(base: &RunConfig, grid: &GridSpec) -> Result<Vec<SensitivityCell>> {
    let cells = if grid.cells.is_empty() {
        vec![(base.samples, base.burn_in)]
    } else {
        grid.cells.clone()
    };
    let iters = if grid.outer_iters.is_empty() {
        vec![base.outer_iters]
    } else {
        grid.outer_iters.clone()
    };
    let batches = if grid.batch_sizes.is_empty() {
        vec![base.batch_size]
    } else {
        grid.batch_sizes.clone()
    };
    let mut out = Vec::new();
    for &batch_size in &batches {
        for &outer_iters in &iters {
            for &(samples, burn_in) in &cells {
                let cfg = RunConfig {
                    samples,
                    burn_in,
                    outer_iters,
                    batch_size,
                    snapshot_out: None,
                    metrics_out: None,
                    summary_out: None,
                    predictions_out: None,
                    resume: None,
                    eval_every: 0,
                    ..base.clone()
                };
                let report = run_train(&cfg)?;
                let m = &report.evaluation.metrics;
                info!(
                    "J={samples} beta={burn_in} I={outer_iters} B={batch_size}: accuracy {:.4}",
                    m.accuracy
                );
                out.push(SensitivityCell {
                    samples,
                    burn_in,
                    outer_iters,
                    batch_size,
                    accuracy: m.accuracy,
                    f1: headline_f1(m),
                    train_ms: report.train_ms,
                    reference_accuracy: published_accuracy(samples, burn_in),
                    equal_kept_family: equal_kept_family(samples, burn_in),
                });
            }
        }
    }
    Ok(out)
}

pub fn write_sensitivity_csv<W: Write>(cells: &[SensitivityCell], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "J,beta,I,batch_size,accuracy,f1,train_ms,reference_accuracy,equal_kept_family"
    )?;
    for c in cells {
        let reference = c.reference_accuracy.map(|p| p.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{:.3},{},{}",
            c.samples,
            c.burn_in,
            c.outer_iters,
            c.batch_size,
            c.accuracy,
            c.f1,
            c.train_ms,
            reference,
            c.equal_kept_family
        )?;
    }
    Ok(())
}

/// Accuracies laid out with one row per `J` and one column per `β`, for
/// the cells sharing the first grid point's `I` and batch size.
pub fn render_table(cells: &[SensitivityCell]) -> String {
    let Some(first) = cells.first() else {
        return String::new();
    };
    let cells: Vec<&SensitivityCell> = cells
        .iter()
        .filter(|c| c.outer_iters == first.outer_iters && c.batch_size == first.batch_size)
        .collect();
    let mut js: Vec<usize> = cells.iter().map(|c| c.samples).collect();
    let mut bs: Vec<usize> = cells.iter().map(|c| c.burn_in).collect();
    js.sort_unstable();
    js.dedup();
    bs.sort_unstable();
    bs.dedup();
    let mut s = String::from("J\\beta");
    for b in &bs {
        let _ = write!(s, "\t{b}");
    }
    for j in &js {
        let _ = write!(s, "\n{j}");
        for b in &bs {
            match cells.iter().find(|c| c.samples == *j && c.burn_in == *b) {
                Some(c) => {
                    let _ = write!(s, "\t{:.3}", c.accuracy);
                }
                None => s.push('\t'),
            }
        }
    }
    s.push('\n');
    s
}

/// One round of the PA regret curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretRow {
    pub round: u64,
    /// Hinge loss suffered before the update.
    pub hinge: f64,
    pub cumulative_hinge: f64,
    pub cumulative_mistakes: u64,
    /// Largest coordinate gap between the PA weights and the BayesPA
    /// posterior mean.
    pub bayespa_gap: f64,
}

/// Runs classic PA and averaging BayesPA side by side over `corpus` in a
/// seeded order, on unit-norm term-frequency features of task `task`.
pub fn pa_baseline(corpus: &Corpus, cfg: PaConfig, task: usize, epochs: usize, seed: u64) -> Result<Vec<RegretRow>> {
    if task >= corpus.num_tasks() {
        return Err(Error::Config(format!(
            "task {task} not in corpus ({} tasks)",
            corpus.num_tasks()
        )));
    }
    let w = corpus.num_words();
    let mut pa_state = PaState::new(w);
    let mut bayes = PaState::new(w);
    let mut rows = Vec::new();
    let (mut cum, mut mistakes) = (0.0, 0u64);
    for batch in MinibatchStream::new(corpus.len(), 1, epochs, stream_seed(seed))? {
        let doc = corpus.doc(batch.indices[0]);
        let Some(y) = doc.label(task) else { continue };
        let x = doc_features(doc, w);
        if x.iter().all(|&v| v == 0.0) {
            continue;
        }
        let y = y.sign();
        let loss = hinge(&pa_state.mu, &x, y, cfg.epsilon);
        if (crate::numerics::dot(&pa_state.mu, &x) >= 0.0) != (y > 0.0) {
            mistakes += 1;
        }
        cum += loss;
        pa_state = pa_update(&pa_state, &cfg, &x, y)?;
        bayes = bayespa_avg_update(&bayes, &cfg, &x, y)?;
        let gap = pa_state
            .mu
            .iter()
            .zip(&bayes.mu)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rows.push(RegretRow {
            round: pa_state.round,
            hinge: loss,
            cumulative_hinge: cum,
            cumulative_mistakes: mistakes,
            bayespa_gap: gap,
        });
    }
    Ok(rows)
}

pub fn write_regret_csv<W: Write>(rows: &[RegretRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "round,hinge,cumulative_hinge,cumulative_mistakes,bayespa_gap")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.round, r.hinge, r.cumulative_hinge, r.cumulative_mistakes, r.bayespa_gap
        )?;
    }
    Ok(())
}
