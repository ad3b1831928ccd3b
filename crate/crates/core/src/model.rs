//! Global state shared by the topic models: Dirichlet topic posteriors,
//! Gaussian weight posteriors, and the supervision terms that couple them to
//! the per-document samplers.

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SparseDoc};
use crate::error::{Error, Result};
use crate::numerics::{digamma_pos, dot, SymMatrix};

/// Gaussian posterior `N(μ, Σ)` over classifier weights. The precision is
/// kept alongside the covariance so rounds can add to it directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPosterior {
    mean: Vec<f64>,
    cov: SymMatrix,
    precision: Option<SymMatrix>,
}

impl GaussianPosterior {
    /// Fails on a dimension mismatch. A singular covariance is accepted but
    /// leaves the posterior without a precision, so it cannot be updated.
    pub fn new(mean: Vec<f64>, cov: SymMatrix) -> Result<Self> {
        if cov.dim() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.dim(),
            });
        }
        let precision = cov.cholesky().ok().map(|f| f.inverse());
        Ok(Self { mean, cov, precision })
    }

    /// `N(mean, var · I)`
    pub fn isotropic(mean: Vec<f64>, var: f64) -> Self {
        let k = mean.len();
        Self {
            mean,
            cov: SymMatrix::scaled_identity(k, var),
            precision: Some(SymMatrix::scaled_identity(k, 1.0 / var)),
        }
    }

    /// Prior `N(0, v² I)`.
    pub fn prior(dim: usize, v: f64) -> Self {
        Self::isotropic(vec![0.0; dim], v * v)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &SymMatrix {
        &self.cov
    }

    pub fn precision(&self) -> Option<&SymMatrix> {
        self.precision.as_ref()
    }

    /// Appends an independent coordinate with prior `N(0, var)`.
    pub fn grow(&mut self, var: f64) {
        self.mean.push(0.0);
        self.cov.extend(var);
        if let Some(p) = self.precision.as_mut() {
            p.extend(1.0 / var);
        }
    }

    /// Marginalizes out coordinate `k`.
    pub fn remove(&mut self, k: usize) {
        self.mean.remove(k);
        self.cov.remove(k);
        self.precision = self.cov.cholesky().ok().map(|f| f.inverse());
    }

    /// Conjugate update
    /// `P* = P + S`, `μ* = P*⁻¹ (P μ + b)`, `Σ* = P*⁻¹`.
    /// With `diagonal` set only the diagonal of `S` is used.
    pub fn updated(&self, stats: &HeadStats, diagonal: bool) -> Result<GaussianPosterior> {
        let k = self.dim();
        if stats.precision.dim() != k || stats.linear.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: stats.precision.dim(),
            });
        }
        let prior_precision = self
            .precision
            .as_ref()
            .ok_or_else(|| Error::Numeric("weight posterior has a singular covariance".into()))?;
        let mut precision = prior_precision.clone();
        if diagonal {
            precision.add_scaled(1.0, &stats.precision.diagonal_part());
        } else {
            precision.add_scaled(1.0, &stats.precision);
        }
        if !precision.is_finite() {
            return Err(Error::Numeric("non-finite entries in the weight precision".into()));
        }
        let factor = precision.cholesky()?;
        let mut rhs = prior_precision.mul_vec(&self.mean);
        for (r, b) in rhs.iter_mut().zip(&stats.linear) {
            *r += b;
        }
        let mean = factor.solve(&rhs);
        let cov = factor.inverse();
        Ok(GaussianPosterior {
            mean,
            cov,
            precision: Some(precision),
        })
    }
}

/// Sufficient statistics gathered for one weight posterior during a round:
/// `c² Σ_d E[λ⁻¹ z̄ z̄ᵀ]` and `c Σ_d E[y (1 + cε λ⁻¹) z̄]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadStats {
    pub precision: SymMatrix,
    pub linear: Vec<f64>,
}

impl HeadStats {
    pub fn zeros(k: usize) -> Self {
        Self {
            precision: SymMatrix::zeros(k),
            linear: vec![0.0; k],
        }
    }

    /// Adds one kept sample of one document, pre-weighted by `weight`
    /// (the reciprocal of the number of kept samples).
    pub fn add_sample(&mut self, zbar: &[f64], inv_lambda: f64, y: f64, c: f64, epsilon: f64, weight: f64) {
        let k = zbar.len();
        // Topics created after this sample was drawn contribute zeros.
        let z: Vec<f64> = if k < self.linear.len() {
            let mut z = zbar.to_vec();
            z.resize(self.linear.len(), 0.0);
            z
        } else {
            zbar.to_vec()
        };
        self.precision.add_outer(weight * c * c * inv_lambda, &z);
        let s = weight * c * y * (1.0 + c * epsilon * inv_lambda);
        for (l, zi) in self.linear.iter_mut().zip(&z) {
            *l += s * zi;
        }
    }

    pub fn grow(&mut self) {
        self.precision.extend(0.0);
        self.linear.push(0.0);
    }
}

/// Per-topic Dirichlet posteriors over words with cached
/// `Λ_kw = Ψ(Δ_kw) − Ψ(Σ_w Δ_kw)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TopicCounts")]
pub struct TopicPosterior {
    num_topics: usize,
    num_words: usize,
    delta: Vec<f64>,
    #[serde(skip)]
    row_sums: Vec<f64>,
    #[serde(skip)]
    log_expect: Vec<f64>,
}

#[derive(Deserialize)]
struct TopicCounts {
    num_topics: usize,
    num_words: usize,
    delta: Vec<f64>,
}

impl From<TopicCounts> for TopicPosterior {
    fn from(raw: TopicCounts) -> Self {
        let mut t = TopicPosterior {
            num_topics: raw.num_topics,
            num_words: raw.num_words,
            delta: raw.delta,
            row_sums: Vec::new(),
            log_expect: Vec::new(),
        };
        t.refresh();
        t
    }
}

impl TopicPosterior {
    /// Symmetric `Dir(prior)` for every topic.
    pub fn new(num_topics: usize, num_words: usize, prior: f64) -> Result<Self> {
        if num_words == 0 {
            return Err(Error::Config("vocabulary must be non-empty".into()));
        }
        if !(prior > 0.0) {
            return Err(Error::Config(format!("topic prior must be positive, got {prior}")));
        }
        let mut t = Self {
            num_topics,
            num_words,
            delta: vec![prior; num_topics * num_words],
            row_sums: Vec::new(),
            log_expect: Vec::new(),
        };
        t.refresh();
        Ok(t)
    }

    /// Rebuilds the caches after deserialization or direct edits.
    pub fn refresh(&mut self) {
        let w = self.num_words;
        self.row_sums = self.delta.chunks(w).map(|r| r.iter().sum()).collect();
        self.log_expect = Vec::with_capacity(self.delta.len());
        for (row, &sum) in self.delta.chunks(w).zip(&self.row_sums) {
            let psi_sum = digamma_pos(sum);
            self.log_expect.extend(row.iter().map(|&d| digamma_pos(d) - psi_sum));
        }
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    #[inline]
    pub fn delta(&self, k: usize, w: usize) -> f64 {
        self.delta[k * self.num_words + w]
    }

    pub fn delta_row(&self, k: usize) -> &[f64] {
        &self.delta[k * self.num_words..(k + 1) * self.num_words]
    }

    #[inline]
    pub fn row_sum(&self, k: usize) -> f64 {
        self.row_sums[k]
    }

    /// `Λ_kw = E[log φ_kw]`.
    #[inline]
    pub fn log_expect(&self, k: usize, w: usize) -> f64 {
        self.log_expect[k * self.num_words + w]
    }

    /// `E[φ_kw] = Δ_kw / Σ_w Δ_kw`.
    #[inline]
    pub fn expected_phi(&self, k: usize, w: usize) -> f64 {
        self.delta(k, w) / self.row_sums[k]
    }

    /// Adds nonnegative pseudo-counts, row-major `K × W`, and refreshes
    /// the caches.
    pub fn add_counts(&mut self, counts: &[f64]) -> Result<()> {
        if counts.len() != self.delta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.delta.len(),
                found: counts.len(),
            });
        }
        if counts.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::Numeric("topic counts must be finite and nonnegative".into()));
        }
        for (d, c) in self.delta.iter_mut().zip(counts) {
            *d += c;
        }
        self.refresh();
        Ok(())
    }

    /// Appends a topic with symmetric prior `eta`.
    pub fn grow(&mut self, eta: f64) {
        self.delta.extend(std::iter::repeat_n(eta, self.num_words));
        self.num_topics += 1;
        let sum = eta * self.num_words as f64;
        self.row_sums.push(sum);
        let l = digamma_pos(eta) - digamma_pos(sum);
        self.log_expect.extend(std::iter::repeat_n(l, self.num_words));
    }

    pub fn remove(&mut self, k: usize) {
        let w = self.num_words;
        self.delta.drain(k * w..(k + 1) * w);
        self.log_expect.drain(k * w..(k + 1) * w);
        self.row_sums.remove(k);
        self.num_topics -= 1;
    }

    /// Indices of the `n` highest-weight words of topic `k`.
    pub fn top_words(&self, k: usize, n: usize) -> Vec<usize> {
        let row = self.delta_row(k);
        let mut idx: Vec<usize> = (0..row.len()).collect();
        idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        idx.truncate(n);
        idx
    }
}

/// Read-only view of one weight posterior used inside the samplers:
/// `μ`, `Σ`, and `M = μμᵀ + Σ = E[w wᵀ]`.
#[derive(Debug, Clone)]
pub struct HeadCache {
    pub mean: Vec<f64>,
    pub cov: SymMatrix,
    pub second_moment: SymMatrix,
}

impl HeadCache {
    pub fn new(post: &GaussianPosterior) -> Self {
        let mut m = post.covariance().clone();
        m.add_outer(1.0, post.mean());
        Self {
            mean: post.mean().to_vec(),
            cov: post.covariance().clone(),
            second_moment: m,
        }
    }

    pub fn grow(&mut self, var: f64) {
        self.mean.push(0.0);
        self.cov.extend(var);
        self.second_moment.extend(var);
    }
}

/// Margin hyperparameters entering the supervision terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub c: f64,
    pub epsilon: f64,
}

/// Supervision state of one (document, task) pair during sampling.
///
/// Holds `A = M C_d` so the token-level term
/// `c y (cε + λ) μ_k / (n λ) − c² (M_kk + 2 A_k) / (2 n² λ)`
/// costs O(1) per topic; moving a token between topics updates `A` in O(K).
#[derive(Debug, Clone, PartialEq)]
pub struct TaskTerm {
    pub head: usize,
    pub y: f64,
    pub lambda: f64,
    pub m_counts: Vec<f64>,
}

impl TaskTerm {
    pub fn new(head: usize, y: f64, k: usize) -> Self {
        Self {
            head,
            y,
            lambda: 1.0,
            m_counts: vec![0.0; k],
        }
    }

    pub fn reset(&mut self, cache: &HeadCache, counts: &[u32]) {
        let k = cache.mean.len();
        self.m_counts.clear();
        self.m_counts.resize(k, 0.0);
        for (j, &cj) in counts.iter().enumerate() {
            if cj == 0 {
                continue;
            }
            let row = cache.second_moment.row(j);
            for (a, &m) in self.m_counts.iter_mut().zip(row) {
                *a += cj as f64 * m;
            }
        }
    }

    /// Applies `C_d[topic] += delta` to `A`.
    #[inline]
    pub fn shift(&mut self, cache: &HeadCache, topic: usize, delta: f64) {
        let row = cache.second_moment.row(topic);
        for (a, &m) in self.m_counts.iter_mut().zip(row) {
            *a += delta * m;
        }
    }

    pub fn grow(&mut self) {
        // The new topic is independent of the others and has no tokens yet.
        self.m_counts.push(0.0);
    }

    /// Adds this task's supervision exponent for every topic to `logits`.
    /// `len` is the document length `n_d`.
    #[inline]
    pub fn add_logits(&self, cache: &HeadCache, margin: Margin, len: f64, logits: &mut [f64]) {
        let Margin { c, epsilon } = margin;
        let lin = c * self.y * (c * epsilon + self.lambda) / (len * self.lambda);
        let quad = c * c / (2.0 * len * len * self.lambda);
        for (k, l) in logits.iter_mut().enumerate() {
            let mkk = cache.second_moment.get(k, k);
            *l += lin * cache.mean[k] - quad * (mkk + 2.0 * self.m_counts[k]);
        }
    }

    /// `chi = c² (ζ̄² + z̄ᵀΣz̄)` with `ζ̄ = ε − y z̄ᵀμ`.
    pub fn lambda_chi(&self, cache: &HeadCache, margin: Margin, zbar: &[f64]) -> f64 {
        let zeta = margin.epsilon - self.y * dot(zbar, &cache.mean);
        margin.c * margin.c * (zeta * zeta + cache.cov.quad_form(zbar))
    }
}

/// Label sign of `doc` for each trained task, `None` where unlabeled.
pub(crate) fn task_labels(doc: &SparseDoc, tasks: &[usize]) -> Vec<Option<f64>> {
    tasks.iter().map(|&t| doc.label(t).map(|l| l.sign())).collect()
}

/// Builds the supervision terms of a document, enforcing that single-task
/// models see a label on every training document.
pub(crate) fn task_terms(doc: &SparseDoc, doc_index: usize, tasks: &[usize], k: usize) -> Result<Vec<TaskTerm>> {
    let labels = task_labels(doc, tasks);
    if tasks.len() == 1 && labels[0].is_none() {
        return Err(Error::MissingLabel(format!(
            "document {doc_index} has no label for task {}",
            tasks[0]
        )));
    }
    Ok(labels
        .into_iter()
        .enumerate()
        .filter_map(|(h, y)| y.map(|y| TaskTerm::new(h, y, k)))
        .collect())
}

/// Summary of one training round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: u64,
    pub docs: usize,
    pub tokens: usize,
    /// Per-document negative log-likelihood of the final sample under the
    /// updated topics, plus `2c` times the averaging hinge loss, averaged
    /// over documents.
    pub objective: f64,
    /// Training accuracy of `sign(μᵀz̄)` on the final sample, over all
    /// labeled (document, task) pairs.
    pub train_accuracy: f64,
    pub num_topics: usize,
}

/// Common surface of the online topic models.
pub trait TopicModel {
    fn num_topics(&self) -> usize;
    fn num_words(&self) -> usize;
    fn topics(&self) -> &TopicPosterior;
    fn heads(&self) -> &[GaussianPosterior];
    /// Corpus task id trained by each head.
    fn tasks(&self) -> &[usize];
    /// Per-topic Dirichlet parameter of a document's topic proportions,
    /// used for test-time inference.
    fn doc_prior(&self) -> Vec<f64>;
    fn round(&self) -> u64;
    fn margin(&self) -> Margin;
    fn process_minibatch(&mut self, corpus: &Corpus, batch: &[usize]) -> Result<RoundStats>;
}

/// Contribution of one document to [`RoundStats`].
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct DocScore {
    pub nll: f64,
    pub hinge: f64,
    pub correct: usize,
    pub labeled: usize,
}

/// Scores a document's final sample against updated globals.
/// `heads[h]` is the mean of head `h`; `labels` pairs a head with `y`.
pub(crate) fn score_doc(
    words: &[u32],
    counts: &[u32],
    doc_prior: &[f64],
    topics: &TopicPosterior,
    heads: &[GaussianPosterior],
    labels: impl Iterator<Item = (usize, f64)>,
    epsilon: f64,
) -> DocScore {
    let n = words.len() as f64;
    let k = topics.num_topics();
    let prior_sum: f64 = doc_prior.iter().take(k).sum();
    let theta: Vec<f64> = (0..k)
        .map(|j| (counts.get(j).copied().unwrap_or(0) as f64 + doc_prior[j]) / (n + prior_sum))
        .collect();
    let nll = -words
        .iter()
        .map(|&w| {
            (0..k)
                .map(|j| theta[j] * topics.expected_phi(j, w as usize))
                .sum::<f64>()
                .ln()
        })
        .sum::<f64>();
    let zbar: Vec<f64> = (0..k).map(|j| counts.get(j).copied().unwrap_or(0) as f64 / n).collect();
    let mut s = DocScore {
        nll,
        ..DocScore::default()
    };
    for (h, y) in labels {
        let score = dot(heads[h].mean(), &zbar);
        s.hinge += (epsilon - y * score).max(0.0);
        s.labeled += 1;
        if (score >= 0.0) == (y > 0.0) {
            s.correct += 1;
        }
    }
    s
}

pub(crate) fn summarize(round: u64, tokens: usize, num_topics: usize, c: f64, scores: &[DocScore]) -> RoundStats {
    let docs = scores.len();
    let (mut obj, mut correct, mut labeled) = (0.0, 0, 0);
    for s in scores {
        obj += s.nll + 2.0 * c * s.hinge;
        correct += s.correct;
        labeled += s.labeled;
    }
    RoundStats {
        round,
        docs,
        tokens,
        objective: if docs > 0 { obj / docs as f64 } else { 0.0 },
        train_accuracy: if labeled > 0 {
            correct as f64 / labeled as f64
        } else {
            0.0
        },
        num_topics,
    }
}
