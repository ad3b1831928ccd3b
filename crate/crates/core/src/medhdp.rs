//! Online max-margin HDP topic model. Extends the online MedLDA round with
//! stick-breaking topic weights, Chinese-restaurant table counts, and
//! truncation-free creation of new topics.

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SparseDoc, DEFAULT_MAX_DOC_LEN};
use crate::error::{Error, Result};
use crate::model::{
    score_doc, summarize, task_labels, task_terms, DocScore, GaussianPosterior, HeadCache, HeadStats, Margin,
    RoundStats, TaskTerm, TopicModel, TopicPosterior,
};
use crate::numerics::{sample_beta, sample_categorical_logits_with, sample_gig_half, RngStream, StirlingTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdpHyper {
    /// Document-level concentration.
    pub alpha: f64,
    /// Top-level stick concentration.
    pub gamma_hdp: f64,
    /// Symmetric Dirichlet prior on topics.
    pub eta: f64,
    pub c: f64,
    pub epsilon: f64,
    pub v: f64,
    pub outer_iters: usize,
    pub samples: usize,
    pub burn_in: usize,
    /// Hard cap on represented topics. At the cap no new topic is created.
    pub max_topics: usize,
    /// Represented topics of a fresh model.
    pub initial_topics: usize,
    /// Drop topics that gained no counts for this many rounds.
    pub prune_window: Option<u64>,
    pub diagonal_cov: bool,
    pub reinit_z: bool,
    /// Longest document the table sampler accepts.
    pub max_doc_len: usize,
}

impl Default for HdpHyper {
    /// `α = 5`, `γ = 1`, `η = 0.45`, `ε = 164`, `c = v = 1`, one outer
    /// iteration of two sweeps without burn-in.
    fn default() -> Self {
        Self {
            alpha: 5.0,
            gamma_hdp: 1.0,
            eta: 0.45,
            c: 1.0,
            epsilon: 164.0,
            v: 1.0,
            outer_iters: 1,
            samples: 2,
            burn_in: 0,
            max_topics: 512,
            initial_topics: 1,
            prune_window: None,
            diagonal_cov: false,
            reinit_z: false,
            max_doc_len: DEFAULT_MAX_DOC_LEN,
        }
    }
}

impl HdpHyper {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("alpha", self.alpha),
            ("gamma_hdp", self.gamma_hdp),
            ("eta", self.eta),
            ("v", self.v),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {x}")));
            }
        }
        if !(self.c >= 0.0 && self.c.is_finite()) || !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config("c and epsilon must be nonnegative".into()));
        }
        if self.outer_iters == 0 || self.samples == 0 || self.burn_in >= self.samples {
            return Err(Error::Config(format!(
                "need outer_iters >= 1 and burn_in < samples, got I={} J={} burn_in={}",
                self.outer_iters, self.samples, self.burn_in
            )));
        }
        if self.initial_topics == 0 || self.initial_topics > self.max_topics {
            return Err(Error::Config(format!(
                "initial_topics must be in 1..={}, got {}",
                self.max_topics, self.initial_topics
            )));
        }
        Ok(())
    }

    pub fn margin(&self) -> Margin {
        Margin {
            c: self.c,
            epsilon: self.epsilon,
        }
    }
}

/// `Beta(u_k, v_k)` posteriors of the stick proportions of the represented
/// topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickPosterior {
    u: Vec<f64>,
    v: Vec<f64>,
}

impl StickPosterior {
    /// `k` sticks at the prior `Beta(1, γ)`.
    pub fn new(k: usize, gamma: f64) -> Self {
        Self {
            u: vec![1.0; k],
            v: vec![gamma; k],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn grow(&mut self, gamma: f64) {
        self.u.push(1.0);
        self.v.push(gamma);
    }

    pub fn remove(&mut self, k: usize) {
        self.u.remove(k);
        self.v.remove(k);
    }

    /// Draws `π̄_k ~ Beta(u_k + T_k, v_k + Σ_{j>k} T_j)` where `T` are the
    /// batch table totals per topic.
    pub fn sample<R: Rng + ?Sized>(&self, tables: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let tails = tail_sums(tables, self.len());
        (0..self.len())
            .map(|k| {
                let t = tables.get(k).copied().unwrap_or(0.0);
                let b = sample_beta(rng, self.u[k] + t, self.v[k] + tails[k])?;
                // Keep every stick strictly inside (0, 1).
                Ok(b.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
            })
            .collect()
    }

    /// `u_k += T_k`, `v_k += Σ_{j>k} T_j` with expected table totals `T`.
    pub fn update(&self, tables: &[f64]) -> Result<StickPosterior> {
        if tables.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::Numeric("table counts must be nonnegative".into()));
        }
        let tails = tail_sums(tables, self.len());
        Ok(StickPosterior {
            u: self
                .u
                .iter()
                .enumerate()
                .map(|(k, u)| u + tables.get(k).copied().unwrap_or(0.0))
                .collect(),
            v: self.v.iter().zip(&tails).map(|(v, t)| v + t).collect(),
        })
    }

    /// Stick weights at the posterior means `E[π̄_k]`.
    pub fn expected_weights(&self) -> Vec<f64> {
        let means: Vec<f64> = self.u.iter().zip(&self.v).map(|(u, v)| u / (u + v)).collect();
        stick_weights(&means).0
    }
}

fn tail_sums(tables: &[f64], k: usize) -> Vec<f64> {
    let mut tails = vec![0.0; k];
    let mut acc = 0.0;
    for j in (0..k).rev() {
        tails[j] = acc;
        acc += tables.get(j).copied().unwrap_or(0.0);
    }
    tails
}

/// `π_k = π̄_k Π_{i<k} (1 − π̄_i)` and the remaining mass `Π_k (1 − π̄_k)`.
pub fn stick_weights(pibar: &[f64]) -> (Vec<f64>, f64) {
    let mut rest = 1.0;
    let pi = pibar
        .iter()
        .map(|&b| {
            let p = b * rest;
            rest *= 1.0 - b;
            p
        })
        .collect();
    (pi, rest)
}

/// Draws a table count `s ∈ 1..=n` with probability proportional to
/// `S(n, s) (weight)^s`; `n = 0` gives 0. The table must hold row `n`.
pub fn sample_table_count<R: Rng + ?Sized>(
    n: usize,
    weight: f64,
    stirling: &StirlingTable,
    scratch: &mut Vec<f64>,
    rng: &mut R,
) -> Result<usize> {
    if n == 0 {
        return Ok(0);
    }
    if n == 1 {
        return Ok(1);
    }
    let lw = weight.ln();
    if !lw.is_finite() {
        // A vanishing or overwhelming weight puts all mass on one end.
        return Ok(if lw > 0.0 { n } else { 1 });
    }
    if n > stirling.n_max() {
        return Err(Error::Domain(format!(
            "Stirling table holds rows up to {}, need {n}",
            stirling.n_max()
        )));
    }
    let row = stirling.row(n);
    let logits: Vec<f64> = (1..=n).map(|s| row[s] + s as f64 * lw).collect();
    Ok(1 + sample_categorical_logits_with(rng, &logits, scratch)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEvent {
    pub round: u64,
    pub topic: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HdpDoc {
    words: Vec<u32>,
    z: Vec<u32>,
    counts: Vec<u32>,
    tables: Vec<u32>,
    terms: Vec<TaskTerm>,
    counted: bool,
}

impl HdpDoc {
    pub fn new(doc: &SparseDoc, terms: Vec<TaskTerm>) -> Self {
        let words = doc.expand();
        Self {
            z: vec![0; words.len()],
            words,
            counts: Vec::new(),
            tables: Vec::new(),
            terms,
            counted: false,
        }
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub fn assignments(&self) -> &[u32] {
        &self.z
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn tables(&self) -> &[u32] {
        &self.tables
    }

    pub fn terms(&self) -> &[TaskTerm] {
        &self.terms
    }

    pub fn zbar(&self) -> Vec<f64> {
        let n = self.words.len() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Mutable state of one training round: the round's prior globals (grown as
/// topics are created), the current weight posteriors, and the batch's local
/// variables.
#[derive(Debug)]
pub struct HdpRound<'h> {
    hyper: &'h HdpHyper,
    round: u64,
    /// Prior topics `Δᵗ` of this round.
    pub topics: TopicPosterior,
    /// Prior sticks `(uᵗ, vᵗ)` of this round.
    pub sticks: StickPosterior,
    heads_prior: Vec<GaussianPosterior>,
    heads: Vec<GaussianPosterior>,
    caches: Vec<HeadCache>,
    pub docs: Vec<HdpDoc>,
    word_topic: Vec<u32>,
    topic_totals: Vec<u32>,
    pibar: Vec<f64>,
    pi: Vec<f64>,
    remainder: f64,
    stirling: &'h mut StirlingTable,
    growth: Vec<GrowthEvent>,
    cap_warned: bool,
    allow_growth: bool,
    logits: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'h> HdpRound<'h> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        hyper: &'h HdpHyper,
        round: u64,
        topics: TopicPosterior,
        sticks: StickPosterior,
        heads: Vec<GaussianPosterior>,
        docs: Vec<HdpDoc>,
        stirling: &'h mut StirlingTable,
    ) -> Result<Self> {
        let k = topics.num_topics();
        if sticks.len() != k || heads.iter().any(|h| h.dim() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: sticks.len(),
            });
        }
        let longest = docs.iter().map(|d| d.words.len()).max().unwrap_or(1).max(1);
        if longest > hyper.max_doc_len {
            return Err(Error::InvalidDoc(format!(
                "document of {longest} tokens exceeds the limit of {}",
                hyper.max_doc_len
            )));
        }
        stirling.ensure(longest)?;
        let w = topics.num_words();
        let caches = heads.iter().map(HeadCache::new).collect();
        let mut r = Self {
            hyper,
            round,
            word_topic: vec![0; k * w],
            topic_totals: vec![0; k],
            pibar: Vec::new(),
            pi: Vec::new(),
            remainder: 1.0,
            topics,
            sticks,
            heads_prior: heads.clone(),
            heads,
            caches,
            docs,
            stirling,
            growth: Vec::new(),
            cap_warned: false,
            allow_growth: true,
            logits: Vec::new(),
            scratch: Vec::new(),
        };
        for d in &mut r.docs {
            d.counts = vec![0; k];
            d.tables = vec![0; k];
        }
        Ok(r)
    }

    pub fn num_topics(&self) -> usize {
        self.topics.num_topics()
    }

    pub fn heads(&self) -> &[GaussianPosterior] {
        &self.heads
    }

    /// Enables or disables creation of new topics.
    pub fn set_growth(&mut self, allow: bool) {
        self.allow_growth = allow;
    }

    pub fn growth(&self) -> &[GrowthEvent] {
        &self.growth
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn remainder(&self) -> f64 {
        self.remainder
    }

    /// Fixes the stick proportions instead of sampling them.
    pub fn set_sticks(&mut self, pibar: Vec<f64>) -> Result<()> {
        if pibar.len() != self.num_topics() {
            return Err(Error::DimensionMismatch {
                expected: self.num_topics(),
                found: pibar.len(),
            });
        }
        if pibar.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::Domain("stick proportions must lie in (0, 1)".into()));
        }
        let (pi, rest) = stick_weights(&pibar);
        self.pibar = pibar;
        self.pi = pi;
        self.remainder = rest;
        Ok(())
    }

    fn margin(&self) -> Margin {
        self.hyper.margin()
    }

    /// Batch table totals per topic.
    pub fn table_totals(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.num_topics()];
        for d in &self.docs {
            for (acc, &s) in t.iter_mut().zip(&d.tables) {
                *acc += s as f64;
            }
        }
        t
    }

    /// Resamples `π̄` given the batch table counts.
    pub fn sample_sticks<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let pibar = self.sticks.sample(&self.table_totals(), rng)?;
        self.set_sticks(pibar)
    }

    fn move_token(&mut self, d: usize, i: usize, k: usize, delta: i32) {
        let w = self.topics.num_words();
        let word = self.docs[d].words[i] as usize;
        let doc = &mut self.docs[d];
        let cell = &mut self.word_topic[k * w + word];
        *cell = cell.wrapping_add_signed(delta);
        let tot = &mut self.topic_totals[k];
        *tot = tot.wrapping_add_signed(delta);
        doc.counts[k] = doc.counts[k].wrapping_add_signed(delta);
        for term in &mut doc.terms {
            term.shift(&self.caches[term.head], k, delta as f64);
        }
    }

    /// Assigns every token uniformly at random, then draws λ.
    pub fn init_uniform<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let k = self.num_topics() as u32;
        for d in 0..self.docs.len() {
            self.uncount_doc(d);
            for t in &mut self.docs[d].z {
                *t = rng.random_range(0..k);
            }
            self.recount_doc(d);
            self.sample_lambdas(d, rng)?;
        }
        Ok(())
    }

    /// Overwrites a document's assignments and clears its tables.
    pub fn set_assignments(&mut self, d: usize, z: &[u32]) -> Result<()> {
        let k = self.num_topics();
        if z.len() != self.docs[d].z.len() || z.iter().any(|&t| t as usize >= k) {
            return Err(Error::Domain(
                "assignments do not fit the document or topic range".into(),
            ));
        }
        self.uncount_doc(d);
        self.docs[d].z.copy_from_slice(z);
        self.recount_doc(d);
        Ok(())
    }

    fn uncount_doc(&mut self, d: usize) {
        let w = self.topics.num_words();
        let doc = &mut self.docs[d];
        if doc.counted {
            for (&t, &word) in doc.z.iter().zip(&doc.words) {
                self.word_topic[t as usize * w + word as usize] -= 1;
                self.topic_totals[t as usize] -= 1;
            }
        }
        doc.counts.iter_mut().for_each(|c| *c = 0);
        doc.tables.iter_mut().for_each(|c| *c = 0);
        doc.counted = false;
    }

    fn recount_doc(&mut self, d: usize) {
        let w = self.topics.num_words();
        let doc = &mut self.docs[d];
        doc.counted = true;
        for (&t, &word) in doc.z.iter().zip(&doc.words) {
            doc.counts[t as usize] += 1;
            self.word_topic[t as usize * w + word as usize] += 1;
            self.topic_totals[t as usize] += 1;
        }
        for term in &mut doc.terms {
            term.reset(&self.caches[term.head], &doc.counts);
        }
    }

    /// Unnormalized log conditional of token `i` of document `d` over the
    /// represented topics followed by the new-topic event. The token must
    /// already be removed from all counts.
    fn fill_logits(&mut self, d: usize, i: usize) {
        let h = self.hyper;
        let w = self.topics.num_words();
        let word = self.docs[d].words[i] as usize;
        let doc = &self.docs[d];
        let n = doc.words.len() as f64;
        let k = self.num_topics();
        self.logits.clear();
        for j in 0..k {
            let doc_part = (h.alpha * self.pi[j] + doc.counts[j] as f64).ln();
            let word_part = (self.word_topic[j * w + word] as f64 + self.topics.delta(j, word)).ln()
                - (self.topic_totals[j] as f64 + self.topics.row_sum(j)).ln();
            self.logits.push(doc_part + word_part);
        }
        let can_grow = self.allow_growth && k < h.max_topics && self.remainder > 0.0;
        self.logits.push(if can_grow {
            (h.alpha * self.remainder / w as f64).ln()
        } else {
            f64::NEG_INFINITY
        });
        let margin = self.margin();
        if margin.c != 0.0 {
            let logits = &mut self.logits;
            for term in &doc.terms {
                let cache = &self.caches[term.head];
                term.add_logits(cache, margin, n, &mut logits[..k]);
                // A fresh topic has weight prior N(0, v²), independent of the rest.
                let quad = margin.c * margin.c / (2.0 * n * n * term.lambda);
                logits[k] -= quad * h.v * h.v;
            }
        }
    }

    /// Resamples the topic of token `i` in document `d`, creating a topic
    /// when the new-topic event is drawn.
    pub fn sample_token<R: Rng + ?Sized>(&mut self, d: usize, i: usize, rng: &mut R) -> Result<usize> {
        let old = self.docs[d].z[i] as usize;
        self.move_token(d, i, old, -1);
        self.fill_logits(d, i);
        let k = self.num_topics();
        if self.allow_growth && k >= self.hyper.max_topics && !self.cap_warned {
            warn!(
                "topic cap of {} reached; no further topics will be created",
                self.hyper.max_topics
            );
            self.cap_warned = true;
        }
        let mut t = sample_categorical_logits_with(rng, &self.logits, &mut self.scratch)?;
        if t == k {
            self.grow_topics(k + 1, rng)?;
            t = k;
        }
        self.docs[d].z[i] = t as u32;
        self.move_token(d, i, t, 1);
        Ok(t)
    }

    /// Appends one topic: Δ row `η`, stick prior `Beta(1, γ)`, weight prior
    /// `N(0, v²)`, and a freshly drawn stick proportion carved out of the
    /// remaining mass.
    pub fn grow_topics<R: Rng + ?Sized>(&mut self, new_k: usize, rng: &mut R) -> Result<()> {
        let k = self.num_topics();
        if new_k != k + 1 {
            return Err(Error::Domain(format!("topics grow one at a time ({k} -> {new_k})")));
        }
        if new_k > self.hyper.max_topics {
            return Err(Error::TopicCap(self.hyper.max_topics));
        }
        let h = self.hyper;
        let var = h.v * h.v;
        self.topics.grow(h.eta);
        self.sticks.grow(h.gamma_hdp);
        for g in self.heads_prior.iter_mut().chain(self.heads.iter_mut()) {
            g.grow(var);
        }
        for c in &mut self.caches {
            c.grow(var);
        }
        self.word_topic.extend(std::iter::repeat_n(0, self.topics.num_words()));
        self.topic_totals.push(0);
        for doc in &mut self.docs {
            doc.counts.push(0);
            doc.tables.push(0);
            for term in &mut doc.terms {
                term.grow();
            }
        }
        if !self.pibar.is_empty() {
            let b = sample_beta(rng, 1.0, h.gamma_hdp)?.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            self.pibar.push(b);
            self.pi.push(self.remainder * b);
            self.remainder *= 1.0 - b;
        }
        self.growth.push(GrowthEvent {
            round: self.round,
            topic: k,
        });
        Ok(())
    }

    /// Resamples the table counts of document `d`.
    pub fn sample_tables<R: Rng + ?Sized>(&mut self, d: usize, rng: &mut R) -> Result<()> {
        let alpha = self.hyper.alpha;
        let doc = &mut self.docs[d];
        for k in 0..doc.counts.len() {
            doc.tables[k] = sample_table_count(
                doc.counts[k] as usize,
                alpha * self.pi[k],
                &*self.stirling,
                &mut self.scratch,
                rng,
            )? as u32;
        }
        Ok(())
    }

    pub fn sample_lambdas<R: Rng + ?Sized>(&mut self, d: usize, rng: &mut R) -> Result<()> {
        let margin = self.margin();
        if margin.c == 0.0 {
            return Ok(());
        }
        let doc = &mut self.docs[d];
        let n = doc.words.len() as f64;
        let zbar: Vec<f64> = doc.counts.iter().map(|&c| c as f64 / n).collect();
        for term in &mut doc.terms {
            let chi = term.lambda_chi(&self.caches[term.head], margin, &zbar);
            term.lambda = sample_gig_half(rng, chi)?;
        }
        Ok(())
    }

    /// Tokens, then tables, then λ for document `d`, under the current
    /// stick draw.
    pub fn sweep_doc<R: Rng + ?Sized>(&mut self, d: usize, rng: &mut R) -> Result<()> {
        for i in 0..self.docs[d].words.len() {
            self.sample_token(d, i, rng)?;
        }
        self.sample_tables(d, rng)?;
        self.sample_lambdas(d, rng)
    }

    /// One batch sweep: `π̄` once, then every document in order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.sample_sticks(rng)?;
        for d in 0..self.docs.len() {
            self.sweep_doc(d, rng)?;
        }
        Ok(())
    }

    fn refresh_caches(&mut self) {
        self.caches = self.heads.iter().map(HeadCache::new).collect();
        for doc in &mut self.docs {
            for term in &mut doc.terms {
                term.reset(&self.caches[term.head], &doc.counts);
            }
        }
    }
}

/// Kept-sample sufficient statistics of one outer iteration.
struct Accumulator {
    counts: Vec<f64>,
    tables: Vec<f64>,
    heads: Vec<HeadStats>,
    num_words: usize,
}

impl Accumulator {
    fn new(k: usize, w: usize, heads: usize) -> Self {
        Self {
            counts: vec![0.0; k * w],
            tables: vec![0.0; k],
            heads: vec![HeadStats::zeros(k); heads],
            num_words: w,
        }
    }

    fn fit(&mut self, k: usize) {
        self.counts.resize(k * self.num_words, 0.0);
        self.tables.resize(k, 0.0);
        for h in &mut self.heads {
            while h.linear.len() < k {
                h.grow();
            }
        }
    }

    fn add(&mut self, r: &HdpRound, weight: f64) {
        self.fit(r.num_topics());
        for (acc, &c) in self.counts.iter_mut().zip(&r.word_topic) {
            *acc += weight * c as f64;
        }
        for (acc, t) in self.tables.iter_mut().zip(r.table_totals()) {
            *acc += weight * t;
        }
        let m = r.margin();
        for doc in &r.docs {
            let zbar = doc.zbar();
            for term in &doc.terms {
                self.heads[term.head].add_sample(&zbar, 1.0 / term.lambda, term.y, m.c, m.epsilon, weight);
            }
        }
    }
}

/// Online MedHDP model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedHdp {
    hyper: HdpHyper,
    topics: TopicPosterior,
    sticks: StickPosterior,
    heads: Vec<GaussianPosterior>,
    tasks: Vec<usize>,
    round: u64,
    rng: RngStream,
    growth_log: Vec<GrowthEvent>,
    /// Last round in which each topic gained counts.
    last_active: Vec<u64>,
    #[serde(skip, default = "default_stirling")]
    stirling: StirlingTable,
}

fn default_stirling() -> StirlingTable {
    StirlingTable::with_bound(DEFAULT_MAX_DOC_LEN)
}

impl MedHdp {
    pub fn new(num_words: usize, hyper: HdpHyper, seed: u64) -> Result<Self> {
        Self::multitask(num_words, vec![0], hyper, seed)
    }

    pub fn multitask(num_words: usize, tasks: Vec<usize>, hyper: HdpHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        if tasks.is_empty() {
            return Err(Error::Config("need at least one task".into()));
        }
        let k = hyper.initial_topics;
        Ok(Self {
            topics: TopicPosterior::new(k, num_words, hyper.eta)?,
            sticks: StickPosterior::new(k, hyper.gamma_hdp),
            heads: vec![GaussianPosterior::prior(k, hyper.v); tasks.len()],
            tasks,
            round: 0,
            rng: RngStream::new(seed),
            growth_log: Vec::new(),
            last_active: vec![0; k],
            stirling: StirlingTable::with_bound(hyper.max_doc_len),
            hyper,
        })
    }

    pub fn hyper(&self) -> &HdpHyper {
        &self.hyper
    }

    pub fn sticks(&self) -> &StickPosterior {
        &self.sticks
    }

    pub fn growth_log(&self) -> &[GrowthEvent] {
        &self.growth_log
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    /// Token mass each topic has absorbed beyond its prior.
    pub fn topic_mass(&self) -> Vec<f64> {
        let w = self.topics.num_words() as f64;
        (0..self.topics.num_topics())
            .map(|k| self.topics.row_sum(k) - w * self.hyper.eta)
            .collect()
    }

    /// A round over `batch` with the model's globals as prior; the caller
    /// drives the sweeps. Used by tests that need frozen sticks.
    pub fn start_round<'a>(&'a mut self, corpus: &Corpus, batch: &[usize]) -> Result<HdpRound<'a>> {
        if corpus.num_words() > self.topics.num_words() {
            return Err(Error::DimensionMismatch {
                expected: self.topics.num_words(),
                found: corpus.num_words(),
            });
        }
        let k = self.topics.num_topics();
        let docs = batch
            .iter()
            .map(|&d| {
                let doc = corpus.doc(d);
                Ok(HdpDoc::new(doc, task_terms(doc, d, &self.tasks, k)?))
            })
            .collect::<Result<Vec<_>>>()?;
        HdpRound::new(
            &self.hyper,
            self.round + 1,
            self.topics.clone(),
            self.sticks.clone(),
            self.heads.clone(),
            docs,
            &mut self.stirling,
        )
    }

    fn run_round(&mut self, corpus: &Corpus, batch: &[usize]) -> Result<RoundStats> {
        let mut rng = self.rng.spawn();
        let hyper = self.hyper.clone();
        let round_no = self.round + 1;
        let mut r = self.start_round(corpus, batch)?;
        let kept = (hyper.samples - hyper.burn_in) as f64;
        let mut topics_post = r.topics.clone();
        let mut sticks_post = r.sticks.clone();
        let mut active = vec![false; r.num_topics()];
        for it in 0..hyper.outer_iters {
            if it == 0 || hyper.reinit_z {
                r.init_uniform(&mut rng)?;
            } else {
                r.refresh_caches();
            }
            let mut acc = Accumulator::new(r.num_topics(), r.topics.num_words(), r.heads.len());
            for j in 0..hyper.samples {
                r.sweep(&mut rng)?;
                if j >= hyper.burn_in {
                    acc.add(&r, 1.0 / kept);
                }
            }
            acc.fit(r.num_topics());
            topics_post = r.topics.clone();
            topics_post.add_counts(&acc.counts)?;
            sticks_post = r.sticks.update(&acc.tables)?;
            r.heads = r
                .heads_prior
                .iter()
                .zip(&acc.heads)
                .map(|(p, s)| p.updated(s, hyper.diagonal_cov))
                .collect::<Result<_>>()?;
            let w = r.topics.num_words();
            active = (0..r.num_topics())
                .map(|k| acc.counts[k * w..(k + 1) * w].iter().any(|&c| c > 0.0))
                .collect();
        }
        let growth = r.growth.clone();
        let heads = r.heads.clone();
        let final_docs: Vec<(Vec<u32>, Vec<u32>)> =
            r.docs.iter().map(|d| (d.words.clone(), d.counts.clone())).collect();
        drop(r);

        self.topics = topics_post;
        self.sticks = sticks_post;
        self.heads = heads;
        self.round = round_no;
        self.growth_log.extend(growth);

        let prior: Vec<f64> = self.doc_prior();
        let scores: Vec<DocScore> = final_docs
            .iter()
            .zip(batch)
            .map(|((words, counts), &d)| {
                let labels = task_labels(corpus.doc(d), &self.tasks);
                score_doc(
                    words,
                    counts,
                    &prior,
                    &self.topics,
                    &self.heads,
                    labels.iter().enumerate().filter_map(|(i, y)| y.map(|y| (i, y))),
                    hyper.epsilon,
                )
            })
            .collect();
        let tokens = final_docs.iter().map(|d| d.0.len()).sum();
        let stats = summarize(round_no, tokens, self.topics.num_topics(), hyper.c, &scores);

        self.last_active.resize(self.topics.num_topics(), round_no);
        for (last, a) in self.last_active.iter_mut().zip(&active) {
            if *a {
                *last = round_no;
            }
        }
        self.prune();
        Ok(RoundStats {
            num_topics: self.topics.num_topics(),
            ..stats
        })
    }

    fn prune(&mut self) {
        let Some(window) = self.hyper.prune_window else { return };
        let mut k = self.topics.num_topics();
        while k > 0 {
            k -= 1;
            if self.topics.num_topics() > 1 && self.round - self.last_active[k] >= window {
                self.topics.remove(k);
                self.sticks.remove(k);
                for h in &mut self.heads {
                    h.remove(k);
                }
                self.last_active.remove(k);
            }
        }
    }
}

impl TopicModel for MedHdp {
    fn num_topics(&self) -> usize {
        self.topics.num_topics()
    }

    fn num_words(&self) -> usize {
        self.topics.num_words()
    }

    fn topics(&self) -> &TopicPosterior {
        &self.topics
    }

    fn heads(&self) -> &[GaussianPosterior] {
        &self.heads
    }

    fn tasks(&self) -> &[usize] {
        &self.tasks
    }

    /// `α E[π_k]` under the stick posterior means.
    fn doc_prior(&self) -> Vec<f64> {
        self.sticks
            .expected_weights()
            .into_iter()
            .map(|p| self.hyper.alpha * p)
            .collect()
    }

    fn round(&self) -> u64 {
        self.round
    }

    fn margin(&self) -> Margin {
        self.hyper.margin()
    }

    fn process_minibatch(&mut self, corpus: &Corpus, batch: &[usize]) -> Result<RoundStats> {
        self.run_round(corpus, batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, LabelKind};
    use crate::synthetic::SyntheticSpec;
    use proptest::prelude::*;

    fn tiny_corpus(docs: Vec<Vec<(u32, u32)>>, w: usize) -> Corpus {
        let docs = docs
            .into_iter()
            .enumerate()
            .map(|(i, t)| SparseDoc::binary(t, Label::from_sign(i % 2 == 0)).unwrap())
            .collect();
        Corpus::new(docs, w, vec!["t".into()], LabelKind::Binary).unwrap()
    }

    fn synthetic(n: usize) -> Corpus {
        SyntheticSpec {
            num_docs: n,
            num_words: 30,
            ..SyntheticSpec::default()
        }
        .binary()
        .unwrap()
        .corpus
    }

    #[test]
    fn table_count_follows_stirling_weights() {
        let table = crate::numerics::log_stirling_table(16, 16).unwrap();
        let mut rng = RngStream::new(3);
        let mut scratch = Vec::new();
        let mut freq = [0usize; 4];
        let draws = 60_000;
        for _ in 0..draws {
            freq[sample_table_count(3, 1.0, &table, &mut scratch, &mut rng).unwrap()] += 1;
        }
        // S(3, ·) = 2, 3, 1 under unit weight.
        for (s, p) in [(1, 2.0 / 6.0), (2, 3.0 / 6.0), (3, 1.0 / 6.0)] {
            assert!((freq[s] as f64 / draws as f64 - p).abs() < 0.01, "s={s}");
        }
        assert_eq!(freq[0], 0);
    }

    #[test]
    fn table_count_edge_cases() {
        let table = StirlingTable::with_bound(16);
        let mut rng = RngStream::new(3);
        let mut scratch = Vec::new();
        assert_eq!(sample_table_count(0, 2.0, &table, &mut scratch, &mut rng).unwrap(), 0);
        assert_eq!(
            sample_table_count(1, 1e-300, &table, &mut scratch, &mut rng).unwrap(),
            1
        );
        assert_eq!(sample_table_count(5, 0.0, &table, &mut scratch, &mut rng).unwrap(), 1);
        assert_eq!(
            sample_table_count(5, f64::INFINITY, &table, &mut scratch, &mut rng).unwrap(),
            5
        );
        assert!(sample_table_count(5, 1.0, &table, &mut scratch, &mut rng).is_err());
    }

    #[test]
    fn stick_update_adds_tables_and_tails() {
        let s = StickPosterior::new(2, 1.5).update(&[2.0, 1.0]).unwrap();
        assert_eq!(s.u(), &[3.0, 2.0]);
        assert_eq!(s.v(), &[2.5, 1.5]);
        assert!(StickPosterior::new(1, 1.0).update(&[-1.0]).is_err());
    }

    proptest! {
        #[test]
        fn stick_mass_sums_to_one(pibar in prop::collection::vec(0.001f64..0.999, 1..20)) {
            let (pi, rest) = stick_weights(&pibar);
            prop_assert!(pi.iter().all(|&p| p > 0.0));
            prop_assert!(rest > 0.0);
            prop_assert!((pi.iter().sum::<f64>() + rest - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sampled_sticks_stay_inside_unit_interval(
            tables in prop::collection::vec(0.0f64..50.0, 1..8),
            seed in any::<u64>(),
        ) {
            let s = StickPosterior::new(tables.len(), 1.0);
            let b = s.sample(&tables, &mut RngStream::new(seed)).unwrap();
            prop_assert!(b.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }

    #[test]
    fn grown_topic_starts_at_its_prior() {
        let hyper = HdpHyper {
            v: 2.0,
            ..HdpHyper::default()
        };
        let mut m = MedHdp::new(6, hyper.clone(), 1).unwrap();
        let c = tiny_corpus(vec![vec![(0, 2), (3, 1)]], 6);
        let mut r = m.start_round(&c, &[0]).unwrap();
        let mut rng = RngStream::new(4);
        r.set_sticks(vec![0.4]).unwrap();
        let rest = r.remainder();
        r.grow_topics(2, &mut rng).unwrap();
        assert_eq!(r.num_topics(), 2);
        assert!(r.topics.delta_row(1).iter().all(|&d| d == hyper.eta));
        assert_eq!((r.sticks.u()[1], r.sticks.v()[1]), (1.0, hyper.gamma_hdp));
        let head = &r.heads()[0];
        assert_eq!(head.mean()[1], 0.0);
        assert_eq!(head.covariance().get(1, 1), 4.0);
        assert_eq!(head.covariance().get(0, 1), 0.0);
        assert!((r.pi()[1] + r.remainder() - rest).abs() < 1e-15);
        assert_eq!(r.docs[0].counts().len(), 2);
        assert_eq!(r.growth(), &[GrowthEvent { round: 1, topic: 1 }]);
        assert!(r.grow_topics(4, &mut rng).is_err());
    }

    #[test]
    fn cap_blocks_growth() {
        let hyper = HdpHyper {
            max_topics: 2,
            initial_topics: 2,
            ..HdpHyper::default()
        };
        let mut m = MedHdp::new(30, hyper, 1).unwrap();
        let c = synthetic(64);
        let mut rng = RngStream::new(0);
        {
            let mut r = m.start_round(&c, &[0]).unwrap();
            assert!(matches!(r.grow_topics(3, &mut rng), Err(Error::TopicCap(2))));
        }
        for chunk in (0..64).collect::<Vec<_>>().chunks(16) {
            m.process_minibatch(&c, chunk).unwrap();
        }
        assert_eq!(m.num_topics(), 2);
        assert!(m.growth_log().is_empty());
    }

    #[test]
    fn new_topic_probability_matches_stick_remainder() {
        // One token, no supervision, untouched topic: the represented topic
        // has weight π₁ = b and the new-topic event carries 1 − b.
        let hyper = HdpHyper {
            c: 0.0,
            ..HdpHyper::default()
        };
        let mut m = MedHdp::new(4, hyper, 1).unwrap();
        let c = tiny_corpus(vec![vec![(2, 1)]], 4);
        let mut rng = RngStream::new(11);
        let b = 0.3;
        let draws = 20_000;
        let mut fresh = 0;
        for _ in 0..draws {
            let mut r = m.start_round(&c, &[0]).unwrap();
            r.set_sticks(vec![b]).unwrap();
            r.set_assignments(0, &[0]).unwrap();
            if r.sample_token(0, 0, &mut rng).unwrap() == 1 {
                fresh += 1;
            }
        }
        assert!((fresh as f64 / draws as f64 - (1.0 - b)).abs() < 0.015);
    }

    #[test]
    fn conditional_logits_match_hand_computation() {
        let hyper = HdpHyper::default();
        let (alpha, eta, v, c) = (hyper.alpha, hyper.eta, hyper.v, hyper.c);
        let w = 5;
        let mut m = MedHdp::new(w, hyper, 1).unwrap();
        let corpus = tiny_corpus(vec![vec![(1, 1), (4, 1)]], w);
        let mut r = m.start_round(&corpus, &[0]).unwrap();
        let b = 0.6;
        r.set_sticks(vec![b]).unwrap();
        r.set_assignments(0, &[0, 0]).unwrap();
        let lambda = 2.0;
        r.docs[0].terms[0].lambda = lambda;
        r.move_token(0, 0, 0, -1);
        r.fill_logits(0, 0);
        let n = 2.0;
        let quad = c * c / (2.0 * n * n * lambda);
        // Prior mean is zero; second moment v²; the remaining token adds v².
        let own = (alpha * b + 1.0).ln() + (eta / (w as f64 * eta + 1.0)).ln() - quad * (v * v + 2.0 * v * v);
        let new = (alpha * (1.0 - b) / w as f64).ln() - quad * v * v;
        assert!((r.logits[0] - own).abs() < 1e-12, "{} vs {own}", r.logits[0]);
        assert!((r.logits[1] - new).abs() < 1e-12, "{} vs {new}", r.logits[1]);
    }

    #[test]
    fn tables_and_counts_stay_consistent() {
        let c = synthetic(40);
        let mut m = MedHdp::new(30, HdpHyper::default(), 2).unwrap();
        let batch: Vec<usize> = (0..40).collect();
        let mut rng = RngStream::new(5);
        let mut r = m.start_round(&c, &batch).unwrap();
        r.init_uniform(&mut rng).unwrap();
        for _ in 0..4 {
            r.sweep(&mut rng).unwrap();
            let k = r.num_topics();
            let mut totals = vec![0u32; k];
            for d in &r.docs {
                assert_eq!(d.counts().iter().sum::<u32>() as usize, d.words().len());
                for (j, (&n, &s)) in d.counts().iter().zip(d.tables()).enumerate() {
                    assert!(if n == 0 { s == 0 } else { 1 <= s && s <= n });
                    totals[j] += n;
                }
                let zb = d.zbar();
                assert!((zb.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            assert_eq!(totals, r.topic_totals);
            assert_eq!(totals.iter().sum::<u32>() as usize, c.total_tokens());
        }
    }

    #[test]
    fn same_seed_same_model() {
        let c = synthetic(96);
        let run = || {
            let mut m = MedHdp::new(30, HdpHyper::default(), 8).unwrap();
            for chunk in (0..96).collect::<Vec<_>>().chunks(32) {
                m.process_minibatch(&c, chunk).unwrap();
            }
            m
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn topics_are_never_pruned_by_default() {
        let c = synthetic(128);
        let mut m = MedHdp::new(30, HdpHyper::default(), 3).unwrap();
        let mut k = m.num_topics();
        for chunk in (0..128).collect::<Vec<_>>().chunks(16) {
            let stats = m.process_minibatch(&c, chunk).unwrap();
            assert!(stats.num_topics >= k);
            k = stats.num_topics;
        }
        assert_eq!(m.growth_log().len(), k - 1);
        let mass = m.topic_mass();
        assert!((mass.iter().sum::<f64>() - c.total_tokens() as f64).abs() < 1e-6);
    }

    #[test]
    fn pruning_removes_idle_topics() {
        let hyper = HdpHyper {
            initial_topics: 6,
            prune_window: Some(1),
            ..HdpHyper::default()
        };
        let c = synthetic(64);
        let mut m = MedHdp::new(30, hyper, 3).unwrap();
        let stats = m.process_minibatch(&c, &(0..8).collect::<Vec<_>>()).unwrap();
        let k = m.num_topics();
        assert!(k >= 1);
        assert_eq!(m.sticks().len(), k);
        assert_eq!(m.heads()[0].dim(), k);
        assert!(stats.num_topics >= k);
    }

    #[test]
    fn doc_prior_uses_expected_sticks() {
        let m = MedHdp::new(5, HdpHyper::default(), 0).unwrap();
        // Beta(1, 1) has mean 1/2.
        assert_eq!(m.doc_prior(), vec![5.0 * 0.5]);
    }
}
