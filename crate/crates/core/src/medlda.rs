//! Online max-margin LDA with a Gibbs classifier. Each mini-batch runs
//! collapsed Gibbs sweeps over topic assignments and augmentation variables
//! against frozen globals, then folds the kept samples into the topic and
//! weight posteriors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, SparseDoc};
use crate::error::{Error, Result};
use crate::model::{
    score_doc, summarize, task_labels, task_terms, DocScore, GaussianPosterior, HeadCache, HeadStats, Margin,
    RoundStats, TaskTerm, TopicModel, TopicPosterior,
};
use crate::numerics::{sample_categorical_logits_with, sample_gig_half, RngStream};
use rand::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaHyper {
    /// Symmetric Dirichlet prior on document topic proportions.
    pub alpha: f64,
    /// Symmetric Dirichlet prior on topics.
    pub gamma_prior: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Prior standard deviation of the classifier weights.
    pub v: f64,
    /// Outer iterations per mini-batch.
    pub outer_iters: usize,
    /// Gibbs sweeps per outer iteration.
    pub samples: usize,
    /// Leading sweeps discarded as burn-in.
    pub burn_in: usize,
    /// Keep only the diagonal of the weight precision update (approximate).
    pub diagonal_cov: bool,
    /// Redraw assignments uniformly at the start of every outer iteration
    /// instead of continuing from the previous one.
    pub reinit_z: bool,
}

impl LdaHyper {
    /// `α = 1/K`, `γ = 0.5`, `ε = 164`, `c = v = 1`, one outer iteration of
    /// two sweeps without burn-in.
    pub fn defaults(num_topics: usize) -> Self {
        Self {
            alpha: 1.0 / num_topics.max(1) as f64,
            gamma_prior: 0.5,
            c: 1.0,
            epsilon: 164.0,
            v: 1.0,
            outer_iters: 1,
            samples: 2,
            burn_in: 0,
            diagonal_cov: false,
            reinit_z: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("alpha", self.alpha), ("gamma_prior", self.gamma_prior), ("v", self.v)];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {x}")));
            }
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("c must be nonnegative, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            )));
        }
        if self.outer_iters == 0 || self.samples == 0 {
            return Err(Error::Config("outer_iters and samples must be at least 1".into()));
        }
        if self.burn_in >= self.samples {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than samples ({})",
                self.burn_in, self.samples
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

/// Prior globals `Dir(γ)` for every topic and `N(0, v² I)` for the weights.
pub fn init_model(
    num_topics: usize,
    num_words: usize,
    hyper: &LdaHyper,
) -> Result<(TopicPosterior, GaussianPosterior)> {
    if num_topics == 0 {
        return Err(Error::Config("need at least one topic".into()));
    }
    hyper.validate()?;
    Ok((
        TopicPosterior::new(num_topics, num_words, hyper.gamma_prior)?,
        GaussianPosterior::prior(num_topics, hyper.v),
    ))
}

/// Globals held fixed while local variables are sampled.
#[derive(Debug, Clone, Copy)]
pub struct LdaGlobals<'a> {
    pub topics: &'a TopicPosterior,
    pub heads: &'a [HeadCache],
    pub alpha: f64,
    pub margin: Margin,
}

/// Topic assignments and augmentation variables of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaDocState {
    words: Vec<u32>,
    z: Vec<u32>,
    counts: Vec<u32>,
    terms: Vec<TaskTerm>,
    logits: Vec<f64>,
    scratch: Vec<f64>,
}

/// One kept Gibbs sample of a document.
#[derive(Debug, Clone, PartialEq)]
pub struct KeptSample {
    pub z: Vec<u32>,
    /// `1/λ` for each supervision term, in term order.
    pub inv_lambda: Vec<f64>,
}

impl LdaDocState {
    /// State with every token in topic 0. Call [`LdaDocState::init_uniform`]
    /// or [`LdaDocState::set_assignments`] before sampling.
    pub fn new(doc: &SparseDoc, terms: Vec<TaskTerm>, num_topics: usize) -> Self {
        let words = doc.expand();
        let mut counts = vec![0; num_topics];
        counts[0] = words.len() as u32;
        Self {
            z: vec![0; words.len()],
            words,
            counts,
            terms,
            logits: Vec::with_capacity(num_topics),
            scratch: Vec::with_capacity(num_topics),
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

    pub fn terms(&self) -> &[TaskTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn zbar(&self) -> Vec<f64> {
        let n = self.words.len() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn set_lambda(&mut self, term: usize, lambda: f64) {
        self.terms[term].lambda = lambda;
    }

    /// Overwrites the assignments and rebuilds the cached counts.
    pub fn set_assignments(&mut self, z: &[u32], g: &LdaGlobals) -> Result<()> {
        let k = self.counts.len();
        if z.len() != self.words.len() {
            return Err(Error::DimensionMismatch {
                expected: self.words.len(),
                found: z.len(),
            });
        }
        if let Some(&bad) = z.iter().find(|&&t| t as usize >= k) {
            return Err(Error::Domain(format!("topic {bad} out of range for K = {k}")));
        }
        self.z.copy_from_slice(z);
        self.recount(g);
        Ok(())
    }

    fn recount(&mut self, g: &LdaGlobals) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        for &t in &self.z {
            self.counts[t as usize] += 1;
        }
        self.reset_terms(g);
    }

    /// Recomputes the cached supervision products after the weight
    /// posteriors change.
    pub fn reset_terms(&mut self, g: &LdaGlobals) {
        for term in &mut self.terms {
            term.reset(&g.heads[term.head], &self.counts);
        }
    }

    /// Uniform random topic for every token, then λ from its conditional.
    pub fn init_uniform<R: Rng + ?Sized>(&mut self, g: &LdaGlobals, rng: &mut R) -> Result<()> {
        let k = self.counts.len() as u32;
        for t in &mut self.z {
            *t = rng.random_range(0..k);
        }
        self.recount(g);
        self.sample_lambdas(g, rng)
    }

    fn fill_logits(&mut self, w: usize, g: &LdaGlobals) {
        let n = self.words.len() as f64;
        self.logits.clear();
        for (k, &c) in self.counts.iter().enumerate() {
            self.logits.push((g.alpha + c as f64).ln() + g.topics.log_expect(k, w));
        }
        if g.margin.c != 0.0 {
            for term in &self.terms {
                term.add_logits(&g.heads[term.head], g.margin, n, &mut self.logits);
            }
        }
    }

    fn remove_token(&mut self, i: usize, g: &LdaGlobals) {
        let old = self.z[i] as usize;
        self.counts[old] -= 1;
        for term in &mut self.terms {
            term.shift(&g.heads[term.head], old, -1.0);
        }
    }

    fn add_token(&mut self, i: usize, k: usize, g: &LdaGlobals) {
        self.z[i] = k as u32;
        self.counts[k] += 1;
        for term in &mut self.terms {
            term.shift(&g.heads[term.head], k, 1.0);
        }
    }

    /// Unnormalized log conditional of token `i` over topics, given every
    /// other assignment. Leaves the state unchanged.
    pub fn conditional_logits(&mut self, i: usize, g: &LdaGlobals) -> Vec<f64> {
        let old = self.z[i] as usize;
        self.remove_token(i, g);
        self.fill_logits(self.words[i] as usize, g);
        self.add_token(i, old, g);
        self.logits.clone()
    }

    /// Resamples the topic of token `i`.
    pub fn sample_token<R: Rng + ?Sized>(&mut self, i: usize, g: &LdaGlobals, rng: &mut R) -> Result<usize> {
        self.remove_token(i, g);
        self.fill_logits(self.words[i] as usize, g);
        let k = sample_categorical_logits_with(rng, &self.logits, &mut self.scratch)?;
        self.add_token(i, k, g);
        Ok(k)
    }

    /// Resamples λ for every supervision term. A no-op when `c = 0`.
    pub fn sample_lambdas<R: Rng + ?Sized>(&mut self, g: &LdaGlobals, rng: &mut R) -> Result<()> {
        if g.margin.c == 0.0 {
            return Ok(());
        }
        let zbar = self.zbar();
        for term in &mut self.terms {
            let chi = term.lambda_chi(&g.heads[term.head], g.margin, &zbar);
            term.lambda = sample_gig_half(rng, chi)?;
        }
        Ok(())
    }

    /// One sweep: every token left to right, then λ.
    pub fn sweep<R: Rng + ?Sized>(&mut self, g: &LdaGlobals, rng: &mut R) -> Result<()> {
        for i in 0..self.words.len() {
            self.sample_token(i, g, rng)?;
        }
        self.sample_lambdas(g, rng)
    }

    pub fn keep(&self) -> KeptSample {
        KeptSample {
            z: self.z.clone(),
            inv_lambda: self.terms.iter().map(|t| 1.0 / t.lambda).collect(),
        }
    }
}

/// Online MedLDA model: topic posteriors, one weight posterior per trained
/// task, and the random stream that drives training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedLda {
    hyper: LdaHyper,
    topics: TopicPosterior,
    heads: Vec<GaussianPosterior>,
    tasks: Vec<usize>,
    round: u64,
    rng: RngStream,
}

impl MedLda {
    /// Binary model on task 0.
    pub fn new(num_topics: usize, num_words: usize, hyper: LdaHyper, seed: u64) -> Result<Self> {
        Self::multitask(num_topics, num_words, vec![0], hyper, seed)
    }

    /// One shared topic model with a weight posterior per listed task.
    pub fn multitask(
        num_topics: usize,
        num_words: usize,
        tasks: Vec<usize>,
        hyper: LdaHyper,
        seed: u64,
    ) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::Config("need at least one task".into()));
        }
        let (topics, head) = init_model(num_topics, num_words, &hyper)?;
        Ok(Self {
            heads: vec![head; tasks.len()],
            hyper,
            topics,
            tasks,
            round: 0,
            rng: RngStream::new(seed),
        })
    }

    pub fn hyper(&self) -> &LdaHyper {
        &self.hyper
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    fn check_corpus(&self, corpus: &Corpus) -> Result<()> {
        if corpus.num_words() > self.topics.num_words() {
            return Err(Error::DimensionMismatch {
                expected: self.topics.num_words(),
                found: corpus.num_words(),
            });
        }
        Ok(())
    }

    fn run_round(&mut self, corpus: &Corpus, batch: &[usize]) -> Result<RoundStats> {
        self.check_corpus(corpus)?;
        let h = &self.hyper;
        let k = self.topics.num_topics();
        let w = self.topics.num_words();
        let margin = h.margin();
        let round_rng = self.rng.spawn();
        let mut rngs: Vec<RngStream> = (0..batch.len()).map(|p| round_rng.fork(p as u64)).collect();
        let mut states = batch
            .iter()
            .map(|&d| {
                let doc = corpus.doc(d);
                Ok(LdaDocState::new(doc, task_terms(doc, d, &self.tasks, k)?, k))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut topics = self.topics.clone();
        let mut heads = self.heads.clone();
        let kept_per_doc = (h.samples - h.burn_in) as f64;
        for it in 0..h.outer_iters {
            let caches: Vec<HeadCache> = heads.iter().map(HeadCache::new).collect();
            let g = LdaGlobals {
                topics: &topics,
                heads: &caches,
                alpha: h.alpha,
                margin,
            };
            let kept = states
                .par_iter_mut()
                .zip(rngs.par_iter_mut())
                .map(|(s, rng)| {
                    if it == 0 || h.reinit_z {
                        s.init_uniform(&g, rng)?;
                    } else {
                        s.reset_terms(&g);
                    }
                    let mut kept = Vec::with_capacity(h.samples - h.burn_in);
                    for j in 0..h.samples {
                        s.sweep(&g, rng)?;
                        if j >= h.burn_in {
                            kept.push(s.keep());
                        }
                    }
                    Ok(kept)
                })
                .collect::<Result<Vec<_>>>()?;

            let weight = 1.0 / kept_per_doc;
            let mut counts = vec![0.0; k * w];
            let mut stats = vec![HeadStats::zeros(k); heads.len()];
            for (s, samples) in states.iter().zip(&kept) {
                let n = s.len() as f64;
                for sample in samples {
                    for (&t, &word) in sample.z.iter().zip(&s.words) {
                        counts[t as usize * w + word as usize] += weight;
                    }
                    let mut zbar = vec![0.0; k];
                    for &t in &sample.z {
                        zbar[t as usize] += 1.0 / n;
                    }
                    for (term, &inv) in s.terms.iter().zip(&sample.inv_lambda) {
                        stats[term.head].add_sample(&zbar, inv, term.y, h.c, h.epsilon, weight);
                    }
                }
            }
            topics = self.topics.clone();
            topics.add_counts(&counts)?;
            heads = self
                .heads
                .iter()
                .zip(&stats)
                .map(|(prior, st)| prior.updated(st, h.diagonal_cov))
                .collect::<Result<_>>()?;
        }

        let doc_prior = vec![h.alpha; k];
        let scores: Vec<DocScore> = states
            .iter()
            .zip(batch)
            .map(|(s, &d)| {
                let labels = task_labels(corpus.doc(d), &self.tasks);
                score_doc(
                    &s.words,
                    &s.counts,
                    &doc_prior,
                    &topics,
                    &heads,
                    labels.iter().enumerate().filter_map(|(i, y)| y.map(|y| (i, y))),
                    h.epsilon,
                )
            })
            .collect();
        self.topics = topics;
        self.heads = heads;
        self.round += 1;
        let tokens = states.iter().map(|s| s.len()).sum();
        Ok(summarize(self.round, tokens, k, h.c, &scores))
    }
}

impl TopicModel for MedLda {
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

    fn doc_prior(&self) -> Vec<f64> {
        vec![self.hyper.alpha; self.topics.num_topics()]
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
    use crate::numerics::{digamma, SymMatrix};
    use std::collections::BTreeMap;

    fn toy_corpus() -> Corpus {
        let docs = vec![
            SparseDoc::binary(vec![(0, 3), (1, 2)], Label::Pos).unwrap(),
            SparseDoc::binary(vec![(2, 2), (3, 4)], Label::Neg).unwrap(),
            SparseDoc::binary(vec![(0, 1), (1, 4)], Label::Pos).unwrap(),
            SparseDoc::binary(vec![(3, 1), (2, 3)], Label::Neg).unwrap(),
        ];
        Corpus::new(docs, 4, vec!["t".into()], LabelKind::Binary).unwrap()
    }

    fn hyper(k: usize) -> LdaHyper {
        LdaHyper {
            epsilon: 1.0,
            ..LdaHyper::defaults(k)
        }
    }

    #[test]
    fn init_matches_prior() {
        let (t, g) = init_model(2, 3, &LdaHyper::defaults(2)).unwrap();
        let want = digamma(0.5).unwrap() - digamma(1.5).unwrap();
        assert!((t.log_expect(1, 2) - want).abs() < 1e-12);
        assert_eq!(g.mean(), &[0.0, 0.0]);
        assert_eq!(g.covariance(), &SymMatrix::identity(2));
    }

    #[test]
    fn hyper_validation() {
        let mut h = LdaHyper::defaults(5);
        assert!(h.validate().is_ok());
        h.burn_in = 2;
        assert!(h.validate().is_err());
        h = LdaHyper::defaults(5);
        h.alpha = 0.0;
        assert!(h.validate().is_err());
        assert!(init_model(0, 3, &LdaHyper::defaults(1)).is_err());
    }

    #[test]
    fn single_topic_is_forced() {
        let (topics, head) = init_model(1, 4, &hyper(1)).unwrap();
        let caches = vec![HeadCache::new(&head)];
        let g = LdaGlobals {
            topics: &topics,
            heads: &caches,
            alpha: 1.0,
            margin: Margin { c: 1.0, epsilon: 1.0 },
        };
        let doc = SparseDoc::binary(vec![(0, 2), (3, 1)], Label::Pos).unwrap();
        let mut s = LdaDocState::new(&doc, vec![TaskTerm::new(0, 1.0, 1)], 1);
        let mut rng = RngStream::new(1);
        s.init_uniform(&g, &mut rng).unwrap();
        for _ in 0..20 {
            s.sweep(&g, &mut rng).unwrap();
            assert_eq!(s.assignments(), &[0, 0, 0]);
        }
    }

    #[test]
    fn unsupervised_conditional_is_collapsed_lda() {
        let mut topics = TopicPosterior::new(2, 3, 0.5).unwrap();
        topics.add_counts(&[3.0, 0.0, 1.0, 0.0, 2.0, 1.0]).unwrap();
        let head = GaussianPosterior::prior(2, 1.0);
        let caches = vec![HeadCache::new(&head)];
        let g = LdaGlobals {
            topics: &topics,
            heads: &caches,
            alpha: 0.7,
            margin: Margin { c: 0.0, epsilon: 1.0 },
        };
        let doc = SparseDoc::binary(vec![(0, 1), (1, 1)], Label::Pos).unwrap();
        let mut s = LdaDocState::new(&doc, vec![TaskTerm::new(0, 1.0, 2)], 2);
        s.set_assignments(&[1, 0], &g).unwrap();
        let l = s.conditional_logits(0, &g);
        // Token 0 removed: C_d = (1, 0).
        for k in 0..2 {
            let want = (0.7f64 + [1.0, 0.0][k]).ln() + topics.log_expect(k, 0);
            assert!((l[k] - want).abs() < 1e-12);
        }
        assert_eq!(s.assignments(), &[1, 0]);
        assert_eq!(s.counts(), &[1, 1]);
    }

    #[test]
    fn counts_are_conserved() {
        let corpus = toy_corpus();
        let (topics, head) = init_model(3, 4, &hyper(3)).unwrap();
        let caches = vec![HeadCache::new(&head)];
        let g = LdaGlobals {
            topics: &topics,
            heads: &caches,
            alpha: 0.3,
            margin: Margin { c: 1.0, epsilon: 1.0 },
        };
        let mut rng = RngStream::new(2);
        for doc in corpus.docs() {
            let mut s = LdaDocState::new(doc, vec![TaskTerm::new(0, doc.label(0).unwrap().sign(), 3)], 3);
            s.init_uniform(&g, &mut rng).unwrap();
            for _ in 0..10 {
                s.sweep(&g, &mut rng).unwrap();
                assert_eq!(s.counts().iter().sum::<u32>() as usize, doc.len());
                let zb = s.zbar();
                assert!((zb.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                for t in s.terms() {
                    assert!((1e-12..=1e12).contains(&t.lambda));
                }
            }
        }
    }

    #[test]
    fn rounds_keep_monotonicity() {
        let corpus = toy_corpus();
        let mut m = MedLda::new(3, 4, hyper(3), 7).unwrap();
        for _ in 0..5 {
            let before = m.clone();
            let stats = m.process_minibatch(&corpus, &[0, 1, 2, 3]).unwrap();
            assert_eq!(stats.docs, 4);
            assert_eq!(stats.tokens, corpus.total_tokens());
            for k in 0..3 {
                for w in 0..4 {
                    assert!(m.topics().delta(k, w) >= before.topics().delta(k, w));
                }
            }
            // Σ_before − Σ_after is PSD.
            let mut diff = before.heads()[0].covariance().clone();
            diff.add_scaled(-1.0, m.heads()[0].covariance());
            assert!(diff.cholesky_psd(1e-10).is_ok());
            assert!(m.heads()[0].covariance().cholesky().is_ok());
            let added: f64 = (0..3).map(|k| m.topics().row_sum(k) - before.topics().row_sum(k)).sum();
            assert!((added - corpus.total_tokens() as f64).abs() < 1e-9);
        }
        assert_eq!(m.round(), 5);
    }

    #[test]
    fn disjoint_vocabulary_stays_local() {
        let corpus = toy_corpus();
        let mut m = MedLda::new(2, 6, hyper(2), 3).unwrap();
        for _ in 0..3 {
            m.process_minibatch(&corpus, &[0, 2]).unwrap();
        }
        for k in 0..2 {
            for w in 2..6 {
                assert_eq!(m.topics().delta(k, w), 0.5);
            }
        }
    }

    #[test]
    fn empty_batch_changes_nothing() {
        let corpus = toy_corpus();
        let mut m = MedLda::new(2, 4, hyper(2), 3).unwrap();
        let before = m.clone();
        m.process_minibatch(&corpus, &[]).unwrap();
        assert_eq!(m.topics(), before.topics());
        assert_eq!(m.heads(), before.heads());
    }

    #[test]
    fn missing_label_is_rejected() {
        let docs = vec![SparseDoc::new(vec![(0, 1)], BTreeMap::new()).unwrap()];
        let corpus = Corpus::new(docs, 2, vec!["t".into()], LabelKind::Binary).unwrap();
        let mut m = MedLda::new(2, 2, hyper(2), 3).unwrap();
        assert!(matches!(
            m.process_minibatch(&corpus, &[0]),
            Err(Error::MissingLabel(_))
        ));
    }

    #[test]
    fn training_is_deterministic_across_threads() {
        let corpus = toy_corpus();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut m = MedLda::new(3, 4, hyper(3), 11).unwrap();
                for _ in 0..4 {
                    m.process_minibatch(&corpus, &[3, 1, 0, 2]).unwrap();
                }
                m
            })
        };
        assert_eq!(run(1), run(4));
    }
}
