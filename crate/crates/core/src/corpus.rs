//! Sparse bag-of-words corpora, their on-disk formats, and mini-batch streams.
//!
//! Two input formats are understood:
//!
//! * svmlight-style lines, `label word:count word:count ...`. A signed label
//!   (`+1` / `-1`) makes a single binary task. An unsigned, comma-separated
//!   list of task ids (`3` or `0,4,7`) makes a multi-label corpus in which
//!   every listed task is positive and every other task negative; `none`
//!   stands for an empty positive set.
//! * UCI `docword` triples (`D`, `W`, `NNZ` header then `doc word count`,
//!   1-based) with a separate label file holding one label token per line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default cap on tokens per document. Longer documents are rejected so the
/// Stirling-number table stays bounded.
pub const DEFAULT_MAX_DOC_LEN: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Label {
    Pos,
    Neg,
}

impl Label {
    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn is_pos(self) -> bool {
        self == Label::Pos
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseDoc {
    tokens: Vec<(u32, u32)>,
    len: usize,
    labels: BTreeMap<usize, Label>,
}

impl SparseDoc {
    /// Builds a document from `(word_id, count)` pairs. Pairs are sorted by
    /// word id; duplicates, zero counts and empty documents are rejected.
    pub fn new(mut tokens: Vec<(u32, u32)>, labels: BTreeMap<usize, Label>) -> Result<Self> {
        tokens.sort_unstable_by_key(|&(w, _)| w);
        for pair in tokens.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidDoc(format!("duplicate word id {}", pair[0].0)));
            }
        }
        if let Some(&(w, _)) = tokens.iter().find(|&&(_, c)| c == 0) {
            return Err(Error::InvalidDoc(format!("word {w} has count 0")));
        }
        let len: usize = tokens.iter().map(|&(_, c)| c as usize).sum();
        if len == 0 {
            return Err(Error::InvalidDoc("document has no tokens".into()));
        }
        Ok(Self { tokens, len, labels })
    }

    /// Convenience constructor for a single binary task (task 0).
    pub fn binary(tokens: Vec<(u32, u32)>, label: Label) -> Result<Self> {
        Self::new(tokens, BTreeMap::from([(0, label)]))
    }

    pub fn tokens(&self) -> &[(u32, u32)] {
        &self.tokens
    }

    /// Total token count `n_d`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn labels(&self) -> &BTreeMap<usize, Label> {
        &self.labels
    }

    pub fn label(&self, task: usize) -> Option<Label> {
        self.labels.get(&task).copied()
    }

    pub fn set_label(&mut self, task: usize, label: Option<Label>) {
        match label {
            Some(l) => {
                self.labels.insert(task, l);
            }
            None => {
                self.labels.remove(&task);
            }
        }
    }

    pub fn max_word(&self) -> u32 {
        self.tokens.last().map(|&(w, _)| w).unwrap_or(0)
    }

    /// One entry per token occurrence, in word-id order.
    pub fn expand(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len);
        for &(w, c) in &self.tokens {
            out.extend(std::iter::repeat_n(w, c as usize));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    /// One task with `+1` / `-1` labels.
    Binary,
    /// Any number of tasks; a document lists its positive tasks.
    MultiLabel,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    docs: Vec<SparseDoc>,
    vocab: Vec<String>,
    num_words: usize,
    task_names: Vec<String>,
    kind: LabelKind,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub max_doc_len: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            max_doc_len: DEFAULT_MAX_DOC_LEN,
        }
    }
}

impl Corpus {
    /// Assembles a corpus. `num_words` must cover every word id and
    /// `task_names` every task id used by a label.
    pub fn new(docs: Vec<SparseDoc>, num_words: usize, task_names: Vec<String>, kind: LabelKind) -> Result<Self> {
        for (i, doc) in docs.iter().enumerate() {
            if doc.max_word() as usize >= num_words {
                return Err(Error::InvalidDoc(format!(
                    "doc {i}: word id {} outside vocabulary of size {num_words}",
                    doc.max_word()
                )));
            }
            if let Some((&t, _)) = doc.labels.iter().next_back() {
                if t >= task_names.len() {
                    return Err(Error::InvalidDoc(format!(
                        "doc {i}: task {t} has no name ({} tasks)",
                        task_names.len()
                    )));
                }
            }
        }
        Ok(Self {
            docs,
            vocab: Vec::new(),
            num_words,
            task_names,
            kind,
        })
    }

    /// Attaches word strings. The vocabulary may be larger than the highest
    /// word id seen, in which case `W` grows to match it.
    pub fn with_vocab(mut self, vocab: Vec<String>) -> Result<Self> {
        if vocab.len() < self.num_words {
            return Err(Error::InvalidDoc(format!(
                "vocabulary has {} entries but word ids reach {}",
                vocab.len(),
                self.num_words - 1
            )));
        }
        self.num_words = vocab.len();
        self.vocab = vocab;
        Ok(self)
    }

    pub fn docs(&self) -> &[SparseDoc] {
        &self.docs
    }

    pub fn doc(&self, i: usize) -> &SparseDoc {
        &self.docs[i]
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Vocabulary size `W`.
    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn num_tasks(&self) -> usize {
        self.task_names.len()
    }

    pub fn task_names(&self) -> &[String] {
        &self.task_names
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn word(&self, w: usize) -> String {
        self.vocab.get(w).cloned().unwrap_or_else(|| format!("w{w}"))
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(SparseDoc::len).sum()
    }

    pub fn max_doc_len(&self) -> usize {
        self.docs.iter().map(SparseDoc::len).max().unwrap_or(0)
    }

    /// A new corpus holding the given documents, sharing vocabulary and
    /// tasks with `self`.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            docs: indices.iter().map(|&i| self.docs[i].clone()).collect(),
            vocab: self.vocab.clone(),
            num_words: self.num_words,
            task_names: self.task_names.clone(),
            kind: self.kind,
        }
    }

    /// Class index of a multi-label document with exactly one positive
    /// task, as used by one-vs-all evaluation.
    pub fn class_of(&self, i: usize) -> Option<usize> {
        let mut pos = self.docs[i].labels.iter().filter(|(_, l)| l.is_pos()).map(|(&t, _)| t);
        match (pos.next(), pos.next()) {
            (Some(t), None) => Some(t),
            _ => None,
        }
    }

    /// Serializes in the svmlight layout accepted by [`load_svmlight`].
    pub fn write_svmlight<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for doc in &self.docs {
            match self.kind {
                LabelKind::Binary => {
                    let l = match doc.label(0) {
                        Some(Label::Neg) => "-1",
                        _ => "+1",
                    };
                    write!(out, "{l}")?;
                }
                LabelKind::MultiLabel => {
                    let pos: Vec<String> = doc
                        .labels
                        .iter()
                        .filter(|(_, l)| l.is_pos())
                        .map(|(t, _)| t.to_string())
                        .collect();
                    if pos.is_empty() {
                        write!(out, "none")?;
                    } else {
                        write!(out, "{}", pos.join(","))?;
                    }
                }
            }
            for &(w, c) in &doc.tokens {
                write!(out, " {w}:{c}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn save_svmlight(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_svmlight(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

enum ParsedLabel {
    Binary(Label),
    Tasks(Vec<usize>),
}

fn parse_label(tok: &str) -> std::result::Result<ParsedLabel, String> {
    match tok {
        "+1" | "+1.0" => return Ok(ParsedLabel::Binary(Label::Pos)),
        "-1" | "-1.0" => return Ok(ParsedLabel::Binary(Label::Neg)),
        "none" => return Ok(ParsedLabel::Tasks(Vec::new())),
        _ => {}
    }
    if tok.starts_with('+') || tok.starts_with('-') {
        return Err(format!("binary label must be +1 or -1, got `{tok}`"));
    }
    let mut ids = Vec::new();
    for part in tok.split(',') {
        let id: usize = part.parse().map_err(|_| format!("bad label `{tok}`"))?;
        ids.push(id);
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ParsedLabel::Tasks(ids))
}

struct LabelCollector {
    kind: Option<LabelKind>,
    binary: Vec<Label>,
    tasks: Vec<Vec<usize>>,
}

impl LabelCollector {
    fn new() -> Self {
        Self {
            kind: None,
            binary: Vec::new(),
            tasks: Vec::new(),
        }
    }

    fn push(&mut self, tok: &str) -> std::result::Result<(), String> {
        let parsed = parse_label(tok)?;
        let kind = match parsed {
            ParsedLabel::Binary(_) => LabelKind::Binary,
            ParsedLabel::Tasks(_) => LabelKind::MultiLabel,
        };
        match self.kind {
            None => self.kind = Some(kind),
            Some(k) if k != kind => {
                return Err("binary and multi-label lines mixed in one file".into());
            }
            _ => {}
        }
        match parsed {
            ParsedLabel::Binary(l) => self.binary.push(l),
            ParsedLabel::Tasks(t) => self.tasks.push(t),
        }
        Ok(())
    }

    /// Returns the per-document label maps, the task names and the kind.
    fn finish(self) -> (Vec<BTreeMap<usize, Label>>, Vec<String>, LabelKind) {
        match self.kind.unwrap_or(LabelKind::Binary) {
            LabelKind::Binary => (
                self.binary.into_iter().map(|l| BTreeMap::from([(0, l)])).collect(),
                vec!["task0".to_string()],
                LabelKind::Binary,
            ),
            LabelKind::MultiLabel => {
                let num_tasks = self.tasks.iter().flatten().max().map_or(0, |&m| m + 1);
                let maps = self
                    .tasks
                    .iter()
                    .map(|pos| {
                        (0..num_tasks)
                            .map(|t| (t, Label::from_sign(pos.binary_search(&t).is_ok())))
                            .collect()
                    })
                    .collect();
                let names = (0..num_tasks).map(|t| format!("task{t}")).collect();
                (maps, names, LabelKind::MultiLabel)
            }
        }
    }
}

/// Parses svmlight-style text. `origin` is only used in error messages.
pub fn read_svmlight<R: BufRead>(reader: R, origin: &Path, opts: &LoadOptions) -> Result<Corpus> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut token_lists = Vec::new();
    let mut labels = LabelCollector::new();
    let mut max_word = 0u32;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let label_tok = fields.next().expect("non-empty line has a field");
        labels.push(label_tok).map_err(|m| parse_err(lineno, m))?;
        let mut tokens = Vec::new();
        for field in fields {
            let (w, c) = field
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected word:count, got `{field}`")))?;
            let w: u32 = w.parse().map_err(|_| parse_err(lineno, format!("bad word id `{w}`")))?;
            let c: i64 = c.parse().map_err(|_| parse_err(lineno, format!("bad count `{c}`")))?;
            if c <= 0 {
                return Err(parse_err(
                    lineno,
                    format!("count for word {w} must be positive, got {c}"),
                ));
            }
            let c = u32::try_from(c).map_err(|_| parse_err(lineno, format!("count {c} too large")))?;
            max_word = max_word.max(w);
            tokens.push((w, c));
        }
        let len: u64 = tokens.iter().map(|&(_, c)| c as u64).sum();
        if len as usize > opts.max_doc_len {
            return Err(parse_err(
                lineno,
                format!("document has {len} tokens, more than the limit of {}", opts.max_doc_len),
            ));
        }
        token_lists.push((lineno, tokens));
    }
    if token_lists.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (label_maps, task_names, kind) = labels.finish();
    let mut docs = Vec::with_capacity(token_lists.len());
    for ((lineno, tokens), labels) in token_lists.into_iter().zip(label_maps) {
        let doc = SparseDoc::new(tokens, labels).map_err(|e| parse_err(lineno, e.to_string()))?;
        docs.push(doc);
    }
    Corpus::new(docs, max_word as usize + 1, task_names, kind)
}

/// Loads an svmlight file. `W` is the largest word id plus one.
pub fn load_svmlight(path: impl AsRef<Path>) -> Result<Corpus> {
    load_svmlight_with(path, &LoadOptions::default())
}

pub fn load_svmlight_with(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_svmlight(BufReader::new(file), path, opts)
}

/// Loads a UCI bag-of-words `docword` file plus a label file with one label
/// token per document. Ids in the docword file are 1-based.
pub fn load_uci_docword(docword: impl AsRef<Path>, labels: impl AsRef<Path>, opts: &LoadOptions) -> Result<Corpus> {
    let docword = docword.as_ref();
    let labels_path = labels.as_ref();
    let parse_err = |path: &Path, line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let file = File::open(docword).map_err(|e| Error::io(docword, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        let (i, line) = lines
            .next()
            .ok_or_else(|| parse_err(docword, 0, "truncated header".into()))?;
        let line = line.map_err(|e| Error::io(docword, e))?;
        *slot = line
            .trim()
            .parse()
            .map_err(|_| parse_err(docword, i + 1, format!("bad header value `{}`", line.trim())))?;
    }
    let [num_docs, num_words, nnz] = header;
    let mut per_doc: Vec<Vec<(u32, u32)>> = vec![Vec::new(); num_docs];
    let mut seen = 0usize;
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(docword, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(|s| s.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(docword, lineno, format!("bad triple `{line}`")))?;
        let &[d, w, c] = nums.as_slice() else {
            return Err(parse_err(docword, lineno, format!("expected 3 fields, got `{line}`")));
        };
        if d < 1 || d as usize > num_docs || w < 1 || w as usize > num_words {
            return Err(parse_err(docword, lineno, format!("id out of range in `{line}`")));
        }
        if c <= 0 {
            return Err(parse_err(docword, lineno, format!("count must be positive, got {c}")));
        }
        per_doc[d as usize - 1].push(((w - 1) as u32, c as u32));
        seen += 1;
    }
    if seen != nnz {
        log::warn!("{}: header says {nnz} entries, found {seen}", docword.display());
    }

    let file = File::open(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let mut collector = LabelCollector::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(labels_path, e))?;
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        collector.push(tok).map_err(|m| parse_err(labels_path, i + 1, m))?;
    }
    let (label_maps, task_names, kind) = collector.finish();
    if label_maps.len() != num_docs {
        return Err(parse_err(
            labels_path,
            0,
            format!("{} labels for {num_docs} documents", label_maps.len()),
        ));
    }
    if num_docs == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut docs = Vec::with_capacity(num_docs);
    for (d, (tokens, labels)) in per_doc.into_iter().zip(label_maps).enumerate() {
        let len: usize = tokens.iter().map(|&(_, c)| c as usize).sum();
        if len > opts.max_doc_len {
            return Err(Error::InvalidDoc(format!(
                "doc {}: {len} tokens, more than the limit of {}",
                d + 1,
                opts.max_doc_len
            )));
        }
        docs.push(SparseDoc::new(tokens, labels).map_err(|e| Error::InvalidDoc(format!("doc {}: {e}", d + 1)))?);
    }
    Corpus::new(docs, num_words, task_names, kind)
}

/// Reads a vocabulary file with one word per line.
pub fn load_vocab(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(|l| l.trim().to_string()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniBatch {
    pub indices: Vec<usize>,
    pub epoch: usize,
    /// Global step counter across epochs, starting at 0.
    pub step: usize,
}

/// Seeded epoch-wise permutation of the corpus cut into consecutive batches.
/// The last batch of an epoch may be short.
#[derive(Debug, Clone)]
pub struct MinibatchStream {
    num_docs: usize,
    batch_size: usize,
    epochs: usize,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    epoch: usize,
    pos: usize,
    step: usize,
}

impl MinibatchStream {
    pub fn new(num_docs: usize, batch_size: usize, epochs: usize, seed: u64) -> Result<Self> {
        if num_docs == 0 {
            return Err(Error::EmptyCorpus);
        }
        if batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        let mut stream = Self {
            num_docs,
            batch_size,
            epochs,
            rng: ChaCha8Rng::seed_from_u64(seed),
            order: (0..num_docs).collect(),
            epoch: 0,
            pos: 0,
            step: 0,
        };
        stream.order.shuffle(&mut stream.rng);
        Ok(stream)
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.num_docs.div_ceil(self.batch_size)
    }
}

impl Iterator for MinibatchStream {
    type Item = MiniBatch;

    fn next(&mut self) -> Option<MiniBatch> {
        if self.epoch >= self.epochs {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.num_docs);
        let batch = MiniBatch {
            indices: self.order[self.pos..end].to_vec(),
            epoch: self.epoch,
            step: self.step,
        };
        self.step += 1;
        self.pos = end;
        if self.pos == self.num_docs {
            self.pos = 0;
            self.epoch += 1;
            if self.epoch < self.epochs {
                self.order.sort_unstable();
                self.order.shuffle(&mut self.rng);
            }
        }
        Some(batch)
    }
}

pub fn minibatch_stream(corpus: &Corpus, batch_size: usize, epochs: usize, seed: u64) -> Result<MinibatchStream> {
    MinibatchStream::new(corpus.len(), batch_size, epochs, seed)
}
