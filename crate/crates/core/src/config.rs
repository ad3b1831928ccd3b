//! Run configuration: a flat `key = value` text file plus overrides.
//!
//! Blank lines and `#` comments are ignored. Later assignments win, so
//! command-line overrides are simply applied after the file. Hyperparameters
//! left unset take the defaults of the selected model.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::medhdp::HdpHyper;
use crate::medlda::LdaHyper;
use crate::pa::PaConfig;
use crate::predict::{InferenceConfig, PredictMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Pa,
    MedLda,
    MedHdp,
    MedLdaMultitask,
    MedHdpMultitask,
}

impl ModelKind {
    pub fn is_hdp(self) -> bool {
        matches!(self, ModelKind::MedHdp | ModelKind::MedHdpMultitask)
    }

    pub fn is_multitask(self) -> bool {
        matches!(self, ModelKind::MedLdaMultitask | ModelKind::MedHdpMultitask)
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pa" => ModelKind::Pa,
            "pamedlda" => ModelKind::MedLda,
            "pamedhdp" => ModelKind::MedHdp,
            "pamedlda-mt" => ModelKind::MedLdaMultitask,
            "pamedhdp-mt" => ModelKind::MedHdpMultitask,
            _ => {
                return Err(Error::Config(format!(
                    "unknown model `{s}` (expected pa, pamedlda, pamedhdp, pamedlda-mt or pamedhdp-mt)"
                )))
            }
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Pa => "pa",
            ModelKind::MedLda => "pamedlda",
            ModelKind::MedHdp => "pamedhdp",
            ModelKind::MedLdaMultitask => "pamedlda-mt",
            ModelKind::MedHdpMultitask => "pamedhdp-mt",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    /// Topics of a parametric model; ignored by the HDP models.
    pub num_topics: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub alpha: Option<f64>,
    pub gamma_prior: Option<f64>,
    pub gamma_hdp: Option<f64>,
    pub eta: Option<f64>,
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub v: Option<f64>,
    pub outer_iters: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub diagonal_cov: bool,
    pub reinit_z: bool,
    pub max_topics: usize,
    pub initial_topics: usize,
    pub prune_window: Option<u64>,
    pub max_doc_len: usize,
    /// Vocabulary size; defaults to the larger of the train and test
    /// corpora.
    pub num_words: Option<usize>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub snapshot_out: Option<PathBuf>,
    pub metrics_out: Option<PathBuf>,
    pub summary_out: Option<PathBuf>,
    pub predictions_out: Option<PathBuf>,
    /// Continue from this snapshot.
    pub resume: Option<PathBuf>,
    /// Mini-batches between held-out evaluations; 0 evaluates only at the
    /// end.
    pub eval_every: usize,
    pub eval_mode: PredictMode,
    pub test_burn_in: usize,
    pub test_keep: usize,
    /// Stop once the round objective changes by less than this relative
    /// amount.
    pub converge_tol: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::MedLda,
            num_topics: 20,
            batch_size: 64,
            epochs: 1,
            alpha: None,
            gamma_prior: None,
            gamma_hdp: None,
            eta: None,
            c: None,
            epsilon: None,
            v: None,
            outer_iters: 1,
            samples: 2,
            burn_in: 0,
            diagonal_cov: false,
            reinit_z: false,
            max_topics: 512,
            initial_topics: 1,
            prune_window: None,
            max_doc_len: crate::corpus::DEFAULT_MAX_DOC_LEN,
            num_words: None,
            seed: 1,
            threads: None,
            train: None,
            test: None,
            snapshot_out: None,
            metrics_out: None,
            summary_out: None,
            predictions_out: None,
            resume: None,
            eval_every: 0,
            eval_mode: PredictMode::Mean,
            test_burn_in: InferenceConfig::default().burn_in,
            test_keep: InferenceConfig::default().keep,
            converge_tol: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean `{value}` for `{key}`"))),
    }
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "model" => self.model = value.parse()?,
            "K" | "topics" | "num_topics" => self.num_topics = parse(key, value)?,
            "B" | "batch_size" => self.batch_size = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "alpha" => self.alpha = Some(parse(key, value)?),
            "gamma_prior" => self.gamma_prior = Some(parse(key, value)?),
            "gamma_hdp" => self.gamma_hdp = Some(parse(key, value)?),
            "eta" => self.eta = Some(parse(key, value)?),
            "c" => self.c = Some(parse(key, value)?),
            "epsilon" => self.epsilon = Some(parse(key, value)?),
            "v" => self.v = Some(parse(key, value)?),
            "I" | "outer_iters" => self.outer_iters = parse(key, value)?,
            "J" | "samples" => self.samples = parse(key, value)?,
            "beta" | "burn_in" => self.burn_in = parse(key, value)?,
            "diagonal_cov" => self.diagonal_cov = parse_bool(key, value)?,
            "reinit_z" => self.reinit_z = parse_bool(key, value)?,
            "max_topics" => self.max_topics = parse(key, value)?,
            "initial_topics" => self.initial_topics = parse(key, value)?,
            "prune_window" => {
                self.prune_window = match value {
                    "" | "off" | "never" => None,
                    _ => Some(parse(key, value)?),
                }
            }
            "max_doc_len" => self.max_doc_len = parse(key, value)?,
            "num_words" => self.num_words = Some(parse(key, value)?),
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = Some(parse(key, value)?),
            "train" => self.train = optional_path(value),
            "test" => self.test = optional_path(value),
            "snapshot_out" => self.snapshot_out = optional_path(value),
            "metrics_out" => self.metrics_out = optional_path(value),
            "summary_out" => self.summary_out = optional_path(value),
            "predictions_out" => self.predictions_out = optional_path(value),
            "resume" => self.resume = optional_path(value),
            "eval_every" => self.eval_every = parse(key, value)?,
            "eval_mode" => self.eval_mode = value.parse()?,
            "test_burn_in" => self.test_burn_in = parse(key, value)?,
            "test_keep" => self.test_keep = parse(key, value)?,
            "converge_tol" => self.converge_tol = Some(parse(key, value)?),
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got `{line}`", n + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, e.config_message())))?;
        }
        Ok(())
    }

    /// Reads a config file. Relative corpus and output paths are resolved
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_text(&text)?;
        if let Some(dir) = path.parent() {
            for p in [
                &mut cfg.train,
                &mut cfg.test,
                &mut cfg.snapshot_out,
                &mut cfg.metrics_out,
                &mut cfg.summary_out,
                &mut cfg.predictions_out,
                &mut cfg.resume,
            ]
            .into_iter()
            .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<'a>(&mut self, pairs: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override must be key=value, got `{pair}`")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("batch_size and epochs must be at least 1".into()));
        }
        if self.test_keep == 0 {
            return Err(Error::Config("test_keep must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if let Some(t) = self.converge_tol {
            if !(t > 0.0) {
                return Err(Error::Config("converge_tol must be positive".into()));
            }
        }
        match self.model {
            ModelKind::Pa => {
                self.pa_config()?;
            }
            m if m.is_hdp() => self.hdp_hyper().validate()?,
            _ => {
                if self.num_topics == 0 {
                    return Err(Error::Config("K must be at least 1".into()));
                }
                self.lda_hyper().validate()?;
            }
        }
        Ok(())
    }

    pub fn lda_hyper(&self) -> LdaHyper {
        let d = LdaHyper::defaults(self.num_topics);
        LdaHyper {
            alpha: self.alpha.unwrap_or(d.alpha),
            gamma_prior: self.gamma_prior.unwrap_or(d.gamma_prior),
            c: self.c.unwrap_or(d.c),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            v: self.v.unwrap_or(d.v),
            outer_iters: self.outer_iters,
            samples: self.samples,
            burn_in: self.burn_in,
            diagonal_cov: self.diagonal_cov,
            reinit_z: self.reinit_z,
        }
    }

    pub fn hdp_hyper(&self) -> HdpHyper {
        let d = HdpHyper::default();
        HdpHyper {
            alpha: self.alpha.unwrap_or(d.alpha),
            gamma_hdp: self.gamma_hdp.unwrap_or(d.gamma_hdp),
            eta: self.eta.unwrap_or(d.eta),
            c: self.c.unwrap_or(d.c),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            v: self.v.unwrap_or(d.v),
            outer_iters: self.outer_iters,
            samples: self.samples,
            burn_in: self.burn_in,
            max_topics: self.max_topics,
            initial_topics: self.initial_topics,
            prune_window: self.prune_window,
            diagonal_cov: self.diagonal_cov,
            reinit_z: self.reinit_z,
            max_doc_len: self.max_doc_len,
        }
    }

    /// Margin and aggressiveness of the plain PA baseline, which default to
    /// 1 because its features are unit-norm.
    pub fn pa_config(&self) -> Result<PaConfig> {
        PaConfig::new(self.epsilon.unwrap_or(1.0), self.c.unwrap_or(1.0))
    }

    pub fn inference(&self) -> InferenceConfig {
        InferenceConfig {
            burn_in: self.test_burn_in,
            keep: self.test_keep,
        }
    }

    /// Settings that determine the trained model, as `key = value` pairs.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("model".to_string(), self.model.to_string()),
            ("batch_size".into(), self.batch_size.to_string()),
            ("epochs".into(), self.epochs.to_string()),
            ("seed".into(), self.seed.to_string()),
        ];
        match self.model {
            ModelKind::Pa => {
                if let Ok(p) = self.pa_config() {
                    out.push(("epsilon".into(), p.epsilon.to_string()));
                    out.push(("c".into(), p.c.to_string()));
                }
            }
            m if m.is_hdp() => {
                let h = self.hdp_hyper();
                out.extend([
                    ("alpha".into(), h.alpha.to_string()),
                    ("gamma_hdp".into(), h.gamma_hdp.to_string()),
                    ("eta".into(), h.eta.to_string()),
                    ("c".into(), h.c.to_string()),
                    ("epsilon".into(), h.epsilon.to_string()),
                    ("v".into(), h.v.to_string()),
                    ("I".into(), h.outer_iters.to_string()),
                    ("J".into(), h.samples.to_string()),
                    ("beta".into(), h.burn_in.to_string()),
                ]);
            }
            _ => {
                let h = self.lda_hyper();
                out.extend([
                    ("K".into(), self.num_topics.to_string()),
                    ("alpha".into(), h.alpha.to_string()),
                    ("gamma_prior".into(), h.gamma_prior.to_string()),
                    ("c".into(), h.c.to_string()),
                    ("epsilon".into(), h.epsilon.to_string()),
                    ("v".into(), h.v.to_string()),
                    ("I".into(), h.outer_iters.to_string()),
                    ("J".into(), h.samples.to_string()),
                    ("beta".into(), h.burn_in.to_string()),
                ]);
            }
        }
        out
    }
}

impl Error {
    fn config_message(&self) -> String {
        match self {
            Error::Config(m) => m.clone(),
            other => other.to_string(),
        }
    }
}
