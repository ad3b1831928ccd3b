#![allow(dead_code)]

use bayespa::corpus::{Corpus, Label, LabelKind, SparseDoc};
use bayespa::synthetic::SyntheticSpec;

/// Synthetic binary corpora: 2,000 training documents and 1,000 held-out
/// documents from the same generator, plus the held-out true proportions.
pub struct SyntheticSplit {
    pub train: Corpus,
    pub test: Corpus,
    pub test_zbar: Vec<Vec<f64>>,
}

pub fn synthetic_split() -> SyntheticSplit {
    let train = SyntheticSpec::default().binary().unwrap();
    let test = SyntheticSpec {
        num_docs: 1000,
        seed: 2,
        ..SyntheticSpec::default()
    }
    .binary()
    .unwrap();
    SyntheticSplit {
        train: train.corpus,
        test: test.corpus,
        test_zbar: test.zbar,
    }
}

pub fn binary_doc(words: &[u32], positive: bool) -> SparseDoc {
    let mut tokens: Vec<(u32, u32)> = Vec::new();
    for &w in words {
        match tokens.iter_mut().find(|(x, _)| *x == w) {
            Some((_, c)) => *c += 1,
            None => tokens.push((w, 1)),
        }
    }
    SparseDoc::binary(tokens, Label::from_sign(positive)).unwrap()
}

pub fn single_doc_corpus(doc: SparseDoc, num_words: usize) -> Corpus {
    Corpus::new(vec![doc], num_words, vec!["task0".into()], LabelKind::Binary).unwrap()
}

/// Half the L1 distance between two distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

pub fn frequencies(counts: &[usize]) -> Vec<f64> {
    let n: usize = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

/// Trapezoid rule for `∫ f(λ) dλ` over `(0, ∞)` after substituting
/// `λ = eᵘ`, on `u ∈ [lo, hi]`.
pub fn integrate_positive(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let g = |u: f64| {
        let l = u.exp();
        f(l) * l
    };
    let mut s = 0.5 * (g(lo) + g(hi));
    for i in 1..steps {
        s += g(lo + i as f64 * h);
    }
    s * h
}

/// `∫ λ^{-1/2} exp(−λ/2 − c ζ̄ − χ / (2λ)) dλ` with `χ = c²(ζ̄² + s²)`:
/// the weight a label contributes once its augmentation variable is
/// integrated out. `s²` is the posterior variance of the discriminant.
pub fn label_weight(c: f64, zeta: f64, var: f64) -> f64 {
    let chi = c * c * (zeta * zeta + var);
    integrate_positive(
        |l| l.powf(-0.5) * (-l / 2.0 - c * zeta - chi / (2.0 * l)).exp(),
        -30.0,
        8.0,
        40_000,
    )
}

/// CDF of `GIG(1/2, 1, χ)`, whose density is proportional to
/// `λ^{-1/2} exp(−(λ + χ/λ)/2)`, tabulated on a log grid.
pub struct GigCdf {
    lo: f64,
    h: f64,
    cdf: Vec<f64>,
}

impl GigCdf {
    pub fn new(chi: f64) -> Self {
        let (lo, hi, steps) = (-30.0f64, 6.0f64, 400_000usize);
        let h = (hi - lo) / steps as f64;
        let dens = |u: f64| {
            let l = u.exp();
            (0.5 * u - 0.5 * (l + chi / l)).exp()
        };
        let mut cdf = Vec::with_capacity(steps + 1);
        let mut acc = 0.0;
        let mut prev = dens(lo);
        cdf.push(0.0);
        for i in 1..=steps {
            let cur = dens(lo + i as f64 * h);
            acc += 0.5 * (prev + cur) * h;
            cdf.push(acc);
            prev = cur;
        }
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { lo, h, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let pos = (x.ln() - self.lo) / self.h;
        if pos <= 0.0 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.cdf.len() {
            return 1.0;
        }
        let f = pos - i as f64;
        self.cdf[i] * (1.0 - f) + self.cdf[i + 1] * f
    }
}

/// Kolmogorov–Smirnov distance between a sample and a CDF.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Unsigned Stirling numbers of the first kind for small arguments,
/// computed directly from the recurrence.
pub fn stirling(n: usize, k: usize) -> f64 {
    match (n, k) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ if k > n => 0.0,
        _ => (n - 1) as f64 * stirling(n - 1, k) + stirling(n - 1, k - 1),
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}
