//! Two-task joint enumeration on a two-token document. Each task carries its
//! own augmentation variable, so the exact joint multiplies one integrated
//! label weight per task.

mod common;

use bayespa::corpus::{Label, SparseDoc};
use bayespa::medhdp::{HdpDoc, HdpHyper, HdpRound, StickPosterior};
use bayespa::medlda::{LdaDocState, LdaGlobals};
use bayespa::model::{GaussianPosterior, HeadCache, Margin, TaskTerm, TopicPosterior};
use bayespa::numerics::{dot, RngStream, StirlingTable, SymMatrix};

use common::*;

fn heads() -> Vec<GaussianPosterior> {
    vec![
        GaussianPosterior::new(
            vec![0.9, -0.4],
            SymMatrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.8]]).unwrap(),
        )
        .unwrap(),
        GaussianPosterior::new(
            vec![-0.6, 0.7],
            SymMatrix::from_rows(&[vec![0.3, -0.05], vec![-0.05, 0.6]]).unwrap(),
        )
        .unwrap(),
    ]
}

fn topics(prior: f64) -> TopicPosterior {
    let mut t = TopicPosterior::new(2, 3, prior).unwrap();
    t.add_counts(&[2.0, 1.5, 0.3, 0.2, 1.0, 3.0]).unwrap();
    t
}

const YS: [f64; 2] = [1.0, -1.0];
const WORDS: [usize; 2] = [0, 2];

fn two_task_doc() -> SparseDoc {
    SparseDoc::new(
        vec![(0, 1), (2, 1)],
        [(0, Label::from_sign(true)), (1, Label::from_sign(false))]
            .into_iter()
            .collect(),
    )
    .unwrap()
}

fn terms() -> Vec<TaskTerm> {
    vec![TaskTerm::new(0, YS[0], 2), TaskTerm::new(1, YS[1], 2)]
}

fn labels_weight(heads: &[GaussianPosterior], m: Margin, zbar: &[f64]) -> f64 {
    heads
        .iter()
        .zip(YS)
        .map(|(h, y)| label_weight(m.c, m.epsilon - y * dot(h.mean(), zbar), h.covariance().quad_form(zbar)))
        .product()
}

fn counts_of(z: [usize; 2]) -> [usize; 2] {
    let mut c = [0; 2];
    z.iter().for_each(|&k| c[k] += 1);
    c
}

#[test]
fn lda_two_task_joint_matches_enumeration() {
    let topics = topics(0.5);
    let heads = heads();
    let caches: Vec<HeadCache> = heads.iter().map(HeadCache::new).collect();
    let margin = Margin { c: 1.0, epsilon: 1.5 };
    let alpha = 0.7;
    let g = LdaGlobals {
        topics: &topics,
        heads: &caches,
        alpha,
        margin,
    };
    let mut st = LdaDocState::new(&two_task_doc(), terms(), 2);
    let mut rng = RngStream::new(3);
    st.init_uniform(&g, &mut rng).unwrap();
    for _ in 0..500 {
        st.sweep(&g, &mut rng).unwrap();
    }
    let mut counts = [0usize; 4];
    for _ in 0..100_000 {
        st.sweep(&g, &mut rng).unwrap();
        let z = st.assignments();
        counts[(z[0] * 2 + z[1]) as usize] += 1;
    }
    let log_phi = |k: usize, w: usize| {
        let row: f64 = (0..3).map(|v| topics.delta(k, v)).sum();
        digamma(topics.delta(k, w)) - digamma(row)
    };
    let weights: Vec<f64> = (0..4)
        .map(|code| {
            let z = [code / 2, code % 2];
            let c = counts_of(z);
            let doc: f64 = c.iter().map(|&n| ln_gamma(alpha + n as f64)).sum();
            let word: f64 = z.iter().zip(WORDS).map(|(&k, w)| log_phi(k, w)).sum();
            let zbar = [c[0] as f64 / 2.0, c[1] as f64 / 2.0];
            (doc + word).exp() * labels_weight(&heads, margin, &zbar)
        })
        .collect();
    let tv = total_variation(&frequencies(&counts), &normalize(&weights));
    assert!(tv <= 0.02, "TV {tv}");
}

#[test]
fn hdp_two_task_joint_matches_enumeration() {
    let hyper = HdpHyper {
        alpha: 2.0,
        eta: 0.5,
        c: 1.0,
        epsilon: 1.5,
        ..HdpHyper::default()
    };
    let topics = topics(hyper.eta);
    let heads = heads();
    let pibar = vec![0.5, 0.6];
    let pi = [0.5, 0.5 * 0.6];
    let mut table = StirlingTable::with_bound(16);
    let mut round = HdpRound::new(
        &hyper,
        1,
        topics.clone(),
        StickPosterior::new(2, hyper.gamma_hdp),
        heads.clone(),
        vec![HdpDoc::new(&two_task_doc(), terms())],
        &mut table,
    )
    .unwrap();
    round.set_sticks(pibar).unwrap();
    round.set_growth(false);
    round.set_assignments(0, &[1, 0]).unwrap();
    let mut rng = RngStream::new(4);
    for _ in 0..500 {
        round.sweep_doc(0, &mut rng).unwrap();
    }
    let mut states = Vec::new();
    for code in 0..4 {
        let z = [code / 2, code % 2];
        let c = counts_of(z);
        let range = |n: usize| if n == 0 { 0..=0 } else { 1..=n };
        for s0 in range(c[0]) {
            for s1 in range(c[1]) {
                states.push((z, [s0, s1]));
            }
        }
    }
    let mut counts = vec![0usize; states.len()];
    for _ in 0..100_000 {
        round.sweep_doc(0, &mut rng).unwrap();
        let d = &round.docs[0];
        let key = (
            [d.assignments()[0] as usize, d.assignments()[1] as usize],
            [d.tables()[0] as usize, d.tables()[1] as usize],
        );
        counts[states.iter().position(|s| *s == key).unwrap()] += 1;
    }
    let margin = hyper.margin();
    let weights: Vec<f64> = states
        .iter()
        .map(|&(z, s)| {
            let c = counts_of(z);
            let mut lw = 0.0;
            for k in 0..2 {
                lw += stirling(c[k], s[k]).ln() + s[k] as f64 * (hyper.alpha * pi[k]).ln();
                let row: f64 = (0..3).map(|v| topics.delta(k, v)).sum();
                lw += ln_gamma(row) - ln_gamma(row + c[k] as f64);
                for w in 0..3 {
                    let n = z.iter().zip(WORDS).filter(|&(&zk, ww)| zk == k && ww == w).count() as f64;
                    lw += ln_gamma(topics.delta(k, w) + n) - ln_gamma(topics.delta(k, w));
                }
            }
            let zbar = [c[0] as f64 / 2.0, c[1] as f64 / 2.0];
            lw.exp() * labels_weight(&heads, margin, &zbar)
        })
        .collect();
    let tv = total_variation(&frequencies(&counts), &normalize(&weights));
    assert!(tv <= 0.02, "TV {tv}");
}

#[test]
fn unlabeled_task_contributes_no_supervision() {
    // A document labeled only for task 0 must follow the single-task joint.
    let topics = topics(0.5);
    let heads = heads();
    let caches: Vec<HeadCache> = heads.iter().map(HeadCache::new).collect();
    let margin = Margin { c: 1.0, epsilon: 1.5 };
    let g = LdaGlobals {
        topics: &topics,
        heads: &caches,
        alpha: 0.7,
        margin,
    };
    let doc = binary_doc(&[0, 2], true);
    let mut st = LdaDocState::new(&doc, vec![TaskTerm::new(0, 1.0, 2)], 2);
    let mut rng = RngStream::new(5);
    st.init_uniform(&g, &mut rng).unwrap();
    let mut counts = [0usize; 4];
    for _ in 0..100_000 {
        st.sweep(&g, &mut rng).unwrap();
        let z = st.assignments();
        counts[(z[0] * 2 + z[1]) as usize] += 1;
    }
    let log_phi = |k: usize, w: usize| {
        let row: f64 = (0..3).map(|v| topics.delta(k, v)).sum();
        digamma(topics.delta(k, w)) - digamma(row)
    };
    let weights: Vec<f64> = (0..4)
        .map(|code| {
            let z = [code / 2, code % 2];
            let c = counts_of(z);
            let doc: f64 = c.iter().map(|&n| ln_gamma(0.7 + n as f64)).sum();
            let word: f64 = z.iter().zip(WORDS).map(|(&k, w)| log_phi(k, w)).sum();
            let zbar = [c[0] as f64 / 2.0, c[1] as f64 / 2.0];
            let h = &heads[0];
            (doc + word).exp()
                * label_weight(
                    margin.c,
                    margin.epsilon - dot(h.mean(), &zbar),
                    h.covariance().quad_form(&zbar),
                )
        })
        .collect();
    let tv = total_variation(&frequencies(&counts), &normalize(&weights));
    assert!(tv <= 0.02, "TV {tv}");
}
