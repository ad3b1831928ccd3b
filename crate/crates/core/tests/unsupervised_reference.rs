//! With supervision off, one training round must reproduce plain online
//! collapsed LDA and a truncated online HDP sampler written from scratch
//! here, driven by the same random streams.

use bayespa::corpus::Corpus;
use bayespa::medhdp::{HdpHyper, MedHdp};
use bayespa::medlda::{LdaHyper, MedLda};
use bayespa::model::TopicModel;
use bayespa::numerics::RngStream;
use bayespa::synthetic::SyntheticSpec;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::gamma::digamma;

const SEED: u64 = 17;
const BATCH: usize = 20;

fn corpus() -> Corpus {
    SyntheticSpec {
        num_docs: 60,
        num_words: 30,
        num_topics: 3,
        min_len: 5,
        max_len: 25,
        seed: 8,
        ..SyntheticSpec::default()
    }
    .binary()
    .unwrap()
    .corpus
}

fn batches(n: usize) -> Vec<Vec<usize>> {
    (0..n)
        .collect::<Vec<_>>()
        .chunks(BATCH)
        .map(<[usize]>::to_vec)
        .collect()
}

fn draw<R: Rng>(rng: &mut R, logits: &[f64]) -> usize {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cum = Vec::with_capacity(logits.len());
    let mut total = 0.0;
    for l in logits {
        total += (l - max).exp();
        cum.push(total);
    }
    let u = rng.random::<f64>() * total;
    cum.iter().position(|&c| u < c).unwrap()
}

fn assert_close(a: &[f64], b: &[f64], what: &str) {
    assert_eq!(a.len(), b.len(), "{what}");
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "{what}[{i}]: {x} vs {y}");
    }
}

fn delta_of(m: &dyn TopicModel) -> Vec<f64> {
    let t = m.topics();
    (0..t.num_topics())
        .flat_map(|k| (0..t.num_words()).map(move |w| t.delta(k, w)))
        .collect()
}

#[test]
fn unsupervised_medlda_round_is_online_collapsed_lda() {
    let corpus = corpus();
    let (k, w) = (3, corpus.num_words());
    let hyper = LdaHyper {
        c: 0.0,
        outer_iters: 2,
        samples: 4,
        burn_in: 1,
        ..LdaHyper::defaults(k)
    };
    let mut model = MedLda::new(k, w, hyper.clone(), SEED).unwrap();

    let mut stream = RngStream::new(SEED);
    let mut delta = vec![hyper.gamma_prior; k * w];
    let kept = (hyper.samples - hyper.burn_in) as f64;
    for batch in batches(corpus.len()) {
        model.process_minibatch(&corpus, &batch).unwrap();

        let round = stream.spawn();
        let mut rngs: Vec<RngStream> = (0..batch.len()).map(|p| round.fork(p as u64)).collect();
        let words: Vec<Vec<u32>> = batch.iter().map(|&d| corpus.doc(d).expand()).collect();
        let mut z: Vec<Vec<usize>> = vec![Vec::new(); batch.len()];
        let mut current = delta.clone();
        for it in 0..hyper.outer_iters {
            let row_psi: Vec<f64> = (0..k)
                .map(|t| digamma(current[t * w..(t + 1) * w].iter().sum()))
                .collect();
            let mut counts = vec![0.0; k * w];
            for (p, doc) in words.iter().enumerate() {
                let rng = &mut rngs[p];
                if it == 0 {
                    z[p] = doc.iter().map(|_| rng.random_range(0..k as u32) as usize).collect();
                }
                let mut dk = vec![0usize; k];
                z[p].iter().for_each(|&t| dk[t] += 1);
                for j in 0..hyper.samples {
                    for (i, &v) in doc.iter().enumerate() {
                        dk[z[p][i]] -= 1;
                        let logits: Vec<f64> = (0..k)
                            .map(|t| {
                                (hyper.alpha + dk[t] as f64).ln() + digamma(current[t * w + v as usize]) - row_psi[t]
                            })
                            .collect();
                        z[p][i] = draw(rng, &logits);
                        dk[z[p][i]] += 1;
                    }
                    if j >= hyper.burn_in {
                        for (&t, &v) in z[p].iter().zip(doc) {
                            counts[t * w + v as usize] += 1.0 / kept;
                        }
                    }
                }
            }
            current = delta.iter().zip(&counts).map(|(d, c)| d + c).collect();
        }
        delta = current;
        assert_close(&delta_of(&model), &delta, "topic parameters");
    }
}

fn log_stirling(n_max: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![f64::NEG_INFINITY; n_max + 1]; n_max + 1];
    t[0][0] = 0.0;
    for n in 1..=n_max {
        for s in 1..=n {
            let stay = ((n - 1) as f64).ln() + t[n - 1][s];
            let open = t[n - 1][s - 1];
            let m = stay.max(open);
            t[n][s] = if m == f64::NEG_INFINITY {
                m
            } else {
                m + ((stay - m).exp() + (open - m).exp()).ln()
            };
        }
    }
    t
}

#[test]
fn unsupervised_capped_medhdp_round_is_truncated_online_hdp() {
    let corpus = corpus();
    let (k, w) = (3, corpus.num_words());
    let hyper = HdpHyper {
        c: 0.0,
        initial_topics: k,
        max_topics: k,
        outer_iters: 2,
        samples: 4,
        burn_in: 1,
        ..HdpHyper::default()
    };
    let mut model = MedHdp::new(w, hyper.clone(), SEED).unwrap();
    let ls = log_stirling(25);

    let mut stream = RngStream::new(SEED);
    let mut delta = vec![hyper.eta; k * w];
    let (mut u, mut v) = (vec![1.0; k], vec![hyper.gamma_hdp; k]);
    let kept = (hyper.samples - hyper.burn_in) as f64;
    for batch in batches(corpus.len()) {
        model.process_minibatch(&corpus, &batch).unwrap();

        let mut rng = stream.spawn();
        let words: Vec<Vec<u32>> = batch.iter().map(|&d| corpus.doc(d).expand()).collect();
        let row: Vec<f64> = (0..k).map(|t| delta[t * w..(t + 1) * w].iter().sum()).collect();
        let mut z: Vec<Vec<usize>> = Vec::new();
        let mut tables = vec![vec![0usize; k]; batch.len()];
        let mut nkw = vec![0usize; k * w];
        let mut nk = vec![0usize; k];
        let (mut new_delta, mut new_u, mut new_v) = (delta.clone(), u.clone(), v.clone());
        for it in 0..hyper.outer_iters {
            if it == 0 {
                for doc in &words {
                    let zd: Vec<usize> = doc.iter().map(|_| rng.random_range(0..k as u32) as usize).collect();
                    for (&t, &x) in zd.iter().zip(doc) {
                        nkw[t * w + x as usize] += 1;
                        nk[t] += 1;
                    }
                    z.push(zd);
                }
            }
            let mut acc_counts = vec![0.0; k * w];
            let mut acc_tables = vec![0.0; k];
            for j in 0..hyper.samples {
                let totals: Vec<usize> = (0..k).map(|t| tables.iter().map(|d| d[t]).sum()).collect();
                let mut pi = Vec::with_capacity(k);
                let mut rest = 1.0;
                for t in 0..k {
                    let tail: usize = totals[t + 1..].iter().sum();
                    let b = Beta::new(u[t] + totals[t] as f64, v[t] + tail as f64)
                        .unwrap()
                        .sample(&mut rng)
                        .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                    pi.push(b * rest);
                    rest *= 1.0 - b;
                }
                for (p, doc) in words.iter().enumerate() {
                    let mut dk = vec![0usize; k];
                    z[p].iter().for_each(|&t| dk[t] += 1);
                    for (i, &x) in doc.iter().enumerate() {
                        let old = z[p][i];
                        dk[old] -= 1;
                        nkw[old * w + x as usize] -= 1;
                        nk[old] -= 1;
                        let logits: Vec<f64> = (0..k)
                            .map(|t| {
                                (hyper.alpha * pi[t] + dk[t] as f64).ln()
                                    + (nkw[t * w + x as usize] as f64 + delta[t * w + x as usize]).ln()
                                    - (nk[t] as f64 + row[t]).ln()
                            })
                            .collect();
                        let t = draw(&mut rng, &logits);
                        z[p][i] = t;
                        dk[t] += 1;
                        nkw[t * w + x as usize] += 1;
                        nk[t] += 1;
                    }
                    for t in 0..k {
                        tables[p][t] = match dk[t] {
                            n @ (0 | 1) => n,
                            n => {
                                let lw = (hyper.alpha * pi[t]).ln();
                                let logits: Vec<f64> = (1..=n).map(|s| ls[n][s] + s as f64 * lw).collect();
                                1 + draw(&mut rng, &logits)
                            }
                        };
                    }
                }
                if j >= hyper.burn_in {
                    for (a, &c) in acc_counts.iter_mut().zip(&nkw) {
                        *a += c as f64 / kept;
                    }
                    for t in 0..k {
                        acc_tables[t] += tables.iter().map(|d| d[t]).sum::<usize>() as f64 / kept;
                    }
                }
            }
            new_delta = delta.iter().zip(&acc_counts).map(|(d, c)| d + c).collect();
            new_u = u.iter().zip(&acc_tables).map(|(a, t)| a + t).collect();
            new_v = (0..k).map(|t| v[t] + acc_tables[t + 1..].iter().sum::<f64>()).collect();
        }
        (delta, u, v) = (new_delta, new_u, new_v);
        assert_eq!(model.num_topics(), k);
        assert_close(&delta_of(&model), &delta, "topic parameters");
        assert_close(model.sticks().u(), &u, "stick u");
        assert_close(model.sticks().v(), &v, "stick v");
    }
}
