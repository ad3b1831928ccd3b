//! Classic passive-aggressive learning as a special case of BayesPA: with a
//! unit-variance Gaussian prior and the averaging hinge loss, the BayesPA
//! posterior mean follows the PA weights exactly. Also shows that the Gibbs
//! hinge upper-bounds the averaging hinge.

use bayespa::numerics::{sample_standard_normal, RngStream};
use bayespa::pa::{averaging_hinge, gibbs_hinge_mc, pa_update, BayesPaAvg, PaConfig, PaState};
use rand::Rng;

fn main() -> bayespa::Result<()> {
    let mut rng = RngStream::new(7);
    let dim = 10;
    let truth: Vec<f64> = (0..dim).map(|_| sample_standard_normal(&mut rng)).collect();
    for c in [0.1, 1.0, 10.0] {
        let cfg = PaConfig::new(1.0, c)?;
        let mut pa = PaState::new(dim);
        let mut bayes = BayesPaAvg::new(dim);
        let (mut worst, mut mistakes) = (0.0f64, 0);
        for _ in 0..5000 {
            let x: Vec<f64> = (0..dim).map(|_| sample_standard_normal(&mut rng)).collect();
            let y = if bayespa::numerics::dot(&truth, &x) >= 0.0 {
                1.0
            } else {
                -1.0
            };
            if (bayespa::numerics::dot(&pa.mu, &x) >= 0.0) != (y > 0.0) {
                mistakes += 1;
            }
            pa = pa_update(&pa, &cfg, &x, y)?;
            bayes.update(&cfg, &x, y)?;
            let gap = pa
                .mu
                .iter()
                .zip(&bayes.state.mu)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(gap);
        }
        println!("c = {c:>4}: {mistakes} online mistakes in 5000 rounds, max |PA - BayesPA mean| = {worst:.1e}");
    }

    let post = BayesPaAvg::new(dim).posterior();
    for _ in 0..3 {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let avg = averaging_hinge(&post, &x, 1.0, 1.0);
        let (gibbs, se) = gibbs_hinge_mc(&post, &x, 1.0, 1.0, 100_000, &mut rng)?;
        println!("averaging hinge {avg:.4} <= Gibbs hinge {gibbs:.4} (se {se:.4})");
    }
    Ok(())
}
