//! Classic online Passive-Aggressive learning and its Bayesian counterpart
//! with an averaging classifier and a unit-covariance Gaussian posterior.
//!
//! Both updates solve the same one-dimensional dual
//! `max_τ τε − ½τ²xᵀx − τ y μᵀx` on `[0, c]`, so the Bayesian posterior
//! mean tracks the PA weight vector exactly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::SparseDoc;
use crate::error::{Error, Result};
use crate::model::GaussianPosterior;
use crate::numerics::{dot, sample_standard_normal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaConfig {
    /// Margin ε ≥ 0.
    pub epsilon: f64,
    /// Aggressiveness c > 0.
    pub c: f64,
}

impl PaConfig {
    pub fn new(epsilon: f64, c: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !(c > 0.0) {
            return Err(Error::Config(format!(
                "PA needs epsilon >= 0 and c > 0, got {epsilon}, {c}"
            )));
        }
        Ok(Self { epsilon, c })
    }
}

impl Default for PaConfig {
    fn default() -> Self {
        Self { epsilon: 1.0, c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaState {
    pub mu: Vec<f64>,
    pub round: u64,
}

impl PaState {
    pub fn new(dim: usize) -> Self {
        Self {
            mu: vec![0.0; dim],
            round: 0,
        }
    }
}

/// Unit-norm term-frequency features of a document over `num_words` words;
/// words beyond the vocabulary are dropped. An empty document maps to zeros.
pub fn doc_features(doc: &SparseDoc, num_words: usize) -> Vec<f64> {
    let mut x = vec![0.0; num_words];
    for &(w, c) in doc.tokens() {
        if let Some(slot) = x.get_mut(w as usize) {
            *slot += c as f64;
        }
    }
    let norm = dot(&x, &x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

/// `(ε − y wᵀx)₊`
pub fn hinge(w: &[f64], x: &[f64], y: f64, epsilon: f64) -> f64 {
    (epsilon - y * dot(w, x)).max(0.0)
}

/// Step size of the soft-margin update, `clamp((ε − y μᵀx) / xᵀx, 0, c)`.
pub fn pa_step(mu: &[f64], cfg: &PaConfig, x: &[f64], y: f64) -> Result<f64> {
    if mu.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            found: x.len(),
        });
    }
    let xx = dot(x, x);
    if !(xx > 0.0) {
        return Err(Error::Domain("PA update needs a nonzero feature vector".into()));
    }
    let loss = hinge(mu, x, y, cfg.epsilon);
    if loss == 0.0 {
        return Ok(0.0);
    }
    Ok((loss / xx).min(cfg.c))
}

/// One PA round. Leaves the weights untouched when the hinge loss is zero.
pub fn pa_update(state: &PaState, cfg: &PaConfig, x: &[f64], y: f64) -> Result<PaState> {
    let tau = pa_step(&state.mu, cfg, x, y)?;
    let mu = state.mu.iter().zip(x).map(|(m, xi)| m + tau * y * xi).collect();
    Ok(PaState {
        mu,
        round: state.round + 1,
    })
}

/// Posterior `N(μ, I)` maintained by non-likelihood BayesPA with the
/// averaging-classifier hinge loss.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesPaAvg {
    pub state: PaState,
}

impl BayesPaAvg {
    /// Prior `q₀ = N(0, I)`.
    pub fn new(dim: usize) -> Self {
        Self {
            state: PaState::new(dim),
        }
    }

    /// Returns the current posterior. The covariance is the identity in
    /// every round.
    pub fn posterior(&self) -> GaussianPosterior {
        GaussianPosterior::isotropic(self.state.mu.clone(), 1.0)
    }

    pub fn update(&mut self, cfg: &PaConfig, x: &[f64], y: f64) -> Result<()> {
        self.state = bayespa_avg_update(&self.state, cfg, x, y)?;
        Ok(())
    }
}

/// Bayesian round. The optimal posterior is `q_t(w) exp(τ y wᵀx) / Γ(τ)`;
/// with `q_t = N(μ, I)` that is `N(μ + τ y x, I)` and
/// `log Γ(τ) = τ y xᵀμ + ½τ²xᵀx + const`. The dual `τε − log Γ(τ)` is a
/// concave quadratic on `[0, c]`, maximized at its clamped stationary point.
pub fn bayespa_avg_update(state: &PaState, cfg: &PaConfig, x: &[f64], y: f64) -> Result<PaState> {
    if state.mu.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: state.mu.len(),
            found: x.len(),
        });
    }
    let xx = dot(x, x);
    if !(xx > 0.0) {
        return Err(Error::Domain("BayesPA update needs a nonzero feature vector".into()));
    }
    let margin = y * dot(&state.mu, x);
    // d/dτ [τε − τ·margin − ½τ²xx] = ε − margin − τ·xx
    let stationary = (cfg.epsilon - margin) / xx;
    let tau = stationary.clamp(0.0, cfg.c);
    let mu = state.mu.iter().zip(x).map(|(m, xi)| m + tau * y * xi).collect();
    Ok(PaState {
        mu,
        round: state.round + 1,
    })
}

/// Hinge loss of the averaging classifier, `(ε − y E[w]ᵀx)₊`.
pub fn averaging_hinge(posterior: &GaussianPosterior, x: &[f64], y: f64, epsilon: f64) -> f64 {
    hinge(posterior.mean(), x, y, epsilon)
}

/// Monte Carlo estimate of the Gibbs classifier's expected hinge loss
/// `E_q[(ε − y wᵀx)₊]`, with its standard error.
pub fn gibbs_hinge_mc<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    x: &[f64],
    y: f64,
    epsilon: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n_samples == 0 {
        return Err(Error::Domain("need at least one Monte Carlo sample".into()));
    }
    if posterior.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: posterior.dim(),
            found: x.len(),
        });
    }
    // wᵀx ~ N(μᵀx, xᵀΣx)
    let center = dot(posterior.mean(), x);
    let sd = posterior.covariance().quad_form(x).max(0.0).sqrt();
    if sd == 0.0 {
        return Ok(((epsilon - y * center).max(0.0), 0.0));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let score = center + sd * sample_standard_normal(rng);
        let l = (epsilon - y * score).max(0.0);
        sum += l;
        sum_sq += l * l;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = if n_samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{RngStream, SymMatrix};
    use proptest::prelude::*;
    use rand::Rng;

    /// Maximizes the dual `τε − ½τ²xx − τ y μᵀx` on `[0, c]` by bisecting
    /// on the sign of its derivative.
    fn dual_argmax(mu: &[f64], x: &[f64], y: f64, eps: f64, c: f64) -> f64 {
        let xx = dot(x, x);
        let m = y * dot(mu, x);
        let slope = |t: f64| eps - m - t * xx;
        if slope(0.0) <= 0.0 {
            return 0.0;
        }
        if slope(c) >= 0.0 {
            return c;
        }
        let (mut lo, mut hi) = (0.0, c);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn aggressive_step_matches_dual_oracle() {
        let s = PaState::new(2);
        let cfg = PaConfig::new(1.0, 10.0).unwrap();
        let tau_oracle = dual_argmax(&s.mu, &[2.0, 0.0], 1.0, 1.0, 10.0);
        assert!((tau_oracle - 0.25).abs() < 1e-9);
        let next = pa_update(&s, &cfg, &[2.0, 0.0], 1.0).unwrap();
        assert!((next.mu[0] - 0.5).abs() < 1e-15 && next.mu[1] == 0.0);
    }

    #[test]
    fn passive_when_loss_is_zero() {
        let s = PaState {
            mu: vec![5.0, 0.0],
            round: 0,
        };
        let next = pa_update(&s, &PaConfig::new(1.0, 1.0).unwrap(), &[1.0, 0.0], 1.0).unwrap();
        assert_eq!(next.mu, s.mu);
    }

    #[test]
    fn step_is_clamped_at_c() {
        let s = PaState::new(2);
        let cfg = PaConfig::new(1.0, 0.3).unwrap();
        let tau_oracle = dual_argmax(&s.mu, &[1.0, 0.0], 1.0, 1.0, 0.3);
        assert!((tau_oracle - 0.3).abs() < 1e-9);
        let next = pa_update(&s, &cfg, &[1.0, 0.0], 1.0).unwrap();
        assert!((next.mu[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let s = PaState::new(2);
        assert!(pa_update(&s, &PaConfig::default(), &[0.0, 0.0], 1.0).is_err());
        assert!(bayespa_avg_update(&s, &PaConfig::default(), &[0.0, 0.0], 1.0).is_err());
        assert!(pa_update(&s, &PaConfig::default(), &[1.0], 1.0).is_err());
    }

    #[test]
    fn bayes_prior_is_standard_normal() {
        let b = BayesPaAvg::new(4);
        let p = b.posterior();
        assert_eq!(p.mean(), &[0.0; 4]);
        assert_eq!(p.covariance(), &SymMatrix::identity(4));
    }

    #[test]
    fn covariance_stays_identity() {
        let mut rng = RngStream::new(3);
        let mut b = BayesPaAvg::new(5);
        let cfg = PaConfig::new(1.0, 1.0).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
            b.update(&cfg, &x, y).unwrap();
        }
        assert_eq!(b.posterior().covariance(), &SymMatrix::identity(5));
    }

    #[test]
    fn gibbs_hinge_of_point_mass_is_hinge() {
        let p = GaussianPosterior::new(vec![0.3, -0.2], SymMatrix::zeros(2)).unwrap();
        let mut rng = RngStream::new(1);
        let (est, se) = gibbs_hinge_mc(&p, &[1.0, 2.0], 1.0, 1.0, 100, &mut rng).unwrap();
        assert_eq!(est, hinge(&[0.3, -0.2], &[1.0, 2.0], 1.0, 1.0));
        assert_eq!(se, 0.0);
    }

    #[test]
    fn gibbs_hinge_one_dimensional_closed_form() {
        // E[(−w)₊] for w ~ N(0, 1) is 1/√(2π).
        let p = GaussianPosterior::new(vec![0.0], SymMatrix::identity(1)).unwrap();
        let mut rng = RngStream::new(2);
        let (est, _) = gibbs_hinge_mc(&p, &[1.0], 1.0, 0.0, 1_000_000, &mut rng).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((est - want).abs() / want < 0.02, "{est}");
    }

    proptest! {
        #[test]
        fn pa_and_bayes_agree(
            mu in proptest::collection::vec(-3.0f64..3.0, 6),
            x in proptest::collection::vec(-2.0f64..2.0, 6),
            pos in any::<bool>(),
            c in 0.05f64..20.0,
        ) {
            prop_assume!(dot(&x, &x) > 1e-6);
            let y = if pos { 1.0 } else { -1.0 };
            let cfg = PaConfig::new(1.0, c).unwrap();
            let s = PaState { mu, round: 0 };
            let a = pa_update(&s, &cfg, &x, y).unwrap();
            let b = bayespa_avg_update(&s, &cfg, &x, y).unwrap();
            for (u, v) in a.mu.iter().zip(&b.mu) {
                prop_assert!((u - v).abs() <= 1e-12);
            }
        }

        #[test]
        fn step_in_range_and_zero_iff_no_loss(
            mu in proptest::collection::vec(-3.0f64..3.0, 4),
            x in proptest::collection::vec(-2.0f64..2.0, 4),
            pos in any::<bool>(),
            c in 0.05f64..20.0,
        ) {
            prop_assume!(dot(&x, &x) > 1e-6);
            let y = if pos { 1.0 } else { -1.0 };
            let cfg = PaConfig::new(1.0, c).unwrap();
            let tau = pa_step(&mu, &cfg, &x, y).unwrap();
            prop_assert!((0.0..=c).contains(&tau));
            prop_assert_eq!(tau == 0.0, hinge(&mu, &x, y, 1.0) == 0.0);
            let next = pa_update(&PaState { mu: mu.clone(), round: 0 }, &cfg, &x, y).unwrap();
            prop_assert!(hinge(&next.mu, &x, y, 1.0) <= hinge(&mu, &x, y, 1.0) + 1e-12);
        }
    }
}
