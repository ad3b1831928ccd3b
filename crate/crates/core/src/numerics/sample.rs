//! Random variates used by the samplers.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

use super::linalg::Cholesky;
use crate::error::{Error, Result};

/// Smallest value an augmentation variable λ may take.
pub const LAMBDA_MIN: f64 = 1e-12;
/// Largest value an augmentation variable λ may take.
pub const LAMBDA_MAX: f64 = 1e12;

pub fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Gamma(shape, scale) draw.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    let g = Gamma::new(shape, scale).map_err(|e| Error::Domain(format!("gamma({shape}, {scale}): {e}")))?;
    Ok(g.sample(rng))
}

/// Beta(a, b) draw.
pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    let d = Beta::new(a, b).map_err(|e| Error::Domain(format!("beta({a}, {b}): {e}")))?;
    Ok(d.sample(rng))
}

/// Inverse Gaussian IG(mean, shape) by the transformation-with-rejection
/// method of Michael, Schucany and Haas: one normal and one uniform draw.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(rng: &mut R, mean: f64, shape: f64) -> Result<f64> {
    if !(mean > 0.0 && mean.is_finite() && shape > 0.0 && shape.is_finite()) {
        return Err(Error::Domain(format!(
            "inverse Gaussian needs positive finite parameters, got mean={mean} shape={shape}"
        )));
    }
    let nu = sample_standard_normal(rng);
    let y = mean * nu * nu;
    // Smaller root of the quadratic, written without cancellation:
    // mean * 4 shape y / (y + sqrt(y^2 + 4 shape y))^2.
    let s = (y * y + 4.0 * shape * y).sqrt();
    let denom = y + s;
    let x = if denom > 0.0 {
        mean * 4.0 * shape * y / (denom * denom)
    } else {
        mean
    };
    let u: f64 = rng.random();
    if u * (mean + x) <= mean {
        Ok(x)
    } else {
        Ok(mean * mean / x)
    }
}

/// Draws λ ~ GIG(1/2, 1, chi) as the reciprocal of IG(1/√chi, 1), then
/// clamps to `[LAMBDA_MIN, LAMBDA_MAX]`.
pub fn sample_gig_half<R: Rng + ?Sized>(rng: &mut R, chi: f64) -> Result<f64> {
    if !(chi > 0.0) || !chi.is_finite() {
        return Err(Error::Domain(format!("GIG(1/2, 1, chi) needs chi > 0, got {chi}")));
    }
    let inv = sample_inverse_gaussian(rng, 1.0 / chi.sqrt(), 1.0)?;
    Ok((1.0 / inv).clamp(LAMBDA_MIN, LAMBDA_MAX))
}

/// Index `k` with probability `softmax(logits)_k`. Ties in the cumulative
/// scan go to the lowest index.
pub fn sample_categorical_logits<R: Rng + ?Sized>(rng: &mut R, logits: &[f64]) -> Result<usize> {
    let mut scratch = Vec::new();
    sample_categorical_logits_with(rng, logits, &mut scratch)
}

/// As [`sample_categorical_logits`], reusing `scratch` for the weights.
pub fn sample_categorical_logits_with<R: Rng + ?Sized>(
    rng: &mut R,
    logits: &[f64],
    scratch: &mut Vec<f64>,
) -> Result<usize> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numeric(if max.is_nan() || max == f64::INFINITY {
            format!("categorical logits contain a non-finite maximum ({max})")
        } else {
            "all categorical logits are -inf".into()
        }));
    }
    scratch.clear();
    let mut total = 0.0;
    for &l in logits {
        let w = if l.is_nan() { 0.0 } else { (l - max).exp() };
        total += w;
        scratch.push(total);
    }
    let u = rng.random::<f64>() * total;
    Ok(scratch.iter().position(|&c| u < c).unwrap_or_else(|| {
        // u == total can only happen through rounding; take the last
        // index with positive weight.
        scratch
            .iter()
            .enumerate()
            .rev()
            .find(|&(i, &c)| i == 0 || c > scratch[i - 1])
            .map_or(0, |(i, _)| i)
    }))
}

/// `mean + L z` with `z` standard normal and `L` a Cholesky factor of the
/// covariance.
pub fn sample_gaussian_vector<R: Rng + ?Sized>(rng: &mut R, mean: &[f64], factor: &Cholesky) -> Result<Vec<f64>> {
    if factor.dim() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            found: factor.dim(),
        });
    }
    let z: Vec<f64> = (0..mean.len()).map(|_| sample_standard_normal(rng)).collect();
    let lz = factor.mul_lower(&z);
    Ok(mean.iter().zip(lz).map(|(m, d)| m + d).collect())
}
