use crate::error::{Error, Result};

/// Digamma function Ψ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "digamma needs a positive finite argument, got {x}"
        )));
    }
    Ok(digamma_pos(x))
}

/// Ψ(x) without the domain check; `x` must be positive and finite.
///
/// Shifts the argument to x ≥ 6 with Ψ(x) = Ψ(x+1) − 1/x, then sums the
/// asymptotic series through the x⁻¹⁴ term.
pub(crate) fn digamma_pos(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 * inv - series
}

/// `log(Σ exp(v))`, −∞ for an empty or all −∞ slice.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_at_one() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() <= 1e-10);
    }

    #[test]
    fn digamma_at_half() {
        let want = -EULER_GAMMA - 2.0 * std::f64::consts::LN_2;
        assert!((digamma(0.5).unwrap() - want).abs() <= 1e-10);
    }

    #[test]
    fn digamma_recurrence() {
        let x = 3.7;
        let d = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
        assert!((d - 1.0 / x).abs() <= 1e-12);
    }

    #[test]
    fn digamma_matches_reference_on_a_grid() {
        for i in 1..400 {
            let x = i as f64 * 0.37;
            let ours = digamma(x).unwrap();
            let reference = statrs::function::gamma::digamma(x);
            assert!((ours - reference).abs() <= 1e-10 * (1.0 + reference.abs()), "x={x}");
        }
    }

    #[test]
    fn digamma_rejects_nonpositive() {
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.5).is_err());
        assert!(digamma(f64::NAN).is_err());
    }

    #[test]
    fn lse_handles_infinities() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[1000.0, f64::NEG_INFINITY]) - 1000.0).abs() < 1e-12);
    }
}
