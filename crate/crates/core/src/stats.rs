//! Closed-form predictions, rate estimates and abort decisions.

use serde::{Deserialize, Serialize};

use crate::error::{QsdcError, Result};

/// Error rate an intercept-resend attacker causes when the legitimate users
/// prepare and measure in `m` mutually unbiased bases of dimension `d`:
/// `(M·d + 1 − M − d) / (M·d)`.
pub fn theoretical_eve_error_rate(d: usize, m: usize) -> Result<f64> {
    if d < 2 {
        return Err(QsdcError::domain(format!("d must be >= 2, got {d}")));
    }
    if m == 0 || m > d + 1 {
        return Err(QsdcError::domain(format!(
            "M must be in 1..={} for d={d}, got {m}",
            d + 1
        )));
    }
    let (d, m) = (d as f64, m as f64);
    Ok((m * d + 1.0 - m - d) / (m * d))
}

/// Error rate on any check that compares a photon against a fully mixed
/// substitute (Bell pair half, or a Bell measurement after the partner was
/// disturbed): `(d − 1)/d`.
pub fn uniform_substitution_error_rate(d: usize) -> f64 {
    (d as f64 - 1.0) / d as f64
}

/// An error count with a 95% normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub errors: u64,
    pub samples: u64,
    pub rate: f64,
    pub ci95: (f64, f64),
}

pub fn estimate_rate(errors: u64, samples: u64) -> Result<RateEstimate> {
    if samples == 0 {
        return Err(QsdcError::domain(
            "cannot estimate a rate from zero samples",
        ));
    }
    if errors > samples {
        return Err(QsdcError::domain(format!(
            "{errors} errors out of {samples} samples"
        )));
    }
    let rate = errors as f64 / samples as f64;
    let half = 1.96 * (rate * (1.0 - rate) / samples as f64).sqrt();
    Ok(RateEstimate {
        errors,
        samples,
        rate,
        ci95: ((rate - half).max(0.0), (rate + half).min(1.0)),
    })
}

/// Binomial standard deviation of a sample mean at true rate `p`.
pub fn binomial_sigma(p: f64, samples: u64) -> f64 {
    (p * (1.0 - p) / samples as f64).sqrt()
}

/// Probability that at least one of `n_samples` independent checks fires
/// when each fires with probability `epsilon`.
pub fn detection_probability(epsilon: f64, n_samples: u64) -> f64 {
    let eps = epsilon.clamp(0.0, 1.0);
    let n = i32::try_from(n_samples).unwrap_or(i32::MAX);
    1.0 - (1.0 - eps).powi(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Continue,
    Abort,
}

/// Abort iff the observed rate is strictly above the threshold.
pub fn abort_decision(estimate: &RateEstimate, epsilon_t: f64) -> Decision {
    if estimate.rate > epsilon_t {
        Decision::Abort
    } else {
        Decision::Continue
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        assert_eq!(theoretical_eve_error_rate(3, 4).unwrap(), 0.5);
        assert_eq!(theoretical_eve_error_rate(2, 2).unwrap(), 0.25);
        for d in 2..8 {
            assert_eq!(theoretical_eve_error_rate(d, 1).unwrap(), 0.0);
        }
        assert!((theoretical_eve_error_rate(2, 3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((theoretical_eve_error_rate(3, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((theoretical_eve_error_rate(3, 3).unwrap() - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn formula_equals_mismatch_times_wrong_outcome() {
        for d in 2..10 {
            for m in 1..=d + 1 {
                let f = theoretical_eve_error_rate(d, m).unwrap();
                let g = (m as f64 - 1.0) / m as f64 * (d as f64 - 1.0) / d as f64;
                assert!((f - g).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn formula_domain() {
        assert!(theoretical_eve_error_rate(1, 1).is_err());
        assert!(theoretical_eve_error_rate(3, 0).is_err());
        assert!(theoretical_eve_error_rate(3, 5).is_err());
    }

    #[test]
    fn formula_monotone() {
        for d in 2..8 {
            for m in 1..=d {
                let here = theoretical_eve_error_rate(d, m).unwrap();
                assert!(theoretical_eve_error_rate(d, m + 1).unwrap() >= here);
                assert!(theoretical_eve_error_rate(d + 1, m).unwrap() >= here);
            }
        }
    }

    #[test]
    fn estimates() {
        let e = estimate_rate(0, 100).unwrap();
        assert_eq!((e.rate, e.ci95), (0.0, (0.0, 0.0)));

        let e = estimate_rate(25, 100).unwrap();
        assert_eq!(e.rate, 0.25);
        assert!((e.ci95.0 - 0.16513).abs() < 1e-4 && (e.ci95.1 - 0.33487).abs() < 1e-4);

        let e = estimate_rate(50, 100).unwrap();
        assert!((e.ci95.0 - 0.402).abs() < 1e-3 && (e.ci95.1 - 0.598).abs() < 1e-3);

        assert!(estimate_rate(0, 0).is_err());
        assert!(estimate_rate(5, 4).is_err());
    }

    #[test]
    fn detection() {
        assert!((detection_probability(0.5, 10) - 0.9990234375).abs() < 1e-12);
        assert_eq!(detection_probability(0.0, 40), 0.0);
        assert_eq!(detection_probability(0.3, 0), 0.0);
        assert!(detection_probability(0.3, 5) < detection_probability(0.3, 6));
        assert!(detection_probability(0.3, 5) < detection_probability(0.4, 5));
    }

    #[test]
    fn abort_boundary_is_strict() {
        let zero = estimate_rate(0, 50).unwrap();
        assert_eq!(abort_decision(&zero, 0.05), Decision::Continue);
        let half = estimate_rate(50, 100).unwrap();
        assert_eq!(abort_decision(&half, 0.05), Decision::Abort);
        let edge = estimate_rate(5, 100).unwrap();
        assert_eq!(abort_decision(&edge, 0.05), Decision::Continue);
    }
}
