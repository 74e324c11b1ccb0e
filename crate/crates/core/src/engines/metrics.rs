//! Decay diagnostics comparing a noisy observable series against its
//! noiseless counterpart.

use crate::error::{Error, Result};

/// Effective decay rate lambda(t) = -(1/t) ln(noisy(t) / noiseless(t)).
///
/// An entry is None when the rate is undefined there: the ratio is not
/// positive, the noiseless value is below 1e-9 in magnitude, or t = 0.
pub fn decay_rate_series(
    steps: &[usize],
    noisy: &[f64],
    noiseless: &[f64],
) -> Result<Vec<Option<f64>>> {
    if steps.len() != noisy.len() || steps.len() != noiseless.len() {
        return Err(Error::incompatible("series lengths differ"));
    }
    Ok(steps
        .iter()
        .zip(noisy.iter().zip(noiseless.iter()))
        .map(|(&t, (&a, &b))| {
            if t == 0 || b.abs() < 1e-9 {
                return None;
            }
            let ratio = a / b;
            if ratio <= 0.0 {
                return None;
            }
            Some(-ratio.ln() / t as f64)
        })
        .collect())
}

/// Windowed normalized deviation
/// Delta(t) = (1 / (eps t)) * sum_{s in W} |noisy(s) - noiseless(s)|
///                          / sum_{s in W} |noiseless(s)|
/// with W = [t - window/2, t + window/2] clipped to the available steps.
/// `window` must be even; eps must be nonzero. None marks centers where the
/// window's noiseless mass vanishes.
pub fn normalized_difference(
    steps: &[usize],
    noisy: &[f64],
    noiseless: &[f64],
    epsilon: f64,
    window: usize,
) -> Result<Vec<Option<f64>>> {
    if steps.len() != noisy.len() || steps.len() != noiseless.len() {
        return Err(Error::incompatible("series lengths differ"));
    }
    if epsilon == 0.0 {
        return Err(Error::invalid(
            "normalized difference is undefined at zero noise rate",
        ));
    }
    if window % 2 != 0 {
        return Err(Error::invalid("window must be even"));
    }
    let half = window / 2;
    let n = steps.len();
    let mut out = Vec::with_capacity(n);
    for (i, &t) in steps.iter().enumerate() {
        if t == 0 {
            out.push(None);
            continue;
        }
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for s in lo..=hi {
            num += (noisy[s] - noiseless[s]).abs();
            den += noiseless[s].abs();
        }
        if den < 1e-300 {
            out.push(None);
        } else {
            out.push(Some(num / den / (epsilon * t as f64)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pure_exponential_recovers_its_rate() {
        let steps: Vec<usize> = (0..=50).collect();
        let noiseless: Vec<f64> = steps.iter().map(|&t| 0.8 + 0.1 * (t as f64).cos()).collect();
        let noisy: Vec<f64> = steps
            .iter()
            .zip(noiseless.iter())
            .map(|(&t, &v)| v * (-0.07 * t as f64).exp())
            .collect();
        let lam = decay_rate_series(&steps, &noisy, &noiseless).unwrap();
        assert!(lam[0].is_none());
        for l in lam.iter().skip(1) {
            assert_abs_diff_eq!(l.unwrap(), 0.07, epsilon = 1e-12);
        }
    }

    #[test]
    fn sign_flips_and_tiny_references_are_flagged() {
        let steps = vec![1usize, 2, 3];
        let noiseless = vec![1.0, 1e-12, 1.0];
        let noisy = vec![-0.5, 0.3, 0.2];
        let lam = decay_rate_series(&steps, &noisy, &noiseless).unwrap();
        assert!(lam[0].is_none()); // negative ratio
        assert!(lam[1].is_none()); // reference below threshold
        assert!(lam[2].is_some());
    }

    #[test]
    fn constant_relative_deviation_scales_as_one_over_t() {
        // noisy = (1 - d) * noiseless: windowed ratio is d exactly.
        let d = 0.02;
        let eps = 1e-3;
        let steps: Vec<usize> = (0..=100).collect();
        let noiseless: Vec<f64> = steps.iter().map(|&t| 1.0 + 0.3 * (0.1 * t as f64).sin()).collect();
        let noisy: Vec<f64> = noiseless.iter().map(|&v| (1.0 - d) * v).collect();
        let delta = normalized_difference(&steps, &noisy, &noiseless, eps, 20).unwrap();
        for (i, &t) in steps.iter().enumerate() {
            if t == 0 {
                assert!(delta[i].is_none());
            } else {
                assert_abs_diff_eq!(delta[i].unwrap(), d / (eps * t as f64), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn window_truncates_at_the_edges() {
        let steps = vec![0usize, 1, 2];
        let noiseless = vec![1.0, 1.0, 1.0];
        let noisy = vec![1.0, 0.9, 1.0];
        // Center t=2 with window 20 sees all three entries.
        let delta = normalized_difference(&steps, &noisy, &noiseless, 0.1, 20).unwrap();
        assert_abs_diff_eq!(delta[2].unwrap(), (0.1 / 3.0) / (0.1 * 2.0), epsilon = 1e-12);
    }

    #[test]
    fn rejects_zero_epsilon_and_odd_windows() {
        let steps = vec![1usize];
        assert!(normalized_difference(&steps, &[1.0], &[1.0], 0.0, 20).is_err());
        assert!(normalized_difference(&steps, &[1.0], &[1.0], 0.1, 3).is_err());
    }
}
