//! Estimators that turn single-shot all-site measurement records into
//! symmetrized weight-k expectation values.
//!
//! A shot assigns x_j = +-1 to every site. The generating product
//! prod_j (1 + x_j z) has [z^k] equal to the sum over all k-site subsets of
//! the outcome products, so one shot yields an unbiased estimate of the
//! unnormalized S^(k) for every k simultaneously; only the number of minus
//! outcomes m matters.

use crate::engines::statevector::weight_k_kernel;
use crate::error::{Error, Result};
use crate::model::observable::binomial;

/// Mean and standard error of S^(k) for each requested k, from per-shot
/// minus-outcome masks (bit j set means site j measured -1).
pub fn estimate_sxk_from_samples(
    n_sites: usize,
    minus_masks: &[u64],
    ks: &[usize],
) -> Result<Vec<(f64, f64)>> {
    if minus_masks.is_empty() {
        return Err(Error::invalid("no shots supplied"));
    }
    let mut hist = vec![0u64; n_sites + 1];
    for &mask in minus_masks {
        if mask >> n_sites != 0 {
            return Err(Error::invalid("shot mask has bits beyond the register"));
        }
        hist[mask.count_ones() as usize] += 1;
    }
    estimate_sxk_from_counts(n_sites, &hist, ks)
}

/// Same estimator from a histogram of minus counts.
pub fn estimate_sxk_from_counts(
    n_sites: usize,
    hist: &[u64],
    ks: &[usize],
) -> Result<Vec<(f64, f64)>> {
    if hist.len() != n_sites + 1 {
        return Err(Error::invalid("histogram length must be n_sites + 1"));
    }
    for &k in ks {
        if k > n_sites {
            return Err(Error::invalid(format!("weight {k} exceeds {n_sites} sites")));
        }
    }
    let shots: u64 = hist.iter().sum();
    if shots == 0 {
        return Err(Error::invalid("no shots supplied"));
    }
    let kernels: Vec<Vec<f64>> = (0..=n_sites)
        .map(|m| weight_k_kernel(n_sites, m))
        .collect();
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let norm = binomial(n_sites, k);
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for (m, &cnt) in hist.iter().enumerate() {
            if cnt == 0 {
                continue;
            }
            let v = kernels[m][k] / norm;
            sum += cnt as f64 * v;
            sum_sq += cnt as f64 * v * v;
        }
        let mean = sum / shots as f64;
        let stderr = if shots > 1 {
            let var = ((sum_sq - sum * sum / shots as f64) / (shots as f64 - 1.0)).max(0.0);
            (var / shots as f64).sqrt()
        } else {
            0.0
        };
        out.push((mean, stderr));
    }
    Ok(out)
}
