//! Similarity, distance and summary-statistic kernels shared by every analysis.
//!
//! All accumulation happens in `f64`.

mod cka;
mod levenshtein;
mod silhouette;
mod stats;

pub use cka::{cka, linear_cka, CkaKernel, CkaScore};
pub use levenshtein::{levenshtein, normalized_levenshtein, word_distance};
pub use silhouette::{silhouette_mean, silhouette_samples, NeighborRule, SilhouetteScore};
pub use stats::{ci95, confidence_interval, pearson, student_t_quantile, CorrelationResult, IntervalEstimate};

use crate::error::{Error, Result};

/// Cosine similarity `u·v / (|u||v|)`, clamped to [-1, 1].
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Returns `v / |v|`, or `None` for a zero vector.
pub(crate) fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_fixtures() {
        assert!((cosine_similarity(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroNorm)));
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }
}
