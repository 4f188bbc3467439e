use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Mean with a two-sided confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n_samples: usize,
}

impl IntervalEstimate {
    /// A single observation: zero-width interval.
    pub fn point(value: f64) -> Self {
        IntervalEstimate {
            mean: value,
            lo: value,
            hi: value,
            n_samples: 1,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }

    pub fn overlaps(&self, other: &IntervalEstimate) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Sample Pearson correlation with a two-tailed t-test p-value (n - 2 degrees of freedom).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    // With t = r sqrt((n-2)/(1-r²)), P(|T| > |t|) = I_{1-r²}((n-2)/2, 1/2).
    let df = (n - 2) as f64;
    let p_value = if df == 0.0 { 1.0 } else { beta_reg(df / 2.0, 0.5, 1.0 - r * r) };
    Ok(CorrelationResult { r, p_value, n })
}

/// Quantile of Student's t distribution.
pub fn student_t_quantile(p: f64, df: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(dist.inverse_cdf(p))
}

/// Mean ± t_{(1+level)/2, n-1} · s / √n.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<IntervalEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidInput(format!("confidence level {level} outside (0, 1)")));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let half = if var == 0.0 {
        0.0
    } else {
        student_t_quantile(0.5 + level / 2.0, (n - 1) as f64)? * (var / n as f64).sqrt()
    };
    Ok(IntervalEstimate {
        mean,
        lo: mean - half,
        hi: mean + half,
        n_samples: n,
    })
}

/// 95% Student-t confidence interval of the mean.
pub fn ci95(samples: &[f64]) -> Result<IntervalEstimate> {
    confidence_interval(samples, 0.95)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn pearson_fixtures() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().r - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().r + 1.0).abs() < 1e-15);
        // direct formula: sxy = 4, sxx = syy = 5
        let c = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((c.r - 0.8).abs() < 1e-12);
        assert_eq!(c.n, 4);
    }

    #[test]
    fn pearson_p_values_match_reference() {
        // scipy.stats.pearsonr reference values
        let c = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((c.p_value - 0.2).abs() < 1e-8, "{}", c.p_value);
        let x: Vec<f64> = (0..12).map(f64::from).collect();
        let y = [0.3, 1.2, 1.9, 2.0, 5.5, 4.1, 6.9, 6.0, 9.3, 7.7, 10.2, 12.0];
        let c = pearson(&x, &y).unwrap();
        assert!((c.r - 0.9670003296283491).abs() < 1e-12, "{}", c.r);
        assert!((c.p_value - 2.915824465956703e-07).abs() < 1e-8, "{}", c.p_value);
        assert!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().p_value < 1e-7);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::ZeroVariance)));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert_eq!(Error::ZeroVariance.to_string(), "zero variance");
    }

    #[test]
    fn t_table() {
        assert!((student_t_quantile(0.975, 1.0).unwrap() - 12.706).abs() < 1e-3);
        assert!((student_t_quantile(0.975, 4.0).unwrap() - 2.776).abs() < 1e-3);
    }

    #[test]
    fn ci95_fixtures() {
        let c = ci95(&[0.5; 5]).unwrap();
        assert_eq!((c.mean, c.lo, c.hi), (0.5, 0.5, 0.5));
        let c = ci95(&[0.0, 1.0]).unwrap();
        assert_eq!(c.mean, 0.5);
        assert!((c.half_width() - 6.353).abs() < 1e-3);
        let c = ci95(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(c.mean, 3.0);
        assert!((c.half_width() - 1.963).abs() < 1e-3);
        assert!(ci95(&[1.0]).is_err());
    }

    #[test]
    fn ci_width_shrinks_with_n() {
        // fixed-variance samples: alternating ±1
        let widths: Vec<f64> = [5, 10, 20, 40]
            .iter()
            .map(|&n| {
                let s: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
                ci95(&s).unwrap().half_width()
            })
            .collect();
        assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(
            x in prop::collection::vec(-100.0f64..100.0, 5..30),
            noise in prop::collection::vec(-100.0f64..100.0, 30),
            scale in 0.1f64..50.0,
            shift in -100.0f64..100.0,
        ) {
            let y: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + b).collect();
            prop_assume!(pearson(&x, &y).is_ok());
            let r = pearson(&x, &y).unwrap().r;
            let y2: Vec<f64> = y.iter().map(|v| scale * v + shift).collect();
            prop_assert!((pearson(&x, &y2).unwrap().r - r).abs() < 1e-12);
            let y3: Vec<f64> = y.iter().map(|v| -scale * v).collect();
            prop_assert!((pearson(&x, &y3).unwrap().r + r).abs() < 1e-12);
        }
    }
}
