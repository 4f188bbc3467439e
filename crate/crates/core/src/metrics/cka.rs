use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Centered kernel alignment between two row-aligned representation matrices.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CkaScore(pub f64);

impl CkaScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kernel")]
pub enum CkaKernel {
    #[default]
    Linear,
    /// Gaussian kernel with bandwidth `sigma_scale` times the median pairwise distance.
    Rbf { sigma_scale: f64 },
}

/// Linear CKA (biased HSIC estimator) computed in feature space:
/// `|Yᵀ X|²_F / (|Xᵀ X|_F |Yᵀ Y|_F)` after column-centering both inputs.
///
/// When the sample count is smaller than the feature dimension the
/// equivalent Gram-matrix form is used instead.
pub fn linear_cka(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<CkaScore> {
    let n = check_rows(x, y)?;
    let xc = center_columns(x);
    let yc = center_columns(y);
    if is_zero(&xc) || is_zero(&yc) {
        return Err(Error::Degenerate("centered matrix is all zero".into()));
    }
    let (cross, xx, yy) = if n < x.ncols().max(y.ncols()) {
        let k = &xc * xc.transpose();
        let l = &yc * yc.transpose();
        (k.dot(&l), k.norm(), l.norm())
    } else {
        let yx = yc.transpose() * &xc;
        let xtx = xc.transpose() * &xc;
        let yty = yc.transpose() * &yc;
        (yx.norm_squared(), xtx.norm(), yty.norm())
    };
    Ok(CkaScore(cross / (xx * yy)))
}

/// CKA with a selectable kernel.
pub fn cka(x: &DMatrix<f64>, y: &DMatrix<f64>, kernel: CkaKernel) -> Result<CkaScore> {
    match kernel {
        CkaKernel::Linear => linear_cka(x, y),
        CkaKernel::Rbf { sigma_scale } => {
            if !(sigma_scale > 0.0) {
                return Err(Error::InvalidInput("sigma_scale must be positive".into()));
            }
            check_rows(x, y)?;
            let k = center_gram(&rbf_gram(x, sigma_scale)?);
            let l = center_gram(&rbf_gram(y, sigma_scale)?);
            let denom = k.norm() * l.norm();
            if denom == 0.0 {
                return Err(Error::Degenerate("centered kernel matrix is all zero".into()));
            }
            Ok(CkaScore(k.dot(&l) / denom))
        }
    }
}

fn check_rows(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<usize> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    if x.nrows() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: x.nrows(),
        });
    }
    Ok(x.nrows())
}

pub(crate) fn center_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    let n = x.nrows() as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

fn is_zero(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&v| v == 0.0)
}

fn rbf_gram(x: &DMatrix<f64>, sigma_scale: f64) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let mut sq = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (x.row(i) - x.row(j)).norm_squared();
            sq[(i, j)] = d;
            sq[(j, i)] = d;
        }
    }
    let mut upper: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| sq[(i, j)].sqrt())
        .collect();
    upper.sort_by(f64::total_cmp);
    let median = upper[upper.len() / 2];
    if median == 0.0 {
        return Err(Error::Degenerate("median pairwise distance is zero".into()));
    }
    let sigma = sigma_scale * median;
    Ok(sq.map(|d| (-d / (2.0 * sigma * sigma)).exp()))
}

fn center_gram(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows() as f64;
    let row_means: Vec<f64> = k.row_iter().map(|r| r.sum() / n).collect();
    let grand = row_means.iter().sum::<f64>() / n;
    DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| {
        k[(i, j)] - row_means[i] - row_means[j] + grand
    })
}
