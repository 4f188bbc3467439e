//! PCA and LDA projections.
//!
//! Both fits work in the span of the centered training rows when the input
//! dimension exceeds the sample count: every eigenvector with a non-zero
//! eigenvalue lies in that span (for LDA the ridge term is isotropic, so the
//! orthogonal complement only ever contributes zero eigenvalues). This keeps
//! 768-dimensional fits on a hundred words at the cost of a 100×100 problem.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    Pca,
    Lda,
}

/// A fitted linear projection `(x - mean) · basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub kind: ProjectionKind,
    pub input_dim: usize,
    pub out_dim: usize,
    pub mean: Vec<f64>,
    /// `input_dim × out_dim`, unit-norm columns.
    pub basis: DMatrix<f64>,
    /// Non-increasing.
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaOptions {
    /// Ridge added to the within-class scatter, as a fraction of its mean diagonal entry.
    pub ridge_scale: f64,
}

impl Default for LdaOptions {
    fn default() -> Self {
        LdaOptions { ridge_scale: 1e-6 }
    }
}

/// Principal components: top-`k` eigenvectors of the sample covariance.
pub fn pca_fit(x: &DMatrix<f64>, k: usize) -> Result<Projection> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let max = (n - 1).min(d);
    if k == 0 || k > max {
        return Err(Error::KOutOfRange { k, max });
    }
    let (mean, xc) = center(x);
    let span = span_basis(&xc);
    let z = reduce(&xc, span.as_ref());
    let cov = (z.transpose() * &z) / (n - 1) as f64;
    let (values, vectors) = sorted_eigen(cov, k);
    let basis = finish_basis(lift(vectors, span.as_ref()));
    Ok(Projection {
        kind: ProjectionKind::Pca,
        input_dim: d,
        out_dim: k,
        mean,
        basis,
        eigenvalues: values,
    })
}

pub fn lda_fit(x: &DMatrix<f64>, labels: &[usize], k: usize) -> Result<Projection> {
    lda_fit_with(x, labels, k, &LdaOptions::default())
}

/// Fisher discriminant directions from `S_b v = λ (S_w + εI) v`.
///
/// The pencil is reduced to a symmetric problem by Cholesky whitening of
/// `S_w + εI`, with `ε = ridge_scale · trace(S_w) / d`. If the within-class
/// scatter vanishes entirely the ridge falls back to the between-class trace.
pub fn lda_fit_with(x: &DMatrix<f64>, labels: &[usize], k: usize, opts: &LdaOptions) -> Result<Projection> {
    let (n, d) = x.shape();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        classes.entry(l).or_default().push(i);
    }
    if classes.len() < 2 {
        return Err(Error::TooFewGroups {
            needed: 2,
            got: classes.len(),
        });
    }
    if let Some((l, _)) = classes.iter().find(|(_, rows)| rows.len() < 2) {
        return Err(Error::SingletonGroup(format!("label {l}")));
    }
    let limit = classes.len() - 1;
    if k > limit {
        return Err(Error::LdaRankLimit { k, limit });
    }
    if k == 0 || k > d {
        return Err(Error::KOutOfRange { k, max: limit.min(d) });
    }

    let (mean, xc) = center(x);
    let span = span_basis(&xc);
    let z = reduce(&xc, span.as_ref());
    let m = z.ncols();
    if k > m {
        return Err(Error::KOutOfRange { k, max: m });
    }

    let grand = column_mean(&z, &(0..n).collect::<Vec<_>>());
    let mut s_w = DMatrix::<f64>::zeros(m, m);
    let mut s_b = DMatrix::<f64>::zeros(m, m);
    for rows in classes.values() {
        let mu = column_mean(&z, rows);
        let dev = DMatrix::from_fn(rows.len(), m, |i, j| z[(rows[i], j)] - mu[j]);
        s_w += dev.transpose() * &dev;
        let diff = DMatrix::from_fn(m, 1, |j, _| mu[j] - grand[j]);
        s_b += (&diff * diff.transpose()) * rows.len() as f64;
    }

    let mut eps = opts.ridge_scale * s_w.trace() / d as f64;
    if eps == 0.0 {
        eps = opts.ridge_scale * s_b.trace() / d as f64;
    }
    if !(eps > 0.0) {
        return Err(Error::Degenerate("all samples are identical".into()));
    }
    let mut pencil = s_w;
    for i in 0..m {
        pencil[(i, i)] += eps;
    }
    let chol = pencil
        .cholesky()
        .ok_or_else(|| Error::Linalg("within-class scatter is not positive definite".into()))?;
    let l = chol.l();
    let w = l
        .solve_lower_triangular(&s_b)
        .ok_or_else(|| Error::Linalg("singular Cholesky factor".into()))?;
    let mt = l
        .solve_lower_triangular(&w.transpose())
        .ok_or_else(|| Error::Linalg("singular Cholesky factor".into()))?;
    let whitened = (&mt + mt.transpose()) * 0.5;
    let (values, ys) = sorted_eigen(whitened, k);
    let vs = l
        .tr_solve_lower_triangular(&ys)
        .ok_or_else(|| Error::Linalg("singular Cholesky factor".into()))?;
    let basis = finish_basis(lift(vs, span.as_ref()));
    Ok(Projection {
        kind: ProjectionKind::Lda,
        input_dim: d,
        out_dim: k,
        mean,
        basis,
        eigenvalues: values,
    })
}

/// Applies a fitted projection: `(x - mean) · basis`.
pub fn project(x: &DMatrix<f64>, p: &Projection) -> Result<DMatrix<f64>> {
    if x.ncols() != p.input_dim {
        return Err(Error::DimensionMismatch {
            expected: p.input_dim,
            found: x.ncols(),
        });
    }
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        for (v, m) in row.iter_mut().zip(&p.mean) {
            *v -= m;
        }
    }
    Ok(xc * &p.basis)
}

fn center(x: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = x.nrows() as f64;
    let mean: Vec<f64> = x.column_iter().map(|c| c.sum() / n).collect();
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    (mean, xc)
}

fn column_mean(z: &DMatrix<f64>, rows: &[usize]) -> Vec<f64> {
    let n = rows.len() as f64;
    (0..z.ncols())
        .map(|j| rows.iter().map(|&i| z[(i, j)]).sum::<f64>() / n)
        .collect()
}

/// Orthonormal basis (`d × n`) containing the row span of `xc`, or `None`
/// when working in the original coordinates is no more expensive.
fn span_basis(xc: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    (xc.ncols() > xc.nrows()).then(|| xc.transpose().qr().q())
}

fn reduce(xc: &DMatrix<f64>, span: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    match span {
        Some(q) => xc * q,
        None => xc.clone(),
    }
}

fn lift(vectors: DMatrix<f64>, span: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    match span {
        Some(q) => q * vectors,
        None => vectors,
    }
}

/// Top-`k` eigenpairs of a symmetric matrix, eigenvalues descending.
fn sorted_eigen(m: DMatrix<f64>, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order.truncate(k);
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), k, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Unit-normalizes each column and flips it so its largest-magnitude entry is positive.
fn finish_basis(mut basis: DMatrix<f64>) -> DMatrix<f64> {
    for mut col in basis.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
        let mut pivot = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
    basis
}

#[derive(Serialize, Deserialize)]
struct ProjectionRepr {
    kind: ProjectionKind,
    input_dim: usize,
    out_dim: usize,
    mean: Vec<f64>,
    /// One entry per output dimension.
    basis_columns: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

impl Serialize for Projection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProjectionRepr {
            kind: self.kind,
            input_dim: self.input_dim,
            out_dim: self.out_dim,
            mean: self.mean.clone(),
            basis_columns: self.basis.column_iter().map(|c| c.iter().copied().collect()).collect(),
            eigenvalues: self.eigenvalues.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Projection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = ProjectionRepr::deserialize(d)?;
        if r.basis_columns.len() != r.out_dim
            || r.mean.len() != r.input_dim
            || r.basis_columns.iter().any(|c| c.len() != r.input_dim)
        {
            return Err(D::Error::custom("projection shape mismatch"));
        }
        let basis = DMatrix::from_fn(r.input_dim, r.out_dim, |i, j| r.basis_columns[j][i]);
        Ok(Projection {
            kind: r.kind,
            input_dim: r.input_dim,
            out_dim: r.out_dim,
            mean: r.mean,
            basis,
            eigenvalues: r.eigenvalues,
        })
    }
}

#[cfg(test)]
mod tests {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::metrics::{silhouette_mean, NeighborRule};
    use crate::synthetic::{gaussian_groups, gaussian_matrix, random_orthogonal};

    fn sample_cov(z: &DMatrix<f64>) -> DMatrix<f64> {
        let (_, zc) = center(z);
        zc.transpose() * &zc / (z.nrows() - 1) as f64
    }

    #[test]
    fn pca_finds_diagonal_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(200, 2, |i, j| {
            let t = i as f64 / 20.0 - 5.0;
            t + 0.01 * rng.random::<f64>() * if j == 0 { 1.0 } else { -1.0 }
        });
        let p = pca_fit(&x, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let cos = p.basis[(0, 0)] * h + p.basis[(1, 0)] * h;
        assert!(cos.clamp(-1.0, 1.0).acos() < 1e-2);
        assert!(p.basis[(0, 0)] > 0.0);
    }

    #[test]
    fn full_pca_basis_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = gaussian_matrix(&mut rng, 50, 4);
        let p = pca_fit(&x, 4).unwrap();
        let z = project(&x, &p).unwrap();
        let back = &z * p.basis.transpose();
        let (_, xc) = center(&x);
        assert!((back - &xc).amax() < 1e-10);
        for i in 0..x.nrows() {
            assert!((z.row(i).norm() - xc.row(i).norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_column_gets_zero_eigenvalue_last() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = gaussian_matrix(&mut rng, 40, 3);
        x.column_mut(1).fill(7.0);
        let p = pca_fit(&x, 3).unwrap();
        assert!(p.eigenvalues[2].abs() < 1e-12);
        assert!((p.basis[(1, 2)].abs() - 1.0).abs() < 1e-9);
        assert!(p.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn pca_projection_is_uncorrelated_and_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mix = gaussian_matrix(&mut rng, 6, 6);
        let x = gaussian_matrix(&mut rng, 300, 6) * mix;
        let p = pca_fit(&x, 4).unwrap();
        let cov = sample_cov(&project(&x, &p).unwrap());
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(cov[(i, j)].abs() < 1e-8);
                }
            }
            assert!((cov[(i, i)] - p.eigenvalues[i]).abs() < 1e-8);
        }
        // explained variance equals the sum of the top covariance eigenvalues
        let full = SymmetricEigen::new(sample_cov(&x));
        let mut all: Vec<f64> = full.eigenvalues.iter().copied().collect();
        all.sort_by(|a, b| b.total_cmp(a));
        let top: f64 = all[..4].iter().sum();
        assert!((p.eigenvalues.iter().sum::<f64>() - top).abs() < 1e-8);
    }

    #[test]
    fn pca_in_reduced_span_matches_direct() {
        // d > n uses the row-span reduction; compare against the dense eigenproblem
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = gaussian_matrix(&mut rng, 12, 30);
        let p = pca_fit(&x, 5).unwrap();
        let full = SymmetricEigen::new(sample_cov(&x));
        let mut all: Vec<f64> = full.eigenvalues.iter().copied().collect();
        all.sort_by(|a, b| b.total_cmp(a));
        for i in 0..5 {
            assert!((p.eigenvalues[i] - all[i]).abs() < 1e-9);
        }
        let gram = p.basis.transpose() * &p.basis;
        assert!((gram - DMatrix::identity(5, 5)).amax() < 1e-10);
    }

    #[test]
    fn pca_k_range() {
        let x = DMatrix::from_element(5, 3, 1.0);
        assert!(matches!(pca_fit(&x, 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(pca_fit(&x, 4), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn project_annihilates_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = gaussian_matrix(&mut rng, 20, 5);
        let p = pca_fit(&x, 3).unwrap();
        let means = DMatrix::from_fn(4, 5, |_, j| p.mean[j]);
        assert!(project(&means, &p).unwrap().amax() == 0.0);
        assert!(project(&DMatrix::zeros(2, 4), &p).is_err());
    }

    #[test]
    fn nine_groups_allow_eight_lda_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (x, labels) = gaussian_groups(&mut rng, 9, 6, 20, 5.0);
        assert_eq!(lda_fit(&x, &labels, 8).unwrap().out_dim, 8);
        assert!(matches!(lda_fit(&x, &labels, 9), Err(Error::LdaRankLimit { k: 9, limit: 8 })));
    }

    #[test]
    fn lda_errors() {
        let x = DMatrix::from_fn(5, 2, |i, j| (i * 2 + j) as f64);
        assert!(matches!(lda_fit(&x, &[0, 0, 1, 1, 2], 1), Err(Error::SingletonGroup(_))));
        assert!(lda_fit(&x, &[0, 0, 0, 0, 0], 1).is_err());
    }

    fn two_class_1d(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, Vec<usize>) {
        let n = 1000;
        let mut x = gaussian_matrix(rng, n, 50);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        for i in 0..n {
            x[(i, 0)] += if labels[i] == 0 { -10.0 } else { 10.0 };
        }
        // hide the informative axis inside a random rotation
        (x * random_orthogonal(rng, 50), labels)
    }

    #[test]
    fn lda_separates_two_classes() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let (x, labels) = two_class_1d(&mut rng);
            let p = lda_fit(&x, &labels, 1).unwrap();
            let s = silhouette_mean(&project(&x, &p).unwrap(), &labels, NeighborRule::Nearest).unwrap();
            assert!(s.0 >= 0.8, "seed {seed}: {}", s.0);
        }
    }

    #[test]
    fn lda_on_shuffled_labels_does_not_separate() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let (x, mut labels) = two_class_1d(&mut rng);
            labels.shuffle(&mut rng);
            let p = lda_fit(&x, &labels, 1).unwrap();
            let s = silhouette_mean(&project(&x, &p).unwrap(), &labels, NeighborRule::Nearest).unwrap();
            assert!(s.0 < 0.1, "seed {seed}: {}", s.0);
        }
    }

    #[test]
    fn lda_beats_pca_on_gaussian_groups() {
        let mut wins = 0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
            let (x, labels) = gaussian_groups(&mut rng, 5, 30, 40, 3.0);
            let score = |p: &Projection| {
                silhouette_mean(&project(&x, p).unwrap(), &labels, NeighborRule::Nearest).unwrap().0
            };
            let lda = score(&lda_fit(&x, &labels, 4).unwrap());
            let pca = score(&pca_fit(&x, 4).unwrap());
            if lda >= pca {
                wins += 1;
            }
        }
        assert!(wins >= 8, "LDA won {wins}/10");
    }

    #[test]
    fn lda_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // both the direct route (d < n) and the span-reduced route (d > n)
        for (per, dim) in [(20, 10), (5, 60)] {
            let (x, labels) = gaussian_groups(&mut rng, 4, per, dim, 4.0);
            let a = lda_fit(&x, &labels, 3).unwrap();
            let b = lda_fit(&x, &labels, 3).unwrap();
            assert_eq!(a, b);
            assert!(a.eigenvalues.iter().all(|&l| l >= -1e-10));
            assert!(a.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            for c in a.basis.column_iter() {
                assert!((c.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lda_with_identical_class_members() {
        let mut x = DMatrix::zeros(6, 3);
        for i in 0..3 {
            x[(i, 0)] = 1.0;
            x[(i + 3, 1)] = 1.0;
        }
        let p = lda_fit(&x, &[0, 0, 0, 1, 1, 1], 1).unwrap();
        let z = project(&x, &p).unwrap();
        let s = silhouette_mean(&z, &[0, 0, 0, 1, 1, 1], NeighborRule::Nearest).unwrap();
        assert_eq!(s.0, 1.0);
    }

    #[test]
    fn serde_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = gaussian_matrix(&mut rng, 10, 4);
        let p = pca_fit(&x, 2).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: Projection = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }
}
