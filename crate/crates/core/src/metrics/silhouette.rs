use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SilhouetteScore(pub f64);

impl SilhouetteScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// How the across-group distance `b(i)` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborRule {
    /// Smallest mean distance to any other group (Rousseeuw's definition).
    #[default]
    Nearest,
    /// Mean distance to all points outside the own group.
    AllOthers,
}

/// Per-point cosine-distance silhouette coefficients.
///
/// Cosine distance is `1 - cos`, in [0, 2]. A zero row is treated as having
/// distance 1 to every other row.
pub fn silhouette_samples(x: &DMatrix<f64>, labels: &[usize], rule: NeighborRule) -> Result<Vec<f64>> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *sizes.entry(l).or_default() += 1;
    }
    if sizes.len() < 2 {
        return Err(Error::TooFewGroups {
            needed: 2,
            got: sizes.len(),
        });
    }
    if let Some((l, _)) = sizes.iter().find(|(_, &c)| c < 2) {
        return Err(Error::SingletonGroup(format!("label {l}")));
    }
    let slot: BTreeMap<usize, usize> = sizes.keys().enumerate().map(|(i, &l)| (l, i)).collect();
    let counts: Vec<f64> = sizes.values().map(|&c| c as f64).collect();
    let label_slot: Vec<usize> = labels.iter().map(|l| slot[l]).collect();

    let mut unit = x.clone();
    for mut row in unit.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let gram = &unit * unit.transpose();

    let mut out = Vec::with_capacity(n);
    let mut sums = vec![0.0; counts.len()];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[label_slot[j]] += (1.0 - gram[(i, j)]).clamp(0.0, 2.0);
            }
        }
        let own = label_slot[i];
        let a = sums[own] / (counts[own] - 1.0);
        let b = match rule {
            NeighborRule::Nearest => (0..counts.len())
                .filter(|&g| g != own)
                .map(|g| sums[g] / counts[g])
                .fold(f64::INFINITY, f64::min),
            NeighborRule::AllOthers => {
                let total: f64 = (0..counts.len()).filter(|&g| g != own).map(|g| sums[g]).sum();
                total / (n as f64 - counts[own])
            }
        };
        let m = a.max(b);
        out.push(if m > 0.0 { (b - a) / m } else { 0.0 });
    }
    Ok(out)
}

/// Mean cosine-distance silhouette over all points.
pub fn silhouette_mean(x: &DMatrix<f64>, labels: &[usize], rule: NeighborRule) -> Result<SilhouetteScore> {
    let s = silhouette_samples(x, labels, rule)?;
    Ok(SilhouetteScore(s.iter().sum::<f64>() / s.len() as f64))
}
