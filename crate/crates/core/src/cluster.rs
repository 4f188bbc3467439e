//! Silhouette clustering of word groups in full, PCA and LDA spaces.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ci95, silhouette_mean, silhouette_samples, IntervalEstimate, NeighborRule};
use crate::model::{ConcretenessLabel, EmbeddingTable, WordGroupSet};
use crate::subspace::{lda_fit_with, pca_fit, project, LdaOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    Full,
    Pca,
    Lda,
}

impl Subspace {
    pub const ALL: [Subspace; 3] = [Subspace::Full, Subspace::Pca, Subspace::Lda];

    pub fn as_str(self) -> &'static str {
        match self {
            Subspace::Full => "full",
            Subspace::Pca => "pca",
            Subspace::Lda => "lda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterOptions {
    /// Output dimension of the PCA/LDA projections.
    pub k: usize,
    pub neighbor: NeighborRule,
    pub lda: LdaOptions,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            k: 8,
            neighbor: NeighborRule::Nearest,
            lda: LdaOptions::default(),
        }
    }
}

/// Row-aligned group data.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMatrix {
    pub matrix: DMatrix<f64>,
    /// Index into `group_names` for every row.
    pub labels: Vec<usize>,
    pub words: Vec<String>,
    pub group_names: Vec<String>,
    pub group_concreteness: Vec<ConcretenessLabel>,
    pub warnings: Vec<String>,
}

impl GroupMatrix {
    fn select_groups(&self, keep: impl Fn(usize) -> bool) -> (DMatrix<f64>, Vec<usize>) {
        let rows: Vec<usize> = (0..self.labels.len()).filter(|&i| keep(self.labels[i])).collect();
        let m = DMatrix::from_fn(rows.len(), self.matrix.ncols(), |i, j| self.matrix[(rows[i], j)]);
        (m, rows.iter().map(|&i| self.labels[i]).collect())
    }
}

/// Collects one vector per group word.
///
/// Groups are taken in name order and words in listed order, so the result
/// does not depend on how the groups were ordered in the input. When a word
/// has several tokens the first one is used.
pub fn group_matrix(table: &EmbeddingTable, groups: &WordGroupSet) -> Result<GroupMatrix> {
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&a, &b| groups.groups()[a].name.cmp(&groups.groups()[b].name));

    let mut owner: HashMap<&str, &str> = HashMap::new();
    for g in groups.groups() {
        for w in &g.words {
            if let Some(prev) = owner.insert(w.as_str(), g.name.as_str()) {
                if prev != g.name {
                    return Err(Error::WordInMultipleGroups(w.clone()));
                }
            }
        }
    }

    let first = table.first_occurrence();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in table.rows() {
        *counts.entry(r.word.as_str()).or_default() += 1;
    }
    let mut missing = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut words = Vec::new();
    let mut warnings = Vec::new();
    for (label, &gi) in order.iter().enumerate() {
        for w in &groups.groups()[gi].words {
            match first.get(w.as_str()) {
                Some(&i) => {
                    if counts[w.as_str()] > 1 {
                        warnings.push(format!("{w:?} has {} tokens; using the first", counts[w.as_str()]));
                    }
                    rows.push(i);
                    labels.push(label);
                    words.push(w.clone());
                }
                None => missing.push(w.clone()),
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingWords(missing));
    }
    Ok(GroupMatrix {
        matrix: table.matrix_of(&rows),
        labels,
        words,
        group_names: order.iter().map(|&i| groups.groups()[i].name.clone()).collect(),
        group_concreteness: order.iter().map(|&i| groups.groups()[i].concreteness).collect(),
        warnings,
    })
}

/// Projects `x` into the requested subspace fitted on `x` itself.
pub fn fit_project(x: &DMatrix<f64>, labels: &[usize], subspace: Subspace, k: usize, opts: &ClusterOptions) -> Result<DMatrix<f64>> {
    match subspace {
        Subspace::Full => Ok(x.clone()),
        Subspace::Pca => project(x, &pca_fit(x, k)?),
        Subspace::Lda => project(x, &lda_fit_with(x, labels, k, &opts.lda)?),
    }
}

fn silhouette_in(x: &DMatrix<f64>, labels: &[usize], subspace: Subspace, k: usize, opts: &ClusterOptions) -> Result<f64> {
    let z = fit_project(x, labels, subspace, k, opts)?;
    Ok(silhouette_mean(&z, labels, opts.neighbor)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcretenessSplit {
    #[serde(rename = "abstract")]
    pub abstract_: f64,
    pub concrete: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooIteration {
    pub excluded: String,
    /// Projection dimension actually used; LDA is capped at remaining groups - 1.
    pub k: Option<usize>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub word: String,
    pub group: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterScore {
    pub model_id: String,
    pub layer: u32,
    pub subspace: Subspace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub score: IntervalEstimate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concreteness_split: Option<ConcretenessSplit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<Vec<LooIteration>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<ScatterPoint>>,
}

impl ClusterScore {
    fn new(table: &EmbeddingTable, subspace: Subspace, k: usize, score: IntervalEstimate) -> Self {
        ClusterScore {
            model_id: table.model_id().to_string(),
            layer: table.layer(),
            subspace,
            k: (subspace != Subspace::Full).then_some(k),
            score,
            concreteness_split: None,
            iterations: None,
            points: None,
        }
    }
}

/// Single-fit silhouette scores in the full space and the PCA-k and LDA-k subspaces.
pub fn score_subspaces(table: &EmbeddingTable, groups: &WordGroupSet, opts: &ClusterOptions) -> Result<Vec<ClusterScore>> {
    let gm = group_matrix(table, groups)?;
    Subspace::ALL
        .iter()
        .map(|&s| {
            let v = silhouette_in(&gm.matrix, &gm.labels, s, opts.k, opts)?;
            Ok(ClusterScore::new(table, s, opts.k, IntervalEstimate::point(v)))
        })
        .collect()
}

/// Leave-one-group-out silhouette: each group is dropped in turn, the
/// projection refitted on the rest, and the remaining groups scored.
pub fn loo_score(table: &EmbeddingTable, groups: &WordGroupSet, subspace: Subspace, opts: &ClusterOptions) -> Result<ClusterScore> {
    let gm = group_matrix(table, groups)?;
    let c = gm.group_names.len();
    if c < 3 {
        return Err(Error::TooFewGroups { needed: 3, got: c });
    }
    let iterations: Vec<LooIteration> = (0..c)
        .into_par_iter()
        .map(|drop| {
            let (x, labels) = gm.select_groups(|l| l != drop);
            let k = match subspace {
                Subspace::Full => None,
                Subspace::Pca => Some(opts.k),
                Subspace::Lda => Some(opts.k.min(c - 2)),
            };
            let score = silhouette_in(&x, &labels, subspace, k.unwrap_or(0), opts)?;
            Ok(LooIteration {
                excluded: gm.group_names[drop].clone(),
                k,
                score,
            })
        })
        .collect::<Result<_>>()?;
    let scores: Vec<f64> = iterations.iter().map(|it| it.score).collect();
    let mut out = ClusterScore::new(table, subspace, opts.k, ci95(&scores)?);
    out.iterations = Some(iterations);
    Ok(out)
}

/// One leave-one-out score per layer, in ascending layer order.
pub fn layer_sweep(tables: &[EmbeddingTable], groups: &WordGroupSet, subspace: Subspace, opts: &ClusterOptions) -> Result<Vec<ClusterScore>> {
    check_layers(tables)?;
    let mut out: Vec<ClusterScore> = tables
        .par_iter()
        .map(|t| loo_score(t, groups, subspace, opts))
        .collect::<Result<_>>()?;
    out.sort_by_key(|s| s.layer);
    Ok(out)
}

pub(crate) fn check_layers(tables: &[EmbeddingTable]) -> Result<()> {
    let first = tables
        .first()
        .ok_or_else(|| Error::InvalidInput("no layers given".into()))?;
    let mut seen = std::collections::HashSet::new();
    for t in tables {
        if t.model_id() != first.model_id() {
            return Err(Error::InvalidInput(format!(
                "mixed models {:?} and {:?}",
                first.model_id(),
                t.model_id()
            )));
        }
        if !seen.insert(t.layer()) {
            return Err(Error::InvalidInput(format!("layer {} given twice", t.layer())));
        }
    }
    Ok(())
}

/// Mean silhouette of abstract-labelled and concrete-labelled groups.
///
/// The projection is fitted once on all groups; per-point silhouettes are
/// computed in that space and averaged within each label.
pub fn concreteness_split(table: &EmbeddingTable, groups: &WordGroupSet, subspace: Subspace, opts: &ClusterOptions) -> Result<ConcretenessSplit> {
    let gm = group_matrix(table, groups)?;
    for label in [ConcretenessLabel::Abstract, ConcretenessLabel::Concrete] {
        let n = gm.group_concreteness.iter().filter(|&&c| c == label).count();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "concreteness split needs at least 2 {label:?} groups, found {n}"
            )));
        }
    }
    let z = fit_project(&gm.matrix, &gm.labels, subspace, opts.k, opts)?;
    let s = silhouette_samples(&z, &gm.labels, opts.neighbor)?;
    let mean_of = |label: ConcretenessLabel| {
        let v: Vec<f64> = s
            .iter()
            .zip(&gm.labels)
            .filter(|(_, &l)| gm.group_concreteness[l] == label)
            .map(|(&v, _)| v)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    Ok(ConcretenessSplit {
        abstract_: mean_of(ConcretenessLabel::Abstract),
        concrete: mean_of(ConcretenessLabel::Concrete),
    })
}

/// First two LDA coordinates of every group word, for scatter plots.
pub fn lda_scatter(table: &EmbeddingTable, groups: &WordGroupSet, opts: &ClusterOptions) -> Result<Vec<ScatterPoint>> {
    let gm = group_matrix(table, groups)?;
    let z = fit_project(&gm.matrix, &gm.labels, Subspace::Lda, 2, opts)?;
    Ok((0..z.nrows())
        .map(|i| ScatterPoint {
            word: gm.words[i].clone(),
            group: gm.group_names[gm.labels[i]].clone(),
            x: z[(i, 0)],
            y: z[(i, 1)],
        })
        .collect())
}

/// Two readings of "variability across layers" for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    /// Mean and sample std of the per-layer LOO means.
    pub layer_means_mean: f64,
    pub layer_means_std: f64,
    /// Mean and sample std over every LOO iteration of every layer.
    pub pooled_mean: f64,
    pub pooled_std: f64,
}

pub fn sweep_summary(scores: &[ClusterScore]) -> Result<SweepSummary> {
    let means: Vec<f64> = scores.iter().map(|s| s.score.mean).collect();
    let pooled: Vec<f64> = scores
        .iter()
        .flat_map(|s| match &s.iterations {
            Some(it) => it.iter().map(|i| i.score).collect(),
            None => vec![s.score.mean],
        })
        .collect();
    let (a, b) = (mean_std(&means)?, mean_std(&pooled)?);
    Ok(SweepSummary {
        layer_means_mean: a.0,
        layer_means_std: a.1,
        pooled_mean: b.0,
        pooled_std: b.1,
    })
}

fn mean_std(v: &[f64]) -> Result<(f64, f64)> {
    if v.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: v.len() });
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    Ok((m, var.sqrt()))
}
