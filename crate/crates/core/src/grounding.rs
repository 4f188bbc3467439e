//! Grounded versus ungrounded model comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{check_layers, group_matrix, layer_sweep, ClusterOptions, ClusterScore, Subspace};
use crate::error::{Error, Result};
use crate::metrics::{linear_cka, pearson, CkaScore, CorrelationResult};
use crate::model::{EmbeddingTable, WordGroupSet};
use crate::subspace::{lda_fit_with, project};

/// Linear CKA between two tables' group words, each projected into its own LDA-k space.
pub fn lda_subspace_cka(a: &EmbeddingTable, b: &EmbeddingTable, groups: &WordGroupSet, opts: &ClusterOptions) -> Result<CkaScore> {
    let ga = group_matrix(a, groups)?;
    let gb = group_matrix(b, groups)?;
    if ga.words != gb.words {
        return Err(Error::InvalidInput("tables cover different group words".into()));
    }
    let za = project(&ga.matrix, &lda_fit_with(&ga.matrix, &ga.labels, opts.k, &opts.lda)?)?;
    let zb = project(&gb.matrix, &lda_fit_with(&gb.matrix, &gb.labels, opts.k, &opts.lda)?)?;
    linear_cka(&za, &zb)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerCka {
    pub layer: u32,
    pub cka: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundingLayer {
    pub layer: u32,
    pub lda_cka: f64,
    pub delta_silhouette: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingComparison {
    pub per_layer: Vec<GroundingLayer>,
    pub correlation: CorrelationResult,
}

/// Correlates the grounded-minus-ungrounded silhouette change with LDA-space CKA, layer by layer.
pub fn grounding_correlation(
    ungrounded: &[ClusterScore],
    grounded: &[ClusterScore],
    ckas: &[LayerCka],
) -> Result<GroundingComparison> {
    let sorted = |layers: Vec<u32>, what: &str| -> Result<Vec<u32>> {
        let mut l = layers;
        l.sort_unstable();
        if l.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MisalignedLayers(format!("{what} repeats a layer")));
        }
        Ok(l)
    };
    let lu = sorted(ungrounded.iter().map(|s| s.layer).collect(), "ungrounded sweep")?;
    let lg = sorted(grounded.iter().map(|s| s.layer).collect(), "grounded sweep")?;
    let lc = sorted(ckas.iter().map(|c| c.layer).collect(), "CKA list")?;
    if lu != lg || lu != lc {
        return Err(Error::MisalignedLayers(format!(
            "ungrounded {lu:?}, grounded {lg:?}, cka {lc:?}"
        )));
    }
    if lu.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: lu.len() });
    }
    let find = |v: &[ClusterScore], l: u32| v.iter().find(|s| s.layer == l).map(|s| s.score.mean).unwrap();
    let per_layer: Vec<GroundingLayer> = lu
        .iter()
        .map(|&l| GroundingLayer {
            layer: l,
            lda_cka: ckas.iter().find(|c| c.layer == l).unwrap().cka,
            delta_silhouette: find(grounded, l) - find(ungrounded, l),
        })
        .collect();
    let d: Vec<f64> = per_layer.iter().map(|p| p.delta_silhouette).collect();
    let c: Vec<f64> = per_layer.iter().map(|p| p.lda_cka).collect();
    Ok(GroundingComparison {
        correlation: pearson(&d, &c)?,
        per_layer,
    })
}

/// Everything computed by [`compare_grounding`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingRun {
    pub ungrounded: Vec<ClusterScore>,
    pub grounded: Vec<ClusterScore>,
    pub ckas: Vec<LayerCka>,
    pub comparison: GroundingComparison,
}

/// Runs LDA LOO sweeps on both models, per-layer LDA-space CKA, and the correlation.
pub fn compare_grounding(
    ungrounded: &[EmbeddingTable],
    grounded: &[EmbeddingTable],
    groups: &WordGroupSet,
    opts: &ClusterOptions,
) -> Result<GroundingRun> {
    check_layers(ungrounded)?;
    check_layers(grounded)?;
    let su = layer_sweep(ungrounded, groups, Subspace::Lda, opts)?;
    let sg = layer_sweep(grounded, groups, Subspace::Lda, opts)?;
    let mut ckas: Vec<LayerCka> = ungrounded
        .par_iter()
        .map(|u| {
            let g = grounded
                .iter()
                .find(|g| g.layer() == u.layer())
                .ok_or_else(|| Error::MisalignedLayers(format!("grounded model lacks layer {}", u.layer())))?;
            Ok(LayerCka {
                layer: u.layer(),
                cka: lda_subspace_cka(u, g, groups, opts)?.0,
            })
        })
        .collect::<Result<_>>()?;
    ckas.sort_by_key(|c| c.layer);
    let comparison = grounding_correlation(&su, &sg, &ckas)?;
    Ok(GroundingRun {
        ungrounded: su,
        grounded: sg,
        ckas,
        comparison,
    })
}
