//! Construction of phonetic word groups and validation of semantic ones.

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{cosine_similarity, word_distance};
use crate::model::{
    ConcretenessLabel, ConcretenessTable, GroupKind, PhonemicLexicon, StaticEmbeddingTable, WordGroup, WordGroupSet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuilderParams {
    /// Largest phonemic distance between a group's seed and its members.
    pub phon_within_max: f64,
    /// Members of different groups must be strictly farther apart than this.
    pub phon_across_min: f64,
    /// Members of a phonetic group must have static cosine below this.
    pub sem_cos_max: f64,
    pub conc_top_pct: f64,
    pub conc_bottom_pct: f64,
    pub min_group_size: usize,
    pub target_groups: usize,
    pub seed: u64,
    /// Semantic groups: within-group similarities must reach this upper share.
    pub sem_within_top_pct: f64,
    /// Semantic groups: average phonemic distance must exceed this.
    pub sem_phon_dist_min: f64,
    /// Random reference pairs sampled for the similarity quantile.
    pub reference_pairs: usize,
}

impl Default for BuilderParams {
    fn default() -> Self {
        BuilderParams {
            phon_within_max: 0.529,
            phon_across_min: 0.529,
            sem_cos_max: 0.1,
            conc_top_pct: 0.25,
            conc_bottom_pct: 0.25,
            min_group_size: 5,
            target_groups: 14,
            seed: 0,
            sem_within_top_pct: 0.15,
            sem_phon_dist_min: 0.6,
            reference_pairs: 100_000,
        }
    }
}

impl BuilderParams {
    pub fn check(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} = {v} must lie in (0, 1)")))
            }
        };
        unit("phon_within_max", self.phon_within_max)?;
        unit("phon_across_min", self.phon_across_min)?;
        unit("sem_cos_max", self.sem_cos_max)?;
        unit("sem_within_top_pct", self.sem_within_top_pct)?;
        unit("sem_phon_dist_min", self.sem_phon_dist_min)?;
        for (name, v) in [("conc_top_pct", self.conc_top_pct), ("conc_bottom_pct", self.conc_bottom_pct)] {
            if !(v > 0.0 && v <= 0.5) {
                return Err(Error::InvalidInput(format!("{name} = {v} must lie in (0, 0.5]")));
            }
        }
        if self.min_group_size < 2 {
            return Err(Error::InvalidInput("min_group_size must be at least 2".into()));
        }
        if self.target_groups == 0 {
            return Err(Error::InvalidInput("target_groups must be positive".into()));
        }
        Ok(())
    }
}

/// Value at quantile `q` of `values` using the inverted empirical CDF:
/// the smallest observation with at least a `q` share of the sample at or below it.
pub fn lower_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    Ok(v[idx])
}

/// Distinct index pairs over `n` items: every pair when there are at most
/// `n_samples` of them, otherwise `n_samples` uniform draws.
fn sample_pairs(n: usize, n_samples: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = n * (n - 1) / 2;
    if total <= n_samples {
        return (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect()
}

/// Phonemic distance below which the closest `top_fraction` of random word pairs fall.
pub fn percentile_threshold(
    lexicon: &PhonemicLexicon,
    vocabulary: &[String],
    top_fraction: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(top_fraction > 0.0 && top_fraction < 1.0) {
        return Err(Error::InvalidInput(format!("top_fraction {top_fraction} must lie in (0, 1)")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be positive".into()));
    }
    let words = covered(vocabulary, |w| lexicon.contains(w));
    if words.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "insufficient lexicon coverage: {} of {} vocabulary words have pronunciations",
            words.len(),
            vocabulary.len()
        )));
    }
    let d = sample_pairs(words.len(), n_samples, seed)
        .into_par_iter()
        .map(|(i, j)| word_distance(&words[i], &words[j], lexicon))
        .collect::<Result<Vec<_>>>()?;
    lower_quantile(&d, top_fraction)
}

/// Sorted, deduplicated, lowercased vocabulary words passing `keep`.
fn covered(vocabulary: &[String], keep: impl Fn(&str) -> bool) -> Vec<String> {
    vocabulary
        .iter()
        .map(|w| w.trim().to_lowercase())
        .filter(|w| !w.is_empty() && keep(w))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Rating cut-offs of the concrete and abstract bands over a vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcretenessBands {
    /// Words rated at or above this are concrete.
    pub concrete_min: f64,
    /// Words rated at or below this are abstract.
    pub abstract_max: f64,
}

impl ConcretenessBands {
    pub fn of(ratings: &[f64], params: &BuilderParams) -> Result<Self> {
        Ok(ConcretenessBands {
            // mirror image of the bottom band so that both take ceil(pct * n) words absent ties
            concrete_min: -lower_quantile(&ratings.iter().map(|r| -r).collect::<Vec<_>>(), params.conc_top_pct)?,
            abstract_max: lower_quantile(ratings, params.conc_bottom_pct)?,
        })
    }

    pub fn label(&self, rating: f64) -> Option<ConcretenessLabel> {
        if rating >= self.concrete_min {
            Some(ConcretenessLabel::Concrete)
        } else if rating <= self.abstract_max {
            Some(ConcretenessLabel::Abstract)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildDiagnostics {
    pub vocab_in: usize,
    /// Words covered by the lexicon, the ratings and the static embeddings.
    pub vocab_used: usize,
    pub bands: ConcretenessBands,
    pub concrete_words: usize,
    pub abstract_words: usize,
    pub seeds_tried: usize,
    pub seeds_rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutcome {
    pub groups: WordGroupSet,
    pub diagnostics: BuildDiagnostics,
}

struct Vocab<'a> {
    words: Vec<String>,
    labels: Vec<Option<ConcretenessLabel>>,
    bands: ConcretenessBands,
    lexicon: &'a PhonemicLexicon,
    semantic: &'a StaticEmbeddingTable,
}

impl<'a> Vocab<'a> {
    fn new(
        lexicon: &'a PhonemicLexicon,
        concreteness: &ConcretenessTable,
        semantic: &'a StaticEmbeddingTable,
        vocab: &[String],
        params: &BuilderParams,
    ) -> Result<Self> {
        let words = covered(vocab, |w| lexicon.contains(w) && concreteness.contains(w) && semantic.contains(w));
        let ratings: Vec<f64> = words.iter().filter_map(|w| concreteness.get(w)).collect();
        if words.len() < params.min_group_size {
            return Err(Error::Builder(format!(
                "only {} of {} vocabulary words are covered by lexicon, ratings and static embeddings",
                words.len(),
                vocab.len()
            )));
        }
        let bands = ConcretenessBands::of(&ratings, params)?;
        let labels = ratings.iter().map(|&r| bands.label(r)).collect();
        Ok(Vocab {
            words,
            labels,
            bands,
            lexicon,
            semantic,
        })
    }

    fn dist(&self, a: usize, b: usize) -> Result<f64> {
        word_distance(&self.words[a], &self.words[b], self.lexicon)
    }

    fn cos(&self, a: usize, b: usize) -> Result<f64> {
        // both words were checked for coverage when the vocabulary was built
        let va = self.semantic.get(&self.words[a]).expect("covered word");
        let vb = self.semantic.get(&self.words[b]).expect("covered word");
        cosine_similarity(va, vb)
    }

    fn far_from_all(&self, w: usize, used: &[usize], min: f64) -> Result<bool> {
        for &u in used {
            if self.dist(w, u)? <= min {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Greedily assembles phonetic groups.
///
/// Each group starts from a seed drawn uniformly from the eligible words of
/// one concreteness band, alternating concrete and abstract. Candidates are
/// the same-band words within `phon_within_max` of the seed that are more
/// than `phon_across_min` from every word already grouped; they are visited
/// by distance to the seed, then alphabetically, and kept while their static
/// cosine to every current member stays below `sem_cos_max`. A group is kept
/// when it reaches `min_group_size`; a failed seed is never drawn again.
pub fn build_phonetic_groups(
    lexicon: &PhonemicLexicon,
    concreteness: &ConcretenessTable,
    semantic: &StaticEmbeddingTable,
    vocab: &[String],
    params: &BuilderParams,
) -> Result<BuildOutcome> {
    params.check()?;
    let v = Vocab::new(lexicon, concreteness, semantic, vocab, params)?;
    let n = v.words.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut used: Vec<usize> = Vec::new();
    let mut tried = vec![false; n];
    let mut groups: Vec<WordGroup> = Vec::new();
    let (mut seeds_tried, mut seeds_rejected) = (0, 0);

    'outer: while groups.len() < params.target_groups {
        let preferred = if groups.len() % 2 == 0 {
            ConcretenessLabel::Concrete
        } else {
            ConcretenessLabel::Abstract
        };
        let other = match preferred {
            ConcretenessLabel::Concrete => ConcretenessLabel::Abstract,
            ConcretenessLabel::Abstract => ConcretenessLabel::Concrete,
        };
        for band in [preferred, other] {
            let eligible: Vec<usize> = (0..n)
                .filter(|&i| v.labels[i] == Some(band) && !tried[i] && !used.contains(&i))
                .collect();
            let eligible: Vec<usize> = eligible
                .into_par_iter()
                .map(|i| Ok((i, v.far_from_all(i, &used, params.phon_across_min)?)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter_map(|(i, ok)| ok.then_some(i))
                .collect();
            if eligible.is_empty() {
                continue;
            }
            let seed = eligible[rng.random_range(0..eligible.len())];
            tried[seed] = true;
            seeds_tried += 1;
            match grow_group(&v, seed, &used, params)? {
                Some(members) => {
                    used.extend(&members);
                    groups.push(WordGroup {
                        name: v.words[seed].clone(),
                        words: members.iter().map(|&i| v.words[i].clone()).collect(),
                        concreteness: band,
                    });
                }
                None => seeds_rejected += 1,
            }
            continue 'outer;
        }
        break;
    }

    let diagnostics = BuildDiagnostics {
        vocab_in: vocab.len(),
        vocab_used: n,
        bands: v.bands,
        concrete_words: v.labels.iter().filter(|l| **l == Some(ConcretenessLabel::Concrete)).count(),
        abstract_words: v.labels.iter().filter(|l| **l == Some(ConcretenessLabel::Abstract)).count(),
        seeds_tried,
        seeds_rejected,
    };
    if groups.is_empty() {
        return Err(Error::Builder(format!(
            "no group reached {} words: {} usable words ({} concrete, {} abstract), {} seeds tried",
            params.min_group_size,
            diagnostics.vocab_used,
            diagnostics.concrete_words,
            diagnostics.abstract_words,
            diagnostics.seeds_tried
        )));
    }
    Ok(BuildOutcome {
        groups: WordGroupSet::with_min_size(GroupKind::Phonetic, groups, params.min_group_size)?,
        diagnostics,
    })
}

/// Members of the group seeded at `seed`, seed first, or None when too small.
fn grow_group(v: &Vocab, seed: usize, used: &[usize], params: &BuilderParams) -> Result<Option<Vec<usize>>> {
    let band = v.labels[seed];
    let mut cands: Vec<(f64, usize)> = (0..v.words.len())
        .into_par_iter()
        .filter(|&i| i != seed && v.labels[i] == band && !used.contains(&i))
        .map(|i| Ok((v.dist(seed, i)?, i)))
        .collect::<Result<Vec<_>>>()?;
    cands.retain(|&(d, _)| d <= params.phon_within_max);
    // words are sorted, so index order is alphabetical order
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut members = vec![seed];
    for (_, c) in cands {
        if !v.far_from_all(c, used, params.phon_across_min)? {
            continue;
        }
        let mut ok = true;
        for &m in &members {
            if v.cos(c, m)? >= params.sem_cos_max {
                ok = false;
                break;
            }
        }
        if ok {
            members.push(c);
        }
    }
    Ok((members.len() >= params.min_group_size).then_some(members))
}

/// Checks a phonetic group set against the builder's constraints and returns
/// every violation found. Each group's first word is taken as its seed.
pub fn validate_phonetic_groups(
    groups: &WordGroupSet,
    lexicon: &PhonemicLexicon,
    concreteness: &ConcretenessTable,
    semantic: &StaticEmbeddingTable,
    vocab: &[String],
    params: &BuilderParams,
) -> Result<Vec<String>> {
    params.check()?;
    let v = Vocab::new(lexicon, concreteness, semantic, vocab, params)?;
    let index = |w: &str| -> Result<usize> {
        v.words
            .binary_search_by(|x| x.as_str().cmp(w))
            .map_err(|_| Error::UnknownWord(w.to_string()))
    };
    let mut out = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for g in groups.groups() {
        if g.words.len() < params.min_group_size {
            out.push(format!("{}: {} words, need {}", g.name, g.words.len(), params.min_group_size));
        }
        let ids = g.words.iter().map(|w| index(w)).collect::<Result<Vec<_>>>()?;
        for (w, &i) in g.words.iter().zip(&ids) {
            if !seen.insert(w) {
                out.push(format!("{}: {w} appears in more than one group", g.name));
            }
            if v.labels[i] != Some(g.concreteness) {
                out.push(format!("{}: {w} is outside the {:?} band", g.name, g.concreteness));
            }
        }
        let seed = ids[0];
        for (a, &i) in ids.iter().enumerate() {
            if a > 0 {
                let d = v.dist(seed, i)?;
                if d > params.phon_within_max {
                    out.push(format!("{}: {} is {d:.3} from the seed", g.name, v.words[i]));
                }
            }
            for &j in &ids[a + 1..] {
                let c = v.cos(i, j)?;
                if c >= params.sem_cos_max {
                    out.push(format!("{}: {} and {} have cosine {c:.3}", g.name, v.words[i], v.words[j]));
                }
            }
        }
        members.push(ids);
    }
    for a in 0..members.len() {
        for b in a + 1..members.len() {
            for &i in &members[a] {
                for &j in &members[b] {
                    let d = v.dist(i, j)?;
                    if d <= params.phon_across_min {
                        out.push(format!(
                            "{} and {}: {} and {} are only {d:.3} apart",
                            groups.groups()[a].name,
                            groups.groups()[b].name,
                            v.words[i],
                            v.words[j]
                        ));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Descriptive statistics of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub name: String,
    pub n_words: usize,
    pub avg_concreteness: f64,
    pub std_concreteness: f64,
    /// Mean and population std of the within-group pairwise phonemic distances.
    pub avg_phon_dist: f64,
    pub std_phon_dist: f64,
}

/// Mean (population std) concreteness and within-group phonemic distance per group.
pub fn group_statistics(
    groups: &WordGroupSet,
    lexicon: &PhonemicLexicon,
    concreteness: &ConcretenessTable,
) -> Result<Vec<GroupStats>> {
    groups
        .groups()
        .iter()
        .map(|g| {
            let ratings = g
                .words
                .iter()
                .map(|w| concreteness.get(w).ok_or_else(|| Error::UnknownWord(w.clone())))
                .collect::<Result<Vec<_>>>()?;
            let mut dists = Vec::new();
            for (i, a) in g.words.iter().enumerate() {
                for b in &g.words[i + 1..] {
                    dists.push(word_distance(a, b, lexicon)?);
                }
            }
            let (ac, sc) = mean_pstd(&ratings);
            let (ad, sd) = mean_pstd(&dists);
            Ok(GroupStats {
                name: g.name.clone(),
                n_words: g.words.len(),
                avg_concreteness: ac,
                std_concreteness: sc,
                avg_phon_dist: ad,
                std_phon_dist: sd,
            })
        })
        .collect()
}

fn mean_pstd(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCheck {
    #[serde(flatten)]
    pub stats: GroupStats,
    /// Smallest within-group static cosine.
    pub min_within_sim: f64,
    pub within_sim_percentile_ok: bool,
    pub phon_dist_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Reference-pair cosine that within-group similarities must reach.
    pub similarity_threshold: f64,
    pub per_group: Vec<GroupCheck>,
    pub overall_ok: bool,
}

/// Checks that each semantic group is tight in static-embedding space and
/// phonemically diverse.
pub fn validate_semantic_groups(
    groups: &WordGroupSet,
    semantic: &StaticEmbeddingTable,
    lexicon: &PhonemicLexicon,
    concreteness: &ConcretenessTable,
    reference_vocab: &[String],
    params: &BuilderParams,
) -> Result<ValidationReport> {
    params.check()?;
    if groups.kind() != GroupKind::Semantic {
        return Err(Error::InvalidInput("expected a semantic group set".into()));
    }
    let refs = covered(reference_vocab, |w| semantic.contains(w));
    if refs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "only {} reference words have static embeddings",
            refs.len()
        )));
    }
    let sims = sample_pairs(refs.len(), params.reference_pairs, params.seed)
        .into_par_iter()
        .map(|(i, j)| cosine_similarity(semantic.get(&refs[i]).unwrap(), semantic.get(&refs[j]).unwrap()))
        .collect::<Result<Vec<_>>>()?;
    let threshold = lower_quantile(&sims, 1.0 - params.sem_within_top_pct)?;
    let stats = group_statistics(groups, lexicon, concreteness)?;
    let mut per_group = Vec::with_capacity(stats.len());
    for (g, stats) in groups.groups().iter().zip(stats) {
        let vecs = g
            .words
            .iter()
            .map(|w| semantic.get(w).ok_or_else(|| Error::UnknownWord(w.clone())))
            .collect::<Result<Vec<_>>>()?;
        let mut min_sim = f64::INFINITY;
        for i in 0..vecs.len() {
            for j in i + 1..vecs.len() {
                min_sim = min_sim.min(cosine_similarity(vecs[i], vecs[j])?);
            }
        }
        per_group.push(GroupCheck {
            within_sim_percentile_ok: min_sim >= threshold,
            phon_dist_ok: stats.avg_phon_dist > params.sem_phon_dist_min,
            min_within_sim: min_sim,
            stats,
        });
    }
    Ok(ValidationReport {
        similarity_threshold: threshold,
        overall_ok: per_group.iter().all(|g| g.within_sim_percentile_ok && g.phon_dist_ok),
        per_group,
    })
}

/// Published statistics of one semantic category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub avg_concreteness: f64,
    pub std_concreteness: f64,
    pub avg_phon_dist: f64,
    pub std_phon_dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticCategory {
    pub name: String,
    pub n_words: usize,
    pub concreteness: ConcretenessLabel,
    pub reference: ReferenceStats,
    /// Members named in published text; a subset of the category.
    pub known_words: Vec<String>,
}

/// The bundled description of the nine semantic categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticAsset {
    pub asset_version: u32,
    /// False while the full member lists are not bundled.
    pub complete: bool,
    pub provenance: String,
    pub statistics: String,
    pub categories: Vec<SemanticCategory>,
}

const SEMANTIC_ASSET: &str = include_str!("../data/semantic_groups.json");

pub fn semantic_asset() -> SemanticAsset {
    serde_json::from_str(SEMANTIC_ASSET).expect("bundled asset is valid JSON")
}

fn name_key(s: &str) -> String {
    s.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

/// Recomputed and published statistics side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryComparison {
    pub name: String,
    pub reference: ReferenceStats,
    pub n_words_expected: usize,
    pub computed: GroupStats,
}

impl CategoryComparison {
    pub fn concreteness_error(&self) -> f64 {
        (self.computed.avg_concreteness - self.reference.avg_concreteness).abs()
    }

    pub fn phon_dist_error(&self) -> f64 {
        (self.computed.avg_phon_dist - self.reference.avg_phon_dist).abs()
    }
}

/// Recomputes each category's statistics from user-supplied member lists.
///
/// Group names are matched to category names ignoring case, spaces and
/// punctuation. Every category must be present.
pub fn compare_with_asset(
    asset: &SemanticAsset,
    groups: &WordGroupSet,
    lexicon: &PhonemicLexicon,
    concreteness: &ConcretenessTable,
) -> Result<Vec<CategoryComparison>> {
    let stats = group_statistics(groups, lexicon, concreteness)?;
    asset
        .categories
        .iter()
        .map(|c| {
            let computed = stats
                .iter()
                .find(|s| name_key(&s.name) == name_key(&c.name))
                .ok_or_else(|| Error::InvalidInput(format!("no group named {:?}", c.name)))?;
            Ok(CategoryComparison {
                name: c.name.clone(),
                reference: c.reference,
                n_words_expected: c.n_words,
                computed: computed.clone(),
            })
        })
        .collect()
}
