//! Word-pair similarity profiles.
//!
//! Candidate token pairs are pooled per [`PairClass`], sampled repeatedly, and
//! each class's mean cosine similarity is reported relative to the mean over
//! random pairs drawn in the same repeat.

use std::collections::{BTreeMap, HashMap, HashSet};

use log::warn;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ci95, normalized_levenshtein, unit, IntervalEstimate};
use crate::model::{EmbeddingTable, PairClass, PairSet, PhonemicLexicon, SynonymSets, TokenPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolOptions {
    /// Word pairs at or below this normalized phonemic distance are near-homophones.
    pub homophone_threshold: f64,
    /// Largest pool kept per class; bigger candidate sets are reservoir-sampled.
    pub pool_cap: usize,
    pub classes: Vec<PairClass>,
    pub seed: u64,
}

impl Default for PoolOptions {
    fn default() -> Self {
        PoolOptions {
            homophone_threshold: 0.4,
            pool_cap: 500_000,
            classes: PairClass::ALL.to_vec(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairPool {
    pub pairs: PairSet,
    pub warnings: Vec<String>,
}

/// Enumerates candidate pairs for every requested class.
///
/// A token pair belongs to at most one of SameWord, Synonym, NearHomophone
/// and SameSpeaker, in that priority order. Random pairs are drawn uniformly
/// over all distinct-token pairs and may coincide with any other class.
pub fn build_pair_pool(
    table: &EmbeddingTable,
    lexicon: &PhonemicLexicon,
    synonyms: &SynonymSets,
    opts: &PoolOptions,
) -> Result<PairPool> {
    if !(opts.homophone_threshold > 0.0 && opts.homophone_threshold <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "homophone threshold {} outside (0, 1]",
            opts.homophone_threshold
        )));
    }
    if table.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: table.len(),
        });
    }
    let wants = |c: PairClass| opts.classes.contains(&c);
    if wants(PairClass::SameSpeaker) {
        if let Some(i) = table.rows().iter().position(|r| r.speaker_id.is_none()) {
            return Err(Error::InvalidInput(format!(
                "same-speaker pairs requested but row {i} has no speaker_id"
            )));
        }
    }

    // word id -> token rows, words in sorted order
    let mut by_word: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    for (i, r) in table.rows().iter().enumerate() {
        by_word.entry(r.word.as_str()).or_default().push(i as u32);
    }
    let words: Vec<&str> = by_word.keys().copied().collect();
    let word_id: HashMap<&str, u32> = words.iter().enumerate().map(|(i, w)| (*w, i as u32)).collect();
    let token_word: Vec<u32> = table.rows().iter().map(|r| word_id[r.word.as_str()]).collect();
    let tokens: Vec<&Vec<u32>> = by_word.values().collect();

    let synonym_words = synonym_word_pairs(synonyms, &word_id);
    let homophone_words = if wants(PairClass::NearHomophone) || wants(PairClass::SameSpeaker) {
        homophone_word_pairs(&words, lexicon, opts.homophone_threshold)?
            .into_iter()
            .filter(|p| !synonym_words.contains(p))
            .collect()
    } else {
        Vec::new()
    };

    let mut pairs = PairSet::new();
    let mut warnings = Vec::new();
    let mut stream = 0u64;
    let mut emit = |class: PairClass, candidates: &mut dyn Iterator<Item = (u32, u32)>, pairs: &mut PairSet| {
        stream += 1;
        let mut rng = substream(opts.seed, stream);
        for (a, b) in reservoir(candidates, opts.pool_cap, &mut rng) {
            pairs.push(a as usize, b as usize, class).expect("distinct tokens");
        }
    };

    if wants(PairClass::SameWord) {
        let mut it = tokens.iter().flat_map(|t| all_pairs(t));
        emit(PairClass::SameWord, &mut it, &mut pairs);
    }
    if wants(PairClass::Synonym) {
        let mut sorted: Vec<(u32, u32)> = synonym_words.iter().copied().collect();
        sorted.sort_unstable();
        let mut it = sorted
            .iter()
            .flat_map(|&(a, b)| cross(tokens[a as usize], tokens[b as usize]));
        emit(PairClass::Synonym, &mut it, &mut pairs);
    }
    if wants(PairClass::NearHomophone) {
        let mut it = homophone_words
            .iter()
            .flat_map(|&(a, b)| cross(tokens[a as usize], tokens[b as usize]));
        emit(PairClass::NearHomophone, &mut it, &mut pairs);
    }
    if wants(PairClass::SameSpeaker) {
        let homophones: HashSet<(u32, u32)> = homophone_words.iter().copied().collect();
        let mut by_speaker: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
        for (i, r) in table.rows().iter().enumerate() {
            by_speaker
                .entry(r.speaker_id.as_deref().unwrap_or_default())
                .or_default()
                .push(i as u32);
        }
        let mut it = by_speaker.values().flat_map(|t| all_pairs(t)).filter(|&(a, b)| {
            let key = ordered(token_word[a as usize], token_word[b as usize]);
            key.0 != key.1 && !synonym_words.contains(&key) && !homophones.contains(&key)
        });
        emit(PairClass::SameSpeaker, &mut it, &mut pairs);
    }
    if wants(PairClass::Random) {
        stream += 1;
        let mut rng = substream(opts.seed, stream);
        let n = table.len() as u32;
        let total = (n as u64) * (n as u64 - 1) / 2;
        let want = (opts.pool_cap as u64).min(total) as usize;
        for _ in 0..want {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let (a, b) = ordered(a, b);
            pairs.push(a as usize, b as usize, PairClass::Random)?;
        }
    }

    for &c in &opts.classes {
        if pairs.pool(c).is_empty() {
            let msg = format!("no candidate pairs for class {c}; class skipped");
            warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(PairPool { pairs, warnings })
}

fn ordered(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn all_pairs(t: &[u32]) -> impl Iterator<Item = (u32, u32)> + '_ {
    (0..t.len()).flat_map(move |i| ((i + 1)..t.len()).map(move |j| ordered(t[i], t[j])))
}

fn cross<'a>(a: &'a [u32], b: &'a [u32]) -> impl Iterator<Item = (u32, u32)> + 'a {
    a.iter().flat_map(move |&x| b.iter().map(move |&y| ordered(x, y)))
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform sample of at most `cap` items (Algorithm R), in encounter order when not full.
fn reservoir<T, R: Rng>(items: &mut dyn Iterator<Item = T>, cap: usize, rng: &mut R) -> Vec<T> {
    let mut out = Vec::new();
    for (seen, item) in items.enumerate() {
        if out.len() < cap {
            out.push(item);
        } else {
            let j = rng.random_range(0..=seen);
            if j < cap {
                out[j] = item;
            }
        }
    }
    out
}

fn synonym_word_pairs(synonyms: &SynonymSets, word_id: &HashMap<&str, u32>) -> HashSet<(u32, u32)> {
    let mut out = HashSet::new();
    for set in synonyms.sets() {
        let ids: Vec<u32> = set.iter().filter_map(|w| word_id.get(w.as_str()).copied()).collect();
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                if ids[i] != ids[j] {
                    out.insert(ordered(ids[i], ids[j]));
                }
            }
        }
    }
    out
}

/// Distinct in-lexicon word pairs within `threshold`, sorted.
fn homophone_word_pairs(words: &[&str], lexicon: &PhonemicLexicon, threshold: f64) -> Result<Vec<(u32, u32)>> {
    let covered: Vec<(u32, &[crate::model::Pronunciation])> = words
        .iter()
        .enumerate()
        .filter_map(|(i, w)| lexicon.pronunciations(w).map(|p| (i as u32, p)))
        .collect();
    let missing = words.len() - covered.len();
    if missing > 0 {
        warn!("{missing} words lack pronunciations and cannot form near-homophone pairs");
    }
    let found: Vec<Vec<(u32, u32)>> = (0..covered.len())
        .into_par_iter()
        .map(|i| {
            let (wi, pi) = covered[i];
            covered[i + 1..]
                .iter()
                .filter(|(_, pj)| min_distance(pi, pj) <= threshold)
                .map(|&(wj, _)| (wi, wj))
                .collect()
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}

fn min_distance(a: &[crate::model::Pronunciation], b: &[crate::model::Pronunciation]) -> f64 {
    let mut best = f64::INFINITY;
    for x in a {
        for y in b {
            // lexicon entries are never empty
            best = best.min(normalized_levenshtein(x, y).unwrap_or(1.0));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub n_per_class: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            n_per_class: 10_000,
            repeats: 5,
            seed: 0,
        }
    }
}

/// Normalized per-class similarity of one model layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairProfile {
    pub model_id: String,
    pub layer: u32,
    /// Mean cosine minus the same repeat's random-pair mean.
    pub per_class: BTreeMap<PairClass, IntervalEstimate>,
    /// Raw mean cosine of random pairs.
    pub random_baseline: IntervalEstimate,
    pub n_per_class: usize,
    pub repeats: usize,
    /// Classes whose pool was smaller than `n_per_class` and were drawn with replacement.
    pub with_replacement: Vec<PairClass>,
    /// Classes with an empty pool.
    pub skipped: Vec<PairClass>,
}

/// Pairs selected for every repeat, reusable across layers.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDraws {
    pub repeats: Vec<BTreeMap<PairClass, Vec<TokenPair>>>,
    pub n_per_class: usize,
    pub with_replacement: Vec<PairClass>,
    pub skipped: Vec<PairClass>,
}

/// Draws `n_per_class` pairs per class for each repeat.
///
/// Repeat `r` uses ChaCha stream `r` of the master seed, so draws do not
/// depend on evaluation order.
pub fn draw_pairs(pool: &PairSet, opts: &ProfileOptions) -> Result<PairDraws> {
    if opts.repeats < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: opts.repeats,
        });
    }
    if opts.n_per_class == 0 {
        return Err(Error::InvalidInput("n_per_class must be at least 1".into()));
    }
    if pool.pool(PairClass::Random).is_empty() {
        return Err(Error::InvalidInput("random pair pool is empty; no baseline".into()));
    }
    let mut with_replacement = Vec::new();
    let mut skipped = Vec::new();
    for c in PairClass::ALL {
        let len = pool.pool(c).len();
        if len == 0 {
            skipped.push(c);
        } else if len < opts.n_per_class {
            with_replacement.push(c);
        }
    }
    let repeats = (0..opts.repeats)
        .map(|r| {
            let mut rng = substream(opts.seed, r as u64);
            PairClass::ALL
                .iter()
                .filter(|c| !skipped.contains(c))
                .map(|&c| {
                    let src = pool.pool(c);
                    let picked: Vec<TokenPair> = if src.len() < opts.n_per_class {
                        (0..opts.n_per_class).map(|_| src[rng.random_range(0..src.len())]).collect()
                    } else {
                        index::sample(&mut rng, src.len(), opts.n_per_class)
                            .into_iter()
                            .map(|i| src[i])
                            .collect()
                    };
                    (c, picked)
                })
                .collect()
        })
        .collect();
    Ok(PairDraws {
        repeats,
        n_per_class: opts.n_per_class,
        with_replacement,
        skipped,
    })
}

/// Scores previously drawn pairs on one table.
pub fn evaluate_draws(table: &EmbeddingTable, draws: &PairDraws) -> Result<PairProfile> {
    let units: Vec<Vec<f64>> = table
        .rows()
        .iter()
        .map(|r| unit(&r.vector).ok_or(Error::ZeroNorm))
        .collect::<Result<_>>()?;
    let n = units.len() as u32;
    let mean_cos = |pairs: &[TokenPair]| -> Result<f64> {
        let mut total = 0.0;
        for p in pairs {
            if p.a >= n || p.b >= n {
                return Err(Error::InvalidInput(format!("pair ({}, {}) outside table", p.a, p.b)));
            }
            let (u, v) = (&units[p.a as usize], &units[p.b as usize]);
            total += u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
        }
        Ok(total / pairs.len() as f64)
    };

    let mut baseline = Vec::with_capacity(draws.repeats.len());
    let mut normalized: BTreeMap<PairClass, Vec<f64>> = BTreeMap::new();
    for rep in &draws.repeats {
        let random = mean_cos(&rep[&PairClass::Random])?;
        baseline.push(random);
        for (&c, pairs) in rep {
            if c != PairClass::Random {
                normalized.entry(c).or_default().push(mean_cos(pairs)? - random);
            }
        }
    }
    let per_class = normalized
        .into_iter()
        .map(|(c, v)| Ok((c, ci95(&v)?)))
        .collect::<Result<_>>()?;
    Ok(PairProfile {
        model_id: table.model_id().to_string(),
        layer: table.layer(),
        per_class,
        random_baseline: ci95(&baseline)?,
        n_per_class: draws.n_per_class,
        repeats: draws.repeats.len(),
        with_replacement: draws.with_replacement.clone(),
        skipped: draws.skipped.clone(),
    })
}

pub fn sample_profile(table: &EmbeddingTable, pool: &PairSet, opts: &ProfileOptions) -> Result<PairProfile> {
    pool.check_against(table)?;
    evaluate_draws(table, &draw_pairs(pool, opts)?)
}

/// One profile per layer; the same pairs are scored on every layer.
pub fn profile_across_layers(
    tables: &[EmbeddingTable],
    pool: &PairSet,
    opts: &ProfileOptions,
) -> Result<Vec<PairProfile>> {
    let first = tables
        .first()
        .ok_or_else(|| Error::InvalidInput("no layers given".into()))?;
    let mut layers = HashSet::new();
    for t in tables {
        if t.model_id() != first.model_id() {
            return Err(Error::InvalidInput(format!(
                "mixed models {:?} and {:?}",
                first.model_id(),
                t.model_id()
            )));
        }
        if !layers.insert(t.layer()) {
            return Err(Error::InvalidInput(format!("layer {} given twice", t.layer())));
        }
        let same_tokens = t.len() == first.len()
            && t.rows()
                .iter()
                .zip(first.rows())
                .all(|(a, b)| a.token_id == b.token_id);
        if !same_tokens {
            return Err(Error::InvalidInput(format!(
                "layer {} token_ids differ from layer {}",
                t.layer(),
                first.layer()
            )));
        }
    }
    pool.check_against(first)?;
    let draws = draw_pairs(pool, opts)?;
    let mut out: Vec<PairProfile> = tables
        .par_iter()
        .map(|t| evaluate_draws(t, &draws))
        .collect::<Result<_>>()?;
    out.sort_by_key(|p| p.layer);
    Ok(out)
}
