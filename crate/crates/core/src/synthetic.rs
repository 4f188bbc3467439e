//! Seeded synthetic data used by tests, benchmarks and the acceptance suite.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{ConcretenessLabel, EmbeddingTable, GroupKind, TokenRow, WordGroup, WordGroupSet};

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Haar-ish random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    gaussian_matrix(rng, dim, dim).qr().q()
}

/// Gaussian clusters: `groups` classes of `per_group` points in `dim` dimensions,
/// class means at `separation` (in noise standard deviations) from one another.
///
/// Means sit on scaled coordinate axes, so every pair of class means is exactly
/// `separation` apart. Returns the data and row labels.
pub fn gaussian_groups<R: Rng + ?Sized>(
    rng: &mut R,
    groups: usize,
    per_group: usize,
    dim: usize,
    separation: f64,
) -> (DMatrix<f64>, Vec<usize>) {
    assert!(groups <= dim, "need one axis per group");
    let offset = separation / std::f64::consts::SQRT_2;
    let n = groups * per_group;
    let mut x = gaussian_matrix(rng, n, dim);
    let mut labels = Vec::with_capacity(n);
    for g in 0..groups {
        for i in 0..per_group {
            x[(g * per_group + i, g)] += offset;
            labels.push(g);
        }
    }
    (x, labels)
}

/// Wraps a data matrix and labels into a single-token-per-word table plus
/// matching group set. Words are named `g{label}_w{index}`; groups alternate
/// concrete/abstract labels.
pub fn table_and_groups(
    model_id: &str,
    layer: u32,
    x: &DMatrix<f64>,
    labels: &[usize],
) -> (EmbeddingTable, WordGroupSet) {
    let mut rows = Vec::with_capacity(x.nrows());
    let mut members: Vec<Vec<String>> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        let word = format!("g{l}_w{i}");
        if members.len() <= l {
            members.resize(l + 1, Vec::new());
        }
        members[l].push(word.clone());
        rows.push(TokenRow::new(
            format!("t{i}"),
            &word,
            None,
            x.row(i).iter().copied().collect(),
        ));
    }
    let table = EmbeddingTable::new(model_id, layer, x.ncols(), rows).expect("synthetic table is valid");
    let groups = members
        .into_iter()
        .enumerate()
        .filter(|(_, w)| !w.is_empty())
        .map(|(g, words)| WordGroup {
            name: format!("group{g:02}"),
            words,
            concreteness: if g % 2 == 0 {
                ConcretenessLabel::Concrete
            } else {
                ConcretenessLabel::Abstract
            },
        })
        .collect();
    let groups = WordGroupSet::with_min_size(GroupKind::Semantic, groups, 2).expect("synthetic groups are valid");
    (table, groups)
}

/// Constructive word-token table for pair profiling.
///
/// Words come in phonetic clusters sharing a four-phoneme stem (normalized
/// distance 0.2 inside a cluster, at least 0.8 across clusters). Each word
/// has a random base direction; words in one cluster share a cluster
/// component of weight `homophone_share`. Tokens add isotropic noise of
/// expected norm `noise`. Synonym sets join words from neighbouring clusters
/// whose base vectors are independent.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTableSpec {
    pub clusters: usize,
    pub cluster_size: usize,
    pub tokens_per_word: usize,
    pub speakers: usize,
    pub dim: usize,
    pub noise: f64,
    pub homophone_share: f64,
    pub speaker_weight: f64,
}

impl Default for PairTableSpec {
    fn default() -> Self {
        PairTableSpec {
            clusters: 60,
            cluster_size: 3,
            tokens_per_word: 6,
            speakers: 8,
            dim: 64,
            noise: 0.1,
            homophone_share: 0.6,
            speaker_weight: 0.0,
        }
    }
}

fn two_letter_symbol(i: usize) -> String {
    let a = (b'A' + (i / 26 % 26) as u8) as char;
    let b = (b'A' + (i % 26) as u8) as char;
    format!("{a}{b}")
}

impl PairTableSpec {
    pub fn word(cluster: usize, j: usize) -> String {
        format!("w{cluster}x{j}")
    }

    pub fn build(
        &self,
        seed: u64,
    ) -> (
        EmbeddingTable,
        crate::model::PhonemicLexicon,
        crate::model::SynonymSets,
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let unit = |v: Vec<f64>| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect::<Vec<f64>>()
        };
        let speakers: Vec<Vec<f64>> = (0..self.speakers)
            .map(|_| unit(gaussian_vector(&mut rng, self.dim)))
            .collect();
        let mut lexicon = crate::model::PhonemicLexicon::new();
        let mut rows = Vec::new();
        let mut synsets = Vec::new();
        let scale = 1.0 / (self.dim as f64).sqrt();
        for c in 0..self.clusters {
            let stem: Vec<String> = (0..4).map(|i| two_letter_symbol(c * 4 + i)).collect();
            let shared = unit(gaussian_vector(&mut rng, self.dim));
            for j in 0..self.cluster_size {
                let word = Self::word(c, j);
                let mut phones = stem.clone();
                phones.push(two_letter_symbol(600 + j));
                lexicon.insert(&word, &phones).expect("valid symbols");
                let own = unit(gaussian_vector(&mut rng, self.dim));
                let base = unit(
                    own.iter()
                        .zip(&shared)
                        .map(|(o, s)| o + self.homophone_share * s)
                        .collect(),
                );
                for t in 0..self.tokens_per_word {
                    let spk = (c * self.cluster_size + j + t) % self.speakers.max(1);
                    let noise = gaussian_vector(&mut rng, self.dim);
                    let vector = (0..self.dim)
                        .map(|d| base[d] + self.speaker_weight * speakers[spk][d] + self.noise * scale * noise[d])
                        .collect();
                    rows.push(TokenRow::new(
                        format!("{word}_{t}"),
                        &word,
                        Some(format!("spk{spk}")),
                        vector,
                    ));
                }
            }
            if c % 2 == 1 {
                for j in 0..self.cluster_size {
                    synsets.push(vec![Self::word(c - 1, j), Self::word(c, j)]);
                }
            }
        }
        let table = EmbeddingTable::new("synthetic", 0, self.dim, rows).expect("valid table");
        (table, lexicon, crate::model::SynonymSets::new(synsets).0)
    }
}

/// Resources for the phonetic group builder.
#[derive(Debug, Clone, PartialEq)]
pub struct BuilderFixture {
    pub lexicon: crate::model::PhonemicLexicon,
    pub concreteness: crate::model::ConcretenessTable,
    pub semantic: crate::model::StaticEmbeddingTable,
    pub vocab: Vec<String>,
}

struct FixtureWord {
    word: String,
    phones: Vec<String>,
    rating: f64,
}

fn assemble(words: Vec<FixtureWord>, vectors: Vec<Vec<f64>>) -> BuilderFixture {
    let dim = vectors[0].len();
    let mut lexicon = crate::model::PhonemicLexicon::new();
    let mut semantic = crate::model::StaticEmbeddingTable::new(dim);
    for (w, v) in words.iter().zip(&vectors) {
        lexicon.insert(&w.word, &w.phones).expect("valid symbols");
        semantic.insert(&w.word, v).expect("valid vector");
    }
    let concreteness =
        crate::model::ConcretenessTable::new(words.iter().map(|w| (w.word.clone(), w.rating))).expect("valid ratings");
    BuilderFixture {
        lexicon,
        concreteness,
        semantic,
        vocab: words.into_iter().map(|w| w.word).collect(),
    }
}

/// A 26-word vocabulary in which, under default builder parameters, exactly
/// two phonetic groups can be formed: `cona..cone` (concrete) and
/// `absa..abse` (abstract).
///
/// Decoys: one extra word per cluster that sounds like the cluster but is
/// semantically close to all its members, ten mid-rated words that sound like
/// the concrete cluster, and four in-band words with unique phonemes.
pub fn two_group_fixture() -> BuilderFixture {
    let stem_a = ["A", "B", "C", "D", "E", "F", "G", "H"];
    let stem_b = ["M", "N", "O", "P", "Q", "R", "S", "T"];
    let with = |stem: &[&str], last: &str| {
        let mut v: Vec<String> = stem.iter().map(|s| s.to_string()).collect();
        v.push(last.to_string());
        v
    };
    let mut words = Vec::new();
    for (i, last) in ["I", "J", "K", "L", "U"].iter().enumerate() {
        words.push(FixtureWord { word: format!("con{}", (b'a' + i as u8) as char), phones: with(&stem_a, last), rating: 4.9 });
    }
    for (i, last) in ["V", "W", "X", "Y", "Z"].iter().enumerate() {
        words.push(FixtureWord { word: format!("abs{}", (b'a' + i as u8) as char), phones: with(&stem_b, last), rating: 1.2 });
    }
    words.push(FixtureWord { word: "condecoy".into(), phones: with(&stem_a, "Z"), rating: 4.9 });
    words.push(FixtureWord { word: "absdecoy".into(), phones: with(&stem_b, "U"), rating: 1.2 });
    for i in 0..10 {
        words.push(FixtureWord { word: format!("mid{i}"), phones: with(&stem_a, &two_letter_symbol(i)), rating: 3.0 });
    }
    for (i, rating) in [4.8, 4.8, 1.5, 1.5].iter().enumerate() {
        let phones = (0..3).map(|k| two_letter_symbol(100 + 3 * i + k)).collect();
        words.push(FixtureWord { word: format!("lone{i}"), phones, rating: *rating });
    }
    let dim = words.len();
    let mut vectors: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    // decoys point along the sum of their cluster's axes
    for (decoy, cluster) in [(10, 0..5), (11, 5..10)] {
        vectors[decoy] = (0..dim).map(|j| if cluster.contains(&j) { 1.0 } else { 0.0 }).collect();
    }
    assemble(words, vectors)
}

/// Random vocabulary over a small phoneme alphabet with uniform ratings and
/// Gaussian static vectors.
pub fn random_builder_fixture(seed: u64, n_words: usize) -> BuilderFixture {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut words = Vec::new();
    let mut i = 0;
    while words.len() < n_words {
        let len = rng.random_range(3..=5);
        let phones: Vec<String> = (0..len).map(|_| two_letter_symbol(rng.random_range(0..6))).collect();
        let rating = rng.random_range(1.0..=5.0);
        if seen.insert(phones.clone()) {
            words.push(FixtureWord { word: format!("r{i}"), phones, rating });
        }
        i += 1;
    }
    let vectors = (0..n_words).map(|_| gaussian_vector(&mut rng, 300)).collect();
    assemble(words, vectors)
}
