//! Shared data model: embedding tables, lexical resources and word groups.
//!
//! Every type here is immutable once constructed. Words are case-folded to
//! lowercase at every constructor.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One word token: a single utterance (or text occurrence) of a word.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenRow {
    pub token_id: String,
    pub word: String,
    pub speaker_id: Option<String>,
    pub vector: Vec<f64>,
}

impl TokenRow {
    pub fn new(
        token_id: impl Into<String>,
        word: impl AsRef<str>,
        speaker_id: Option<String>,
        vector: Vec<f64>,
    ) -> Self {
        TokenRow {
            token_id: token_id.into(),
            word: word.as_ref().to_lowercase(),
            speaker_id,
            vector,
        }
    }
}

/// The word-token embeddings of one model layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    model_id: String,
    layer: u32,
    dim: usize,
    rows: Vec<TokenRow>,
}

impl EmbeddingTable {
    /// Builds a table and rejects it if any invariant is violated.
    pub fn new(model_id: impl Into<String>, layer: u32, dim: usize, rows: Vec<TokenRow>) -> Result<Self> {
        let table = Self::new_unchecked(model_id, layer, dim, rows);
        let violations = validate_table(&table);
        if violations.is_empty() {
            Ok(table)
        } else {
            Err(Error::InvalidTable(
                violations.iter().map(ToString::to_string).collect(),
            ))
        }
    }

    /// Builds a table without validation. Use [`validate_table`] to inspect it.
    pub fn new_unchecked(model_id: impl Into<String>, layer: u32, dim: usize, rows: Vec<TokenRow>) -> Self {
        EmbeddingTable {
            model_id: model_id.into(),
            layer,
            dim,
            rows,
        }
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn layer(&self) -> u32 {
        self.layer
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[TokenRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, index: usize) -> &TokenRow {
        &self.rows[index]
    }

    /// Returns a copy of this table with a different layer index.
    pub fn with_layer(&self, layer: u32) -> Self {
        EmbeddingTable {
            layer,
            ..self.clone()
        }
    }

    /// Keeps only the first token per (speaker, word) combination.
    ///
    /// Tokens without a speaker are kept unconditionally.
    pub fn dedup_speaker_words(self) -> Self {
        let mut seen = HashSet::new();
        let rows = self
            .rows
            .into_iter()
            .filter(|r| match &r.speaker_id {
                Some(s) => seen.insert((s.clone(), r.word.clone())),
                None => true,
            })
            .collect();
        EmbeddingTable { rows, ..self }
    }

    /// Row-major matrix of the selected rows.
    pub fn matrix_of(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), self.dim, |i, j| self.rows[indices[i]].vector[j])
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.dim, |i, j| self.rows[i].vector[j])
    }

    pub fn token_index(&self) -> HashMap<&str, usize> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.token_id.as_str(), i))
            .collect()
    }

    /// Maps each word to the index of its first token.
    pub fn first_occurrence(&self) -> HashMap<&str, usize> {
        let mut out = HashMap::new();
        for (i, r) in self.rows.iter().enumerate() {
            out.entry(r.word.as_str()).or_insert(i);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    EmptyTable,
    ZeroDim,
    WrongDim { found: usize },
    NonFinite,
    ZeroNorm,
    EmptyWord,
    DuplicateTokenId(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub row: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |f: &mut fmt::Formatter<'_>| match self.row {
            Some(r) => write!(f, " at row {r}"),
            None => Ok(()),
        };
        match &self.kind {
            ViolationKind::EmptyTable => write!(f, "empty table"),
            ViolationKind::ZeroDim => write!(f, "dim must be at least 1"),
            ViolationKind::WrongDim { found } => {
                write!(f, "vector has {found} entries")?;
                at(f)
            }
            ViolationKind::NonFinite => {
                write!(f, "non-finite vector")?;
                at(f)
            }
            ViolationKind::ZeroNorm => {
                write!(f, "zero-norm vector")?;
                at(f)
            }
            ViolationKind::EmptyWord => {
                write!(f, "empty word")?;
                at(f)
            }
            ViolationKind::DuplicateTokenId(id) => {
                write!(f, "duplicate token_id {id:?}")?;
                at(f)
            }
        }
    }
}

/// Lists every invariant violation in `table`. An empty list means the table is valid.
pub fn validate_table(table: &EmbeddingTable) -> Vec<Violation> {
    let mut out = Vec::new();
    if table.dim == 0 {
        out.push(Violation {
            row: None,
            kind: ViolationKind::ZeroDim,
        });
    }
    if table.rows.is_empty() {
        out.push(Violation {
            row: None,
            kind: ViolationKind::EmptyTable,
        });
    }
    let mut seen: HashSet<&str> = HashSet::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let mut push = |kind| out.push(Violation { row: Some(i), kind });
        if row.word.is_empty() {
            push(ViolationKind::EmptyWord);
        }
        if !seen.insert(row.token_id.as_str()) {
            push(ViolationKind::DuplicateTokenId(row.token_id.clone()));
        }
        if row.vector.len() != table.dim {
            push(ViolationKind::WrongDim {
                found: row.vector.len(),
            });
        } else if row.vector.iter().any(|x| !x.is_finite()) {
            push(ViolationKind::NonFinite);
        } else if row.vector.iter().all(|&x| x == 0.0) {
            push(ViolationKind::ZeroNorm);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Match on token_id; fall back to words when no token_id is shared.
    #[default]
    Auto,
    TokenId,
    Word,
}

/// Row-index pairing `(row in a, row in b)` of the rows both tables share.
///
/// Word matching is one-to-one on the first occurrence of each word in
/// either table. Pairs come out in `table_a` row order.
pub fn match_words(a: &EmbeddingTable, b: &EmbeddingTable, mode: MatchMode) -> Result<Vec<(usize, usize)>> {
    let pairs = match mode {
        MatchMode::TokenId => match_token_ids(a, b),
        MatchMode::Word => match_first_words(a, b),
        MatchMode::Auto => {
            let p = match_token_ids(a, b);
            if p.is_empty() {
                match_first_words(a, b)
            } else {
                p
            }
        }
    };
    if pairs.is_empty() {
        return Err(Error::NoCommonTokens);
    }
    Ok(pairs)
}

fn match_token_ids(a: &EmbeddingTable, b: &EmbeddingTable) -> Vec<(usize, usize)> {
    let index = b.token_index();
    a.rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| index.get(r.token_id.as_str()).map(|&j| (i, j)))
        .collect()
}

fn match_first_words(a: &EmbeddingTable, b: &EmbeddingTable) -> Vec<(usize, usize)> {
    let first_b = b.first_occurrence();
    let mut seen = HashSet::new();
    a.rows
        .iter()
        .enumerate()
        .filter(|(_, r)| seen.insert(r.word.as_str()))
        .filter_map(|(i, r)| first_b.get(r.word.as_str()).map(|&j| (i, j)))
        .collect()
}

/// Interned phoneme symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhonemeId(pub u16);

pub type Pronunciation = Vec<PhonemeId>;

/// Word to pronunciation map over stress-free phoneme symbols.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhonemicLexicon {
    symbols: Vec<String>,
    symbol_ids: HashMap<String, PhonemeId>,
    entries: BTreeMap<String, Vec<Pronunciation>>,
}

impl PhonemicLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pronunciation for `word`. Stress digits are stripped from
    /// every symbol; identical variants are stored once.
    pub fn insert<S: AsRef<str>>(&mut self, word: &str, phonemes: &[S]) -> Result<()> {
        let word = word.trim().to_lowercase();
        if word.is_empty() {
            return Err(Error::InvalidInput("empty word in lexicon".into()));
        }
        if phonemes.is_empty() {
            return Err(Error::InvalidInput(format!("no phonemes for {word:?}")));
        }
        let mut pron = Vec::with_capacity(phonemes.len());
        for p in phonemes {
            let sym = strip_stress(p.as_ref());
            if sym.is_empty() || !sym.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) {
                return Err(Error::InvalidInput(format!(
                    "bad phoneme symbol {:?} for {word:?}",
                    p.as_ref()
                )));
            }
            pron.push(self.intern(sym));
        }
        let prons = self.entries.entry(word).or_default();
        if !prons.contains(&pron) {
            prons.push(pron);
        }
        Ok(())
    }

    fn intern(&mut self, sym: &str) -> PhonemeId {
        if let Some(&id) = self.symbol_ids.get(sym) {
            return id;
        }
        let id = PhonemeId(self.symbols.len() as u16);
        self.symbols.push(sym.to_string());
        self.symbol_ids.insert(sym.to_string(), id);
        id
    }

    pub fn pronunciations(&self, word: &str) -> Option<&[Pronunciation]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn symbol(&self, id: PhonemeId) -> &str {
        &self.symbols[id.0 as usize]
    }

    pub fn spell(&self, pron: &[PhonemeId]) -> Vec<&str> {
        pron.iter().map(|&p| self.symbol(p)).collect()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn strip_stress(sym: &str) -> &str {
    sym.trim_end_matches(|c: char| c.is_ascii_digit())
}

/// Human concreteness ratings on the 1-5 scale.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConcretenessTable {
    ratings: BTreeMap<String, f64>,
}

impl ConcretenessTable {
    pub fn new(ratings: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (word, r) in ratings {
            if !(1.0..=5.0).contains(&r) {
                return Err(Error::InvalidInput(format!(
                    "concreteness rating {r} for {word:?} outside [1, 5]"
                )));
            }
            map.insert(word.to_lowercase(), r);
        }
        Ok(ConcretenessTable { ratings: map })
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.ratings.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.ratings.contains_key(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.ratings.iter().map(|(w, &r)| (w.as_str(), r))
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }
}

/// Static (type-level) word vectors, e.g. GloVe. Words keep file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StaticEmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl StaticEmbeddingTable {
    pub fn new(dim: usize) -> Self {
        StaticEmbeddingTable {
            dim,
            ..Default::default()
        }
    }

    /// Inserts a vector; a repeated word keeps its first vector.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite vector for {word:?}")));
        }
        let word = word.to_lowercase();
        if self.index.contains_key(&word) {
            return Ok(());
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Synonym sets (e.g. exported WordNet synsets), each with at least two distinct words.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymSets {
    sets: Vec<Vec<String>>,
}

impl SynonymSets {
    /// Lowercases and deduplicates each set; sets left with fewer than two
    /// words are dropped and counted in the second return value.
    pub fn new(sets: impl IntoIterator<Item = Vec<String>>) -> (Self, usize) {
        let mut dropped = 0;
        let mut out = Vec::new();
        for set in sets {
            let mut seen = HashSet::new();
            let words: Vec<String> = set
                .into_iter()
                .map(|w| w.to_lowercase())
                .filter(|w| !w.is_empty() && seen.insert(w.clone()))
                .collect();
            if words.len() >= 2 {
                out.push(words);
            } else {
                dropped += 1;
            }
        }
        (SynonymSets { sets: out }, dropped)
    }

    pub fn sets(&self) -> &[Vec<String>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Phonetic,
    Semantic,
}

impl GroupKind {
    /// Smallest group size allowed for this kind of dataset.
    pub fn min_group_size(self) -> usize {
        match self {
            GroupKind::Phonetic => 5,
            GroupKind::Semantic => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcretenessLabel {
    Concrete,
    Abstract,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordGroup {
    pub name: String,
    pub words: Vec<String>,
    pub concreteness: ConcretenessLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordGroupSet {
    kind: GroupKind,
    min_group_size: usize,
    groups: Vec<WordGroup>,
}

impl WordGroupSet {
    /// Builds a group set using the kind's minimum group size.
    pub fn new(kind: GroupKind, groups: Vec<WordGroup>) -> Result<Self> {
        Self::with_min_size(kind, groups, kind.min_group_size())
    }

    /// Builds a group set with an explicit minimum group size (at least 2).
    pub fn with_min_size(kind: GroupKind, groups: Vec<WordGroup>, min_size: usize) -> Result<Self> {
        let min_size = min_size.max(2);
        let mut names = HashSet::new();
        let mut groups = groups;
        for g in &mut groups {
            for w in &mut g.words {
                *w = w.trim().to_lowercase();
            }
            if !names.insert(g.name.clone()) {
                return Err(Error::InvalidInput(format!("duplicate group name {:?}", g.name)));
            }
            if g.words.len() < min_size {
                return Err(Error::InvalidInput(format!(
                    "group {:?} has {} words, need at least {min_size}",
                    g.name,
                    g.words.len()
                )));
            }
            let mut seen = HashSet::new();
            for w in &g.words {
                if w.is_empty() {
                    return Err(Error::InvalidInput(format!("empty word in group {:?}", g.name)));
                }
                if !seen.insert(w.as_str()) {
                    return Err(Error::InvalidInput(format!(
                        "duplicate word {w:?} in group {:?}",
                        g.name
                    )));
                }
            }
        }
        Ok(WordGroupSet {
            kind,
            min_group_size: min_size,
            groups,
        })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn min_group_size(&self) -> usize {
        self.min_group_size
    }

    pub fn groups(&self) -> &[WordGroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn total_words(&self) -> usize {
        self.groups.iter().map(|g| g.words.len()).sum()
    }

    /// Same set without the group at `index`. Size minimums are not rechecked.
    pub fn without(&self, index: usize) -> WordGroupSet {
        let mut groups = self.groups.clone();
        groups.remove(index);
        WordGroupSet {
            kind: self.kind,
            min_group_size: self.min_group_size,
            groups,
        }
    }

    /// Groups carrying the given concreteness label.
    pub fn count_label(&self, label: ConcretenessLabel) -> usize {
        self.groups.iter().filter(|g| g.concreteness == label).count()
    }
}

impl<'de> Deserialize<'de> for WordGroupSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            kind: GroupKind,
            groups: Vec<WordGroup>,
            #[serde(default)]
            min_group_size: Option<usize>,
        }
        let raw = Raw::deserialize(d)?;
        let min = raw.min_group_size.unwrap_or(raw.kind.min_group_size());
        WordGroupSet::with_min_size(raw.kind, raw.groups, min).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairClass {
    SameWord,
    SameSpeaker,
    NearHomophone,
    Synonym,
    Random,
}

impl PairClass {
    pub const ALL: [PairClass; 5] = [
        PairClass::SameWord,
        PairClass::SameSpeaker,
        PairClass::NearHomophone,
        PairClass::Synonym,
        PairClass::Random,
    ];

    /// The classes reported relative to the random baseline.
    pub const PROFILED: [PairClass; 4] = [
        PairClass::SameWord,
        PairClass::SameSpeaker,
        PairClass::NearHomophone,
        PairClass::Synonym,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PairClass::SameWord => "same_word",
            PairClass::SameSpeaker => "same_speaker",
            PairClass::NearHomophone => "near_homophone",
            PairClass::Synonym => "synonym",
            PairClass::Random => "random",
        }
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A pair of distinct rows in one [`EmbeddingTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TokenPair {
    pub a: u32,
    pub b: u32,
    pub class: PairClass,
}

/// Candidate pairs, grouped by class.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairSet {
    pools: BTreeMap<PairClass, Vec<TokenPair>>,
}

impl PairSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, a: usize, b: usize, class: PairClass) -> Result<()> {
        if a == b {
            return Err(Error::InvalidInput(format!("pair of identical rows {a}")));
        }
        self.pools.entry(class).or_default().push(TokenPair {
            a: a as u32,
            b: b as u32,
            class,
        });
        Ok(())
    }

    pub fn pool(&self, class: PairClass) -> &[TokenPair] {
        self.pools.get(&class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn classes(&self) -> impl Iterator<Item = PairClass> + '_ {
        self.pools.iter().filter(|(_, v)| !v.is_empty()).map(|(c, _)| *c)
    }

    pub fn len(&self) -> usize {
        self.pools.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks that every pair resolves to rows of `table`.
    pub fn check_against(&self, table: &EmbeddingTable) -> Result<()> {
        let n = table.len() as u32;
        for p in self.pools.values().flatten() {
            if p.a >= n || p.b >= n {
                return Err(Error::InvalidInput(format!(
                    "pair ({}, {}) out of range for table with {n} rows",
                    p.a, p.b
                )));
            }
        }
        Ok(())
    }

    /// Pairs as `(token_id_a, token_id_b, class)`.
    pub fn token_ids<'t>(&self, table: &'t EmbeddingTable) -> Vec<(&'t str, &'t str, PairClass)> {
        self.pools
            .values()
            .flatten()
            .map(|p| {
                (
                    table.row(p.a as usize).token_id.as_str(),
                    table.row(p.b as usize).token_id.as_str(),
                    p.class,
                )
            })
            .collect()
    }
}
