//! Parsers for pronunciation dictionaries, static vectors, ratings and synsets.

use std::collections::HashSet;
use std::io::{BufRead, Read};
use std::path::Path;

use super::{lines, open_lines};
use crate::error::{Error, Result};
use crate::model::{ConcretenessTable, PhonemicLexicon, StaticEmbeddingTable, SynonymSets};

fn shown(path: &Path) -> String {
    path.display().to_string()
}

/// Strips a `(n)` variant marker: `read(1)` becomes `read`.
fn base_word(token: &str) -> &str {
    if let Some(open) = token.rfind('(') {
        let inner = &token[open + 1..];
        if let Some(num) = inner.strip_suffix(')') {
            if !num.is_empty() && num.chars().all(|c| c.is_ascii_digit()) && open > 0 {
                return &token[..open];
            }
        }
    }
    token
}

/// Reads a CMU-style dictionary: `WORD  PH1 PH2 ...` per line.
///
/// Lines starting with `;;;` are comments, `WORD(n)` adds a variant to
/// `WORD`, a trailing `# ...` annotation is ignored and stress digits are
/// removed from symbols.
pub fn parse_lexicon(path: impl AsRef<Path>) -> Result<PhonemicLexicon> {
    let path = path.as_ref();
    let mut lex = PhonemicLexicon::new();
    for item in lines(path)? {
        let (n, line) = item?;
        if line.starts_with(";;;") || line.trim().is_empty() {
            continue;
        }
        let body = match line.find(" #") {
            Some(i) => &line[..i],
            None => &line,
        };
        let mut parts = body.split_whitespace();
        let word = parts.next().expect("non-empty line");
        let phones: Vec<&str> = parts.collect();
        if phones.is_empty() {
            return Err(Error::parse(shown(path), n, format!("no phonemes for {word:?}")));
        }
        lex.insert(base_word(word), &phones)
            .map_err(|e| Error::parse(shown(path), n, e.to_string()))?;
    }
    if lex.is_empty() {
        return Err(Error::parse(shown(path), 0, "no entries"));
    }
    Ok(lex)
}

/// Reads text vectors (`word v1 v2 ...` per line), keeping only `filter`
/// words when given. A leading `count dim` header line is accepted.
pub fn parse_static_embeddings(path: impl AsRef<Path>, filter: Option<&HashSet<String>>) -> Result<StaticEmbeddingTable> {
    let path = path.as_ref();
    let mut table: Option<StaticEmbeddingTable> = None;
    for item in lines(path)? {
        let (n, line) = item?;
        let mut parts = line.split(' ').filter(|t| !t.is_empty());
        let Some(word) = parts.next() else {
            return Err(Error::parse(shown(path), n, "empty line"));
        };
        let rest: Vec<&str> = parts.collect();
        if n == 1 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        let dim = table.get_or_insert_with(|| StaticEmbeddingTable::new(rest.len())).dim();
        if rest.len() != dim || dim == 0 {
            return Err(Error::parse(shown(path), n, format!("expected {dim} values, found {}", rest.len())));
        }
        let word = word.to_lowercase();
        if filter.is_some_and(|f| !f.contains(&word)) {
            continue;
        }
        let v = rest
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| Error::parse(shown(path), n, format!("bad float {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        table
            .as_mut()
            .unwrap()
            .insert(&word, &v)
            .map_err(|e| Error::parse(shown(path), n, e.to_string()))?;
    }
    table.ok_or_else(|| Error::parse(shown(path), 0, "no vectors"))
}

/// Column names for [`parse_concreteness_with`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcretenessColumns {
    pub word: String,
    pub rating: String,
}

impl Default for ConcretenessColumns {
    fn default() -> Self {
        ConcretenessColumns {
            word: "Word".into(),
            rating: "Conc.M".into(),
        }
    }
}

pub fn parse_concreteness(path: impl AsRef<Path>) -> Result<ConcretenessTable> {
    parse_concreteness_with(path, &ConcretenessColumns::default())
}

/// Reads a delimited ratings table. The delimiter is a tab if the header
/// line contains one, otherwise a comma.
pub fn parse_concreteness_with(path: impl AsRef<Path>, cols: &ConcretenessColumns) -> Result<ConcretenessTable> {
    let path = path.as_ref();
    let mut reader = open_lines(path)?;
    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| Error::io(path, e))?;
    let delim = if header.contains('\t') { b'\t' } else { b',' };
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(delim)
        .quoting(delim == b',')
        .from_reader(std::io::Cursor::new(header).chain(reader));
    let headers = csv
        .headers()
        .map_err(|e| Error::parse(shown(path), 1, e.to_string()))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(wi), Some(ri)) = (find(&cols.word), find(&cols.rating)) else {
        return Err(Error::parse(
            shown(path),
            1,
            format!("expected columns {:?} and {:?}", cols.word, cols.rating),
        ));
    };
    let mut ratings = Vec::new();
    for rec in csv.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(shown(path), line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let word = rec.get(wi).unwrap_or("").trim();
        let raw = rec.get(ri).unwrap_or("").trim();
        if word.is_empty() {
            return Err(Error::parse(shown(path), line, "empty word"));
        }
        let r: f64 = raw
            .parse()
            .map_err(|_| Error::parse(shown(path), line, format!("bad rating {raw:?}")))?;
        if !(1.0..=5.0).contains(&r) {
            return Err(Error::parse(shown(path), line, format!("rating {r} for {word:?} outside [1, 5]")));
        }
        ratings.push((word.to_string(), r));
    }
    ConcretenessTable::new(ratings)
}

/// Reads one synonym set per line, words separated by whitespace.
/// Returns the sets and the number of lines dropped for having fewer than two distinct words.
pub fn parse_synonyms(path: impl AsRef<Path>) -> Result<(SynonymSets, usize)> {
    let path = path.as_ref();
    let mut sets = Vec::new();
    for item in lines(path)? {
        let (_, line) = item?;
        sets.push(line.split_whitespace().map(str::to_string).collect::<Vec<_>>());
    }
    if sets.iter().all(|s| s.is_empty()) {
        return Err(Error::parse(shown(path), 0, "no synonym sets"));
    }
    let blank = sets.iter().filter(|s| s.is_empty()).count();
    let (s, dropped) = SynonymSets::new(sets);
    Ok((s, dropped - blank))
}

/// Reads one word per line (the first whitespace-separated token), skipping blanks and `#` comments.
pub fn read_word_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for item in lines(path.as_ref())? {
        let (_, line) = item?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(t.split_whitespace().next().unwrap().to_lowercase());
    }
    Ok(out)
}
