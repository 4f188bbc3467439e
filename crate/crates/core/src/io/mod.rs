//! File formats: embedding dumps, lexical resources and group sets.

mod embt;
mod resources;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::model::WordGroupSet;

pub use embt::{read_embt, read_embt_from, write_embt, write_embt_to, EMBT_FORMAT};
pub use resources::{
    parse_concreteness, parse_concreteness_with, parse_lexicon, parse_static_embeddings, parse_synonyms,
    read_word_list, ConcretenessColumns,
};

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Opens `path` for line reading, transparently gunzipping `*.gz`.
pub(crate) fn open_lines(path: &Path) -> Result<Box<dyn BufRead>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let r: Box<dyn Read> = if is_gz(path) { Box::new(GzDecoder::new(f)) } else { Box::new(f) };
    Ok(Box::new(BufReader::new(r)))
}

pub(crate) fn create(path: &Path) -> Result<Box<dyn Write>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(if is_gz(path) {
        Box::new(BufWriter::new(GzEncoder::new(f, Compression::default())))
    } else {
        Box::new(BufWriter::new(f))
    })
}

/// Iterates over `(line_number, line)` with LF endings enforced.
pub(crate) fn lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>>> {
    let shown = path.display().to_string();
    let reader = open_lines(path)?;
    let p = path.to_path_buf();
    Ok(reader.lines().enumerate().map(move |(i, l)| {
        let line = l.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::parse(&shown, i + 1, "not valid UTF-8"),
            _ => Error::io(&p, e),
        })?;
        if line.ends_with('\r') {
            return Err(Error::parse(&shown, i + 1, "CR line ending"));
        }
        Ok((i + 1, line))
    }))
}

pub fn read_groups(path: impl AsRef<Path>) -> Result<WordGroupSet> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))
}

pub fn write_groups(path: impl AsRef<Path>, groups: &WordGroupSet) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, groups)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}
