//! `.embt` dumps: a JSON header line followed by one tab-separated line per token.
//!
//! ```text
//! {"format":"embt/1","model_id":"m","layer":3,"dim":2,"count":1}
//! tok1<TAB>cat<TAB>spk7<TAB>0.25 -1.5
//! ```
//!
//! A missing speaker is written as `-`. Floats use the shortest decimal that
//! parses back to the same value.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create, open_lines};
use crate::error::{Error, Result};
use crate::model::{EmbeddingTable, TokenRow};

pub const EMBT_FORMAT: &str = "embt/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    model_id: String,
    layer: u32,
    dim: usize,
    count: usize,
}

pub fn read_embt(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    read_embt_from(open_lines(path)?, &path.display().to_string())
}

/// Parses a dump from any reader; `name` labels error messages.
pub fn read_embt_from(reader: impl BufRead, name: &str) -> Result<EmbeddingTable> {
    let err = |line: usize, msg: String| Error::parse(name, line, msg);
    let mut lines = reader.split(b'\n').enumerate();
    let next = |lines: &mut dyn Iterator<Item = (usize, std::io::Result<Vec<u8>>)>| -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((i, bytes)) => {
                let bytes = bytes.map_err(|e| err(i + 1, e.to_string()))?;
                let s = String::from_utf8(bytes).map_err(|_| err(i + 1, "not valid UTF-8".into()))?;
                if s.ends_with('\r') {
                    return Err(err(i + 1, "CR line ending".into()));
                }
                Ok(Some((i + 1, s)))
            }
        }
    };
    let (_, head) = next(&mut lines)?.ok_or_else(|| err(1, "empty file".into()))?;
    let h: Header = serde_json::from_str(&head).map_err(|e| err(1, format!("bad header: {e}")))?;
    if h.format != EMBT_FORMAT {
        return Err(err(1, format!("unsupported format {:?}", h.format)));
    }
    if h.dim == 0 {
        return Err(err(1, "dim must be positive".into()));
    }
    let mut rows = Vec::with_capacity(h.count);
    while let Some((n, line)) = next(&mut lines)? {
        if rows.len() == h.count {
            if line.is_empty() {
                if let Some((n, _)) = next(&mut lines)? {
                    return Err(err(n, "data after the last record".into()));
                }
                break;
            }
            return Err(err(n, format!("more than {} records", h.count)));
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(n, format!("expected 4 tab-separated fields, found {}", fields.len())));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(err(n, "empty token_id or word".into()));
        }
        let vector = fields[3]
            .split(' ')
            .map(|t| match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(err(n, format!("bad float {t:?}"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        if vector.len() != h.dim {
            return Err(err(n, format!("expected {} floats, found {}", h.dim, vector.len())));
        }
        let speaker = (fields[2] != "-").then(|| fields[2].to_string());
        rows.push(TokenRow::new(fields[0], fields[1], speaker, vector));
    }
    if rows.len() != h.count {
        return Err(err(rows.len() + 2, format!("header promises {} records, found {}", h.count, rows.len())));
    }
    EmbeddingTable::new(h.model_id, h.layer, h.dim, rows)
}

pub fn write_embt(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_embt_to(&mut w, table).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_embt_to(w: &mut dyn Write, table: &EmbeddingTable) -> std::io::Result<()> {
    let h = Header {
        format: EMBT_FORMAT.into(),
        model_id: table.model_id().into(),
        layer: table.layer(),
        dim: table.dim(),
        count: table.len(),
    };
    writeln!(w, "{}", serde_json::to_string(&h)?)?;
    for r in table.rows() {
        let fields = [r.token_id.as_str(), r.word.as_str(), r.speaker_id.as_deref().unwrap_or("")];
        if fields.iter().any(|f| f.contains(['\t', '\n', '\r'])) || r.speaker_id.as_deref() == Some("-") {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("token {:?} has a field that cannot be written", r.token_id),
            ));
        }
        write!(w, "{}\t{}\t{}\t", r.token_id, r.word, r.speaker_id.as_deref().unwrap_or("-"))?;
        for (i, v) in r.vector.iter().enumerate() {
            if i > 0 {
                w.write_all(b" ")?;
            }
            write!(w, "{v:?}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}
