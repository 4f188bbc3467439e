//! JSON-lines analysis reports and their CSV rendering.
//!
//! Each line is a self-contained record tagged with `record_type`, the
//! toolkit version, the run seed and a digest of the run parameters.
//! Reports are append-only: concatenating two reports yields a report.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::cluster::ClusterScore;
use crate::error::{Error, Result};
use crate::grounding::{GroundingComparison, GroundingLayer};
use crate::metrics::{CkaKernel, CorrelationResult};
use crate::pairs::PairProfile;

pub const RECORD_TYPES: [&str; 4] = ["pair_profile", "cluster_score", "cka", "grounding"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkaRecord {
    pub model_a: String,
    pub layer_a: u32,
    pub model_b: String,
    pub layer_b: u32,
    #[serde(flatten)]
    pub kernel: CkaKernel,
    pub n: usize,
    pub cka: f64,
}

/// Published correlations for comparison. They come from model dumps that
/// are not distributed, so they cannot be recomputed here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedReference {
    pub speech_r: f64,
    pub text_r: f64,
    pub speech_mean_lda_cka: f64,
    pub text_mean_lda_cka: f64,
    pub reproducible: bool,
}

pub const PUBLISHED_GROUNDING: PublishedReference = PublishedReference {
    speech_r: 0.718,
    text_r: -0.870,
    speech_mean_lda_cka: 0.46,
    text_mean_lda_cka: 0.75,
    reproducible: false,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingRecord {
    pub ungrounded_model: String,
    pub grounded_model: String,
    pub per_layer: Vec<GroundingLayer>,
    pub correlation: CorrelationResult,
    pub reference: PublishedReference,
}

impl GroundingRecord {
    pub fn new(ungrounded_model: &str, grounded_model: &str, c: &GroundingComparison) -> Self {
        GroundingRecord {
            ungrounded_model: ungrounded_model.into(),
            grounded_model: grounded_model.into(),
            per_layer: c.per_layer.clone(),
            correlation: c.correlation,
            reference: PUBLISHED_GROUNDING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record_type", rename_all = "snake_case")]
pub enum Payload {
    PairProfile(PairProfile),
    ClusterScore(ClusterScore),
    Cka(CkaRecord),
    Grounding(GroundingRecord),
}

impl Payload {
    pub fn record_type(&self) -> &'static str {
        match self {
            Payload::PairProfile(_) => "pair_profile",
            Payload::ClusterScore(_) => "cluster_score",
            Payload::Cka(_) => "cka",
            Payload::Grounding(_) => "grounding",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    #[serde(flatten)]
    pub payload: Payload,
    pub toolkit_version: String,
    pub seed: u64,
    pub params_digest: String,
}

impl Record {
    pub fn new(payload: Payload, seed: u64, params_digest: &str) -> Self {
        Record {
            payload,
            toolkit_version: crate::TOOLKIT_VERSION.into(),
            seed,
            params_digest: params_digest.into(),
        }
    }
}

/// SHA-256 hex digest of the canonical (key-sorted, compact) JSON form of `params`.
pub fn params_digest<T: Serialize>(params: &T) -> Result<String> {
    let canonical = serde_json::to_vec(&serde_json::to_value(params)?)?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

pub fn write_jsonl(w: &mut dyn Write, records: &[Record]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_jsonl(records: &[Record]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Parses a JSON-lines report. Blank lines are ignored.
pub fn parse_report(text: &str) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse("report", i + 1, msg);
        let v: Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let t = v
            .get("record_type")
            .and_then(Value::as_str)
            .ok_or_else(|| err("missing record_type".into()))?;
        if !RECORD_TYPES.contains(&t) {
            return Err(Error::UnknownRecordType(t.to_string()));
        }
        out.push(serde_json::from_value(v).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

const CSV_HEADER: [&str; 12] = [
    "record_type",
    "model_id",
    "layer",
    "key",
    "value",
    "lo",
    "hi",
    "n",
    "p_value",
    "toolkit_version",
    "seed",
    "params_digest",
];

/// Long-format CSV: one row per reported scalar.
pub fn write_csv(w: &mut dyn Write, records: &[Record]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    csv.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        for row in csv_rows(&r.payload) {
            let mut fields = vec![r.payload.record_type().to_string()];
            fields.extend(row);
            fields.extend([r.toolkit_version.clone(), r.seed.to_string(), r.params_digest.clone()]);
            csv.write_record(&fields).map_err(io)?;
        }
    }
    csv.flush().map_err(|e| Error::InvalidInput(format!("csv: {e}")))
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn csv_rows(p: &Payload) -> Vec<Vec<String>> {
    let row = |model: &str, layer: u32, key: String, v: f64, lo: f64, hi: f64, n: usize, pv: Option<f64>| {
        vec![
            model.to_string(),
            layer.to_string(),
            key,
            num(v),
            num(lo),
            num(hi),
            n.to_string(),
            pv.map(num).unwrap_or_default(),
        ]
    };
    match p {
        Payload::PairProfile(pp) => {
            let mut rows: Vec<Vec<String>> = pp
                .per_class
                .iter()
                .map(|(c, e)| row(&pp.model_id, pp.layer, c.as_str().into(), e.mean, e.lo, e.hi, e.n_samples, None))
                .collect();
            let b = &pp.random_baseline;
            rows.push(row(&pp.model_id, pp.layer, "random_baseline".into(), b.mean, b.lo, b.hi, b.n_samples, None));
            rows
        }
        Payload::ClusterScore(s) => {
            let key = match s.k {
                Some(k) => format!("{}{k}", s.subspace.as_str()),
                None => s.subspace.as_str().to_string(),
            };
            let e = &s.score;
            let mut rows = vec![row(&s.model_id, s.layer, key.clone(), e.mean, e.lo, e.hi, e.n_samples, None)];
            if let Some(split) = s.concreteness_split {
                for (label, v) in [("abstract", split.abstract_), ("concrete", split.concrete)] {
                    rows.push(row(&s.model_id, s.layer, format!("{key}_{label}"), v, v, v, 1, None));
                }
            }
            rows
        }
        Payload::Cka(c) => vec![row(
            &format!("{}|{}", c.model_a, c.model_b),
            c.layer_a,
            format!("cka_layer{}", c.layer_b),
            c.cka,
            c.cka,
            c.cka,
            c.n,
            None,
        )],
        Payload::Grounding(g) => {
            let model = format!("{}|{}", g.ungrounded_model, g.grounded_model);
            let mut rows = Vec::new();
            for l in &g.per_layer {
                rows.push(row(&model, l.layer, "lda_cka".into(), l.lda_cka, l.lda_cka, l.lda_cka, 1, None));
                let d = l.delta_silhouette;
                rows.push(row(&model, l.layer, "delta_silhouette".into(), d, d, d, 1, None));
            }
            let c = &g.correlation;
            let mut corr = row(&model, 0, "pearson_r".into(), c.r, c.r, c.r, c.n, Some(c.p_value));
            corr[1] = String::new();
            rows.push(corr);
            rows
        }
    }
}
