//! SVG figures from report records.
//!
//! Output is plain SVG with coordinates printed to two decimals, so the same
//! records always give byte-identical documents.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{Payload, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    /// Layerwise values, one polyline per series.
    Line,
    /// First two LDA coordinates of each word, coloured by group.
    Scatter,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = (hi - lo) * 0.05;
                (lo - pad, hi + pad)
            }
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str, xlabel: &str, ylabel: &str, f: &Frame) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(out, "<text x=\"{:.2}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>", (LEFT + W - RIGHT) / 2.0, esc(title));
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(out, "<g stroke=\"black\" stroke-width=\"1\"><line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\"/><line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\"/></g>");
    for i in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let y = f.py(v);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.2}</text>", l - 4.0, y + 4.0);
    }
    let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>", (l + r) / 2.0, H - 10.0, esc(xlabel));
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">{}</text>",
        (t + b) / 2.0,
        (t + b) / 2.0,
        esc(ylabel)
    );
}

fn legend(out: &mut String, names: &[String]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 14.0 * i as f64;
        let x = W - RIGHT + 12.0;
        let _ = writeln!(
            out,
            "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{:.2}\" y=\"{:.2}\">{}</text>",
            y,
            color(i),
            x + 14.0,
            y + 9.0,
            esc(name)
        );
    }
}

/// Layer-indexed series keyed by legend name.
type Series = BTreeMap<String, Vec<(f64, f64)>>;

fn line_series(records: &[Record]) -> (Series, &'static str) {
    let mut s: Series = BTreeMap::new();
    let mut ylabel = "value";
    for r in records {
        match &r.payload {
            Payload::ClusterScore(c) => {
                let name = match c.k {
                    Some(k) => format!("{} {}-{k}", c.model_id, c.subspace.as_str()),
                    None => format!("{} {}", c.model_id, c.subspace.as_str()),
                };
                s.entry(name).or_default().push((c.layer as f64, c.score.mean));
                ylabel = "silhouette";
            }
            Payload::PairProfile(p) => {
                for (class, e) in &p.per_class {
                    s.entry(format!("{} {}", p.model_id, class.as_str()))
                        .or_default()
                        .push((p.layer as f64, e.mean));
                }
                ylabel = "normalized cosine";
            }
            Payload::Cka(c) => {
                s.entry(format!("{} vs {}", c.model_a, c.model_b))
                    .or_default()
                    .push((c.layer_a as f64, c.cka));
            }
            Payload::Grounding(g) => {
                let base = format!("{}/{}", g.ungrounded_model, g.grounded_model);
                for l in &g.per_layer {
                    s.entry(format!("{base} lda cka")).or_default().push((l.layer as f64, l.lda_cka));
                    s.entry(format!("{base} delta silhouette"))
                        .or_default()
                        .push((l.layer as f64, l.delta_silhouette));
                }
            }
        }
    }
    for v in s.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
    (s, ylabel)
}

fn line_plot(records: &[Record]) -> Result<String> {
    let (series, ylabel) = line_series(records);
    if series.is_empty() {
        return Err(Error::NothingToPlot);
    }
    let pts = series.values().flatten();
    let f = Frame::new(pts.clone().map(|p| p.0), pts.map(|p| p.1));
    let mut out = String::new();
    open(&mut out, "Layerwise scores", "layer", ylabel, &f);
    let mut layers: Vec<f64> = series.values().flatten().map(|p| p.0).collect();
    layers.sort_by(f64::total_cmp);
    layers.dedup();
    if layers.len() <= 40 {
        for l in &layers {
            let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{l}</text>", f.px(*l), H - BOTTOM + 14.0);
        }
    }
    for (i, pts) in series.values().enumerate() {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
            color(i),
            coords.join(" ")
        );
    }
    legend(&mut out, &series.keys().cloned().collect::<Vec<_>>());
    out.push_str("</svg>\n");
    Ok(out)
}

fn scatter_plot(records: &[Record]) -> Result<String> {
    let Some(score) = records.iter().find_map(|r| match &r.payload {
        Payload::ClusterScore(c) if c.points.as_ref().is_some_and(|p| !p.is_empty()) => Some(c),
        _ => None,
    }) else {
        return Err(Error::NothingToPlot);
    };
    let points = score.points.as_ref().unwrap();
    let mut groups: Vec<String> = points.iter().map(|p| p.group.clone()).collect();
    groups.sort();
    groups.dedup();
    let f = Frame::new(points.iter().map(|p| p.x), points.iter().map(|p| p.y));
    let mut out = String::new();
    let title = format!("{} layer {}", score.model_id, score.layer);
    open(&mut out, &title, "LDA 1", "LDA 2", &f);
    for p in points {
        let gi = groups.binary_search(&p.group).unwrap();
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{}\"><title>{}</title></circle>",
            f.px(p.x),
            f.py(p.y),
            color(gi),
            esc(&p.word)
        );
    }
    legend(&mut out, &groups);
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_plot(records: &[Record], kind: FigureKind) -> Result<String> {
    match kind {
        FigureKind::Line => line_plot(records),
        FigureKind::Scatter => scatter_plot(records),
    }
}
