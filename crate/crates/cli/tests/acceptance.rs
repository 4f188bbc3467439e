//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use wordrep_core::cluster::{loo_score, ClusterOptions, ClusterScore, Subspace};
use wordrep_core::groups::{
    build_phonetic_groups, compare_with_asset, semantic_asset, validate_phonetic_groups, BuilderParams,
};
use wordrep_core::grounding::{grounding_correlation, LayerCka};
use wordrep_core::io::{parse_concreteness, parse_lexicon, read_groups};
use wordrep_core::metrics::{
    linear_cka, normalized_levenshtein, silhouette_mean, word_distance, NeighborRule,
};
use wordrep_core::pairs::{build_pair_pool, sample_profile, PoolOptions, ProfileOptions};
use wordrep_core::report::{GroundingRecord, Payload, Record};
use wordrep_core::synthetic::{
    gaussian_groups, gaussian_matrix, random_builder_fixture, random_orthogonal, table_and_groups, two_group_fixture,
    BuilderFixture, PairTableSpec,
};
use wordrep_core::{IntervalEstimate, PairClass, PhonemicLexicon};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cka_invariance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(10..200);
        let d = rng.random_range(2..64);
        let x = gaussian_matrix(&mut rng, n, d);
        let c = rng.random_range(0.1..10.0);
        let q = random_orthogonal(&mut rng, d);
        let b = DVector::from_fn(d, |_, _| rng.random_range(-5.0..5.0));
        let mut y = &x * &q * c;
        for mut row in y.row_iter_mut() {
            row += b.transpose();
        }
        let v = linear_cka(&x, &y).map_err(|e| e.to_string())?.value();
        worst = worst.max((v - 1.0).abs());
        let dz = rng.random_range(2..64);
        let z = gaussian_matrix(&mut rng, n, dz);
        let ab = linear_cka(&x, &z).map_err(|e| e.to_string())?.value();
        let ba = linear_cka(&z, &x).map_err(|e| e.to_string())?.value();
        worst_sym = worst_sym.max((ab - ba).abs());
    }
    let t = start.elapsed();
    check(
        worst <= 1e-6 && worst_sym <= 1e-12 && t < Duration::from_secs(10),
        format!("max |cka-1| {worst:.2e}, max asymmetry {worst_sym:.2e}, {:.2}s", t.as_secs_f64()),
    )
}

/// Straight from the definition: every distance recomputed from raw rows.
fn brute_silhouette(x: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let n = x.nrows();
    let dist = |i: usize, j: usize| {
        let (a, b) = (x.row(i), x.row(j));
        let mut dot = 0.0;
        let mut na = 0.0;
        let mut nb = 0.0;
        for k in 0..x.ncols() {
            dot += a[k] * b[k];
            na += a[k] * a[k];
            nb += b[k] * b[k];
        }
        1.0 - dot / (na.sqrt() * nb.sqrt())
    };
    let classes: BTreeSet<usize> = labels.iter().copied().collect();
    let mut total = 0.0;
    for i in 0..n {
        let mean_to = |c: usize| {
            let js: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == c).collect();
            js.iter().map(|&j| dist(i, j)).sum::<f64>() / js.len() as f64
        };
        let a = mean_to(labels[i]);
        let b = classes
            .iter()
            .filter(|&&c| c != labels[i])
            .map(|&c| mean_to(c))
            .fold(f64::INFINITY, f64::min);
        total += if a.max(b) > 0.0 { (b - a) / a.max(b) } else { 0.0 };
    }
    total / n as f64
}

fn silhouette_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g = rng.random_range(2..=10);
        let n = rng.random_range(2 * g..=200);
        let d = rng.random_range(1..=32);
        let mut labels: Vec<usize> = (0..n).map(|i| if i < 2 * g { i / 2 } else { rng.random_range(0..g) }).collect();
        labels.sort_unstable();
        let x = gaussian_matrix(&mut rng, n, d) + DMatrix::from_fn(n, d, |i, j| if j == labels[i] % d { 1.5 } else { 0.0 });
        let got = silhouette_mean(&x, &labels, NeighborRule::Nearest).map_err(|e| e.to_string())?.value();
        worst = worst.max((got - brute_silhouette(&x, &labels)).abs());
    }
    check(worst <= 1e-10, format!("50 instances, max deviation {worst:.2e}"))
}

/// Exhaustive recursion over insert, delete and substitute.
fn brute_edit(a: &[u8], b: &[u8]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = brute_edit(ra, rb) + usize::from(x != y);
            sub.min(brute_edit(ra, b) + 1).min(brute_edit(a, rb) + 1)
        }
    }
}

/// Memoised form of [`brute_edit`] for sequences too long for plain recursion.
fn dp_edit(a: &[u8], b: &[u8]) -> usize {
    let mut memo = vec![vec![usize::MAX; b.len() + 1]; a.len() + 1];
    fn go(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut [Vec<usize>]) -> usize {
        if memo[i][j] != usize::MAX {
            return memo[i][j];
        }
        let v = if i == a.len() {
            b.len() - j
        } else if j == b.len() {
            a.len() - i
        } else {
            (go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]))
                .min(go(a, b, i + 1, j, memo) + 1)
                .min(go(a, b, i, j + 1, memo) + 1)
        };
        memo[i][j] = v;
        v
    }
    go(a, b, 0, 0, &mut memo)
}

fn levenshtein_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let alphabet = rng.random_range(2..6u8);
        let seq = |rng: &mut ChaCha8Rng| -> Vec<u8> {
            let len = rng.random_range(1..=12);
            (0..len).map(|_| rng.random_range(0..alphabet)).collect()
        };
        let (a, b) = (seq(&mut rng), seq(&mut rng));
        let expect = if a.len() + b.len() <= 14 {
            brute_edit(&a, &b)
        } else {
            dp_edit(&a, &b)
        };
        let got = normalized_levenshtein(&a, &b).map_err(|e| e.to_string())?;
        if got != expect as f64 / a.len().max(b.len()) as f64 {
            mismatches += 1;
        }
    }
    let mut lex = PhonemicLexicon::new();
    lex.insert("handshake", &["HH", "AE1", "N", "D", "SH", "EY2", "K"]).unwrap();
    lex.insert("handbrake", &["HH", "AE1", "N", "D", "B", "R", "EY2", "K"]).unwrap();
    let hh = word_distance("handshake", "handbrake", &lex).map_err(|e| e.to_string())?;
    check(
        mismatches == 0 && hh == 0.25,
        format!("{mismatches} of 1000 fuzzed pairs differ, handshake/handbrake {hh}"),
    )
}

fn lda_separability() -> Outcome {
    let start = Instant::now();
    let opts = ClusterOptions::default();
    let mut wins = 0;
    let mut lda_sum = 0.0;
    let mut rows = Vec::new();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let (x, labels) = gaussian_groups(&mut rng, 9, 13, 768, 5.0);
        let (table, groups) = table_and_groups("synthetic", 0, &x, &labels);
        let lda = loo_score(&table, &groups, Subspace::Lda, &opts).map_err(|e| e.to_string())?.score.mean;
        let pca = loo_score(&table, &groups, Subspace::Pca, &opts).map_err(|e| e.to_string())?.score.mean;
        wins += usize::from(lda >= pca);
        lda_sum += lda;
        rows.push(format!("{lda:.3}/{pca:.3}"));
    }
    let mean = lda_sum / 10.0;
    let t = start.elapsed();
    check(
        wins >= 9 && mean >= 0.8 && t < Duration::from_secs(60),
        format!(
            "LDA >= PCA in {wins}/10, mean LDA {mean:.3}, {:.1}s (lda/pca: {})",
            t.as_secs_f64(),
            rows.join(" ")
        ),
    )
}

fn pair_profile() -> Outcome {
    let spec = PairTableSpec {
        noise: 0.1,
        ..Default::default()
    };
    let (table, lexicon, synonyms) = spec.build(4);
    let pool = build_pair_pool(&table, &lexicon, &synonyms, &PoolOptions::default()).map_err(|e| e.to_string())?;
    let opts = ProfileOptions {
        n_per_class: 1000,
        repeats: 5,
        seed: 4,
    };
    let p = sample_profile(&table, &pool.pairs, &opts).map_err(|e| e.to_string())?;
    let get = |c: PairClass| p.per_class.get(&c).copied().ok_or(format!("{} missing", c.as_str()));
    let (same, near, syn) = (get(PairClass::SameWord)?, get(PairClass::NearHomophone)?, get(PairClass::Synonym)?);
    let fmt = |e: IntervalEstimate| format!("{:.3} [{:.3}, {:.3}]", e.mean, e.lo, e.hi);
    // Synonym counts as zero when its interval lies inside ±0.05.
    let syn_zero = syn.lo > -0.05 && syn.hi < 0.05;
    check(
        same.lo > near.hi && near.lo > syn.hi && syn_zero && p.with_replacement.is_empty(),
        format!("same-word {}, near-homophone {}, synonym {}", fmt(same), fmt(near), fmt(syn)),
    )
}

fn dist(f: &BuilderFixture, a: &str, b: &str) -> f64 {
    let mut best = f64::INFINITY;
    for x in f.lexicon.pronunciations(a).unwrap() {
        for y in f.lexicon.pronunciations(b).unwrap() {
            let (x, y) = (f.lexicon.spell(x), f.lexicon.spell(y));
            let mut table: Vec<&str> = x.iter().chain(&y).copied().collect();
            table.sort_unstable();
            table.dedup();
            let enc = |s: &[&str]| s.iter().map(|p| table.binary_search(p).unwrap() as u8).collect::<Vec<u8>>();
            best = best.min(dp_edit(&enc(&x), &enc(&y)) as f64 / x.len().max(y.len()) as f64);
        }
    }
    best
}

fn cos(f: &BuilderFixture, a: &str, b: &str) -> f64 {
    let (x, y) = (f.semantic.get(a).unwrap(), f.semantic.get(b).unwrap());
    let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
    let n = |v: &[f64]| v.iter().map(|p| p * p).sum::<f64>().sqrt();
    dot / (n(x) * n(y))
}

/// Every subset of one concreteness band that satisfies the group constraints.
fn exhaustive_groups(f: &BuilderFixture, p: &BuilderParams) -> BTreeSet<BTreeSet<String>> {
    let mut rated: Vec<(f64, String)> = f.vocab.iter().map(|w| (f.concreteness.get(w).unwrap(), w.clone())).collect();
    rated.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = rated.len();
    let lo = rated[(p.conc_bottom_pct * n as f64).ceil() as usize - 1].0;
    let hi = rated[n - (p.conc_top_pct * n as f64).ceil() as usize].0;
    let bands: [Vec<String>; 2] = [
        rated.iter().filter(|r| r.0 >= hi).map(|r| r.1.clone()).collect(),
        rated.iter().filter(|r| r.0 <= lo).map(|r| r.1.clone()).collect(),
    ];
    let mut out = BTreeSet::new();
    for band in bands {
        for mask in 1u32..(1 << band.len()) {
            let set: Vec<&String> = (0..band.len()).filter(|i| mask >> i & 1 == 1).map(|i| &band[i]).collect();
            if set.len() < p.min_group_size {
                continue;
            }
            let sem_ok = set.iter().enumerate().all(|(i, a)| set[i + 1..].iter().all(|b| cos(f, a, b) < p.sem_cos_max));
            let has_seed = set.iter().any(|s| set.iter().all(|w| w == s || dist(f, s, w) <= p.phon_within_max));
            if sem_ok && has_seed {
                out.insert(set.into_iter().cloned().collect());
            }
        }
    }
    out
}

fn builder_closure() -> Outcome {
    let mut invalid = Vec::new();
    let mut formed = 0;
    for seed in 0..25 {
        let f = random_builder_fixture(seed, 150);
        let params = BuilderParams {
            seed,
            min_group_size: 3,
            ..Default::default()
        };
        let Ok(out) = build_phonetic_groups(&f.lexicon, &f.concreteness, &f.semantic, &f.vocab, &params) else {
            continue;
        };
        formed += out.groups.len();
        let v = validate_phonetic_groups(&out.groups, &f.lexicon, &f.concreteness, &f.semantic, &f.vocab, &params)
            .map_err(|e| e.to_string())?;
        if !v.is_empty() {
            invalid.push(seed);
        }
    }
    let f = two_group_fixture();
    let oracle = exhaustive_groups(&f, &BuilderParams::default());
    let mut oracle_misses = Vec::new();
    for seed in 0..10 {
        let params = BuilderParams {
            seed,
            ..Default::default()
        };
        let found: BTreeSet<BTreeSet<String>> =
            match build_phonetic_groups(&f.lexicon, &f.concreteness, &f.semantic, &f.vocab, &params) {
                Ok(out) => out.groups.groups().iter().map(|g| g.words.iter().cloned().collect()).collect(),
                Err(_) => BTreeSet::new(),
            };
        if found != oracle {
            oracle_misses.push(seed);
        }
    }
    check(
        invalid.is_empty() && formed > 0 && oracle_misses.is_empty() && oracle.len() == 2,
        format!(
            "{formed} groups over 25 lexicons, invalid lexicons {invalid:?}; engineered lexicon: {} oracle groups, seeds differing {oracle_misses:?}",
            oracle.len()
        ),
    )
}

/// Needs the full member lists and the published ratings, which are not
/// bundled. Point `WORDREP_SEMANTIC_DIR` at a directory holding
/// `semantic_groups.json` (a group file named like the categories),
/// `cmudict.dict` and `concreteness.tsv`.
fn semantic_table() -> Outcome {
    let asset = semantic_asset();
    let Some(dir) = std::env::var_os("WORDREP_SEMANTIC_DIR").map(PathBuf::from) else {
        return Err(format!(
            "bundled asset is incomplete (complete={}); set WORDREP_SEMANTIC_DIR to the member lists, pronunciations and ratings",
            asset.complete
        ));
    };
    let groups = read_groups(dir.join("semantic_groups.json")).map_err(|e| e.to_string())?;
    let lexicon = parse_lexicon(dir.join("cmudict.dict")).map_err(|e| e.to_string())?;
    let ratings = parse_concreteness(dir.join("concreteness.tsv")).map_err(|e| e.to_string())?;
    let cmp = compare_with_asset(&asset, &groups, &lexicon, &ratings).map_err(|e| e.to_string())?;
    let bad: Vec<String> = cmp
        .iter()
        .filter(|c| c.phon_dist_error() > 0.02 || c.concreteness_error() > 0.05)
        .map(|c| format!("{} (phon {:.3}, conc {:.3})", c.name, c.computed.avg_phon_dist, c.computed.avg_concreteness))
        .collect();
    check(bad.is_empty(), format!("{} categories, outside tolerance: {bad:?}", cmp.len()))
}

fn score(layer: u32, v: f64) -> ClusterScore {
    ClusterScore {
        model_id: "m".into(),
        layer,
        subspace: Subspace::Lda,
        k: Some(8),
        score: IntervalEstimate::point(v),
        concreteness_split: None,
        iterations: None,
        points: None,
    }
}

fn grounding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut last = None;
    for sign in [1.0, -1.0] {
        let layers = 13u32;
        let cka: Vec<f64> = (0..layers).map(|_| rng.random_range(0.2..0.9)).collect();
        let (a, b) = (sign * rng.random_range(0.5..3.0), rng.random_range(-1.0..1.0));
        let ungrounded: Vec<ClusterScore> = (0..layers).map(|l| score(l, rng.random_range(0.0..0.5))).collect();
        let grounded: Vec<ClusterScore> =
            (0..layers).map(|l| score(l, ungrounded[l as usize].score.mean + a * cka[l as usize] + b)).collect();
        // Reversed input order must not matter.
        let ckas: Vec<LayerCka> = (0..layers).rev().map(|l| LayerCka { layer: l, cka: cka[l as usize] }).collect();
        let c = grounding_correlation(&ungrounded, &grounded, &ckas).map_err(|e| e.to_string())?;
        worst = worst.max((c.correlation.r - sign).abs());
        last = Some(c);
    }
    let record = Record::new(Payload::Grounding(GroundingRecord::new("u", "g", &last.unwrap())), 0, "");
    let json = serde_json::to_string(&record).map_err(|e| e.to_string())?;
    let documented = json.contains("\"speech_r\":0.718") && json.contains("\"text_r\":-0.87") && json.contains("\"reproducible\":false");
    check(
        worst <= 1e-9 && documented,
        format!("max |r∓1| {worst:.2e}, reference values in report: {documented}"),
    )
}

fn determinism() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let differing = common::determinism_mismatches(dir.path())?;
    check(differing.is_empty(), format!("9 invocations run twice, differing: {differing:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("cka invariance", cka_invariance),
        ("silhouette oracle", silhouette_oracle),
        ("levenshtein oracle", levenshtein_oracle),
        ("lda separability", lda_separability),
        ("pair profile ordering", pair_profile),
        ("group builder closure", builder_closure),
        ("semantic groups table", semantic_table),
        ("grounding correlation", grounding),
        ("cli determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
