use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use wordrep_core::cluster::{concreteness_split, layer_sweep, lda_scatter, score_subspaces, ClusterOptions, ClusterScore, Subspace};
use wordrep_core::groups::{
    build_phonetic_groups, percentile_threshold, validate_phonetic_groups, validate_semantic_groups, BuilderParams,
};
use wordrep_core::grounding::compare_grounding;
use wordrep_core::io::{
    parse_concreteness, parse_lexicon, parse_static_embeddings, parse_synonyms, read_embt, read_groups,
    read_word_list,
};
use wordrep_core::metrics::{cka, CkaKernel, NeighborRule};
use wordrep_core::model::{match_words, MatchMode};
use wordrep_core::pairs::{build_pair_pool, profile_across_layers, PoolOptions, ProfileOptions};
use wordrep_core::plot::{emit_plot, FigureKind};
use wordrep_core::report::{params_digest, parse_report, to_jsonl, write_csv, CkaRecord, GroundingRecord, Payload, Record};
use wordrep_core::subspace::LdaOptions;
use wordrep_core::{EmbeddingTable, Error, GroupKind, SynonymSets};

use crate::args::*;

pub enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Cka(a) => cmd_cka(cli, a),
        Command::Pairs(a) => cmd_pairs(cli, a),
        Command::Cluster(a) => cmd_cluster(cli, a),
        Command::BuildGroups(a) => cmd_build(cli, a),
        Command::ValidateGroups(a) => cmd_validate(cli, a),
        Command::CalibrateThreshold(a) => cmd_calibrate(cli, a),
        Command::CompareGrounding(a) => cmd_grounding(cli, a),
        Command::Plot(a) => cmd_plot(cli, a),
    }
}

fn write_out(cli: &Cli, bytes: &[u8]) -> Outcome {
    match &cli.out {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::Io { path: p.clone(), source: e })?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Error::Io { path: PathBuf::from("<stdout>"), source: e })?;
        }
    }
    Ok(())
}

fn emit_records(cli: &Cli, records: &[Record]) -> Outcome {
    match cli.format {
        Format::Jsonl => write_out(cli, to_jsonl(records).as_bytes()),
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, records)?;
            write_out(cli, &buf)
        }
    }
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    write_out(cli, text.as_bytes())
}

/// Reads several dumps on separate threads, keeping argument order.
fn read_dumps(paths: &[PathBuf]) -> Outcome<Vec<EmbeddingTable>> {
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = paths.iter().map(|p| s.spawn(move || read_embt(p))).collect();
        handles.into_iter().map(|h| h.join().expect("reader thread panicked")).collect()
    });
    Ok(results.into_iter().collect::<Result<Vec<_>, _>>()?)
}

fn digest<T: Serialize>(cli: &Cli, params: &T) -> Outcome<String> {
    Ok(params_digest(&json!({"seed": cli.seed, "params": params}))?)
}

fn cluster_options(o: &ClusterOpts) -> Outcome<ClusterOptions> {
    if o.k == 0 {
        return usage("--k must be at least 1");
    }
    if !(o.ridge >= 0.0 && o.ridge.is_finite()) {
        return usage("--ridge must be a non-negative number");
    }
    Ok(ClusterOptions {
        k: o.k,
        neighbor: match o.neighbor {
            Neighbor::Nearest => NeighborRule::Nearest,
            Neighbor::AllOthers => NeighborRule::AllOthers,
        },
        lda: LdaOptions { ridge_scale: o.ridge },
    })
}

fn cmd_cka(cli: &Cli, a: &CkaArgs) -> Outcome {
    let tables = read_dumps(&[a.a.clone(), a.b.clone()])?;
    let (ta, tb) = (&tables[0], &tables[1]);
    let mode = match a.match_mode {
        Match::Auto => MatchMode::Auto,
        Match::TokenId => MatchMode::TokenId,
        Match::Word => MatchMode::Word,
    };
    let pairs = match_words(ta, tb, mode)?;
    let xa = ta.matrix_of(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let xb = tb.matrix_of(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let kernel = match a.kernel {
        Kernel::Linear => CkaKernel::Linear,
        Kernel::Rbf if a.sigma_scale > 0.0 => CkaKernel::Rbf { sigma_scale: a.sigma_scale },
        Kernel::Rbf => return usage("--sigma-scale must be positive"),
    };
    let value = cka(&xa, &xb, kernel)?.0;
    // twelve decimals hide last-ulp noise, so identical inputs print 1.0
    println!("{:?}", (value * 1e12).round() / 1e12);
    if cli.out.is_some() {
        let d = digest(cli, &json!({"kernel": kernel, "match": a.match_mode}))?;
        let rec = CkaRecord {
            model_a: ta.model_id().into(),
            layer_a: ta.layer(),
            model_b: tb.model_id().into(),
            layer_b: tb.layer(),
            kernel,
            n: pairs.len(),
            cka: value,
        };
        emit_records(cli, &[Record::new(Payload::Cka(rec), cli.seed, &d)])?;
    }
    Ok(())
}

fn cmd_pairs(cli: &Cli, a: &PairsArgs) -> Outcome {
    if !(a.threshold > 0.0 && a.threshold <= 1.0) {
        return usage("--threshold must lie in (0, 1]");
    }
    let mut tables = read_dumps(&a.dumps)?;
    if a.dedup {
        tables = tables.into_iter().map(EmbeddingTable::dedup_speaker_words).collect();
    }
    let lexicon = parse_lexicon(&a.lexicon)?;
    let synonyms = match &a.synonyms {
        Some(p) => {
            let (s, dropped) = parse_synonyms(p)?;
            if dropped > 0 {
                log::warn!("dropped {dropped} synonym lines with fewer than two words");
            }
            s
        }
        None => SynonymSets::default(),
    };
    let pool_opts = PoolOptions {
        homophone_threshold: a.threshold,
        pool_cap: a.pool_cap,
        seed: cli.seed,
        ..Default::default()
    };
    let profile_opts = ProfileOptions {
        n_per_class: a.n_per_class,
        repeats: a.repeats,
        seed: cli.seed,
    };
    let pool = build_pair_pool(&tables[0], &lexicon, &synonyms, &pool_opts)?;
    for w in &pool.warnings {
        log::warn!("{w}");
    }
    let profiles = profile_across_layers(&tables, &pool.pairs, &profile_opts)?;
    let d = digest(cli, &json!({"pool": pool_opts, "profile": profile_opts, "dedup": a.dedup}))?;
    let records: Vec<Record> = profiles
        .into_iter()
        .map(|p| Record::new(Payload::PairProfile(p), cli.seed, &d))
        .collect();
    emit_records(cli, &records)
}

fn cmd_cluster(cli: &Cli, a: &ClusterArgs) -> Outcome {
    let opts = cluster_options(&a.opts)?;
    let tables = read_dumps(&a.dumps)?;
    let groups = read_groups(&a.groups)?;
    let subspaces: Vec<Subspace> = match a.subspace {
        SubspaceArg::Full => vec![Subspace::Full],
        SubspaceArg::Pca => vec![Subspace::Pca],
        SubspaceArg::Lda => vec![Subspace::Lda],
        SubspaceArg::All => Subspace::ALL.to_vec(),
    };
    let mut scores: Vec<ClusterScore> = Vec::new();
    if a.loo {
        for &s in &subspaces {
            scores.extend(layer_sweep(&tables, &groups, s, &opts)?);
        }
    } else {
        for t in &tables {
            scores.extend(
                score_subspaces(t, &groups, &opts)?
                    .into_iter()
                    .filter(|c| subspaces.contains(&c.subspace)),
            );
        }
    }
    scores.sort_by(|x, y| x.layer.cmp(&y.layer).then(x.subspace.cmp(&y.subspace)));
    for s in &mut scores {
        let t = tables.iter().find(|t| t.layer() == s.layer).expect("score from a loaded table");
        if a.split {
            s.concreteness_split = Some(concreteness_split(t, &groups, s.subspace, &opts)?);
        }
        if a.scatter && s.subspace == Subspace::Lda {
            s.points = Some(lda_scatter(t, &groups, &opts)?);
        }
    }
    let d = digest(cli, &json!({"opts": a.opts, "subspace": a.subspace, "loo": a.loo, "split": a.split}))?;
    let records: Vec<Record> = scores
        .into_iter()
        .map(|s| Record::new(Payload::ClusterScore(s), cli.seed, &d))
        .collect();
    emit_records(cli, &records)
}

fn builder_params(cli: &Cli, o: &BuilderOpts) -> Outcome<BuilderParams> {
    let p = BuilderParams {
        phon_within_max: o.phon_within_max,
        phon_across_min: o.phon_across_min,
        sem_cos_max: o.sem_cos_max,
        conc_top_pct: o.conc_top_pct,
        conc_bottom_pct: o.conc_bottom_pct,
        min_group_size: o.min_group_size,
        target_groups: o.target_groups,
        seed: cli.seed,
        sem_within_top_pct: o.sem_within_top_pct,
        sem_phon_dist_min: o.sem_phon_dist_min,
        reference_pairs: o.reference_pairs,
    };
    match p.check() {
        Ok(()) => Ok(p),
        Err(e) => usage(e.to_string()),
    }
}

fn vocabulary(path: &Option<PathBuf>, fallback: impl FnOnce() -> Vec<String>) -> Outcome<Vec<String>> {
    Ok(match path {
        Some(p) => read_word_list(p)?,
        None => fallback(),
    })
}

fn load_vectors(path: &Path, keep: &HashSet<String>) -> Outcome<wordrep_core::StaticEmbeddingTable> {
    Ok(parse_static_embeddings(path, Some(keep))?)
}

fn cmd_build(cli: &Cli, a: &BuildArgs) -> Outcome {
    let params = builder_params(cli, &a.params)?;
    let Some(vectors) = &a.resources.vectors else {
        return usage("build-groups needs --vectors");
    };
    let lexicon = parse_lexicon(&a.resources.lexicon)?;
    let conc = parse_concreteness(&a.resources.concreteness)?;
    let vocab = vocabulary(&a.resources.vocab, || conc.iter().map(|(w, _)| w.to_string()).collect())?;
    let keep: HashSet<String> = vocab.iter().cloned().collect();
    let semantic = load_vectors(vectors, &keep)?;
    let out = build_phonetic_groups(&lexicon, &conc, &semantic, &vocab, &params)?;
    let d = &out.diagnostics;
    eprintln!(
        "built {} groups ({} words) from {} usable words; {} seeds tried, {} rejected",
        out.groups.len(),
        out.groups.total_words(),
        d.vocab_used,
        d.seeds_tried,
        d.seeds_rejected
    );
    emit_json(cli, &out.groups)
}

fn cmd_validate(cli: &Cli, a: &ValidateArgs) -> Outcome {
    let params = builder_params(cli, &a.params)?;
    let groups = read_groups(&a.groups)?;
    let lexicon = parse_lexicon(&a.resources.lexicon)?;
    let conc = parse_concreteness(&a.resources.concreteness)?;
    let Some(vectors) = &a.resources.vectors else {
        return usage("validate-groups needs --vectors");
    };
    let vocab = vocabulary(&a.resources.vocab, || conc.iter().map(|(w, _)| w.to_string()).collect())?;
    let mut keep: HashSet<String> = vocab.iter().cloned().collect();
    keep.extend(groups.groups().iter().flat_map(|g| g.words.iter().cloned()));
    let semantic = load_vectors(vectors, &keep)?;
    match groups.kind() {
        GroupKind::Semantic => {
            let report = validate_semantic_groups(&groups, &semantic, &lexicon, &conc, &vocab, &params)?;
            emit_json(cli, &report)
        }
        GroupKind::Phonetic => {
            let violations = validate_phonetic_groups(&groups, &lexicon, &conc, &semantic, &vocab, &params)?;
            emit_json(cli, &json!({"overall_ok": violations.is_empty(), "violations": violations}))
        }
    }
}

fn cmd_calibrate(cli: &Cli, a: &CalibrateArgs) -> Outcome {
    if !(a.top_fraction > 0.0 && a.top_fraction < 1.0) {
        return usage("--top-fraction must lie in (0, 1)");
    }
    let lexicon = parse_lexicon(&a.lexicon)?;
    let vocab = vocabulary(&a.vocab, || lexicon.words().map(str::to_string).collect())?;
    let t = percentile_threshold(&lexicon, &vocab, a.top_fraction, a.samples, cli.seed)?;
    emit_json(
        cli,
        &json!({
            "threshold": t,
            "top_fraction": a.top_fraction,
            "samples": a.samples,
            "vocab_words": vocab.len(),
            "seed": cli.seed,
        }),
    )
}

fn cmd_grounding(cli: &Cli, a: &GroundingArgs) -> Outcome {
    let opts = cluster_options(&a.opts)?;
    let un = read_dumps(&a.ungrounded)?;
    let gr = read_dumps(&a.grounded)?;
    let groups = read_groups(&a.groups)?;
    let run = compare_grounding(&un, &gr, &groups, &opts)?;
    let d = digest(cli, &json!({"opts": a.opts}))?;
    let (mu, mg) = (un[0].model_id(), gr[0].model_id());
    let mut records: Vec<Record> = run
        .ungrounded
        .iter()
        .chain(&run.grounded)
        .map(|s| Record::new(Payload::ClusterScore(s.clone()), cli.seed, &d))
        .collect();
    for c in &run.ckas {
        let n = groups.total_words();
        let rec = CkaRecord {
            model_a: mu.into(),
            layer_a: c.layer,
            model_b: mg.into(),
            layer_b: c.layer,
            kernel: CkaKernel::Linear,
            n,
            cka: c.cka,
        };
        records.push(Record::new(Payload::Cka(rec), cli.seed, &d));
    }
    records.push(Record::new(
        Payload::Grounding(GroundingRecord::new(mu, mg, &run.comparison)),
        cli.seed,
        &d,
    ));
    emit_records(cli, &records)
}

fn cmd_plot(cli: &Cli, a: &PlotArgs) -> Outcome {
    let text = fs::read_to_string(&a.report).map_err(|e| Error::Io { path: a.report.clone(), source: e })?;
    let records = parse_report(&text)?;
    let kind = match a.kind {
        Figure::Line => FigureKind::Line,
        Figure::Scatter => FigureKind::Scatter,
    };
    let svg = emit_plot(&records, kind)?;
    write_out(cli, svg.as_bytes())
}
