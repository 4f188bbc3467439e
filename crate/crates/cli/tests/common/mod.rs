#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wordrep_core::io::{write_embt, write_groups};
use wordrep_core::synthetic::{gaussian_groups, gaussian_matrix, table_and_groups, two_group_fixture, PairTableSpec};
use wordrep_core::PhonemicLexicon;

pub fn wordrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wordrep"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Input files for every subcommand.
pub struct Inputs {
    pub ungrounded: Vec<PathBuf>,
    pub grounded: Vec<PathBuf>,
    pub groups: PathBuf,
    pub pair_dumps: Vec<PathBuf>,
    pub pair_lexicon: PathBuf,
    pub synonyms: PathBuf,
    pub lexicon: PathBuf,
    pub concreteness: PathBuf,
    pub vectors: PathBuf,
    pub vocab: PathBuf,
}

fn write_lexicon(path: &Path, lex: &PhonemicLexicon) {
    let mut text = String::new();
    for w in lex.words() {
        for (i, p) in lex.pronunciations(w).unwrap().iter().enumerate() {
            let head = if i == 0 { w.to_uppercase() } else { format!("{}({i})", w.to_uppercase()) };
            text.push_str(&format!("{head}  {}\n", lex.spell(p).join(" ")));
        }
    }
    fs::write(path, text).unwrap();
}

pub fn write_inputs(dir: &Path) -> Inputs {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (x, labels) = gaussian_groups(&mut rng, 5, 10, 12, 2.5);
    let mut ungrounded = Vec::new();
    let mut grounded = Vec::new();
    let mut groups = None;
    for layer in 0..4u32 {
        for (model, list) in [("ungrounded", &mut ungrounded), ("grounded", &mut grounded)] {
            let noise = gaussian_matrix(&mut rng, 50, 12) * (0.4 + 0.3 * layer as f64);
            let (t, g) = table_and_groups(model, layer, &(&x + noise), &labels);
            let p = dir.join(format!("{model}_{layer}.embt"));
            write_embt(&p, &t).unwrap();
            list.push(p);
            groups.get_or_insert(g);
        }
    }
    let groups_path = dir.join("groups.json");
    write_groups(&groups_path, &groups.unwrap()).unwrap();

    let spec = PairTableSpec {
        clusters: 10,
        ..Default::default()
    };
    let (table, lex, syn) = spec.build(5);
    let mut pair_dumps = Vec::new();
    for layer in 0..2 {
        let p = dir.join(format!("pairs_{layer}.embt"));
        write_embt(&p, &table.with_layer(layer)).unwrap();
        pair_dumps.push(p);
    }
    let pair_lexicon = dir.join("pairs.dict");
    write_lexicon(&pair_lexicon, &lex);
    let synonyms = dir.join("synonyms.txt");
    let lines: Vec<String> = syn.sets().iter().map(|s| s.join(" ")).collect();
    fs::write(&synonyms, lines.join("\n") + "\n").unwrap();

    let f = two_group_fixture();
    let lexicon = dir.join("builder.dict");
    write_lexicon(&lexicon, &f.lexicon);
    let concreteness = dir.join("concreteness.tsv");
    let mut text = String::from("Word\tConc.M\n");
    for (w, r) in f.concreteness.iter() {
        text.push_str(&format!("{w}\t{r}\n"));
    }
    fs::write(&concreteness, text).unwrap();
    let vectors = dir.join("vectors.txt");
    let mut text = String::new();
    for w in f.semantic.words() {
        let v: Vec<String> = f.semantic.get(w).unwrap().iter().map(|x| format!("{x}")).collect();
        text.push_str(&format!("{w} {}\n", v.join(" ")));
    }
    fs::write(&vectors, text).unwrap();
    let vocab = dir.join("vocab.txt");
    fs::write(&vocab, f.vocab.join("\n") + "\n").unwrap();

    Inputs {
        ungrounded,
        grounded,
        groups: groups_path,
        pair_dumps,
        pair_lexicon,
        synonyms,
        lexicon,
        concreteness,
        vectors,
        vocab,
    }
}

/// Argument lists exercising every subcommand.
/// `built` must hold build-groups output and `report` a cluster report with scatter points.
pub fn all_invocations(i: &Inputs, built: &Path, report: &Path) -> Vec<(&'static str, Vec<String>)> {
    let p = |x: &PathBuf| x.display().to_string();
    let mut v = vec![
        ("cka", vec!["cka".into(), p(&i.ungrounded[0]), p(&i.grounded[0])]),
        (
            "pairs",
            [vec!["pairs".to_string()], i.pair_dumps.iter().map(p).collect()]
                .concat()
                .into_iter()
                .chain(["--lexicon".into(), p(&i.pair_lexicon), "--synonyms".into(), p(&i.synonyms)])
                .chain(["--n-per-class".into(), "200".into()])
                .collect(),
        ),
        (
            "cluster",
            [vec!["cluster".to_string()], i.ungrounded.iter().map(p).collect()]
                .concat()
                .into_iter()
                .chain(["--groups".into(), p(&i.groups), "--loo".into(), "--k".into(), "3".into()])
                .chain(["--split".into(), "--scatter".into()])
                .collect(),
        ),
        (
            "build-groups",
            vec![
                "build-groups".into(),
                "--lexicon".into(),
                p(&i.lexicon),
                "--concreteness".into(),
                p(&i.concreteness),
                "--vectors".into(),
                p(&i.vectors),
                "--vocab".into(),
                p(&i.vocab),
            ],
        ),
        (
            "validate-groups",
            vec![
                "validate-groups".into(),
                "--groups".into(),
                built.display().to_string(),
                "--lexicon".into(),
                p(&i.lexicon),
                "--concreteness".into(),
                p(&i.concreteness),
                "--vectors".into(),
                p(&i.vectors),
                "--vocab".into(),
                p(&i.vocab),
            ],
        ),
        (
            "calibrate-threshold",
            vec!["calibrate-threshold".into(), "--lexicon".into(), p(&i.lexicon), "--samples".into(), "50".into()],
        ),
        (
            "compare-grounding",
            [
                vec!["compare-grounding".to_string(), "--ungrounded".into()],
                i.ungrounded.iter().map(p).collect(),
                vec!["--grounded".into()],
                i.grounded.iter().map(p).collect(),
                vec!["--groups".into(), p(&i.groups), "--k".into(), "3".into()],
            ]
            .concat(),
        ),
    ];
    v.push(("plot", vec!["plot".into(), report.display().to_string()]));
    v.push(("plot-scatter", vec!["plot".into(), report.display().to_string(), "--kind".into(), "scatter".into()]));
    v
}

/// Runs every subcommand twice with the same seed and returns the names whose
/// report, figure or standard output differed, or the first failure.
pub fn determinism_mismatches(dir: &Path) -> Result<Vec<&'static str>, String> {
    let i = write_inputs(dir);
    let built = dir.join("built.json");
    let report = dir.join("report.jsonl");
    let invocations = all_invocations(&i, &built, &report);
    let mut outputs: Vec<Vec<Vec<u8>>> = vec![Vec::new(), Vec::new()];
    for (round, sink) in outputs.iter_mut().enumerate() {
        for (name, args) in &invocations {
            // Later invocations read these two files, so both rounds write them in place.
            let target = match *name {
                "build-groups" => built.clone(),
                "cluster" => report.clone(),
                _ => dir.join(format!("{name}.{round}.out")),
            };
            let mut full = vec!["--seed".to_string(), "7".into(), "--out".into(), target.display().to_string()];
            full.extend(args.iter().cloned());
            let out = wordrep(&full.iter().map(String::as_str).collect::<Vec<_>>());
            if out.status.code() != Some(0) {
                return Err(format!("{name}: {}", String::from_utf8_lossy(&out.stderr).trim()));
            }
            let mut bytes = fs::read(&target).map_err(|e| format!("{name}: {e}"))?;
            bytes.extend(out.stdout);
            sink.push(bytes);
        }
    }
    Ok(invocations
        .iter()
        .enumerate()
        .filter(|(k, _)| outputs[0][*k] != outputs[1][*k])
        .map(|(_, (name, _))| *name)
        .collect())
}
