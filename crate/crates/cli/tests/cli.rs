use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anipop_core::corpus::{Anime, Character, Corpus};
use anipop_core::features::write_embeddings;
use anipop_core::splitter::load_manifest;
use anipop_core::synthetic::{synthetic_corpus, synthetic_embeddings};
use tempfile::TempDir;

fn anipop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anipop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Corpus, split manifest and embeddings for a small synthetic dataset.
struct Dataset {
    dir: TempDir,
    corpus: PathBuf,
    split: PathBuf,
    embeddings: PathBuf,
}

fn dataset(animes: usize) -> Dataset {
    let dir = TempDir::new().unwrap();
    let corpus_path = dir.path().join("corpus.jsonl");
    let corpus = synthetic_corpus(animes, 11);
    corpus.write(&corpus_path).unwrap();
    let embeddings = dir.path().join("emb.aem");
    write_embeddings(&synthetic_embeddings(&corpus, 12), &embeddings).unwrap();
    let out = anipop(&[
        "split",
        "--corpus",
        p(&corpus_path),
        "--out-dir",
        p(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let split = dir.path().join("split.jsonl");
    Dataset {
        dir,
        corpus: corpus_path,
        split,
        embeddings,
    }
}

fn anime(id: u64, words: usize, chars: Vec<u64>) -> Anime {
    Anime {
        id,
        title: format!("t{id}"),
        synopsis: vec!["word"; words].join(" "),
        character_ids: chars,
        votes: None,
        golden_score: Some(7.0),
    }
}

fn character(id: u64) -> Character {
    Character {
        id,
        name: format!("c{id}"),
        description: "a brave hero".into(),
        portrait_ref: Some(format!("p{id}")),
    }
}

#[test]
fn ingest_reports_and_writes_clean_corpus() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("raw.jsonl");
    let corpus = Corpus::new(
        vec![
            anime(1, 24, vec![1]),
            anime(2, 40, vec![2]),
            anime(3, 5, vec![3]),
        ],
        vec![character(1), character(2), character(3)],
    )
    .unwrap();
    corpus.write(&raw).unwrap();

    let out = anipop(&["ingest", "--corpus", p(&raw), "--out-dir", p(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("anime 3: synopsis too short (5 words)"));
    assert!(stdout(&out).contains("kept 2 of 3 animes"));
    let cleaned = anipop_core::parse_corpus(&dir.path().join("corpus.clean.jsonl")).unwrap();
    assert_eq!(cleaned.len(), 2);
    let manifest = fs::read_to_string(dir.path().join("ingest.manifest.txt")).unwrap();
    assert!(manifest.contains("min_synopsis_words=20\n"));

    let out = anipop(&[
        "ingest",
        "--corpus",
        p(&raw),
        "--out-dir",
        p(dir.path()),
        "--min-synopsis-words",
        "30",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("anime 1: synopsis too short (24 words)"));
    assert!(stdout(&out).contains("kept 1 of 3 animes"));
}

#[test]
fn malformed_line_is_reported_with_its_number() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("raw.jsonl");
    let good = Corpus::new(vec![anime(1, 30, vec![1])], vec![character(1)]).unwrap();
    let mut text = Vec::new();
    good.write_to(&mut text).unwrap();
    let mut text = String::from_utf8(text).unwrap();
    text.push_str("{\"kind\": \"anime\", \"id\": \n");
    fs::write(&raw, text).unwrap();
    let out = anipop(&["ingest", "--corpus", p(&raw), "--out-dir", p(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("MalformedLine"), "{}", stderr(&out));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn stats_tables() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = anipop(&["stats", "--corpus", p(&empty)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("Total"));

    let d = dataset(40);
    let out = anipop(&["stats", "--corpus", p(&d.corpus)]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().count() >= 12);
}

#[test]
fn split_is_deterministic_and_exact_on_singletons() {
    let dir = TempDir::new().unwrap();
    let corpus_path = dir.path().join("singletons.jsonl");
    let animes = (0..1000).map(|i| anime(i, 30, vec![i + 1])).collect();
    let characters = (0..1000).map(|i| character(i + 1)).collect();
    Corpus::new(animes, characters)
        .unwrap()
        .write(&corpus_path)
        .unwrap();

    let run = |name: &str| {
        let out_path = dir.path().join(name);
        let out = anipop(&[
            "split",
            "--corpus",
            p(&corpus_path),
            "--fraction",
            "0.815",
            "--seed",
            "42",
            "--output",
            p(&out_path),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        out_path
    };
    let a = run("a.jsonl");
    let b = run("b.jsonl");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let manifest = load_manifest(&a).unwrap();
    assert_eq!(manifest.split.train.len(), 815);
    assert_eq!(manifest.split.test.len(), 185);
}

#[test]
fn train_and_evaluate_full_variant_deterministically() {
    let d = dataset(60);
    let train = |out: &Path| {
        let o = anipop(&[
            "train",
            "--variant",
            "full",
            "--corpus",
            p(&d.corpus),
            "--split",
            p(&d.split),
            "--embeddings",
            p(&d.embeddings),
            "--epochs",
            "2",
            "--out-dir",
            p(out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    let a = d.dir.path().join("run-a");
    let b = d.dir.path().join("run-b");
    train(&a);
    train(&b);
    for file in [
        "full.ckpt",
        "full.curve.csv",
        "full.manifest.txt",
        "full.eval.txt",
    ] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file} differs between identical runs"
        );
    }
    let curve = fs::read_to_string(a.join("full.curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
    let manifest = fs::read_to_string(a.join("full.manifest.txt")).unwrap();
    for key in [
        "seed=42",
        "epochs=2",
        "batch_size=16",
        "learning_rate=0.05",
        "scale_min=",
        "final_activation=sigmoid",
    ] {
        assert!(manifest.contains(key), "manifest lacks {key}");
    }

    let o = anipop(&[
        "evaluate",
        "--checkpoint",
        p(&a.join("full.ckpt")),
        "--corpus",
        p(&d.corpus),
        "--split",
        p(&d.split),
        "--embeddings",
        p(&d.embeddings),
        "--out-dir",
        p(&a),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    // re-evaluating the trained checkpoint reproduces the report written by train
    assert_eq!(
        stdout(&o),
        fs::read_to_string(a.join("full.eval.txt")).unwrap()
    );
    for key in ["mse=", "pearson", "spearman", "kendall_tau"] {
        assert!(stdout(&o).contains(key));
    }
}

#[test]
fn config_file_feeds_defaults_and_flags_override() {
    let d = dataset(30);
    let cfg = d.dir.path().join("run.cfg");
    fs::write(&cfg, "# short run\nepochs = 1\nlearning_rate = 0.001\n").unwrap();
    let out = d.dir.path().join("cfg");
    let o = anipop(&[
        "--config",
        p(&cfg),
        "train",
        "--variant",
        "portrait",
        "--corpus",
        p(&d.corpus),
        "--split",
        p(&d.split),
        "--embeddings",
        p(&d.embeddings),
        "--learning-rate",
        "0.002",
        "--out-dir",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = fs::read_to_string(out.join("portrait.manifest.txt")).unwrap();
    assert!(manifest.contains("epochs=1\n"));
    assert!(manifest.contains("learning_rate=0.002\n"));

    fs::write(&cfg, "epochz = 1\n").unwrap();
    let o = anipop(&["--config", p(&cfg), "stats", "--corpus", p(&d.corpus)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ConfigError"));
}

#[test]
fn traditional_variant_needs_no_embeddings() {
    let d = dataset(40);
    let out = d.dir.path().join("trad");
    let o = anipop(&[
        "train",
        "--variant",
        "traditional",
        "--corpus",
        p(&d.corpus),
        "--split",
        p(&d.split),
        "--epochs",
        "1",
        "--out-dir",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("traditional.ckpt").exists());
}

#[test]
fn usage_and_data_errors_map_to_exit_codes() {
    let d = dataset(20);
    // deep variant without embeddings
    let o = anipop(&[
        "train",
        "--variant",
        "synopsis",
        "--corpus",
        p(&d.corpus),
        "--split",
        p(&d.split),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = anipop(&["stats", "--corpus", "/nonexistent/corpus.jsonl"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("IoError"));

    assert_eq!(
        anipop(&["stats", "--corpus", p(&d.corpus), "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        anipop(&["train", "--variant", "huge"]).status.code(),
        Some(2)
    );
}

#[test]
fn validate_embeddings_reports_and_rejects_corruption() {
    let d = dataset(10);
    let o = anipop(&["validate-embeddings", p(&d.embeddings)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("records=30"), "{}", stdout(&o));

    let mut bytes = fs::read(&d.embeddings).unwrap();
    bytes[0] = b'X';
    let bad = d.dir.path().join("bad.aem");
    fs::write(&bad, bytes).unwrap();
    let o = anipop(&["validate-embeddings", p(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("BadMagic"));
}

#[test]
fn leaky_split_manifest_is_rejected() {
    let d = dataset(60);
    let text = fs::read_to_string(&d.split).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    // swap one member of a multi-anime cluster with an anime on the other side, which
    // keeps the header counts right but splits the franchise
    let cluster_of = |line: &str| line.split("\"cluster_id\":").nth(1).map(str::to_owned);
    let side_of = |line: &str| line.contains("\"train\"");
    let shared = (1..lines.len())
        .find(|&i| {
            (1..lines.len()).any(|j| j != i && cluster_of(&lines[j]) == cluster_of(&lines[i]))
        })
        .expect("synthetic corpus has a franchise");
    let other = (1..lines.len())
        .find(|&j| side_of(&lines[j]) != side_of(&lines[shared]))
        .unwrap();
    for i in [shared, other] {
        lines[i] = if side_of(&lines[i]) {
            lines[i].replace("\"train\"", "\"test\"")
        } else {
            lines[i].replace("\"test\"", "\"train\"")
        };
    }
    let leaky = d.dir.path().join("leaky.jsonl");
    fs::write(&leaky, lines.join("\n") + "\n").unwrap();
    let o = anipop(&[
        "train",
        "--variant",
        "traditional",
        "--corpus",
        p(&d.corpus),
        "--split",
        p(&leaky),
        "--out-dir",
        p(d.dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("LeakySplit"), "{}", stderr(&o));
}
