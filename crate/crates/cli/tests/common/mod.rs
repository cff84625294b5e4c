#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_entailrank")
}

pub fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawn entailrank")
}

pub fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "entailrank {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Artifacts written by [`pipeline`], relative to its output directory.
pub const ARTIFACTS: &[&str] = &[
    "all.jsonl",
    "train.jsonl",
    "dev.jsonl",
    "stats.json",
    "index.jsonl",
    "bm25.run",
    "bm25_params.json",
    "bm25_pred.tsv",
    "bm25_sel.jsonl",
    "bm25_report.json",
    "neural.run",
    "neural_params.json",
    "neural_sel.jsonl",
    "neural_pred.tsv",
    "ensemble_sel.jsonl",
    "ensemble_pred.tsv",
    "ensemble_params.json",
    "ensemble_report.json",
    "requests.jsonl",
    "pairs.jsonl",
];

/// Runs every subcommand on the bundled synthetic fixture, writing into `out`.
pub fn pipeline(out: &Path, threads: Option<usize>) {
    let fx = fixture();
    let t = threads.map(|n| n.to_string());
    let go = |args: &[&str]| {
        let mut full: Vec<&str> = Vec::new();
        if let Some(n) = &t {
            full.extend(["--threads", n.as_str()]);
        }
        full.extend_from_slice(args);
        run_ok(&full)
    };
    let p = |name: &str| out.join(name);
    go(&[
        "ingest",
        "--root",
        s(&fx.join("coliee")),
        "--out",
        s(&p("all.jsonl")),
    ]);
    go(&[
        "split",
        "--dataset",
        s(&p("all.jsonl")),
        "--train-out",
        s(&p("train.jsonl")),
        "--dev-out",
        s(&p("dev.jsonl")),
    ]);
    go(&[
        "stats",
        "--dataset",
        s(&p("all.jsonl")),
        "--analyzed",
        "--out",
        s(&p("stats.json")),
    ]);
    go(&[
        "index",
        "--dataset",
        s(&p("all.jsonl")),
        "--aux-docs",
        s(&fx.join("aux_docs.jsonl")),
        "--out",
        s(&p("index.jsonl")),
    ]);
    go(&[
        "score-bm25",
        "--index",
        s(&p("index.jsonl")),
        "--dataset",
        s(&p("all.jsonl")),
        "--out",
        s(&p("bm25.run")),
    ]);
    go(&[
        "tune",
        "--run",
        s(&p("bm25.run")),
        "--gold",
        s(&p("dev.jsonl")),
        "--out",
        s(&p("bm25_params.json")),
    ]);
    go(&[
        "select",
        "--run",
        s(&p("bm25.run")),
        "--params",
        s(&p("bm25_params.json")),
        "--out",
        s(&p("bm25_pred.tsv")),
        "--selection-out",
        s(&p("bm25_sel.jsonl")),
    ]);
    go(&[
        "eval",
        "--pred",
        s(&p("bm25_pred.tsv")),
        "--gold",
        s(&p("all.jsonl")),
        "--out",
        s(&p("bm25_report.json")),
    ]);
    go(&[
        "ingest-scores",
        "--dataset",
        s(&p("all.jsonl")),
        "--logits",
        s(&fx.join("logits.tsv")),
        "--out",
        s(&p("neural.run")),
    ]);
    go(&[
        "tune",
        "--run",
        s(&p("neural.run")),
        "--gold",
        s(&p("dev.jsonl")),
        "--out",
        s(&p("neural_params.json")),
    ]);
    go(&[
        "select",
        "--run",
        s(&p("neural.run")),
        "--params",
        s(&p("neural_params.json")),
        "--out",
        s(&p("neural_pred.tsv")),
        "--selection-out",
        s(&p("neural_sel.jsonl")),
    ]);
    go(&[
        "ensemble",
        "--sel-a",
        s(&p("bm25_sel.jsonl")),
        "--sel-b",
        s(&p("neural_sel.jsonl")),
        "--gold",
        s(&p("dev.jsonl")),
        "--out",
        s(&p("ensemble_sel.jsonl")),
        "--pred-out",
        s(&p("ensemble_pred.tsv")),
        "--params-out",
        s(&p("ensemble_params.json")),
    ]);
    go(&[
        "eval",
        "--pred",
        s(&p("ensemble_pred.tsv")),
        "--gold",
        s(&p("all.jsonl")),
        "--out",
        s(&p("ensemble_report.json")),
    ]);
    go(&[
        "requests",
        "--dataset",
        s(&p("dev.jsonl")),
        "--out",
        s(&p("requests.jsonl")),
    ]);
    go(&[
        "augment",
        "--dataset",
        s(&p("train.jsonl")),
        "--base",
        s(&fx.join("base_paragraphs.jsonl")),
        "-n",
        "200",
        "--out",
        s(&p("pairs.jsonl")),
    ]);
}

/// First artifact whose bytes differ between two pipeline outputs.
pub fn first_difference(a: &Path, b: &Path) -> Option<String> {
    for name in ARTIFACTS {
        let x = std::fs::read(a.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let y = std::fs::read(b.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        if x != y {
            return Some(name.to_string());
        }
    }
    None
}
