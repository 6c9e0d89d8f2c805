#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_concord"));
    c.env_remove("CONCORD_STOPWORDS");
    c
}

pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn concord")
}

/// Runs and asserts success, returning stdout.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "concord {:?} failed with {:?}\nstderr: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares against a golden file; `UPDATE_GOLDEN=1` rewrites it instead.
pub fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

/// Every pair of labeled documents as ML/CL lines, first `limit` pairs.
pub fn truth_constraints(labels_tsv: &str, annotator: &str, limit: usize) -> String {
    let rows: Vec<(String, String)> = labels_tsv
        .lines()
        .filter_map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f.len() == 3 && f[0] == annotator).then(|| (f[1].to_string(), f[2].to_string()))
        })
        .collect();
    let mut out = String::new();
    let mut n = 0;
    'outer: for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            if n == limit {
                break 'outer;
            }
            let tag = if rows[i].1 == rows[j].1 { "ML" } else { "CL" };
            out.push_str(&format!("{tag}\t{}\t{}\n", rows[i].0, rows[j].0));
            n += 1;
        }
    }
    out
}

/// synth, prep, cluster, pck and metrics in `dir`; returns stdout of each step.
pub fn pipeline(dir: &Path) -> Vec<String> {
    let mut outs = vec![ok(dir, &["synth", "--out", "corpus.jsonl", "--seed", "5", "--mixed", "5"])];
    outs.push(ok(dir, &["prep", "--corpus", "corpus.jsonl", "--out", "prep"]));
    outs.push(ok(dir, &["cluster", "--matrix", "prep/matrix.txt", "--k", "6", "--seed", "3", "--restarts", "4", "--out", "km.jsonl"]));
    let labels = std::fs::read_to_string(dir.join("prep/labels.tsv")).unwrap();
    std::fs::write(dir.join("cons.txt"), truth_constraints(&labels, "truth", 120)).unwrap();
    outs.push(ok(
        dir,
        &[
            "pck", "--matrix", "prep/matrix.txt", "--constraints", "cons.txt", "--k", "6", "--w", "2", "--out", "pck.jsonl",
            "--violations", "viol.txt",
        ],
    ));
    outs.push(ok(
        dir,
        &[
            "metrics", "--kind", "all", "--labels", "prep/labels.tsv", "--clustering", "pck.jsonl", "--constraints",
            "cons.txt", "--reference", "km.jsonl", "--matrix", "prep/matrix.txt",
        ],
    ));
    outs
}

pub const PIPELINE_FILES: [&str; 9] = [
    "corpus.jsonl",
    "prep/matrix.txt",
    "prep/vocab.tsv",
    "prep/docs.txt",
    "prep/labels.tsv",
    "km.jsonl",
    "cons.txt",
    "pck.jsonl",
    "viol.txt",
];
