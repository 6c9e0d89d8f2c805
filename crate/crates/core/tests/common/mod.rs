#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use concord::constraints::{Constraint, ConstraintKind, ConstraintSet};
use concord::corpus::{build_vocabulary, generate, vectorize, Corpus, IndexedLabels, LabelAssignment, Stopwords, SynthSpec};
use concord::sparse::FeatureMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/articles.jsonl")
}

pub fn fixture() -> (Corpus, Vec<LabelAssignment>) {
    let text = std::fs::read_to_string(fixture_path()).unwrap();
    let ing = Corpus::read_jsonl(text.as_bytes(), "articles", &Stopwords::embedded(), 7).unwrap();
    (ing.corpus, ing.labelings)
}

pub struct Synth {
    pub corpus: Corpus,
    pub truth: LabelAssignment,
    pub labels: IndexedLabels,
    pub matrix: FeatureMatrix,
}

pub fn synth(spec: &SynthSpec) -> Synth {
    let (corpus, truth) = generate(spec).unwrap();
    let vocab = build_vocabulary(&corpus).unwrap();
    let matrix = vectorize(&corpus, &vocab).unwrap();
    let labels = truth.index(&corpus).unwrap();
    Synth { corpus, truth, labels, matrix }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dense(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect()
}

pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

/// Random constraint set over `n` documents with distinct pairs.
pub fn random_constraints(rng: &mut ChaCha8Rng, n: usize, count: usize) -> ConstraintSet {
    let mut set = ConstraintSet::new();
    while set.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b || set.has_pair(a, b) {
            continue;
        }
        let kind = if rng.random_bool(0.5) { ConstraintKind::MustLink } else { ConstraintKind::CannotLink };
        set.insert(Constraint::new(kind, a, b).unwrap());
    }
    set
}

/// Component representative of every document under the must-links.
pub fn union_find(n: usize, must: &[(usize, usize)]) -> Vec<usize> {
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut x = x;
        while p[x] != r {
            let next = p[x];
            p[x] = r;
            x = next;
        }
        r
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in must {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    (0..n).map(|x| find(&mut parent, x)).collect()
}

/// Mutual information by summing over cells of the joint distribution.
pub fn mi_oracle(table: &[Vec<usize>]) -> f64 {
    let n: usize = table.iter().flatten().sum();
    let n = n as f64;
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let cols: Vec<f64> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum::<usize>() as f64).collect();
    let mut mi = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &c) in r.iter().enumerate() {
            if c > 0 {
                let p = c as f64 / n;
                mi += p * (p / ((rows[i] / n) * (cols[j] / n))).ln();
            }
        }
    }
    mi
}

pub fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

pub fn random_table(rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let r = rng.random_range(1..=8);
    let c = rng.random_range(1..=8);
    let n = rng.random_range(1..=100);
    let mut t = vec![vec![0; c]; r];
    for _ in 0..n {
        t[rng.random_range(0..r)][rng.random_range(0..c)] += 1;
    }
    t
}

pub fn violated_oracle(assignment: &[usize], set: &ConstraintSet) -> usize {
    set.iter()
        .filter(|c| {
            let same = assignment[c.a] == assignment[c.b];
            match c.kind {
                ConstraintKind::MustLink => !same,
                ConstraintKind::CannotLink => same,
            }
        })
        .count()
}

pub fn term_counts(tokens: &[String]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

/// Constraints drawn from a hidden labeling, hence always consistent.
pub fn consistent_constraints(rng: &mut ChaCha8Rng, n: usize, count: usize, classes: usize) -> (Vec<usize>, ConstraintSet) {
    let hidden: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let mut set = ConstraintSet::new();
    while set.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b || set.has_pair(a, b) {
            continue;
        }
        let kind = if hidden[a] == hidden[b] { ConstraintKind::MustLink } else { ConstraintKind::CannotLink };
        set.insert(Constraint::new(kind, a, b).unwrap());
    }
    (hidden, set)
}
