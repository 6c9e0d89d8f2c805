//! Where sessions get their corpora.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Component, Path, PathBuf};

use concord::corpus::{generate, Corpus, LabelAssignment, Stopwords, SynthSpec};
use concord::{Error, Result};

/// Prefix of generated corpus references: `synthetic:table-iii[:SEED]`.
pub const SYNTHETIC_PREFIX: &str = "synthetic:";

/// Resolves corpus references to corpora. A reference is a registered
/// name, a synthetic generator spec, or a path to a line-delimited corpus
/// file relative to the store root.
#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    root: Option<PathBuf>,
    registered: BTreeMap<String, (Corpus, Vec<LabelAssignment>)>,
}

impl CorpusStore {
    pub fn new(root: Option<PathBuf>) -> Self {
        Self { root, registered: BTreeMap::new() }
    }

    pub fn register(&mut self, name: impl Into<String>, corpus: Corpus, labelings: Vec<LabelAssignment>) {
        self.registered.insert(name.into(), (corpus, labelings));
    }

    pub fn load(&self, corpus_ref: &str) -> Result<(Corpus, Vec<LabelAssignment>)> {
        if let Some(c) = self.registered.get(corpus_ref) {
            return Ok(c.clone());
        }
        if let Some(spec) = corpus_ref.strip_prefix(SYNTHETIC_PREFIX) {
            return synthetic(spec).ok_or_else(|| Error::CorpusNotFound(corpus_ref.into()))?;
        }
        let path = self.resolve(corpus_ref).ok_or_else(|| Error::CorpusNotFound(corpus_ref.into()))?;
        let file = File::open(&path).map_err(|_| Error::CorpusNotFound(corpus_ref.into()))?;
        let name = path.file_stem().map_or(corpus_ref.into(), |s| s.to_string_lossy().into_owned());
        let ing = Corpus::read_jsonl(BufReader::new(file), &name, &Stopwords::embedded(), 0)?;
        Ok((ing.corpus, ing.labelings))
    }

    fn resolve(&self, corpus_ref: &str) -> Option<PathBuf> {
        let root = self.root.as_ref()?;
        let rel = Path::new(corpus_ref);
        if rel.components().all(|c| matches!(c, Component::Normal(_))) {
            Some(root.join(rel))
        } else {
            None
        }
    }
}

fn synthetic(spec: &str) -> Option<Result<(Corpus, Vec<LabelAssignment>)>> {
    let mut parts = spec.split(':');
    let shape = parts.next()?;
    let seed = match parts.next() {
        Some(s) => s.parse().ok()?,
        None => 0,
    };
    if parts.next().is_some() || shape != "table-iii" {
        return None;
    }
    Some(generate(&SynthSpec::table_iii(seed)).map(|(c, t)| (c, vec![t])))
}
