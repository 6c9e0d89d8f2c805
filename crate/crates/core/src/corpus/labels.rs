use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{Error, Result};

/// One annotator's labeling: `doc_id -> category`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAssignment {
    pub annotator_id: String,
    pub labels: BTreeMap<String, String>,
}

impl LabelAssignment {
    pub fn new(annotator_id: impl Into<String>) -> Self {
        Self { annotator_id: annotator_id.into(), labels: BTreeMap::new() }
    }

    pub fn with_labels<I, D, L>(annotator_id: impl Into<String>, labels: I) -> Self
    where
        I: IntoIterator<Item = (D, L)>,
        D: Into<String>,
        L: Into<String>,
    {
        Self {
            annotator_id: annotator_id.into(),
            labels: labels.into_iter().map(|(d, l)| (d.into(), l.into())).collect(),
        }
    }

    /// Number of distinct categories used.
    pub fn k_declared(&self) -> usize {
        let mut v: Vec<&String> = self.labels.values().collect();
        v.sort();
        v.dedup();
        v.len()
    }

    /// Resolves document ids against `corpus`.
    pub fn index(&self, corpus: &Corpus) -> Result<IndexedLabels> {
        let mut pairs = Vec::with_capacity(self.labels.len());
        for (doc, label) in &self.labels {
            let i = corpus
                .index_of(doc)
                .ok_or_else(|| Error::UnknownDocument(doc.clone()))?;
            pairs.push((i, label.clone()));
        }
        Ok(IndexedLabels::new(&self.annotator_id, corpus.len(), pairs))
    }
}

/// Labels resolved to document indices and dense class ids.
///
/// Class ids follow the sorted order of the label values (numeric labels
/// compare numerically).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedLabels {
    pub annotator_id: String,
    pub class_names: Vec<String>,
    by_doc: Vec<Option<usize>>,
}

impl IndexedLabels {
    pub fn new(annotator_id: &str, n_docs: usize, pairs: Vec<(usize, String)>) -> Self {
        let mut names: Vec<String> = pairs.iter().map(|p| p.1.clone()).collect();
        names.sort_by(|a, b| label_order(a, b));
        names.dedup();
        let mut by_doc = vec![None; n_docs];
        for (doc, label) in pairs {
            let c = names.binary_search_by(|n| label_order(n, &label)).expect("label present");
            by_doc[doc] = Some(c);
        }
        Self { annotator_id: annotator_id.to_string(), class_names: names, by_doc }
    }

    /// Every document labeled with its cluster id.
    pub fn from_assignment(annotator_id: &str, assignment: &[usize]) -> Self {
        let pairs = assignment.iter().enumerate().map(|(i, &c)| (i, c.to_string())).collect();
        Self::new(annotator_id, assignment.len(), pairs)
    }

    pub fn k(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_docs(&self) -> usize {
        self.by_doc.len()
    }

    pub fn class_of(&self, doc: usize) -> Option<usize> {
        self.by_doc.get(doc).copied().flatten()
    }

    /// `(doc, class)` for every labeled document, ascending by doc.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.by_doc.iter().enumerate().filter_map(|(i, c)| c.map(|c| (i, c)))
    }

    pub fn labeled_docs(&self) -> Vec<usize> {
        self.entries().map(|e| e.0).collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for (_, c) in self.entries() {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn to_assignment(&self, corpus: &Corpus) -> LabelAssignment {
        LabelAssignment {
            annotator_id: self.annotator_id.clone(),
            labels: self
                .entries()
                .map(|(d, c)| (corpus.documents[d].doc_id.clone(), self.class_names[c].clone()))
                .collect(),
        }
    }
}

pub(crate) fn label_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

/// Reads a label file: one `annotator_id<TAB>doc_id<TAB>label` record per
/// line. Annotators are returned in order of first appearance.
pub fn read_label_file<R: BufRead>(input: R) -> Result<Vec<LabelAssignment>> {
    let mut out: Vec<LabelAssignment> = Vec::new();
    for (ln, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: ln + 1,
                message: "expected `annotator_id<TAB>doc_id<TAB>label`".into(),
            });
        }
        let (ann, doc, label) = (fields[0].trim(), fields[1].trim(), fields[2].trim());
        let slot = match out.iter().position(|a| a.annotator_id == ann) {
            Some(i) => i,
            None => {
                out.push(LabelAssignment::new(ann));
                out.len() - 1
            }
        };
        if out[slot].labels.insert(doc.to_string(), label.to_string()).is_some() {
            return Err(Error::Parse {
                line: ln + 1,
                message: format!("annotator `{ann}` labels `{doc}` twice"),
            });
        }
    }
    Ok(out)
}

pub fn write_label_file<W: Write>(mut out: W, labelings: &[LabelAssignment]) -> Result<()> {
    let mut buf = String::new();
    for a in labelings {
        for (doc, label) in &a.labels {
            buf.push_str(&format!("{}\t{}\t{}\n", a.annotator_id, doc, label));
        }
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}
