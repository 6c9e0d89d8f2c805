//! Corpus ingestion, noise filtering and tf-idf vectorization.

mod labels;
mod synth;
mod tokenize;
mod vectorize;

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use labels::{read_label_file, write_label_file, IndexedLabels, LabelAssignment};
pub use synth::{gen_synthetic_corpus, generate, SynthSpec, TABLE_III_SIZES};
pub use tokenize::{tokenize, Stopwords, MIN_TERM_CHARS, REPEAT_RUN};
pub use vectorize::{build_vocabulary, vectorize, Vocabulary};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub raw_text: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, raw_text: impl Into<String>, stopwords: &Stopwords) -> Self {
        let raw_text = raw_text.into();
        let tokens = tokenize(&raw_text, stopwords);
        Self { doc_id: doc_id.into(), raw_text, tokens }
    }

    /// A document whose tokens are supplied directly (no filtering).
    pub fn from_tokens<S: Into<String>>(doc_id: impl Into<String>, tokens: impl IntoIterator<Item = S>) -> Self {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        Self { doc_id: doc_id.into(), raw_text: tokens.join(" "), tokens }
    }
}

/// An ordered document collection. Document order fixes matrix row order.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub name: String,
    pub documents: Vec<Document>,
    index: HashMap<String, usize>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.documents == other.documents
    }
}

impl Corpus {
    pub fn new(name: impl Into<String>, documents: Vec<Document>) -> Result<Self> {
        let mut index = HashMap::with_capacity(documents.len());
        for (i, d) in documents.iter().enumerate() {
            if index.insert(d.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateDocument(d.doc_id.clone()));
            }
        }
        Ok(Self { name: name.into(), documents, index })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn index_of(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).copied()
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.doc_id.clone()).collect()
    }

    /// Reads line-delimited records `{"id", "text", "labels"?}`.
    ///
    /// A label given as an array (several suggested categories) is resolved
    /// to one uniformly chosen element; the choice for document `i` and
    /// annotator slot `j` uses the stream `seed::derive(multi_label_seed, [i, j])`.
    pub fn read_jsonl<R: BufRead>(
        input: R,
        name: &str,
        stopwords: &Stopwords,
        multi_label_seed: u64,
    ) -> Result<Ingested> {
        let mut documents = Vec::new();
        let mut labelings: Vec<LabelAssignment> = Vec::new();
        let mut resolutions = Vec::new();
        for (ln, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RawRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Parse { line: ln + 1, message: e.to_string() })?;
            let doc_index = documents.len();
            let id = match rec.id {
                Value::String(s) => s,
                Value::Number(n) => n.to_string(),
                _ => return Err(Error::Parse { line: ln + 1, message: "`id` must be a string or number".into() }),
            };
            for (slot, (annotator, value)) in rec.labels.into_iter().enumerate() {
                let choices = label_choices(&value)
                    .ok_or_else(|| Error::Parse { line: ln + 1, message: format!("bad label for `{annotator}`") })?;
                let label = if choices.len() == 1 {
                    choices[0].clone()
                } else {
                    let mut rng = seed::rng(seed::derive(multi_label_seed, &[doc_index as u64, slot as u64]));
                    let pick = choices[rng.random_range(0..choices.len())].clone();
                    resolutions.push(MultiLabelChoice {
                        doc_id: id.clone(),
                        annotator_id: annotator.clone(),
                        candidates: choices,
                        chosen: pick.clone(),
                    });
                    pick
                };
                let pos = match labelings.iter().position(|l| l.annotator_id == annotator) {
                    Some(p) => p,
                    None => {
                        labelings.push(LabelAssignment::new(annotator.clone()));
                        labelings.len() - 1
                    }
                };
                labelings[pos].labels.insert(id.clone(), label);
            }
            documents.push(Document::new(id, rec.text, stopwords));
        }
        Ok(Ingested { corpus: Corpus::new(name, documents)?, labelings, resolutions })
    }

    /// Writes the corpus in the line-delimited record format, inlining any
    /// labels the given annotators assigned.
    pub fn write_jsonl<W: Write>(&self, mut out: W, labelings: &[LabelAssignment]) -> Result<()> {
        let mut buf = String::new();
        for d in &self.documents {
            let mut rec = serde_json::Map::new();
            rec.insert("id".into(), Value::String(d.doc_id.clone()));
            rec.insert("text".into(), Value::String(d.raw_text.clone()));
            let labels: serde_json::Map<String, Value> = labelings
                .iter()
                .filter_map(|a| a.labels.get(&d.doc_id).map(|l| (a.annotator_id.clone(), Value::String(l.clone()))))
                .collect();
            if !labels.is_empty() {
                rec.insert("labels".into(), Value::Object(labels));
            }
            buf.push_str(&serde_json::to_string(&rec).expect("json"));
            buf.push('\n');
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Value,
    text: String,
    #[serde(default)]
    labels: serde_json::Map<String, Value>,
}

fn label_choices(v: &Value) -> Option<Vec<String>> {
    fn scalar(v: &Value) -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        }
    }
    match v {
        Value::Array(items) if !items.is_empty() => items.iter().map(scalar).collect(),
        other => scalar(other).map(|s| vec![s]),
    }
}

/// Result of reading a corpus file.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub corpus: Corpus,
    pub labelings: Vec<LabelAssignment>,
    pub resolutions: Vec<MultiLabelChoice>,
}

/// A multi-label annotation collapsed to a single category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiLabelChoice {
    pub doc_id: String,
    pub annotator_id: String,
    pub candidates: Vec<String>,
    pub chosen: String,
}
