use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use super::Corpus;
use crate::error::{Error, Result};
use crate::sparse::FeatureMatrix;

/// Term ↔ column mapping, with columns in lexicographic term order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    term_to_index: BTreeMap<String, usize>,
    document_frequency: Vec<usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, index: usize) -> usize {
        self.document_frequency[index]
    }

    /// Two-column export: `term<TAB>index`, one line per term.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            buf.push_str(&format!("{t}\t{i}\n"));
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    /// Reads the two-column export. Document frequencies are not part of
    /// the file and are recomputed by [`Vocabulary::with_frequencies`].
    pub fn read_terms<R: BufRead>(input: R) -> Result<Vec<String>> {
        let mut terms: Vec<(usize, String)> = Vec::new();
        for (ln, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (t, i) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse { line: ln + 1, message: "expected `term<TAB>index`".into() })?;
            let i: usize = i
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: ln + 1, message: "bad index".into() })?;
            terms.push((i, t.to_string()));
        }
        terms.sort();
        if terms.iter().enumerate().any(|(k, (i, _))| *i != k) {
            return Err(Error::Parse { line: 0, message: "indices are not dense".into() });
        }
        Ok(terms.into_iter().map(|t| t.1).collect())
    }

    /// Vocabulary over a fixed term list with frequencies counted in `corpus`.
    pub fn with_frequencies(terms: Vec<String>, corpus: &Corpus) -> Result<Self> {
        let term_to_index: BTreeMap<String, usize> =
            terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if term_to_index.len() != terms.len() {
            return Err(Error::InvalidParameter("duplicate vocabulary term".into()));
        }
        let mut df = vec![0usize; terms.len()];
        for doc in &corpus.documents {
            let distinct: BTreeSet<&str> = doc.tokens.iter().map(String::as_str).collect();
            for t in distinct {
                let i = term_to_index.get(t).ok_or_else(|| Error::UnknownTerm(t.to_string()))?;
                df[*i] += 1;
            }
        }
        if let Some(i) = df.iter().position(|&f| f == 0) {
            return Err(Error::InvalidParameter(format!("term `{}` occurs in no document", terms[i])));
        }
        Ok(Self { terms, term_to_index, document_frequency: df })
    }
}

pub fn build_vocabulary(corpus: &Corpus) -> Result<Vocabulary> {
    let terms: BTreeSet<&str> = corpus
        .documents
        .iter()
        .flat_map(|d| d.tokens.iter().map(String::as_str))
        .collect();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Vocabulary::with_frequencies(terms.into_iter().map(str::to_string).collect(), corpus)
}

/// tf-idf weights `tf(i,t) · ln(n / df(t))` with raw-count tf.
pub fn vectorize(corpus: &Corpus, vocab: &Vocabulary) -> Result<FeatureMatrix> {
    let n = corpus.len();
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut triplets = Vec::new();
    for (i, doc) in corpus.documents.iter().enumerate() {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for t in &doc.tokens {
            let j = vocab.index_of(t).ok_or_else(|| Error::UnknownTerm(t.clone()))?;
            *counts.entry(j).or_default() += 1;
        }
        for (j, tf) in counts {
            let df = vocab.document_frequency(j);
            if df > n {
                return Err(Error::DimensionMismatch { expected: n, found: df });
            }
            let w = tf as f64 * (n as f64 / df as f64).ln();
            if w > 0.0 {
                triplets.push((i, j, w));
            }
        }
    }
    FeatureMatrix::from_triplets(n, vocab.len(), triplets)
}
