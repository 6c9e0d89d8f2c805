use std::collections::BTreeSet;

const EMBEDDED: &str = include_str!("../../data/stopwords-v1.txt");

/// A fixed stopword set. Terms are stored lowercase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    /// The versioned list shipped with the crate.
    pub fn embedded() -> Self {
        Self::from_text(EMBEDDED)
    }

    /// One term per line; blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Self {
        Self(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn empty() -> Self {
        Self(BTreeSet::new())
    }

    pub fn contains(&self, term: &str) -> bool {
        self.0.contains(term)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Self::embedded()
    }
}

/// Minimum surviving term length, in characters.
pub const MIN_TERM_CHARS: usize = 4;
/// A run of this many identical characters marks a term as noise.
pub const REPEAT_RUN: usize = 3;

/// Splits `raw` into lowercase terms and applies the noise filters.
///
/// Whitespace-delimited words containing a digit are dropped whole; the rest
/// are split on every non-alphabetic character. A term survives when it is
/// not a stopword, has at least [`MIN_TERM_CHARS`] characters and contains no
/// run of [`REPEAT_RUN`] identical characters.
pub fn tokenize(raw: &str, stopwords: &Stopwords) -> Vec<String> {
    raw.split_whitespace()
        .filter(|word| !word.chars().any(|c| c.is_numeric()))
        .flat_map(|word| word.split(|c: char| !c.is_alphabetic()))
        .filter(|piece| !piece.is_empty())
        .map(str::to_lowercase)
        .filter(|term| keep_term(term, stopwords))
        .collect()
}

pub(crate) fn keep_term(term: &str, stopwords: &Stopwords) -> bool {
    term.chars().count() >= MIN_TERM_CHARS
        && !has_repeat_run(term)
        && !term.chars().any(|c| c.is_numeric())
        && !stopwords.contains(term)
}

fn has_repeat_run(term: &str) -> bool {
    let mut run = 0;
    let mut prev = None;
    for c in term.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            run = 1;
            prev = Some(c);
        }
        if run >= REPEAT_RUN {
            return true;
        }
    }
    false
}
