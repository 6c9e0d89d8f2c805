//! Labeled synthetic corpora.
//!
//! Each class draws its tokens from a private term pool; a fraction of every
//! pool is taken from one pool shared by all classes. Classes listed in
//! `mixed_classes` are noisy: each of their documents also borrows from two
//! other randomly chosen classes.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Corpus, Document, LabelAssignment, Stopwords};
use crate::error::{Error, Result};
use crate::seed;

/// Category sizes of the 25-article pilot sample (politics, medicine,
/// death, arts, marriage, other).
pub const TABLE_III_SIZES: [usize; 6] = [7, 1, 3, 2, 1, 11];
const TABLE_III_NAMES: [&str; 6] = ["politics", "medicine", "death", "arts", "marriage", "other"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub docs_per_class: Vec<usize>,
    pub terms_per_class: usize,
    pub overlap_fraction: f64,
    pub rng_seed: u64,
    pub doc_len: usize,
    pub mixed_classes: Vec<usize>,
    pub class_names: Vec<String>,
    pub name: String,
}

impl SynthSpec {
    pub fn new(docs_per_class: Vec<usize>, terms_per_class: usize, overlap_fraction: f64, rng_seed: u64) -> Self {
        let class_names = (0..docs_per_class.len()).map(|c| format!("c{c}")).collect();
        Self {
            docs_per_class,
            terms_per_class,
            overlap_fraction,
            rng_seed,
            doc_len: 30,
            mixed_classes: Vec::new(),
            class_names,
            name: "synthetic".into(),
        }
    }

    /// Table-III-shaped corpus: six named classes, "other" generated as a
    /// mixed-topic class.
    pub fn table_iii(rng_seed: u64) -> Self {
        Self {
            mixed_classes: vec![5],
            class_names: TABLE_III_NAMES.iter().map(|s| s.to_string()).collect(),
            ..Self::new(TABLE_III_SIZES.to_vec(), 20, 0.0, rng_seed)
        }
    }

    pub fn k_classes(&self) -> usize {
        self.docs_per_class.len()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.k_classes() < 2 {
            return bad("k_classes must be at least 2");
        }
        if self.docs_per_class.contains(&0) || self.terms_per_class == 0 || self.doc_len == 0 {
            return bad("counts must be positive");
        }
        if !(0.0..=1.0).contains(&self.overlap_fraction) {
            return bad("overlap_fraction must lie in [0, 1]");
        }
        if self.class_names.len() != self.k_classes() {
            return bad("one class name per class required");
        }
        if self.mixed_classes.iter().any(|&c| c >= self.k_classes()) {
            return bad("mixed class out of range");
        }
        Ok(())
    }
}

pub fn gen_synthetic_corpus(
    k_classes: usize,
    docs_per_class: &[usize],
    terms_per_class: usize,
    overlap_fraction: f64,
    rng_seed: u64,
) -> Result<(Corpus, LabelAssignment)> {
    if docs_per_class.len() != k_classes {
        return Err(Error::InvalidParameter(format!(
            "{} class sizes given for {k_classes} classes",
            docs_per_class.len()
        )));
    }
    generate(&SynthSpec::new(docs_per_class.to_vec(), terms_per_class, overlap_fraction, rng_seed))
}

pub fn generate(spec: &SynthSpec) -> Result<(Corpus, LabelAssignment)> {
    spec.validate()?;
    let mut rng = seed::rng(spec.rng_seed);
    let stop = Stopwords::embedded();
    let k = spec.k_classes();
    let shared = (spec.overlap_fraction * spec.terms_per_class as f64).round() as usize;
    let private = spec.terms_per_class - shared;

    let mut words = WordSource::default();
    let shared_pool: Vec<String> = (0..shared).map(|_| words.next(&stop)).collect();
    let pools: Vec<Vec<String>> = (0..k)
        .map(|_| {
            let mut pool = shared_pool.clone();
            pool.extend((0..private).map(|_| words.next(&stop)));
            pool
        })
        .collect();

    let mut slots: Vec<usize> = spec
        .docs_per_class
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    slots.shuffle(&mut rng);

    let mut documents = Vec::with_capacity(slots.len());
    let mut truth = LabelAssignment::new("truth");
    for (i, &class) in slots.iter().enumerate() {
        let sources: Vec<usize> = if spec.mixed_classes.contains(&class) {
            let mut others: Vec<usize> = (0..k).filter(|&c| c != class).collect();
            others.shuffle(&mut rng);
            others.truncate(2);
            others
        } else {
            Vec::new()
        };
        let mut text = String::new();
        for t in 0..spec.doc_len {
            let pool = if !sources.is_empty() && rng.random_bool(0.5) {
                &pools[sources[rng.random_range(0..sources.len())]]
            } else {
                &pools[class]
            };
            let word = &pool[rng.random_range(0..pool.len())];
            if t > 0 {
                text.push(' ');
                if t % 7 == 0 {
                    text.push_str("the ");
                }
            }
            text.push_str(word);
        }
        let doc_id = format!("doc-{i:03}");
        truth.labels.insert(doc_id.clone(), spec.class_names[class].clone());
        documents.push(Document::new(doc_id, capitalize(&text), &stop));
    }
    Ok((Corpus::new(spec.name.clone(), documents)?, truth))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Deterministic pseudo-words: three consonant-vowel syllables.
#[derive(Default)]
struct WordSource {
    counter: usize,
}

impl WordSource {
    const CONSONANTS: &'static [u8] = b"bcdfghjklmnprstvz";
    const VOWELS: &'static [u8] = b"aeiou";

    fn next(&mut self, stop: &Stopwords) -> String {
        loop {
            let mut x = self.counter;
            self.counter += 1;
            let mut w = String::with_capacity(6);
            for _ in 0..3 {
                let syll = x % (Self::CONSONANTS.len() * Self::VOWELS.len());
                x /= Self::CONSONANTS.len() * Self::VOWELS.len();
                w.push(Self::CONSONANTS[syll / Self::VOWELS.len()] as char);
                w.push(Self::VOWELS[syll % Self::VOWELS.len()] as char);
            }
            if !stop.contains(&w) {
                return w;
            }
        }
    }
}
