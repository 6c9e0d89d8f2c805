//! Interactive steering sessions.
//!
//! A session is an append-only action log over one corpus. Its state is a
//! pure function of the log, so replaying the log reproduces every run.
//! Constraints are staged by `AddConstraint` and take effect at the next
//! `Recluster`; deleting a staged constraint unstages it, deleting one that
//! was already used records a `Remove`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans, Clustering, DistanceMetric, Init, KMeansParams};
use crate::constraints::{transitive_closure, Constraint, ConstraintKind, ConstraintSet};
use crate::corpus::{build_vocabulary, vectorize, Corpus, IndexedLabels, LabelAssignment};
use crate::error::{Error, Result};
use crate::evaluation::{coherence, contingency, informativeness, mutual_information, nmi};
use crate::pckmeans::{pckmeans_with_init, PckConfig, PckInit, RunManifest};
use crate::sparse::FeatureMatrix;

pub const SNIPPET_CHARS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub k: usize,
    pub w: f64,
    pub metric: DistanceMetric,
    pub max_iters: usize,
    pub rng_seed: u64,
    /// Start each recluster from the previous centroids instead of the
    /// neighborhood initialization.
    pub warm_start: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            k: 6,
            w: 1.0,
            metric: DistanceMetric::Cosine,
            max_iters: KMeansParams::DEFAULT_MAX_ITERS,
            rng_seed: 0,
            warm_start: false,
        }
    }
}

impl SessionConfig {
    fn pck(&self) -> PckConfig {
        PckConfig { k: self.k, w: self.w, metric: self.metric, max_iters: self.max_iters, rng_seed: self.rng_seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Create { corpus_ref: String, config: SessionConfig },
    AddConstraint { kind: ConstraintKind, a: String, b: String },
    Unstage { index: usize },
    Remove { index: usize },
    Recluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    pub annotator: String,
    pub mi: f64,
    pub nmi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub n_constraints: usize,
    pub n_must: usize,
    pub n_cannot: usize,
    /// Against the session's unconstrained reference partition.
    pub informativeness: Option<f64>,
    pub coherence: f64,
    pub violated: usize,
    pub objective: f64,
    pub potential: f64,
    pub labelings: Vec<LabelScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub run_index: usize,
    pub action: String,
    pub manifest: RunManifest,
    pub metrics: SessionMetrics,
    pub assignment: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintView {
    pub index: usize,
    pub kind: ConstraintKind,
    pub a: String,
    pub b: String,
    pub staged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub constraint: ConstraintView,
    pub n_constraints: usize,
    pub informativeness: Option<f64>,
    pub coherence: f64,
    /// Whether the reference partition violates the new constraint.
    pub violated_by_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeleteOutcome {
    /// `unstage` or `remove`.
    pub action: String,
    pub removed: ConstraintView,
    pub n_constraints: usize,
    pub informativeness: Option<f64>,
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentView {
    pub index: usize,
    pub doc_id: String,
    pub snippet: String,
    pub cluster: usize,
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterView {
    pub id: usize,
    pub size: usize,
    pub members: Vec<String>,
}

/// Everything needed to render a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub corpus_ref: String,
    pub config: SessionConfig,
    pub documents: Vec<DocumentView>,
    pub clusters: Vec<ClusterView>,
    pub constraints: Vec<ConstraintView>,
    pub reference: Vec<usize>,
    pub labelings: Vec<String>,
    pub history: Vec<HistoryEntry>,
}

/// Portable form of a session: its id and action log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub session_id: String,
    pub actions: Vec<Action>,
}

impl SessionLog {
    pub fn write_lines<W: Write>(&self, mut out: W) -> Result<()> {
        for a in &self.actions {
            writeln!(out, "{}", serde_json::to_string(a).map_err(|e| Error::Io(e.to_string()))?)?;
        }
        Ok(())
    }

    pub fn read_lines<R: BufRead>(session_id: &str, input: R) -> Result<Self> {
        let mut actions = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            actions.push(serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?);
        }
        Ok(Self { session_id: session_id.into(), actions })
    }
}

#[derive(Debug, Clone)]
struct Entry {
    constraint: Constraint,
    staged: bool,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    corpus_ref: String,
    config: SessionConfig,
    corpus: Corpus,
    labelings: Vec<IndexedLabels>,
    matrix: FeatureMatrix,
    entries: Vec<Entry>,
    reference: Clustering,
    current: Clustering,
    history: Vec<HistoryEntry>,
    log: Vec<Action>,
}

fn snippet(text: &str) -> String {
    match text.char_indices().nth(SNIPPET_CHARS) {
        Some((i, _)) => text[..i].to_string(),
        None => text.to_string(),
    }
}

impl Session {
    /// New session with an unconstrained K-Means run as its reference
    /// partition and first history entry.
    pub fn create(
        id: impl Into<String>,
        corpus_ref: impl Into<String>,
        corpus: Corpus,
        labelings: &[LabelAssignment],
        config: SessionConfig,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let vocab = build_vocabulary(&corpus)?;
        let matrix = vectorize(&corpus, &vocab)?;
        let params = config.pck().kmeans_params();
        if !(config.w >= 0.0 && config.w.is_finite()) {
            return Err(Error::InvalidParameter(format!("w must be finite and non-negative, got {}", config.w)));
        }
        let reference = kmeans(&matrix, &params, &Init::Random)?;
        let labelings = labelings.iter().map(|l| l.index(&corpus)).collect::<Result<Vec<_>>>()?;
        let corpus_ref = corpus_ref.into();
        let mut s = Self {
            id: id.into(),
            corpus_ref: corpus_ref.clone(),
            config,
            corpus,
            labelings,
            matrix,
            entries: Vec::new(),
            current: reference.clone(),
            reference,
            history: Vec::new(),
            log: vec![Action::Create { corpus_ref, config }],
        };
        let manifest = RunManifest::for_kmeans(&params, &s.reference);
        let metrics = s.metrics(&s.reference, 0, s.reference.potential)?;
        s.history.push(HistoryEntry {
            run_index: 0,
            action: "create".into(),
            manifest,
            metrics,
            assignment: s.reference.assignment.clone(),
        });
        Ok(s)
    }

    /// Rebuilds a session by applying `log` to the corpus `load` returns for
    /// its `Create` action.
    pub fn replay(
        log: &SessionLog,
        load: impl FnOnce(&str) -> Result<(Corpus, Vec<LabelAssignment>)>,
    ) -> Result<Self> {
        let (first, rest) = log
            .actions
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty action log".into()))?;
        let Action::Create { corpus_ref, config } = first else {
            return Err(Error::InvalidParameter("action log must start with create".into()));
        };
        let (corpus, labelings) = load(corpus_ref)?;
        let mut s = Self::create(log.session_id.clone(), corpus_ref.clone(), corpus, &labelings, *config)?;
        for a in rest {
            s.apply(a)?;
        }
        Ok(s)
    }

    pub fn apply(&mut self, action: &Action) -> Result<()> {
        match action {
            Action::Create { .. } => Err(Error::InvalidParameter("session already created".into())),
            Action::AddConstraint { kind, a, b } => self.add_constraint(*kind, a, b).map(|_| ()),
            Action::Unstage { index } => {
                if !self.entry(*index)?.staged {
                    return Err(Error::InvalidParameter(format!("constraint {index} is not staged")));
                }
                self.delete_constraint(*index).map(|_| ())
            }
            Action::Remove { index } => {
                if self.entry(*index)?.staged {
                    return Err(Error::InvalidParameter(format!("constraint {index} is staged")));
                }
                self.delete_constraint(*index).map(|_| ())
            }
            Action::Recluster => self.recluster().map(|_| ()),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn matrix(&self) -> &FeatureMatrix {
        &self.matrix
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn current(&self) -> &Clustering {
        &self.current
    }

    pub fn reference(&self) -> &Clustering {
        &self.reference
    }

    pub fn log(&self) -> SessionLog {
        SessionLog { session_id: self.id.clone(), actions: self.log.clone() }
    }

    /// The constraints the next recluster will use.
    pub fn constraint_set(&self) -> ConstraintSet {
        ConstraintSet::from_constraints(self.entries.iter().map(|e| e.constraint))
    }

    fn entry(&self, index: usize) -> Result<&Entry> {
        self.entries.get(index).ok_or(Error::UnknownConstraint(index))
    }

    fn view(&self, index: usize, e: &Entry) -> ConstraintView {
        let id = |i: usize| self.corpus.documents[i].doc_id.clone();
        ConstraintView { index, kind: e.constraint.kind, a: id(e.constraint.a), b: id(e.constraint.b), staged: e.staged }
    }

    fn doc_index(&self, doc_id: &str) -> Result<usize> {
        self.corpus.index_of(doc_id).ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
    }

    /// Translates document indices in an error into document ids.
    pub fn describe_chain(&self, chain: &[usize]) -> Vec<String> {
        chain.iter().filter_map(|&i| self.corpus.documents.get(i).map(|d| d.doc_id.clone())).collect()
    }

    fn set_metrics(&self, set: &ConstraintSet) -> Result<(Option<f64>, f64)> {
        let inf = if set.is_empty() { None } else { Some(informativeness(set, &self.reference.assignment)?) };
        Ok((inf, coherence(set, &self.matrix)?))
    }

    /// Stages a constraint and reports the metrics of the resulting set
    /// without reclustering.
    pub fn add_constraint(&mut self, kind: ConstraintKind, a: &str, b: &str) -> Result<Preview> {
        let c = Constraint::new(kind, self.doc_index(a)?, self.doc_index(b)?)?;
        let mut set = self.constraint_set();
        if set.has_pair(c.a, c.b) {
            return Err(Error::DuplicatePair(c.a, c.b));
        }
        set.insert(c);
        transitive_closure(&set)?;
        let entry = Entry { constraint: c, staged: true };
        let view = self.view(self.entries.len(), &entry);
        self.entries.push(entry);
        self.log.push(Action::AddConstraint { kind, a: a.to_string(), b: b.to_string() });
        let (informativeness, coherence) = self.set_metrics(&set)?;
        Ok(Preview {
            constraint: view,
            n_constraints: set.len(),
            informativeness,
            coherence,
            violated_by_reference: c.violated_by(&self.reference.assignment),
        })
    }

    pub fn delete_constraint(&mut self, index: usize) -> Result<DeleteOutcome> {
        let e = self.entry(index)?.clone();
        let removed = self.view(index, &e);
        self.entries.remove(index);
        let action = if e.staged { Action::Unstage { index } } else { Action::Remove { index } };
        let name = if e.staged { "unstage" } else { "remove" };
        self.log.push(action);
        let set = self.constraint_set();
        let (informativeness, coherence) = self.set_metrics(&set)?;
        Ok(DeleteOutcome { action: name.into(), removed, n_constraints: set.len(), informativeness, coherence })
    }

    fn metrics(&self, c: &Clustering, violated: usize, objective: f64) -> Result<SessionMetrics> {
        let set = self.constraint_set();
        let (informativeness, coherence) = self.set_metrics(&set)?;
        let labelings = self
            .labelings
            .iter()
            .filter(|l| !l.labeled_docs().is_empty())
            .map(|l| {
                let t = contingency(l, &c.assignment, c.k)?;
                Ok(LabelScore { annotator: l.annotator_id.clone(), mi: mutual_information(&t)?.mi, nmi: nmi(&t)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SessionMetrics {
            n_constraints: set.len(),
            n_must: set.n_must(),
            n_cannot: set.n_cannot(),
            informativeness,
            coherence,
            violated,
            objective,
            potential: c.potential,
            labelings,
        })
    }

    /// Runs PCKMeans on the current constraints and appends the result.
    pub fn recluster(&mut self) -> Result<&HistoryEntry> {
        let set = self.constraint_set();
        let cfg = self.config.pck();
        let init = if self.config.warm_start {
            PckInit::Centroids(self.current.centroids.clone())
        } else {
            PckInit::Neighborhoods
        };
        let r = pckmeans_with_init(&self.matrix, &set, &cfg, &init)?;
        for e in &mut self.entries {
            e.staged = false;
        }
        self.log.push(Action::Recluster);
        let metrics = self.metrics(&r.clustering, r.violated.len(), r.objective)?;
        self.history.push(HistoryEntry {
            run_index: self.history.len(),
            action: "recluster".into(),
            manifest: r.manifest(&cfg, set.len()),
            metrics,
            assignment: r.clustering.assignment.clone(),
        });
        self.current = r.clustering;
        Ok(self.history.last().expect("just pushed"))
    }

    pub fn state(&self) -> SessionState {
        let docs = self
            .corpus
            .documents
            .iter()
            .enumerate()
            .map(|(i, d)| DocumentView {
                index: i,
                doc_id: d.doc_id.clone(),
                snippet: snippet(&d.raw_text),
                cluster: self.current.assignment[i],
                labels: self
                    .labelings
                    .iter()
                    .filter_map(|l| l.class_of(i).map(|c| (l.annotator_id.clone(), l.class_names[c].clone())))
                    .collect(),
            })
            .collect();
        let clusters = (0..self.current.k)
            .map(|h| {
                let members: Vec<String> = self
                    .current
                    .assignment
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c == h)
                    .map(|(i, _)| self.corpus.documents[i].doc_id.clone())
                    .collect();
                ClusterView { id: h, size: members.len(), members }
            })
            .collect();
        SessionState {
            session_id: self.id.clone(),
            corpus_ref: self.corpus_ref.clone(),
            config: self.config,
            documents: docs,
            clusters,
            constraints: self.entries.iter().enumerate().map(|(i, e)| self.view(i, e)).collect(),
            reference: self.reference.assignment.clone(),
            labelings: self.labelings.iter().map(|l| l.annotator_id.clone()).collect(),
            history: self.history.clone(),
        }
    }

    /// Metrics of the latest run.
    pub fn latest_metrics(&self) -> &SessionMetrics {
        &self.history.last().expect("sessions start with one entry").metrics
    }
}
