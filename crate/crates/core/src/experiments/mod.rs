//! Batch harness: seeding comparison, per-annotator k sweep, blind test with
//! automated annotators, and constraint-grid sweeps (experiments 1 to 4).
//!
//! Every random choice is drawn from a seed derived from `rng_seed` and a
//! fixed path:
//!
//! | stream                     | path                                   |
//! |----------------------------|----------------------------------------|
//! | constraint pairs (fresh)   | `[1, n_constraints, trial]`            |
//! | constraint pairs (nested)  | `[1, trial]`, prefix of one shuffle    |
//! | clustering runs            | `[2, trial]`                           |
//! | seeding comparison         | `[3, trial]`                           |
//! | k sweep                    | `[4, trial]`                           |
//! | blind test                 | `[5, run]` (or `[5]` with `fixed_seed`) |
//!
//! Pairs and run seeds do not depend on the annotator, so annotators are
//! compared on the same document pairs and the same initial parameters.

mod seeding;
pub mod stats;
mod sweeps;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use seeding::{
    run_annotator_k_sweep, run_blind_test, run_seeding_comparison, BlindResult, KSweepResult, KSweepRow,
    SeedingResult, SeedingTrial,
};
pub use sweeps::{
    cell, run_experiment_1, run_experiment_2, run_experiment_3, run_experiment_4, CellReport, CurveSeries,
    Experiment, Quadrant, ScatterPoint, ScatterSeries, SweepResult,
};

use crate::clustering::{DistanceMetric, KMeansParams, SeedMode};
use crate::constraints::PairSampling;
use crate::corpus::{build_vocabulary, vectorize, Corpus, IndexedLabels, LabelAssignment};
use crate::error::{Error, Result};
use crate::evaluation::write_reports;
use crate::seed;
use crate::sparse::FeatureMatrix;

pub const PAIRS: u64 = 1;
pub const RUNS: u64 = 2;
pub const SEEDING: u64 = 3;
pub const KSWEEP: u64 = 4;
pub const BLIND: u64 = 5;

pub fn default_grid() -> Vec<usize> {
    (10..=300).step_by(10).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlindConfig {
    /// Labeling whose documents provide the representatives; defaults to
    /// the inferred truth.
    pub seeds_from: Option<String>,
    pub runs: usize,
    /// Use one seed for every run.
    pub fixed_seed: bool,
    /// Runs compared in the reported confusion matrix.
    pub pair: (usize, usize),
}

impl Default for BlindConfig {
    fn default() -> Self {
        Self { seeds_from: None, runs: 10, fixed_seed: false, pair: (0, 1) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Corpus file, resolved relative to the config file.
    pub corpus_ref: String,
    /// Extra label files merged with the labels found in the corpus.
    pub label_files: Vec<String>,
    /// Annotator ids to sweep; empty selects every labeling except the
    /// inferred truth.
    pub annotators: Vec<String>,
    pub inferred_truth: String,
    pub constraint_grid: Vec<usize>,
    pub trials: usize,
    pub trials_seeding: usize,
    pub metric: DistanceMetric,
    pub w: f64,
    pub rng_seed: u64,
    pub grid_mode: PairSampling,
    pub max_iters: usize,
    /// Cluster count for the seeding comparison and blind test; defaults to
    /// the number of classes of the labeling that provides the seeds.
    pub k: Option<usize>,
    pub seed_mode: SeedMode,
    pub blind: BlindConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus_ref: String::new(),
            label_files: Vec::new(),
            annotators: Vec::new(),
            inferred_truth: "truth".into(),
            constraint_grid: default_grid(),
            trials: 5,
            trials_seeding: 10,
            metric: DistanceMetric::Cosine,
            w: 1.0,
            rng_seed: 0,
            grid_mode: PairSampling::Fresh,
            max_iters: KMeansParams::DEFAULT_MAX_ITERS,
            k: None,
            seed_mode: SeedMode::Representative,
            blind: BlindConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })
    }

    pub fn pair_seed(&self, n_constraints: usize, trial: usize) -> u64 {
        match self.grid_mode {
            PairSampling::Fresh => seed::derive(self.rng_seed, &[PAIRS, n_constraints as u64, trial as u64]),
            PairSampling::Nested => seed::derive(self.rng_seed, &[PAIRS, trial as u64]),
        }
    }

    pub fn run_seed(&self, trial: usize) -> u64 {
        seed::derive(self.rng_seed, &[RUNS, trial as u64])
    }

    pub(crate) fn check_common(&self) -> Result<()> {
        if !(self.w >= 0.0 && self.w.is_finite()) {
            return Err(Error::InvalidParameter(format!("w must be finite and non-negative, got {}", self.w)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn check_grid(&self, annotators: &[&IndexedLabels]) -> Result<()> {
        self.check_common()?;
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be positive".into()));
        }
        let g = &self.constraint_grid;
        if g.is_empty() {
            return Err(Error::InvalidParameter("constraint_grid is empty".into()));
        }
        if g.contains(&0) {
            return Err(Error::InvalidParameter("constraint_grid values must be positive".into()));
        }
        if g.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("constraint_grid must be strictly ascending".into()));
        }
        let top = *g.last().expect("non-empty");
        for a in annotators {
            let l = a.labeled_docs().len();
            let available = l * l.saturating_sub(1) / 2;
            if top > available {
                return Err(Error::TooManyPairs { requested: top, available });
            }
        }
        Ok(())
    }
}

/// Everything an experiment reads besides its configuration.
#[derive(Debug, Clone)]
pub struct ExperimentInput {
    pub doc_ids: Vec<String>,
    pub matrix: FeatureMatrix,
    pub annotators: Vec<IndexedLabels>,
    pub truth: Option<IndexedLabels>,
}

impl ExperimentInput {
    /// Vectorizes `corpus` and indexes `labelings`. The labeling named
    /// `config.inferred_truth` becomes the truth; the annotators are those
    /// listed in `config.annotators`, or every other labeling if none are.
    pub fn from_corpus(corpus: &Corpus, labelings: &[LabelAssignment], config: &ExperimentConfig) -> Result<Self> {
        let vocab = build_vocabulary(corpus)?;
        let matrix = vectorize(corpus, &vocab)?;
        let mut truth = None;
        let mut others = Vec::new();
        for l in labelings {
            let indexed = l.index(corpus)?;
            if l.annotator_id == config.inferred_truth {
                truth = Some(indexed);
            } else {
                others.push(indexed);
            }
        }
        let annotators = if config.annotators.is_empty() {
            others
        } else {
            config
                .annotators
                .iter()
                .map(|id| {
                    others
                        .iter()
                        .find(|l| &l.annotator_id == id)
                        .or(truth.as_ref().filter(|t| &t.annotator_id == id))
                        .cloned()
                        .ok_or_else(|| Error::InvalidParameter(format!("unknown annotator {id}")))
                })
                .collect::<Result<_>>()?
        };
        Ok(Self { doc_ids: corpus.doc_ids(), matrix, annotators, truth })
    }

    pub fn truth(&self) -> Result<&IndexedLabels> {
        self.truth.as_ref().ok_or_else(|| Error::InvalidParameter("no inferred-truth labeling supplied".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Tsv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "tsv" => Ok(Self::Tsv),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

/// A titled grid of pre-formatted cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, header: &[&str]) -> Self {
        Self { title: title.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_tsv(&self) -> String {
        let mut s = format!("# {}\n{}\n", self.title, self.header.join("\t"));
        for r in &self.rows {
            s.push_str(&r.join("\t"));
            s.push('\n');
        }
        s
    }
}

pub(crate) fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

pub(crate) fn mean_pm_std(xs: &[f64]) -> String {
    format!("{:.4} ± {:.4}", stats::mean(xs), stats::std_dev(xs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Files produced by one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub name: String,
    pub records: Vec<serde_json::Value>,
    pub plots: Vec<PlotData>,
    pub tables: Vec<Table>,
}

impl ExperimentOutput {
    pub(crate) fn new(name: &str) -> Self {
        Self { name: name.into(), records: Vec::new(), plots: Vec::new(), tables: Vec::new() }
    }

    pub(crate) fn records_from<T: Serialize>(&mut self, items: &[T]) {
        self.records.extend(items.iter().map(|r| serde_json::to_value(r).expect("serializable record")));
    }

    pub fn summary(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Tsv => self.tables.iter().map(Table::to_tsv).collect::<Vec<_>>().join("\n"),
            ReportFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.tables).expect("serializable tables");
                s.push('\n');
                s
            }
        }
    }

    /// Writes `<name>-cells.jsonl`, one `<name>-<series>.dat` per plot and
    /// `<name>-summary.{json,tsv}` into `dir`; returns the paths written.
    pub fn write_to(&self, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let cells = dir.join(format!("{}-cells.jsonl", self.name));
        let mut buf = Vec::new();
        write_reports(&mut buf, &self.records)?;
        fs::write(&cells, buf)?;
        written.push(cells);
        for p in &self.plots {
            let path = dir.join(format!("{}-{}.dat", self.name, p.name));
            let mut buf = Vec::new();
            writeln!(buf, "# x y")?;
            crate::evaluation::write_series(&mut buf, &p.x, &p.y)?;
            fs::write(&path, buf)?;
            written.push(path);
        }
        let ext = match format {
            ReportFormat::Json => "json",
            ReportFormat::Tsv => "tsv",
        };
        let summary = dir.join(format!("{}-summary.{ext}", self.name));
        fs::write(&summary, self.summary(format))?;
        written.push(summary);
        Ok(written)
    }
}

/// Applies `f` to every item, in parallel when enabled; results keep input
/// order.
pub(crate) fn map_ordered<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Names accepted by [`run_named`].
pub const EXPERIMENT_NAMES: [&str; 7] = ["exp1", "exp2", "exp3", "exp4", "seeding", "ksweep", "blind"];

pub fn run_named(name: &str, config: &ExperimentConfig, input: &ExperimentInput) -> Result<ExperimentOutput> {
    match name {
        "exp1" => Ok(run_experiment_1(config, input)?.output()),
        "exp2" => Ok(run_experiment_2(config, input)?.output()),
        "exp3" => Ok(run_experiment_3(config, input)?.output()),
        "exp4" => Ok(run_experiment_4(config, input)?.output()),
        "seeding" => Ok(run_seeding_comparison(config, input)?.output()),
        "ksweep" => Ok(run_annotator_k_sweep(config, input)?.output()),
        "blind" => Ok(run_blind_test(config, input)?.output()),
        other => Err(Error::InvalidParameter(format!(
            "unknown experiment `{other}` (expected one of {})",
            EXPERIMENT_NAMES.join(", ")
        ))),
    }
}
