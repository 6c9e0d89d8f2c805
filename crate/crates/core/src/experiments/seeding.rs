//! Random versus seeded initialization, the per-annotator k sweep and the
//! blind test with automated annotators.

use serde::{Deserialize, Serialize};

use super::stats::SignCounts;
use super::{fmt4, map_ordered, mean_pm_std, ExperimentConfig, ExperimentInput, ExperimentOutput, Table, BLIND, KSWEEP, SEEDING};
use crate::clustering::{kmeans, seeded_init, Clustering, Init, KMeansParams, SeedMode, SeedSet};
use crate::corpus::{IndexedLabels, LabelAssignment};
use crate::error::{Error, Result};
use crate::evaluation::{confusion_matrix, contingency, krippendorff_alpha, mutual_information, nmi, ConfusionMatrix};
use crate::pckmeans::RunManifest;
use crate::seed;
use crate::sparse::FeatureMatrix;

/// Seeds from the `k` largest classes (ties by class order); cluster `h`
/// is seeded with the `h`-th largest class. Returns the seed set and the
/// class index behind each cluster.
pub(crate) fn seeds_from_labels(labels: &IndexedLabels, k: usize) -> Result<(SeedSet, Vec<usize>)> {
    let sizes = labels.class_sizes();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    if k > order.len() {
        return Err(Error::SeedCoverage(format!(
            "{k} clusters requested but `{}` has only {} categories",
            labels.annotator_id,
            order.len()
        )));
    }
    order.truncate(k);
    let entries: Vec<(usize, usize)> = labels
        .entries()
        .filter_map(|(doc, class)| order.iter().position(|&c| c == class).map(|h| (doc, h)))
        .collect();
    let set = SeedSet::new(entries, k).map_err(|e| match e {
        Error::MissingSeed(h) => Error::SeedCoverage(format!("category `{}` has no representative", labels.class_names[order[h]])),
        other => other,
    })?;
    Ok((set, order))
}

fn score(labels: &IndexedLabels, c: &Clustering) -> Result<(f64, f64)> {
    let t = contingency(labels, &c.assignment, c.k)?;
    Ok((mutual_information(&t)?.mi, nmi(&t)?))
}

fn seeded_run(matrix: &FeatureMatrix, seeds: &SeedSet, params: &KMeansParams, mode: SeedMode) -> Result<Clustering> {
    let init = seeded_init(seeds, matrix, mode, params.rng_seed)?;
    kmeans(matrix, params, &Init::Centroids(init))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedingTrial {
    pub trial: usize,
    pub seed: u64,
    pub k: usize,
    pub random_mi: f64,
    pub random_nmi: f64,
    pub seeded_mi: f64,
    pub seeded_nmi: f64,
    pub random_run: RunManifest,
    pub seeded_run: RunManifest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedingResult {
    pub k: usize,
    pub trials: Vec<SeedingTrial>,
    /// Seeded against random, compared on nmi.
    pub sign: SignCounts,
}

impl SeedingResult {
    fn column(&self, f: fn(&SeedingTrial) -> f64) -> Vec<f64> {
        self.trials.iter().map(f).collect()
    }

    pub fn random_nmi(&self) -> Vec<f64> {
        self.column(|t| t.random_nmi)
    }

    pub fn seeded_nmi(&self) -> Vec<f64> {
        self.column(|t| t.seeded_nmi)
    }

    pub fn output(&self) -> ExperimentOutput {
        let mut out = ExperimentOutput::new("seeding");
        out.records_from(&self.trials);
        let mut t = Table::new(
            format!("mutual information over {} trials, random vs seeded initialization (k = {})", self.trials.len(), self.k),
            &["seeding", "mi", "nmi"],
        );
        t.push(vec!["random".into(), mean_pm_std(&self.column(|t| t.random_mi)), mean_pm_std(&self.random_nmi())]);
        t.push(vec!["seeded".into(), mean_pm_std(&self.column(|t| t.seeded_mi)), mean_pm_std(&self.seeded_nmi())]);
        out.tables.push(t);
        let mut s = Table::new("one-sided sign test, seeded nmi > random nmi", &["wins", "losses", "ties", "p_value"]);
        s.push(vec![
            self.sign.wins.to_string(),
            self.sign.losses.to_string(),
            self.sign.ties.to_string(),
            format!("{:.6}", self.sign.p_value()),
        ]);
        out.tables.push(s);
        out
    }
}

pub fn run_seeding_comparison(config: &ExperimentConfig, input: &ExperimentInput) -> Result<SeedingResult> {
    config.check_common()?;
    let truth = input.truth()?;
    let k = config.k.unwrap_or(truth.k());
    let (seeds, _) = seeds_from_labels(truth, k)?;
    let trials: Vec<usize> = (0..config.trials_seeding).collect();
    let results = map_ordered(&trials, |&t| {
        let s = seed::derive(config.rng_seed, &[SEEDING, t as u64]);
        let params = KMeansParams { k, metric: config.metric, rng_seed: s, max_iters: config.max_iters };
        let random = kmeans(&input.matrix, &params, &Init::Random)?;
        let seeded = seeded_run(&input.matrix, &seeds, &params, config.seed_mode)?;
        let (random_mi, random_nmi) = score(truth, &random)?;
        let (seeded_mi, seeded_nmi) = score(truth, &seeded)?;
        Ok(SeedingTrial {
            trial: t,
            seed: s,
            k,
            random_mi,
            random_nmi,
            seeded_mi,
            seeded_nmi,
            random_run: RunManifest::for_kmeans(&params, &random),
            seeded_run: RunManifest::for_kmeans(&params, &seeded),
        })
    })?;
    let seeded: Vec<f64> = results.iter().map(|t| t.seeded_nmi).collect();
    let random: Vec<f64> = results.iter().map(|t| t.random_nmi).collect();
    Ok(SeedingResult { k, sign: SignCounts::from_pairs(&seeded, &random), trials: results })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepRow {
    pub annotator: String,
    pub k: usize,
    pub standard_mi: Vec<f64>,
    pub standard_nmi: Vec<f64>,
    pub seeded_mi: Vec<f64>,
    pub seeded_nmi: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSweepResult {
    pub rows: Vec<KSweepRow>,
}

impl KSweepResult {
    pub fn output(&self) -> ExperimentOutput {
        let mut out = ExperimentOutput::new("ksweep");
        out.records_from(&self.rows);
        let mut t = Table::new(
            "mutual information at each annotator's own k",
            &["annotator", "k", "standard_mi", "seeded_mi", "standard_nmi", "seeded_nmi"],
        );
        for r in &self.rows {
            t.push(vec![
                r.annotator.clone(),
                r.k.to_string(),
                mean_pm_std(&r.standard_mi),
                mean_pm_std(&r.seeded_mi),
                mean_pm_std(&r.standard_nmi),
                mean_pm_std(&r.seeded_nmi),
            ]);
        }
        out.tables.push(t);
        out
    }
}

pub fn run_annotator_k_sweep(config: &ExperimentConfig, input: &ExperimentInput) -> Result<KSweepResult> {
    config.check_common()?;
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let rows = map_ordered(&input.annotators, |ann| {
        let k = ann.k();
        let (seeds, _) = seeds_from_labels(ann, k)?;
        let mut row = KSweepRow {
            annotator: ann.annotator_id.clone(),
            k,
            standard_mi: Vec::new(),
            standard_nmi: Vec::new(),
            seeded_mi: Vec::new(),
            seeded_nmi: Vec::new(),
            seeds: Vec::new(),
        };
        for t in 0..config.trials {
            let s = seed::derive(config.rng_seed, &[KSWEEP, t as u64]);
            let params = KMeansParams { k, metric: config.metric, rng_seed: s, max_iters: config.max_iters };
            let (mi, nmi) = score(ann, &kmeans(&input.matrix, &params, &Init::Random)?)?;
            row.standard_mi.push(mi);
            row.standard_nmi.push(nmi);
            let (mi, nmi) = score(ann, &seeded_run(&input.matrix, &seeds, &params, config.seed_mode)?)?;
            row.seeded_mi.push(mi);
            row.seeded_nmi.push(nmi);
            row.seeds.push(s);
        }
        Ok(row)
    })?;
    Ok(KSweepResult { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlindResult {
    pub category_names: Vec<String>,
    pub target_docs: Vec<String>,
    pub labelings: Vec<LabelAssignment>,
    pub runs: Vec<RunManifest>,
    pub alpha: f64,
    pub pair: (usize, usize),
    pub confusion: ConfusionMatrix,
}

#[derive(Serialize)]
struct BlindRecord<'a> {
    run: usize,
    manifest: &'a RunManifest,
    labels: &'a std::collections::BTreeMap<String, String>,
}

impl BlindResult {
    pub fn output(&self) -> ExperimentOutput {
        let mut out = ExperimentOutput::new("blind");
        let records: Vec<BlindRecord> = self
            .labelings
            .iter()
            .zip(&self.runs)
            .enumerate()
            .map(|(i, (l, m))| BlindRecord { run: i, manifest: m, labels: &l.labels })
            .collect();
        out.records_from(&records);
        let mut s = Table::new("automated annotators", &["runs", "documents", "alpha", "pair", "agreement"]);
        s.push(vec![
            self.labelings.len().to_string(),
            self.target_docs.len().to_string(),
            fmt4(self.alpha),
            format!("{}-{}", self.pair.0, self.pair.1),
            fmt4(self.confusion.agreement),
        ]);
        out.tables.push(s);
        let mut header = vec!["category".to_string()];
        header.extend(self.category_names.iter().cloned());
        header.push("total".into());
        let mut t = Table {
            title: format!("confusion matrix, run {} (rows) vs run {} (columns)", self.pair.0, self.pair.1),
            header,
            rows: Vec::new(),
        };
        for (i, name) in self.category_names.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(self.confusion.counts[i].iter().map(|c| c.to_string()));
            row.push(self.confusion.row_totals[i].to_string());
            t.push(row);
        }
        out.tables.push(t);
        out
    }
}

/// Seeded K-Means runs on the documents the seed labeling leaves unlabeled;
/// each run draws its own representatives and acts as one annotator.
pub fn run_blind_test(config: &ExperimentConfig, input: &ExperimentInput) -> Result<BlindResult> {
    config.check_common()?;
    let labels = match &config.blind.seeds_from {
        Some(id) => input
            .annotators
            .iter()
            .chain(input.truth.iter())
            .find(|l| &l.annotator_id == id)
            .ok_or_else(|| Error::InvalidParameter(format!("no labeling `{id}`")))?,
        None => input.truth()?,
    };
    let k = config.k.unwrap_or(labels.k());
    let (seeds, classes) = seeds_from_labels(labels, k)?;
    let targets: Vec<usize> = (0..input.matrix.rows()).filter(|&i| labels.class_of(i).is_none()).collect();
    if targets.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} unlabeled target documents for {k} clusters",
            targets.len()
        )));
    }
    let sub = input.matrix.select_rows(&targets);
    let names: Vec<String> = classes.iter().map(|&c| labels.class_names[c].clone()).collect();
    let runs: Vec<usize> = (0..config.blind.runs).collect();
    let results = map_ordered(&runs, |&r| {
        let s = if config.blind.fixed_seed {
            seed::derive(config.rng_seed, &[BLIND])
        } else {
            seed::derive(config.rng_seed, &[BLIND, r as u64])
        };
        let params = KMeansParams { k, metric: config.metric, rng_seed: s, max_iters: config.max_iters };
        let init = seeded_init(&seeds, &input.matrix, SeedMode::Representative, s)?;
        let c = kmeans(&sub, &params, &Init::Centroids(init))?;
        let labeling = LabelAssignment::with_labels(
            format!("auto-{}", r + 1),
            targets.iter().zip(&c.assignment).map(|(&d, &h)| (input.doc_ids[d].clone(), names[h].clone())),
        );
        Ok((labeling, RunManifest::for_kmeans(&params, &c), c.assignment))
    })?;
    let labelings: Vec<LabelAssignment> = results.iter().map(|r| r.0.clone()).collect();
    let alpha = krippendorff_alpha(&labelings)?;
    let (a, b) = config.blind.pair;
    if a >= results.len() || b >= results.len() {
        return Err(Error::InvalidParameter(format!("confusion pair ({a}, {b}) outside {} runs", results.len())));
    }
    let confusion = confusion_matrix(&results[a].2, k, &results[b].2, k, &names)?;
    Ok(BlindResult {
        category_names: names,
        target_docs: targets.iter().map(|&d| input.doc_ids[d].clone()).collect(),
        runs: results.iter().map(|r| r.1.clone()).collect(),
        labelings,
        alpha,
        pair: (a, b),
        confusion,
    })
}
