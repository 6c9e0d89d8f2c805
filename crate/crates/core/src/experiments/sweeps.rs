//! Constraint-grid sweeps. One cell is (annotator, constraint count, trial).

use serde::{Deserialize, Serialize};

use super::stats::{mean, spearman, std_dev};
use super::{fmt4, map_ordered, ExperimentConfig, ExperimentInput, ExperimentOutput, PlotData, Table};
use crate::clustering::{kmeans, DistanceMetric, Init, KMeansParams};
use crate::constraints::{constraints_for_pairs, sample_pairs, ConstraintSet, PairSampling};
use crate::corpus::IndexedLabels;
use crate::error::Result;
use crate::evaluation::{coherence, contingency, informativeness, mutual_information, nmi};
use crate::pckmeans::{pckmeans, PckConfig, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// PCKMeans on an annotator's constraints against the annotator's labels.
    Exp1,
    /// Informativeness against unconstrained K-Means at the truth's k.
    Exp2,
    /// Informativeness against PCKMeans on truth constraints.
    Exp3,
    /// Coherence against informativeness for both references.
    Exp4,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
            Experiment::Exp4 => "exp4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellProvenance {
    pub rng_seed: u64,
    pub pair_seed: u64,
    pub run_seed: u64,
    pub w: f64,
    pub metric: DistanceMetric,
    pub grid_mode: PairSampling,
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub experiment: Experiment,
    pub annotator: String,
    pub n_constraints: usize,
    pub trial: usize,
    pub n_must: usize,
    pub n_cannot: usize,
    pub provenance: CellProvenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub run: Option<RunManifest>,
    /// Labeling `mi` and `nmi` are measured against.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub against: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nmi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub informativeness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub informativeness_pckmeans: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coherence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference: Option<RunManifest>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference_pckmeans: Option<RunManifest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesProvenance {
    pub rng_seed: u64,
    pub w: f64,
    pub metric: DistanceMetric,
    pub grid_mode: PairSampling,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub annotator: String,
    pub kind: String,
    pub x: Vec<usize>,
    pub mean_y: Vec<f64>,
    pub std_y: Vec<f64>,
    pub provenance: SeriesProvenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    /// High informativeness, high coherence.
    Ideal,
    /// High informativeness, low coherence.
    Confusing,
    /// Low informativeness, high coherence.
    Uninformative,
    /// Low on both.
    Poor,
}

impl Quadrant {
    pub const THRESHOLD: f64 = 0.5;

    pub fn of(coherence: f64, informativeness: f64) -> Self {
        match (informativeness >= Self::THRESHOLD, coherence >= Self::THRESHOLD) {
            (true, true) => Quadrant::Ideal,
            (true, false) => Quadrant::Confusing,
            (false, true) => Quadrant::Uninformative,
            (false, false) => Quadrant::Poor,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Quadrant::Ideal => "ideal",
            Quadrant::Confusing => "confusing",
            Quadrant::Uninformative => "uninformative",
            Quadrant::Poor => "poor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub n_constraints: usize,
    pub coherence: f64,
    pub informativeness: f64,
    pub quadrant: Quadrant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSeries {
    pub annotator: String,
    /// `kmeans` or `pckmeans`.
    pub reference: String,
    pub points: Vec<ScatterPoint>,
    pub std_coherence: f64,
    pub std_informativeness: f64,
    /// Root of the summed variances of both coordinates.
    pub dispersion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub experiment: Experiment,
    pub cells: Vec<CellReport>,
    pub series: Vec<CurveSeries>,
    /// Spearman correlation of mean nmi with constraint count (experiment 1).
    pub trend: Vec<(String, Option<f64>)>,
    pub scatter: Vec<ScatterSeries>,
}

fn pck_config(config: &ExperimentConfig, k: usize, run_seed: u64) -> PckConfig {
    PckConfig { k, w: config.w, metric: config.metric, max_iters: config.max_iters, rng_seed: run_seed }
}

fn kmeans_reference(config: &ExperimentConfig, input: &ExperimentInput, k: usize, run_seed: u64) -> Result<(Vec<usize>, RunManifest)> {
    let params = KMeansParams { k, metric: config.metric, rng_seed: run_seed, max_iters: config.max_iters };
    let c = kmeans(&input.matrix, &params, &Init::Random)?;
    let m = RunManifest::for_kmeans(&params, &c);
    Ok((c.assignment, m))
}

fn pck_run(
    config: &ExperimentConfig,
    input: &ExperimentInput,
    set: &ConstraintSet,
    k: usize,
    run_seed: u64,
) -> Result<(Vec<usize>, RunManifest)> {
    let cfg = pck_config(config, k, run_seed);
    let r = pckmeans(&input.matrix, set, &cfg)?;
    let m = r.manifest(&cfg, set.len());
    Ok((r.clustering.assignment, m))
}

fn scores(labels: &IndexedLabels, assignment: &[usize], k: usize) -> Result<(f64, f64)> {
    let table = contingency(labels, assignment, k)?;
    Ok((mutual_information(&table)?.mi, nmi(&table)?))
}

/// Computes a single cell. Cells are independent of each other and of the
/// order in which they are evaluated.
pub fn cell(
    config: &ExperimentConfig,
    input: &ExperimentInput,
    experiment: Experiment,
    annotator: usize,
    n_constraints: usize,
    trial: usize,
) -> Result<CellReport> {
    let ann = &input.annotators[annotator];
    let pair_seed = config.pair_seed(n_constraints, trial);
    let run_seed = config.run_seed(trial);
    let pairs = sample_pairs(&ann.labeled_docs(), n_constraints, pair_seed, config.grid_mode)?;
    let set = constraints_for_pairs(ann, &pairs)?;
    let mut report = CellReport {
        experiment,
        annotator: ann.annotator_id.clone(),
        n_constraints,
        trial,
        n_must: set.n_must(),
        n_cannot: set.n_cannot(),
        provenance: CellProvenance {
            rng_seed: config.rng_seed,
            pair_seed,
            run_seed,
            w: config.w,
            metric: config.metric,
            grid_mode: config.grid_mode,
            max_iters: config.max_iters,
        },
        run: None,
        against: None,
        mi: None,
        nmi: None,
        informativeness: None,
        informativeness_pckmeans: None,
        coherence: None,
        reference: None,
        reference_pckmeans: None,
    };

    let truth_reference_pck = |truth: &IndexedLabels| -> Result<(Vec<usize>, RunManifest)> {
        let truth_set = constraints_for_pairs(truth, &pairs)?;
        pck_run(config, input, &truth_set, truth.k(), run_seed)
    };

    match experiment {
        Experiment::Exp1 => {
            let (a, m) = pck_run(config, input, &set, ann.k(), run_seed)?;
            let (mi, nmi) = scores(ann, &a, ann.k())?;
            report.run = Some(m);
            report.against = Some(ann.annotator_id.clone());
            report.mi = Some(mi);
            report.nmi = Some(nmi);
        }
        Experiment::Exp2 | Experiment::Exp3 => {
            let truth = input.truth()?;
            let (reference, ref_manifest) = if experiment == Experiment::Exp2 {
                kmeans_reference(config, input, truth.k(), run_seed)?
            } else {
                truth_reference_pck(truth)?
            };
            let (a, m) = pck_run(config, input, &set, ann.k(), run_seed)?;
            let (mi, nmi) = scores(truth, &a, ann.k())?;
            report.run = Some(m);
            report.against = Some(truth.annotator_id.clone());
            report.mi = Some(mi);
            report.nmi = Some(nmi);
            report.informativeness = Some(informativeness(&set, &reference)?);
            report.reference = Some(ref_manifest);
        }
        Experiment::Exp4 => {
            let truth = input.truth()?;
            let (km, km_manifest) = kmeans_reference(config, input, truth.k(), run_seed)?;
            let (pk, pk_manifest) = truth_reference_pck(truth)?;
            report.informativeness = Some(informativeness(&set, &km)?);
            report.informativeness_pckmeans = Some(informativeness(&set, &pk)?);
            report.coherence = Some(coherence(&set, &input.matrix)?);
            report.reference = Some(km_manifest);
            report.reference_pckmeans = Some(pk_manifest);
        }
    }
    Ok(report)
}

type Column = (&'static str, fn(&CellReport) -> Option<f64>);

fn run_sweep(config: &ExperimentConfig, input: &ExperimentInput, experiment: Experiment) -> Result<SweepResult> {
    let anns: Vec<&IndexedLabels> = input.annotators.iter().collect();
    config.check_grid(&anns)?;
    if experiment != Experiment::Exp1 {
        input.truth()?;
    }
    let mut jobs = Vec::new();
    for a in 0..input.annotators.len() {
        for &x in &config.constraint_grid {
            for t in 0..config.trials {
                jobs.push((a, x, t));
            }
        }
    }
    let cells = map_ordered(&jobs, |&(a, x, t)| cell(config, input, experiment, a, x, t))?;

    let provenance = SeriesProvenance {
        rng_seed: config.rng_seed,
        w: config.w,
        metric: config.metric,
        grid_mode: config.grid_mode,
        trials: config.trials,
    };
    let per_point = |a: usize, gi: usize| {
        let start = (a * config.constraint_grid.len() + gi) * config.trials;
        &cells[start..start + config.trials]
    };
    let kinds: &[Column] = match experiment {
        Experiment::Exp1 => &[("nmi", |c| c.nmi), ("mi", |c| c.mi)],
        Experiment::Exp2 | Experiment::Exp3 => {
            &[("informativeness", |c| c.informativeness), ("nmi_truth", |c| c.nmi), ("mi_truth", |c| c.mi)]
        }
        Experiment::Exp4 => &[
            ("coherence", |c| c.coherence),
            ("informativeness_kmeans", |c| c.informativeness),
            ("informativeness_pckmeans", |c| c.informativeness_pckmeans),
        ],
    };
    let mut series = Vec::new();
    for (a, ann) in input.annotators.iter().enumerate() {
        for (kind, get) in kinds {
            let (mut mean_y, mut std_y) = (Vec::new(), Vec::new());
            for gi in 0..config.constraint_grid.len() {
                let ys: Vec<f64> = per_point(a, gi).iter().map(|c| get(c).expect("field set for this experiment")).collect();
                mean_y.push(mean(&ys));
                std_y.push(std_dev(&ys));
            }
            series.push(CurveSeries {
                annotator: ann.annotator_id.clone(),
                kind: kind.to_string(),
                x: config.constraint_grid.clone(),
                mean_y,
                std_y,
                provenance: provenance.clone(),
            });
        }
    }

    let xs: Vec<f64> = config.constraint_grid.iter().map(|&x| x as f64).collect();
    let trend = if experiment == Experiment::Exp1 {
        series.iter().filter(|s| s.kind == "nmi").map(|s| (s.annotator.clone(), spearman(&xs, &s.mean_y))).collect()
    } else {
        Vec::new()
    };

    let mut scatter = Vec::new();
    if experiment == Experiment::Exp4 {
        for ann in &input.annotators {
            let find = |kind: &str| {
                series.iter().find(|s| s.annotator == ann.annotator_id && s.kind == kind).expect("series present")
            };
            let coh = find("coherence");
            for (reference, kind) in [("kmeans", "informativeness_kmeans"), ("pckmeans", "informativeness_pckmeans")] {
                let inf = find(kind);
                let points: Vec<ScatterPoint> = (0..xs.len())
                    .map(|i| ScatterPoint {
                        n_constraints: config.constraint_grid[i],
                        coherence: coh.mean_y[i],
                        informativeness: inf.mean_y[i],
                        quadrant: Quadrant::of(coh.mean_y[i], inf.mean_y[i]),
                    })
                    .collect();
                let sc = std_dev(&coh.mean_y);
                let si = std_dev(&inf.mean_y);
                scatter.push(ScatterSeries {
                    annotator: ann.annotator_id.clone(),
                    reference: reference.into(),
                    points,
                    std_coherence: sc,
                    std_informativeness: si,
                    dispersion: (sc * sc + si * si).sqrt(),
                });
            }
        }
    }
    Ok(SweepResult { experiment, cells, series, trend, scatter })
}

pub fn run_experiment_1(config: &ExperimentConfig, input: &ExperimentInput) -> Result<SweepResult> {
    run_sweep(config, input, Experiment::Exp1)
}

pub fn run_experiment_2(config: &ExperimentConfig, input: &ExperimentInput) -> Result<SweepResult> {
    run_sweep(config, input, Experiment::Exp2)
}

pub fn run_experiment_3(config: &ExperimentConfig, input: &ExperimentInput) -> Result<SweepResult> {
    run_sweep(config, input, Experiment::Exp3)
}

pub fn run_experiment_4(config: &ExperimentConfig, input: &ExperimentInput) -> Result<SweepResult> {
    run_sweep(config, input, Experiment::Exp4)
}

impl SweepResult {
    pub fn series(&self, annotator: &str, kind: &str) -> Option<&CurveSeries> {
        self.series.iter().find(|s| s.annotator == annotator && s.kind == kind)
    }

    pub fn output(&self) -> ExperimentOutput {
        let mut out = ExperimentOutput::new(self.experiment.name());
        out.records_from(&self.cells);
        if self.experiment == Experiment::Exp4 {
            for s in &self.scatter {
                out.plots.push(PlotData {
                    name: format!("{}-{}", s.annotator, s.reference),
                    x: s.points.iter().map(|p| p.coherence).collect(),
                    y: s.points.iter().map(|p| p.informativeness).collect(),
                });
            }
            let mut points = Table::new(
                "mean informativeness vs coherence",
                &["annotator", "reference", "n_constraints", "coherence", "informativeness", "quadrant"],
            );
            let mut spread =
                Table::new("scatter dispersion", &["annotator", "reference", "std_coherence", "std_informativeness", "dispersion"]);
            for s in &self.scatter {
                for p in &s.points {
                    points.push(vec![
                        s.annotator.clone(),
                        s.reference.clone(),
                        p.n_constraints.to_string(),
                        fmt4(p.coherence),
                        fmt4(p.informativeness),
                        p.quadrant.name().into(),
                    ]);
                }
                spread.push(vec![
                    s.annotator.clone(),
                    s.reference.clone(),
                    fmt4(s.std_coherence),
                    fmt4(s.std_informativeness),
                    fmt4(s.dispersion),
                ]);
            }
            out.tables.push(points);
            out.tables.push(spread);
            return out;
        }

        let mut kinds: Vec<&str> = Vec::new();
        for s in &self.series {
            if !kinds.contains(&s.kind.as_str()) {
                kinds.push(&s.kind);
            }
        }
        for s in &self.series {
            out.plots.push(PlotData {
                name: format!("{}-{}", s.annotator, s.kind),
                x: s.x.iter().map(|&x| x as f64).collect(),
                y: s.mean_y.clone(),
            });
        }
        for kind in kinds {
            let of_kind: Vec<&CurveSeries> = self.series.iter().filter(|s| s.kind == kind).collect();
            let mut header = vec!["n_constraints".to_string()];
            header.extend(of_kind.iter().map(|s| s.annotator.clone()));
            let mut t = Table { title: format!("mean {kind} over trials"), header, rows: Vec::new() };
            if let Some(first) = of_kind.first() {
                for (i, x) in first.x.iter().enumerate() {
                    let mut row = vec![x.to_string()];
                    row.extend(of_kind.iter().map(|s| format!("{} ± {}", fmt4(s.mean_y[i]), fmt4(s.std_y[i]))));
                    t.push(row);
                }
            }
            out.tables.push(t);
        }
        if !self.trend.is_empty() {
            let mut t = Table::new("rank correlation of mean nmi with constraint count", &["annotator", "spearman_rho"]);
            for (a, rho) in &self.trend {
                t.push(vec![a.clone(), rho.map_or_else(|| "undefined".into(), fmt4)]);
            }
            out.tables.push(t);
        }
        out
    }
}
