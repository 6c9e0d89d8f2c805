//! Pairwise-constrained K-Means.
//!
//! Soft constraints: each violated must-link or cannot-link costs `w`. The
//! assignment step is greedy and sequential in ascending document order, so a
//! point sees the labels already chosen for earlier points in the same pass.
//! During the first pass, neighbors without a label yet carry no penalty.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::clustering::{
    check_k, explicit_centroids, forgy_indices, nearest, point_distance, update_centroids, Centroid, Clustering,
    DistanceMetric, KMeansParams,
};
use crate::constraints::{build_neighborhoods, transitive_closure, violations, Constraint, ConstraintSet, NeighborhoodSet};
use crate::error::{Error, Result};
use crate::seed;
use crate::sparse::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PckConfig {
    pub k: usize,
    pub w: f64,
    pub metric: DistanceMetric,
    pub max_iters: usize,
    pub rng_seed: u64,
}

impl PckConfig {
    pub const DEFAULT_W: f64 = 1.0;

    pub fn new(k: usize, w: f64, metric: DistanceMetric, rng_seed: u64) -> Self {
        Self { k, w, metric, max_iters: KMeansParams::DEFAULT_MAX_ITERS, rng_seed }
    }

    pub fn kmeans_params(&self) -> KMeansParams {
        KMeansParams { k: self.k, metric: self.metric, rng_seed: self.rng_seed, max_iters: self.max_iters }
    }

    fn validate(&self, n: usize) -> Result<()> {
        check_k(self.k, n)?;
        if !self.w.is_finite() || self.w < 0.0 {
            return Err(Error::InvalidParameter(format!("w must be a finite non-negative number, got {}", self.w)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    NeighborhoodCentroid,
    CannotLinkedPoint,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCentroids {
    pub centroids: Vec<Vec<f64>>,
    pub provenance: Vec<Provenance>,
}

fn mean_of(matrix: &FeatureMatrix, members: &[usize]) -> Vec<f64> {
    let mut mean = vec![0.0; matrix.cols()];
    for &i in members {
        for (j, v) in matrix.row(i).iter() {
            mean[j] += v;
        }
    }
    let n = members.len() as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    mean
}

/// Neighborhood-based initialization.
///
/// With `λ ≥ k` the `k` largest neighborhoods seed the centroids. Otherwise
/// all `λ` neighborhood centroids are used, then (when `λ ≥ 1`) the first
/// point cannot-linked to every neighborhood, then distinct random documents.
pub fn pck_init(
    neighborhoods: &NeighborhoodSet,
    set: &ConstraintSet,
    matrix: &FeatureMatrix,
    config: &PckConfig,
) -> Result<InitialCentroids> {
    let n = matrix.rows();
    check_k(config.k, n)?;
    let lambda = neighborhoods.lambda();
    let mut centroids = Vec::with_capacity(config.k);
    let mut provenance = Vec::with_capacity(config.k);
    for nb in neighborhoods.neighborhoods.iter().take(config.k) {
        centroids.push(mean_of(matrix, nb));
        provenance.push(Provenance::NeighborhoodCentroid);
    }
    if lambda >= config.k {
        return Ok(InitialCentroids { centroids, provenance });
    }

    let mut used_point = None;
    if lambda > 0 {
        let (_, cl) = set.adjacency(n);
        let in_nb: BTreeSet<usize> = neighborhoods.neighborhoods.iter().flatten().copied().collect();
        used_point = (0..n).filter(|x| !in_nb.contains(x)).find(|&x| {
            neighborhoods.neighborhoods.iter().all(|nb| nb.iter().any(|y| cl[x].contains(y)))
        });
        if let Some(x) = used_point {
            centroids.push(matrix.dense_row(x));
            provenance.push(Provenance::CannotLinkedPoint);
        }
    }

    let remaining = config.k - centroids.len();
    if remaining > 0 {
        let pool: Vec<usize> = (0..n).filter(|&i| Some(i) != used_point).collect();
        let mut rng = seed::rng(config.rng_seed);
        for p in forgy_indices(pool.len(), remaining, &mut rng) {
            centroids.push(matrix.dense_row(pool[p]));
            provenance.push(Provenance::Random);
        }
    }
    Ok(InitialCentroids { centroids, provenance })
}

/// Half squared Euclidean distance, or cosine distance in cosine mode.
fn distance_term(matrix: &FeatureMatrix, x: usize, c: &Centroid, metric: DistanceMetric) -> f64 {
    match metric {
        DistanceMetric::SquaredEuclidean => 0.5 * point_distance(matrix, x, c, metric),
        DistanceMetric::Cosine => point_distance(matrix, x, c, metric),
    }
}

struct Penalties {
    ml: Vec<Vec<usize>>,
    cl: Vec<Vec<usize>>,
    w: f64,
}

impl Penalties {
    fn penalty(&self, x: usize, h: usize, labels: &[Option<usize>]) -> f64 {
        let ml = self.ml[x].iter().filter(|&&j| labels[j].is_some_and(|l| l != h)).count();
        let cl = self.cl[x].iter().filter(|&&j| labels[j] == Some(h)).count();
        self.w * (ml + cl) as f64
    }
}

/// Cost of placing document `x` in cluster `h` given the current labels:
/// distance term plus `w` per must-link neighbor labeled elsewhere and per
/// cannot-link neighbor labeled `h`. Unlabeled neighbors are ignored.
pub fn assignment_cost(
    matrix: &FeatureMatrix,
    x: usize,
    h: usize,
    labels: &[Option<usize>],
    centroids: &[Vec<f64>],
    set: &ConstraintSet,
    config: &PckConfig,
) -> f64 {
    let (ml, cl) = set.adjacency(matrix.rows());
    let p = Penalties { ml, cl, w: config.w };
    distance_term(matrix, x, &Centroid::new(centroids[h].clone()), config.metric) + p.penalty(x, h, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PckResult {
    pub clustering: Clustering,
    /// Distance terms plus `w` times the number of violated constraints.
    pub objective: f64,
    /// Violated constraints of the closed set the algorithm optimized.
    pub violated: Vec<Constraint>,
    pub init_provenance: Vec<Provenance>,
    pub lambda: usize,
    pub objective_trace: Vec<f64>,
}

/// Compact record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub algorithm: String,
    pub k: usize,
    pub w: f64,
    pub metric: DistanceMetric,
    pub seed: u64,
    pub lambda: usize,
    pub n_constraints: usize,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub potential: f64,
    pub violated: usize,
}

impl RunManifest {
    pub fn for_kmeans(params: &KMeansParams, clustering: &Clustering) -> Self {
        RunManifest {
            algorithm: "kmeans".into(),
            k: params.k,
            w: 0.0,
            metric: params.metric,
            seed: params.rng_seed,
            lambda: 0,
            n_constraints: 0,
            iterations: clustering.iterations,
            converged: clustering.converged,
            objective: clustering.potential,
            potential: clustering.potential,
            violated: 0,
        }
    }
}

impl PckResult {
    pub fn manifest(&self, config: &PckConfig, n_constraints: usize) -> RunManifest {
        RunManifest {
            algorithm: "pckmeans".into(),
            k: config.k,
            w: config.w,
            metric: config.metric,
            seed: config.rng_seed,
            lambda: self.lambda,
            n_constraints,
            iterations: self.clustering.iterations,
            converged: self.clustering.converged,
            objective: self.objective,
            potential: self.clustering.potential,
            violated: self.violated.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PckInit {
    Neighborhoods,
    Centroids(Vec<Vec<f64>>),
}

pub fn pckmeans(matrix: &FeatureMatrix, set: &ConstraintSet, config: &PckConfig) -> Result<PckResult> {
    pckmeans_with_init(matrix, set, config, &PckInit::Neighborhoods)
}

pub fn pckmeans_with_init(
    matrix: &FeatureMatrix,
    set: &ConstraintSet,
    config: &PckConfig,
    init: &PckInit,
) -> Result<PckResult> {
    let n = matrix.rows();
    config.validate(n)?;
    if let Some(m) = set.max_doc() {
        if m >= n {
            return Err(Error::UnknownDocument(m.to_string()));
        }
    }
    let closed = if set.is_closed() { set.clone() } else { transitive_closure(set)? };
    let neighborhoods = build_neighborhoods(&closed);
    let (centroids, provenance) = match init {
        PckInit::Neighborhoods => {
            let ic = pck_init(&neighborhoods, &closed, matrix, config)?;
            (explicit_centroids(matrix, config.k, &ic.centroids)?, ic.provenance)
        }
        PckInit::Centroids(c) => (explicit_centroids(matrix, config.k, c)?, vec![Provenance::Random; config.k]),
    };
    let (ml, cl) = closed.adjacency(n);
    let penalties = Penalties { ml, cl, w: config.w };
    let (clustering, trace) = iterate(matrix, config, &penalties, &closed, centroids)?;
    let violated = violations(&clustering.assignment, &closed)?;
    let objective = tau(matrix, &clustering.assignment, &explicit_centroids(matrix, clustering.k, &clustering.centroids)?, &closed, config);
    Ok(PckResult {
        clustering,
        objective,
        violated,
        init_provenance: provenance,
        lambda: neighborhoods.lambda(),
        objective_trace: trace,
    })
}

fn tau(
    matrix: &FeatureMatrix,
    assignment: &[usize],
    centroids: &[Centroid],
    closed: &ConstraintSet,
    config: &PckConfig,
) -> f64 {
    let dist: f64 = assignment
        .iter()
        .enumerate()
        .map(|(x, &h)| distance_term(matrix, x, &centroids[h], config.metric))
        .sum();
    let violated = closed.iter().filter(|c| c.violated_by(assignment)).count();
    dist + config.w * violated as f64
}

/// Recomputes the objective of a finished run from its fields. Penalties
/// are counted over the transitive closure of `set`.
pub fn objective(matrix: &FeatureMatrix, clustering: &Clustering, set: &ConstraintSet, config: &PckConfig) -> Result<f64> {
    let centroids = explicit_centroids(matrix, clustering.k, &clustering.centroids)?;
    if clustering.assignment.len() != matrix.rows() {
        return Err(Error::DimensionMismatch { expected: matrix.rows(), found: clustering.assignment.len() });
    }
    let closed = if set.is_closed() { set.clone() } else { transitive_closure(set)? };
    Ok(tau(matrix, &clustering.assignment, &centroids, &closed, config))
}

fn iterate(
    matrix: &FeatureMatrix,
    config: &PckConfig,
    penalties: &Penalties,
    closed: &ConstraintSet,
    mut centroids: Vec<Centroid>,
) -> Result<(Clustering, Vec<f64>)> {
    let n = matrix.rows();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let assign = |labels: &mut Vec<Option<usize>>, centroids: &[Centroid]| {
        for x in 0..n {
            let mut best = (0, f64::INFINITY);
            for (h, c) in centroids.iter().enumerate() {
                let cost = distance_term(matrix, x, c, config.metric) + penalties.penalty(x, h, labels);
                if cost < best.1 {
                    best = (h, cost);
                }
            }
            labels[x] = Some(best.0);
        }
        labels.iter().map(|l| l.expect("assigned")).collect::<Vec<usize>>()
    };

    let mut assignment = assign(&mut labels, &centroids);
    let mut trace = vec![tau(matrix, &assignment, &centroids, closed, config)];
    let mut iterations = 1;
    let mut converged = false;
    while iterations < config.max_iters.max(1) {
        centroids = update_centroids(matrix, &assignment, config.k, config.metric);
        let next = assign(&mut labels, &centroids);
        iterations += 1;
        trace.push(tau(matrix, &next, &centroids, closed, config));
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }
    if !converged {
        centroids = update_centroids(matrix, &assignment, config.k, config.metric);
    }
    let potential = (0..n).map(|i| nearest(matrix, i, &centroids, config.metric).1).sum();
    let clustering = Clustering {
        assignment,
        centroids: centroids.into_iter().map(|c| c.values).collect(),
        k: config.k,
        potential,
        iterations,
        converged,
        potential_trace: Vec::new(),
    };
    Ok((clustering, trace))
}

/// Line-delimited violated-constraint report (`ML|CL<TAB>a<TAB>b`).
pub fn write_violations<W: std::io::Write>(out: W, violated: &[Constraint], doc_ids: &[String]) -> Result<()> {
    ConstraintSet::from_constraints(violated.iter().copied()).write(out, doc_ids)
}
