//! Distances, Lloyd-style K-Means and seeded initialization.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::sparse::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Cosine,
    SquaredEuclidean,
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMetric::Cosine => "cosine",
            DistanceMetric::SquaredEuclidean => "squared_euclidean",
        })
    }
}

impl FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(DistanceMetric::Cosine),
            "squared_euclidean" | "sqeuclidean" | "euclidean" => Ok(DistanceMetric::SquaredEuclidean),
            other => Err(Error::InvalidParameter(format!("unknown metric `{other}`"))),
        }
    }
}

/// Distance between two dense vectors of equal length.
///
/// Cosine distance is `1 - x·y / (|x||y|)` and is undefined when either norm
/// is zero.
pub fn distance(x: &[f64], y: &[f64], metric: DistanceMetric) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    match metric {
        DistanceMetric::SquaredEuclidean => Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()),
        DistanceMetric::Cosine => {
            let (dot, xx, yy) = x
                .iter()
                .zip(y)
                .fold((0.0, 0.0, 0.0), |(d, p, q), (a, b)| (d + a * b, p + a * a, q + b * b));
            if xx == 0.0 || yy == 0.0 {
                return Err(Error::ZeroVector);
            }
            Ok((1.0 - dot / (xx.sqrt() * yy.sqrt())).max(0.0))
        }
    }
}

/// A dense centroid with its cached squared norm.
#[derive(Debug, Clone)]
pub(crate) struct Centroid {
    pub values: Vec<f64>,
    pub sq_norm: f64,
}

impl Centroid {
    pub fn new(values: Vec<f64>) -> Self {
        let sq_norm = values.iter().map(|v| v * v).sum();
        Self { values, sq_norm }
    }
}

/// Distance from matrix row `i` to a centroid. Inside the clustering loops
/// a zero-norm operand has cosine distance 1.
pub(crate) fn point_distance(matrix: &FeatureMatrix, i: usize, c: &Centroid, metric: DistanceMetric) -> f64 {
    let row = matrix.row(i);
    match metric {
        DistanceMetric::SquaredEuclidean => {
            let (mut diff, mut covered) = (0.0, 0.0);
            for (j, v) in row.iter() {
                let cj = c.values[j];
                diff += (v - cj) * (v - cj);
                covered += cj * cj;
            }
            (diff + (c.sq_norm - covered).max(0.0)).max(0.0)
        }
        DistanceMetric::Cosine => {
            let xx = matrix.sq_norm(i);
            if xx == 0.0 || c.sq_norm == 0.0 {
                return 1.0;
            }
            (1.0 - row.dot_dense(&c.values) / (xx.sqrt() * c.sq_norm.sqrt())).max(0.0)
        }
    }
}

/// Nearest centroid, lowest index on ties.
pub(crate) fn nearest(matrix: &FeatureMatrix, i: usize, centroids: &[Centroid], metric: DistanceMetric) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (h, c) in centroids.iter().enumerate() {
        let d = point_distance(matrix, i, c, metric);
        if d < best.1 {
            best = (h, d);
        }
    }
    best
}

/// Member means; an empty cluster's centroid moves to the point farthest from
/// its own (freshly updated) centroid, never reusing a point.
pub(crate) fn update_centroids(
    matrix: &FeatureMatrix,
    assignment: &[usize],
    k: usize,
    metric: DistanceMetric,
) -> Vec<Centroid> {
    let d = matrix.cols();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (i, &h) in assignment.iter().enumerate() {
        counts[h] += 1;
        for (j, v) in matrix.row(i).iter() {
            sums[h][j] += v;
        }
    }
    let mut centroids: Vec<Centroid> = sums
        .into_iter()
        .zip(&counts)
        .map(|(mut s, &n)| {
            if n > 0 {
                let inv = n as f64;
                s.iter_mut().for_each(|v| *v /= inv);
            }
            Centroid::new(s)
        })
        .collect();
    let empty: Vec<usize> = (0..k).filter(|&h| counts[h] == 0).collect();
    if !empty.is_empty() {
        let mut far: Vec<(usize, f64)> = assignment
            .iter()
            .enumerate()
            .map(|(i, &h)| (i, point_distance(matrix, i, &centroids[h], metric)))
            .collect();
        // Descending distance, ascending index on ties.
        far.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (h, (i, _)) in empty.into_iter().zip(far) {
            centroids[h] = Centroid::new(matrix.dense_row(i));
        }
    }
    centroids
}

/// Forgy initialization: `k` distinct documents.
pub(crate) fn forgy_indices<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    index::sample(rng, n, k).into_vec()
}

/// Result of a clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub k: usize,
    /// `Σ_x min_c Dist(x, c)` over the final centroids.
    pub potential: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Potential after each assignment step.
    #[serde(default)]
    pub potential_trace: Vec<f64>,
}

impl Clustering {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &h in &self.assignment {
            s[h] += 1;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Forgy: `k` distinct random documents.
    Random,
    Centroids(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub metric: DistanceMetric,
    pub rng_seed: u64,
    pub max_iters: usize,
}

impl KMeansParams {
    pub const DEFAULT_MAX_ITERS: usize = 100;

    pub fn new(k: usize, metric: DistanceMetric, rng_seed: u64) -> Self {
        Self { k, metric, rng_seed, max_iters: Self::DEFAULT_MAX_ITERS }
    }
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    Ok(())
}

pub(crate) fn explicit_centroids(matrix: &FeatureMatrix, k: usize, init: &[Vec<f64>]) -> Result<Vec<Centroid>> {
    if init.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: init.len() });
    }
    init.iter()
        .map(|c| {
            if c.len() != matrix.cols() {
                Err(Error::DimensionMismatch { expected: matrix.cols(), found: c.len() })
            } else {
                Ok(Centroid::new(c.clone()))
            }
        })
        .collect()
}

pub fn kmeans(matrix: &FeatureMatrix, params: &KMeansParams, init: &Init) -> Result<Clustering> {
    let n = matrix.rows();
    check_k(params.k, n)?;
    let centroids = match init {
        Init::Random => {
            let mut rng = seed::rng(params.rng_seed);
            forgy_indices(n, params.k, &mut rng)
                .into_iter()
                .map(|i| Centroid::new(matrix.dense_row(i)))
                .collect()
        }
        Init::Centroids(c) => explicit_centroids(matrix, params.k, c)?,
    };
    Ok(lloyd(matrix, params, centroids))
}

fn lloyd(matrix: &FeatureMatrix, params: &KMeansParams, mut centroids: Vec<Centroid>) -> Clustering {
    let n = matrix.rows();
    let assign = |centroids: &[Centroid]| -> (Vec<usize>, f64) {
        let mut total = 0.0;
        let a = (0..n)
            .map(|i| {
                let (h, d) = nearest(matrix, i, centroids, params.metric);
                total += d;
                h
            })
            .collect();
        (a, total)
    };

    let (mut assignment, phi) = assign(&centroids);
    let mut trace = vec![phi];
    let mut iterations = 1;
    let mut converged = false;
    while iterations < params.max_iters.max(1) {
        centroids = update_centroids(matrix, &assignment, params.k, params.metric);
        let (next, phi) = assign(&centroids);
        iterations += 1;
        trace.push(phi);
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }
    if !converged {
        centroids = update_centroids(matrix, &assignment, params.k, params.metric);
    }
    let potential = (0..n).map(|i| nearest(matrix, i, &centroids, params.metric).1).sum();
    Clustering {
        assignment,
        centroids: centroids.into_iter().map(|c| c.values).collect(),
        k: params.k,
        potential,
        iterations,
        converged,
        potential_trace: trace,
    }
}

/// `Σ_x min_c Dist(x, c)` for the clustering's centroids.
pub fn potential(matrix: &FeatureMatrix, clustering: &Clustering, metric: DistanceMetric) -> Result<f64> {
    let centroids = explicit_centroids(matrix, clustering.k, &clustering.centroids)?;
    Ok((0..matrix.rows()).map(|i| nearest(matrix, i, &centroids, metric).1).sum())
}

/// Annotator-supplied seeds: `(doc_index, cluster_id)` pairs covering every
/// cluster in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    entries: Vec<(usize, usize)>,
    k: usize,
}

impl SeedSet {
    pub fn new(entries: Vec<(usize, usize)>, k: usize) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for &(doc, h) in &entries {
            if h >= k {
                return Err(Error::InvalidParameter(format!("seed cluster {h} outside [0, {k})")));
            }
            if !seen.insert(doc) {
                return Err(Error::InvalidParameter(format!("document {doc} seeded twice")));
            }
        }
        if let Some(h) = (0..k).find(|&h| !entries.iter().any(|e| e.1 == h)) {
            return Err(Error::MissingSeed(h));
        }
        Ok(Self { entries, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    /// Seeds for cluster `h`, ascending by document.
    pub fn members(&self, h: usize) -> Vec<usize> {
        let mut m: Vec<usize> = self.entries.iter().filter(|e| e.1 == h).map(|e| e.0).collect();
        m.sort_unstable();
        m
    }

    /// Reads `doc_id<TAB>cluster_id` lines.
    pub fn read<R: BufRead>(input: R, doc_index: impl Fn(&str) -> Option<usize>) -> Result<Self> {
        let mut entries = Vec::new();
        for (ln, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut f = line.split_whitespace();
            let (Some(doc), Some(h), None) = (f.next(), f.next(), f.next()) else {
                return Err(Error::Parse { line: ln + 1, message: "expected `doc_id cluster_id`".into() });
            };
            let i = doc_index(doc).ok_or_else(|| Error::UnknownDocument(doc.to_string()))?;
            let h: usize = h.parse().map_err(|_| Error::Parse { line: ln + 1, message: "bad cluster id".into() })?;
            entries.push((i, h));
        }
        let k = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
        Self::new(entries, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// One uniformly chosen seed document per cluster.
    #[default]
    Representative,
    /// Mean of the cluster's seed documents.
    SeedMean,
}

impl FromStr for SeedMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "representative" => Ok(SeedMode::Representative),
            "seed_mean" | "seed-mean" | "mean" => Ok(SeedMode::SeedMean),
            other => Err(Error::InvalidParameter(format!("unknown seed mode `{other}`"))),
        }
    }
}

pub fn seeded_init(seeds: &SeedSet, matrix: &FeatureMatrix, mode: SeedMode, rng_seed: u64) -> Result<Vec<Vec<f64>>> {
    if let Some(&(doc, _)) = seeds.entries.iter().find(|e| e.0 >= matrix.rows()) {
        return Err(Error::UnknownDocument(doc.to_string()));
    }
    let mut rng = seed::rng(rng_seed);
    (0..seeds.k)
        .map(|h| {
            let members = seeds.members(h);
            if members.is_empty() {
                return Err(Error::MissingSeed(h));
            }
            Ok(match mode {
                SeedMode::Representative => matrix.dense_row(members[rng.random_range(0..members.len())]),
                SeedMode::SeedMean => {
                    let mut mean = vec![0.0; matrix.cols()];
                    for &i in &members {
                        for (j, v) in matrix.row(i).iter() {
                            mean[j] += v;
                        }
                    }
                    let n = members.len() as f64;
                    mean.iter_mut().for_each(|v| *v /= n);
                    mean
                }
            })
        })
        .collect()
}

/// Footer of a clustering export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringFooter {
    pub k: usize,
    pub potential: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExportRecord {
    Row { doc_id: String, cluster: usize },
    Footer { footer: ClusteringFooter },
}

/// Line-delimited `{"doc_id", "cluster"}` records followed by a footer
/// record carrying k, potential, iterations and the convergence flag.
pub fn write_clustering<W: Write>(mut out: W, clustering: &Clustering, doc_ids: &[String]) -> Result<()> {
    if doc_ids.len() != clustering.assignment.len() {
        return Err(Error::DimensionMismatch { expected: clustering.assignment.len(), found: doc_ids.len() });
    }
    let mut buf = String::new();
    for (id, &h) in doc_ids.iter().zip(&clustering.assignment) {
        let rec = ExportRecord::Row { doc_id: id.clone(), cluster: h };
        buf.push_str(&serde_json::to_string(&rec).expect("json"));
        buf.push('\n');
    }
    let footer = ExportRecord::Footer {
        footer: ClusteringFooter {
            k: clustering.k,
            potential: clustering.potential,
            iterations: clustering.iterations,
            converged: clustering.converged,
        },
    };
    buf.push_str(&serde_json::to_string(&footer).expect("json"));
    buf.push('\n');
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// A clustering export read back: document ids, assignment and footer.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringFile {
    pub doc_ids: Vec<String>,
    pub assignment: Vec<usize>,
    pub footer: Option<ClusteringFooter>,
}

pub fn read_clustering<R: BufRead>(input: R) -> Result<ClusteringFile> {
    let mut file = ClusteringFile { doc_ids: Vec::new(), assignment: Vec::new(), footer: None };
    for (ln, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line).map_err(|e| Error::Parse { line: ln + 1, message: e.to_string() })? {
            ExportRecord::Row { doc_id, cluster } => {
                file.doc_ids.push(doc_id);
                file.assignment.push(cluster);
            }
            ExportRecord::Footer { footer } => file.footer = Some(footer),
        }
    }
    Ok(file)
}
