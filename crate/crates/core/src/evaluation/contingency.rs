use serde::{Deserialize, Serialize};

use crate::corpus::IndexedLabels;
use crate::error::{Error, Result};

/// Class × cluster count table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<usize>>,
    pub row_marginals: Vec<usize>,
    pub col_marginals: Vec<usize>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn from_counts(counts: Vec<Vec<usize>>) -> Result<Self> {
        let cols = counts.first().map_or(0, Vec::len);
        if let Some(bad) = counts.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, found: bad.len() });
        }
        let row_marginals: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_marginals: Vec<usize> = (0..cols).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        let n = row_marginals.iter().sum();
        Ok(Self { counts, row_marginals, col_marginals, n })
    }

    /// Table from parallel class and cluster id slices.
    pub fn from_pairs(classes: &[usize], n_classes: usize, clusters: &[usize], n_clusters: usize) -> Result<Self> {
        if classes.len() != clusters.len() {
            return Err(Error::DimensionMismatch { expected: classes.len(), found: clusters.len() });
        }
        let mut counts = vec![vec![0; n_clusters]; n_classes];
        for (&c, &k) in classes.iter().zip(clusters) {
            if c >= n_classes || k >= n_clusters {
                return Err(Error::InvalidParameter(format!("label ({c}, {k}) outside a {n_classes}×{n_clusters} table")));
            }
            counts[c][k] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.col_marginals.len()
    }

    /// True when every non-empty row and every non-empty column holds exactly
    /// one non-zero cell.
    pub fn is_permutation(&self) -> bool {
        let row_ok = self.counts.iter().all(|r| r.iter().filter(|&&v| v > 0).count() <= 1);
        let col_ok = (0..self.n_clusters()).all(|j| self.counts.iter().filter(|r| r[j] > 0).count() <= 1);
        row_ok && col_ok
    }
}

/// Counts labeled documents only; rows follow the label order of `labels`,
/// columns are cluster ids `0..k`.
pub fn contingency(labels: &IndexedLabels, assignment: &[usize], k: usize) -> Result<ContingencyTable> {
    if labels.n_docs() > assignment.len() {
        return Err(Error::UnknownDocument(assignment.len().to_string()));
    }
    let mut counts = vec![vec![0; k]; labels.k()];
    for (doc, class) in labels.entries() {
        let cluster = assignment[doc];
        if cluster >= k {
            return Err(Error::InvalidParameter(format!("cluster id {cluster} outside [0, {k})")));
        }
        counts[class][cluster] += 1;
    }
    ContingencyTable::from_counts(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualInformation {
    pub mi: f64,
    pub h_c: f64,
    pub h_c_given_k: f64,
    pub h_k: f64,
}

fn entropy(marginals: &[usize], n: f64) -> f64 {
    -marginals
        .iter()
        .filter(|&&h| h > 0)
        .map(|&h| {
            let p = h as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Empirical mutual information in nats.
pub fn mutual_information(table: &ContingencyTable) -> Result<MutualInformation> {
    if table.n == 0 {
        return Err(Error::EmptyTable);
    }
    let n = table.n as f64;
    let h_c = entropy(&table.row_marginals, n);
    let h_k = entropy(&table.col_marginals, n);
    let mut h_c_given_k = 0.0;
    for row in &table.counts {
        for (j, &h) in row.iter().enumerate() {
            if h > 0 {
                h_c_given_k -= (h as f64 / n) * (h as f64 / table.col_marginals[j] as f64).ln();
            }
        }
    }
    let mi = (h_c - h_c_given_k).max(0.0);
    Ok(MutualInformation { mi, h_c, h_c_given_k, h_k })
}

/// `mi / max(H(C), H(K))`; exactly 1 for permutation-structured tables,
/// including the single-class single-cluster table.
pub fn nmi(table: &ContingencyTable) -> Result<f64> {
    let m = mutual_information(table)?;
    if table.is_permutation() {
        return Ok(1.0);
    }
    let denom = m.h_c.max(m.h_k);
    if denom <= 0.0 {
        return Ok(1.0);
    }
    Ok((m.mi / denom).clamp(0.0, 1.0))
}
