use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::LabelAssignment;
use crate::error::{Error, Result};

/// Nominal Krippendorff's alpha over labelings of shared documents.
///
/// Documents labeled by fewer than two labelings are skipped. With a single
/// value in use everywhere there is no disagreement to expect and the result
/// is 1.0.
pub fn krippendorff_alpha(labelings: &[LabelAssignment]) -> Result<f64> {
    if labelings.len() < 2 {
        return Err(Error::InsufficientData(format!("{} labeling(s); at least 2 required", labelings.len())));
    }
    let docs: BTreeSet<&String> = labelings.iter().flat_map(|l| l.labels.keys()).collect();
    let mut values: BTreeMap<&str, usize> = BTreeMap::new();
    let mut units: Vec<Vec<usize>> = Vec::new();
    for doc in docs {
        let unit: Vec<usize> = labelings
            .iter()
            .filter_map(|l| l.labels.get(doc))
            .map(|v| {
                let next = values.len();
                *values.entry(v.as_str()).or_insert(next)
            })
            .collect();
        if unit.len() >= 2 {
            units.push(unit);
        }
    }
    if units.is_empty() {
        return Err(Error::InsufficientData("no document carries two or more labels".into()));
    }
    alpha_from_units(&units, values.len())
}

/// Alpha from per-unit value lists (value ids in `0..n_values`).
pub fn alpha_from_units(units: &[Vec<usize>], n_values: usize) -> Result<f64> {
    let mut o = vec![vec![0.0; n_values]; n_values];
    for unit in units.iter().filter(|u| u.len() >= 2) {
        let m = unit.len() as f64;
        for (i, &c) in unit.iter().enumerate() {
            for (j, &k) in unit.iter().enumerate() {
                if i != j {
                    o[c][k] += 1.0 / (m - 1.0);
                }
            }
        }
    }
    let n_c: Vec<f64> = o.iter().map(|r| r.iter().sum()).collect();
    let n: f64 = n_c.iter().sum();
    if n == 0.0 {
        return Err(Error::InsufficientData("no pairable values".into()));
    }
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..n_values {
        for k in 0..n_values {
            if c != k {
                observed += o[c][k];
                expected += n_c[c] * n_c[k];
            }
        }
    }
    if expected == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub category_names: Vec<String>,
    pub counts: Vec<Vec<usize>>,
    pub row_totals: Vec<usize>,
    pub col_totals: Vec<usize>,
    pub n: usize,
    /// Share of documents both runs place in the same category.
    pub agreement: f64,
}

/// Cross-tabulation of two runs with aligned cluster ids.
pub fn confusion_matrix(
    run_a: &[usize],
    k_a: usize,
    run_b: &[usize],
    k_b: usize,
    category_names: &[String],
) -> Result<ConfusionMatrix> {
    if k_a != k_b {
        return Err(Error::IdSpaceMismatch(k_a, k_b));
    }
    if run_a.len() != run_b.len() {
        return Err(Error::DimensionMismatch { expected: run_a.len(), found: run_b.len() });
    }
    let k = k_a;
    let names: Vec<String> = if category_names.is_empty() {
        (0..k).map(|h| h.to_string()).collect()
    } else if category_names.len() == k {
        category_names.to_vec()
    } else {
        return Err(Error::DimensionMismatch { expected: k, found: category_names.len() });
    };
    let mut counts = vec![vec![0; k]; k];
    for (&a, &b) in run_a.iter().zip(run_b) {
        if a >= k || b >= k {
            return Err(Error::InvalidParameter(format!("cluster id outside [0, {k})")));
        }
        counts[a][b] += 1;
    }
    let row_totals = counts.iter().map(|r| r.iter().sum()).collect();
    let col_totals = (0..k).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
    let n = run_a.len();
    let trace: usize = (0..k).map(|i| counts[i][i]).sum();
    let agreement = if n == 0 { 0.0 } else { trace as f64 / n as f64 };
    Ok(ConfusionMatrix { category_names: names, counts, row_totals, col_totals, n, agreement })
}
