//! Cluster validity and constraint-quality measures.

mod agreement;
mod contingency;
mod overlap;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use agreement::{alpha_from_units, confusion_matrix, krippendorff_alpha, ConfusionMatrix};
pub use contingency::{contingency, mutual_information, nmi, ContingencyTable, MutualInformation};
pub use overlap::{coherence, projected_overlap, projected_overlap_with, OverlapGeometry, OverlapRule, ZERO_TOLERANCE};

use crate::constraints::{violations, ConstraintSet};
use crate::error::{Error, Result};
use crate::pckmeans::RunManifest;

/// Fraction of `set` violated by the unconstrained reference partition.
pub fn informativeness(set: &ConstraintSet, reference: &[usize]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyConstraints);
    }
    Ok(violations(reference, set)?.len() as f64 / set.len() as f64)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub contingency: Option<ContingencyTable>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nmi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub informativeness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coherence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub provenance: Vec<RunManifest>,
}

impl MetricsReport {
    pub fn with_table(table: ContingencyTable) -> Result<Self> {
        let mi = mutual_information(&table)?.mi;
        let nmi = nmi(&table)?;
        Ok(Self { contingency: Some(table), mi: Some(mi), nmi: Some(nmi), ..Self::default() })
    }
}

/// One JSON record per line.
pub fn write_reports<W: Write, T: Serialize>(mut out: W, reports: &[T]) -> Result<()> {
    for r in reports {
        let line = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Two whitespace-separated columns, one point per line.
pub fn write_series<W: Write>(mut out: W, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let mut buf = String::new();
    for (a, b) in x.iter().zip(y) {
        buf.push_str(&format!("{a} {b}\n"));
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}
