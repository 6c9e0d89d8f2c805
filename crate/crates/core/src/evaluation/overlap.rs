//! Projected overlap between constraint segments and constraint-set coherence.
//!
//! A constraint's segment joins the feature vectors of its two documents.
//! The overlap of `a` on `b` is the length of the part of `b` covered by the
//! orthogonal projection of `a` onto the line through `b`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constraints::{Constraint, ConstraintSet};
use crate::error::{Error, Result};
use crate::sparse::FeatureMatrix;

/// Intervals shorter than this (in units of `|b|`) count as no overlap.
pub const ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapRule {
    /// Intersection of parametric intervals along `b`.
    #[default]
    Parametric,
    /// Three-case distance comparison against `b2`, kept for comparison.
    Piecewise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapGeometry {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub overlap_length: f64,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Overlap from parametric coordinates of `a`'s endpoints along `b`
/// (`t = 0` at `b1`, `t = 1` at `b2`).
fn interval_overlap(t1: f64, t2: f64, len_b: f64) -> f64 {
    let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    let covered = hi.min(1.0) - lo.max(0.0);
    if covered <= ZERO_TOLERANCE {
        0.0
    } else {
        covered * len_b
    }
}

fn check_dims(a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> Result<()> {
    let d = b.0.len();
    for v in [a.0, a.1, b.1] {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: v.len() });
        }
    }
    Ok(())
}

pub fn projected_overlap(a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> Result<f64> {
    projected_overlap_with(a, b, OverlapRule::Parametric).map(|g| g.overlap_length)
}

pub fn projected_overlap_with(a: (&[f64], &[f64]), b: (&[f64], &[f64]), rule: OverlapRule) -> Result<OverlapGeometry> {
    check_dims(a, b)?;
    let bb = sub(b.1, b.0);
    let sq = dot(&bb, &bb);
    if sq <= 0.0 {
        return Err(Error::DegenerateSegment);
    }
    let t1 = dot(&sub(a.0, b.0), &bb) / sq;
    let t2 = dot(&sub(a.1, b.0), &bb) / sq;
    let at = |t: f64| b.0.iter().zip(&bb).map(|(o, d)| o + t * d).collect::<Vec<f64>>();
    let (p1, p2) = (at(t1), at(t2));
    let len_b = sq.sqrt();
    let overlap_length = match rule {
        OverlapRule::Parametric => interval_overlap(t1, t2, len_b),
        OverlapRule::Piecewise => {
            let (d22, d21) = (dist(b.1, &p2), dist(b.1, &p1));
            if len_b <= d22 && len_b <= d21 {
                0.0
            } else if d22 < len_b && d21 >= len_b {
                dist(b.0, &p2)
            } else if d22 < len_b && d21 < len_b {
                dist(&p1, &p2)
            } else {
                // Mirror of the partial case with the endpoints exchanged.
                dist(b.0, &p1)
            }
        }
    };
    Ok(OverlapGeometry { b1: b.0.to_vec(), b2: b.1.to_vec(), p1, p2, overlap_length })
}

/// Dot products between the rows referenced by a constraint set.
struct Gram {
    index: BTreeMap<usize, usize>,
    g: Vec<Vec<f64>>,
}

impl Gram {
    fn new(matrix: &FeatureMatrix, docs: impl IntoIterator<Item = usize>) -> Self {
        let index: BTreeMap<usize, usize> = docs.into_iter().map(|d| (d, 0)).collect();
        let rows: Vec<usize> = index.keys().copied().collect();
        let index = rows.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        let g = rows
            .iter()
            .map(|&i| rows.iter().map(|&j| if i == j { matrix.sq_norm(i) } else { matrix.row(i).dot(&matrix.row(j)) }).collect())
            .collect();
        Self { index, g }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.g[self.index[&i]][self.index[&j]]
    }

    /// Overlap of segment `a` projected on segment `b`; a zero-length `b`
    /// has nothing to overlap.
    fn overlap(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let (b1, b2) = b;
        let sq = self.at(b1, b1) + self.at(b2, b2) - 2.0 * self.at(b1, b2);
        if sq <= ZERO_TOLERANCE * (self.at(b1, b1) + self.at(b2, b2)) || sq <= 0.0 {
            return 0.0;
        }
        let t = |x: usize| (self.at(x, b2) - self.at(x, b1) - self.at(b1, b2) + self.at(b1, b1)) / sq;
        interval_overlap(t(a.0), t(a.1), sq.sqrt())
    }
}

fn zero_mutual_overlap(gram: &Gram, m: &Constraint, c: &Constraint) -> bool {
    gram.overlap(c.pair(), m.pair()) == 0.0 && gram.overlap(m.pair(), c.pair()) == 0.0
}

/// Fraction of must-link/cannot-link pairs with zero projected overlap in
/// both directions. 1.0 when either kind is absent.
pub fn coherence(set: &ConstraintSet, matrix: &FeatureMatrix) -> Result<f64> {
    if let Some(m) = set.max_doc() {
        if m >= matrix.rows() {
            return Err(Error::UnknownDocument(m.to_string()));
        }
    }
    if set.n_must() == 0 || set.n_cannot() == 0 {
        return Ok(1.0);
    }
    let gram = Gram::new(matrix, set.iter().flat_map(|c| [c.a, c.b]));
    let must: Vec<Constraint> = set.must().collect();
    let cannot: Vec<Constraint> = set.cannot().collect();
    let count_row = |m: &Constraint| cannot.iter().filter(|c| zero_mutual_overlap(&gram, m, c)).count();
    #[cfg(feature = "parallel")]
    let zero: usize = {
        use rayon::prelude::*;
        must.par_iter().map(count_row).sum()
    };
    #[cfg(not(feature = "parallel"))]
    let zero: usize = must.iter().map(count_row).sum();
    Ok(zero as f64 / (must.len() * cannot.len()) as f64)
}
