//! Row-major sparse feature matrix.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Compressed sparse rows. Row `i` corresponds to `documents[i]` of the
/// corpus it was built from; only non-zero weights are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    sq_norms: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SparseRow<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl<'a> SparseRow<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(j, v)| v * dense[j]).sum()
    }

    pub fn dot(&self, other: &SparseRow<'_>) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

impl FeatureMatrix {
    /// Builds a matrix from `(row, col, weight)` triplets. Zero weights are
    /// dropped; duplicate coordinates are rejected.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(r, c, v) in &triplets {
            if r >= rows {
                return Err(Error::DimensionMismatch { expected: rows, found: r + 1 });
            }
            if c >= cols {
                return Err(Error::DimensionMismatch { expected: cols, found: c + 1 });
            }
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite weight at ({r}, {c})")));
            }
        }
        triplets.retain(|t| t.2 != 0.0);
        triplets.sort_by_key(|t| (t.0, t.1));
        if let Some(w) = triplets.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidParameter(format!(
                "duplicate entry ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut indptr = vec![0usize; rows + 1];
        for &(r, _, _) in &triplets {
            indptr[r + 1] += 1;
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        let indices = triplets.iter().map(|t| t.1).collect();
        let values = triplets.iter().map(|t| t.2).collect();
        Ok(Self::finish(rows, cols, indptr, indices, values))
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        let cols = dense.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in dense.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: row.len() });
            }
            triplets.extend(row.iter().enumerate().map(|(j, &v)| (i, j, v)));
        }
        Self::from_triplets(dense.len(), cols, triplets)
    }

    fn finish(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        let sq_norms = (0..rows)
            .map(|i| values[indptr[i]..indptr[i + 1]].iter().map(|v| v * v).sum())
            .collect();
        Self { rows, cols, indptr, indices, values, sq_norms }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let span = self.indptr[i]..self.indptr[i + 1];
        SparseRow { indices: &self.indices[span.clone()], values: &self.values[span] }
    }

    pub fn sq_norm(&self, i: usize) -> f64 {
        self.sq_norms[i]
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (j, v) in self.row(i).iter() {
            out[j] = v;
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.dense_row(i)).collect()
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).iter().map(move |(j, v)| (i, j, v)))
    }

    /// Sub-matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let (mut indices, mut values) = (Vec::new(), Vec::new());
        for &r in rows {
            let row = self.row(r);
            indices.extend_from_slice(row.indices);
            values.extend_from_slice(row.values);
            indptr.push(indices.len());
        }
        Self::finish(rows.len(), self.cols, indptr, indices, values)
    }

    /// Coordinate-triplet export: header `rows cols nnz`, then one
    /// `row col weight` line per stored entry.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = format!("{} {} {}\n", self.rows, self.cols, self.nnz());
        for (i, j, v) in self.triplets() {
            writeln!(buf, "{i} {j} {v:?}").expect("string write");
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn read_triplets<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (rows, cols, nnz) = loop {
            let Some((ln, line)) = lines.next() else {
                return Err(Error::Parse { line: 0, message: "missing header".into() });
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f = parse_fields::<usize>(&line, 3, ln + 1)?;
            break (f[0], f[1], f[2]);
        };
        let mut triplets = Vec::with_capacity(nnz);
        for (ln, line) in lines {
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 3 {
                return Err(parse_err(ln + 1, "expected `row col weight`"));
            }
            let r = fields[0].parse().map_err(|_| parse_err(ln + 1, "bad row"))?;
            let c = fields[1].parse().map_err(|_| parse_err(ln + 1, "bad col"))?;
            let v = fields[2].parse().map_err(|_| parse_err(ln + 1, "bad weight"))?;
            triplets.push((r, c, v));
        }
        if triplets.len() != nnz {
            return Err(parse_err(1, &format!("header says {nnz} entries, found {}", triplets.len())));
        }
        Self::from_triplets(rows, cols, triplets)
    }
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse { line, message: message.to_string() }
}

fn parse_fields<T: std::str::FromStr>(line: &str, n: usize, ln: usize) -> Result<Vec<T>> {
    let out: Vec<T> = line
        .split_whitespace()
        .map(|f| f.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(ln, "unparseable header"))?;
    if out.len() != n {
        return Err(parse_err(ln, "expected `rows cols nnz`"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_entries_are_not_stored() {
        let m = FeatureMatrix::from_dense(&[vec![0.0, 1.5], vec![0.0, 0.0]]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.row(1).nnz(), 0);
        assert_eq!(m.sq_norm(0), 2.25);
    }

    #[test]
    fn duplicate_triplets_rejected() {
        let err = FeatureMatrix::from_triplets(1, 2, vec![(0, 1, 1.0), (0, 1, 2.0)]);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn out_of_range_row_rejected() {
        let err = FeatureMatrix::from_triplets(1, 2, vec![(1, 0, 1.0)]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn triplet_text_round_trip() {
        let m = FeatureMatrix::from_dense(&[vec![0.1, 0.0, 3.0], vec![0.0, 2.0 / 3.0, 0.0]]).unwrap();
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("2 3 3\n"));
        let back = FeatureMatrix::read_triplets(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn sparse_dot_matches_dense() {
        let m = FeatureMatrix::from_dense(&[vec![1.0, 0.0, 2.0, 4.0], vec![3.0, 5.0, 0.0, 1.0]]).unwrap();
        assert_eq!(m.row(0).dot(&m.row(1)), 7.0);
        assert_eq!(m.row(0).dot_dense(&m.dense_row(1)), 7.0);
    }
}
