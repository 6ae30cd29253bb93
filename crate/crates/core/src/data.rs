//! Sample containers.
//!
//! A [`SampleMatrix`] stores one observation per row in row-major order. A
//! [`PairedDataset`] couples two equal-height matrices so that row `i` of each
//! forms the pair `Z_i = (X_i, Y_i)` consumed by the martingale statistics.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datagen::SimRng;
use crate::error::{Error, Result};

/// An `n x d` real matrix, one observation per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SampleMatrix {
    /// Builds a matrix from row-major values. Every entry must be finite.
    pub fn new(values: Vec<f64>, cols: usize) -> Result<Self> {
        if cols == 0 {
            return Err(Error::InvalidParameter("matrix needs at least one column".into()));
        }
        if !values.len().is_multiple_of(cols) {
            return Err(Error::Ragged {
                len: values.len(),
                cols,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            rows: values.len() / cols,
            cols,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(values, cols)
    }

    /// A single-column matrix.
    pub fn column(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub(crate) fn from_raw(values: Vec<f64>, cols: usize) -> Self {
        debug_assert!(cols > 0 && values.len().is_multiple_of(cols));
        Self {
            rows: values.len() / cols,
            cols,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Row concatenation `[self; other]`.
    pub fn stack(&self, other: &SampleMatrix) -> Result<SampleMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        let mut values = Vec::with_capacity(self.values.len() + other.values.len());
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&other.values);
        Ok(Self::from_raw(values, self.cols))
    }

    /// The first `rows` rows.
    pub fn truncated(&self, rows: usize) -> SampleMatrix {
        let rows = rows.min(self.rows);
        Self::from_raw(self.values[..rows * self.cols].to_vec(), self.cols)
    }

    pub(crate) fn select_rows(&self, idx: impl Iterator<Item = usize>) -> SampleMatrix {
        let mut values = Vec::new();
        for i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self::from_raw(values, self.cols)
    }
}

/// Two equal-size samples paired row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDataset {
    x: SampleMatrix,
    y: SampleMatrix,
}

impl PairedDataset {
    /// Pairs `x` and `y`. Both need the same number of rows (at least 2) and
    /// the same number of columns.
    pub fn new(x: SampleMatrix, y: SampleMatrix) -> Result<Self> {
        if x.ncols() != y.ncols() {
            return Err(Error::DimensionMismatch {
                expected: x.ncols(),
                found: y.ncols(),
            });
        }
        if x.nrows() != y.nrows() {
            return Err(Error::UnequalSampleSizes {
                x: x.nrows(),
                y: y.nrows(),
            });
        }
        if x.nrows() < 2 {
            return Err(Error::TooFewRows {
                needed: 2,
                found: x.nrows(),
            });
        }
        Ok(Self { x, y })
    }

    /// Pairs two samples of possibly different size by dropping the tail of
    /// the longer one.
    pub fn truncate_to_common(x: SampleMatrix, y: SampleMatrix) -> Result<Self> {
        let n = x.nrows().min(y.nrows());
        Self::new(x.truncated(n), y.truncated(n))
    }

    pub fn from_columns(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(SampleMatrix::column(x)?, SampleMatrix::column(y)?)
    }

    pub fn x(&self) -> &SampleMatrix {
        &self.x
    }

    pub fn y(&self) -> &SampleMatrix {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Exchanges the roles of the two samples.
    pub fn swapped(&self) -> PairedDataset {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    /// Swaps `X_i` and `Y_i` inside pair `i` only.
    pub fn swap_within_pair(&self, i: usize) -> PairedDataset {
        let d = self.dim();
        let mut x = self.x.values.clone();
        let mut y = self.y.values.clone();
        x[i * d..(i + 1) * d].swap_with_slice(&mut y[i * d..(i + 1) * d]);
        Self {
            x: SampleMatrix::from_raw(x, d),
            y: SampleMatrix::from_raw(y, d),
        }
    }

    /// Reorders the pairs with a seeded shuffle. The martingale statistics
    /// depend on pair order; this makes the order an explicit input.
    pub fn shuffle_pairs(&self, seed: u64) -> PairedDataset {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut SimRng::seed_from(seed));
        self.reorder(&order)
    }

    pub(crate) fn reorder(&self, order: &[usize]) -> PairedDataset {
        Self {
            x: self.x.select_rows(order.iter().copied()),
            y: self.y.select_rows(order.iter().copied()),
        }
    }

    /// The pairs `lo..hi`.
    pub(crate) fn slice(&self, lo: usize, hi: usize) -> PairedDataset {
        Self {
            x: self.x.select_rows(lo..hi),
            y: self.y.select_rows(lo..hi),
        }
    }

    /// All `2n` observations, `X` rows first.
    pub fn pooled(&self) -> SampleMatrix {
        self.x
            .stack(&self.y)
            .expect("paired samples share their dimension")
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(matches!(
            SampleMatrix::new(vec![1.0, 2.0, 3.0], 2),
            Err(Error::Ragged { .. })
        ));
        assert!(matches!(
            SampleMatrix::new(vec![1.0, f64::NAN], 1),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn pairing_requires_equal_sizes() {
        let x = SampleMatrix::column(&[1.0, 2.0, 3.0]).unwrap();
        let y = SampleMatrix::column(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            PairedDataset::new(x.clone(), y.clone()),
            Err(Error::UnequalSampleSizes { x: 3, y: 2 })
        ));
        let p = PairedDataset::truncate_to_common(x, y).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn pairing_requires_two_rows() {
        let x = SampleMatrix::column(&[1.0]).unwrap();
        assert!(matches!(
            PairedDataset::new(x.clone(), x),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn within_pair_swap_touches_one_row() {
        let p = PairedDataset::from_columns(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        let s = p.swap_within_pair(1);
        assert_eq!(s.x().as_slice(), &[1.0, 5.0, 3.0]);
        assert_eq!(s.y().as_slice(), &[4.0, 2.0, 6.0]);
    }

    #[test]
    fn shuffle_is_seeded() {
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let p = PairedDataset::from_columns(&xs, &xs).unwrap();
        assert_eq!(p.shuffle_pairs(3), p.shuffle_pairs(3));
        assert_ne!(p.shuffle_pairs(3), p.shuffle_pairs(4));
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(vals), 2.0);
    }
}
