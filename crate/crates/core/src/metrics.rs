//! Confusion matrices with exact integer tallies.

use alloc::vec::Vec;

use crate::{CoreError, Ratio};

/// `k × k` counts, rows = truth, columns = prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    cells: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            cells: alloc::vec![0; k * k],
        }
    }

    pub fn from_pairs<I>(pairs: I, k: usize) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut cm = Self::new(k);
        for (truth, predicted) in pairs {
            cm.record(truth, predicted)?;
        }
        Ok(cm)
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self, CoreError> {
        let k = rows.len();
        let mut cells = Vec::with_capacity(k * k);
        for row in rows {
            if row.len() != k {
                return Err(CoreError::DimensionMismatch {
                    expected: k,
                    actual: row.len(),
                });
            }
            cells.extend_from_slice(row);
        }
        Ok(ConfusionMatrix { k, cells })
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<(), CoreError> {
        for index in [truth, predicted] {
            if index >= self.k {
                return Err(CoreError::ClassIndex { index, k: self.k });
            }
        }
        self.cells[truth * self.k + predicted] += 1;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cell(&self, truth: usize, predicted: usize) -> u64 {
        self.cells[truth * self.k + predicted]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.cells.chunks(self.k.max(1)).map(<[u64]>::to_vec).collect()
    }

    pub fn row_total(&self, truth: usize) -> u64 {
        self.cells[truth * self.k..(truth + 1) * self.k].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.cell(i, i)).sum()
    }

    /// `trace / total`.
    pub fn accuracy(&self) -> Result<Ratio, CoreError> {
        Ratio::new(self.trace(), self.total()).ok_or(CoreError::EmptyMatrix)
    }

    /// Recall of class `class`: `cells[c][c] / row_total(c)`.
    pub fn sensitivity(&self, class: usize) -> Result<Ratio, CoreError> {
        if class >= self.k {
            return Err(CoreError::ClassIndex {
                index: class,
                k: self.k,
            });
        }
        Ratio::new(self.cell(class, class), self.row_total(class))
            .ok_or(CoreError::EmptyClassRow(class))
    }
}
