use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVectorView};

use crate::error::{Error, Result};

/// Smallest sample from which two lags can be formed (`T_eff = T - 2 >= 2`).
pub const MIN_ROWS: usize = 4;

/// Named multivariate sample, `T` rows (chronological) by `k` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl TimeSeriesFrame {
    pub fn new(names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::Dimension(format!(
                "{} names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::Parse("duplicate column names".into()));
        }
        if names.iter().any(|n| n.is_empty()) {
            return Err(Error::Parse("empty column name".into()));
        }
        if values.nrows() < MIN_ROWS {
            return Err(Error::InsufficientRows {
                needed: MIN_ROWS,
                got: values.nrows(),
            });
        }
        if let Some((idx, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let col = idx / values.nrows();
            return Err(Error::NonFinite(format!("column `{}`", names[col])));
        }
        Ok(Self { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Number of rows `T`.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of observables `k`.
    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<DVectorView<'_, f64>> {
        Ok(self.values.column(self.index_of(name)?))
    }

    /// Columns `names` over the row range `rows`.
    pub fn select(&self, names: &[String], rows: std::ops::Range<usize>) -> Result<DMatrix<f64>> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        let nrows = rows.len();
        Ok(DMatrix::from_fn(nrows, idx.len(), |i, j| {
            self.values[(rows.start + i, idx[j])]
        }))
    }

    /// Same data with columns reordered to `names` (which must be a permutation).
    pub fn reorder(&self, names: &[String]) -> Result<Self> {
        if names.len() != self.names.len() {
            return Err(Error::Dimension("reorder needs every column".into()));
        }
        let values = self.select(names, 0..self.len())?;
        Self::new(names.to_vec(), values)
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        Self::new(self.names.clone(), self.values.rows(0, n).into_owned())
    }
}
