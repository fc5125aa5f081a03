use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::frame::{TimeSeriesFrame, MIN_ROWS};
use super::partition::{Role, StatePartition};
use crate::error::{Error, Result};
use crate::linalg::center_columns;

/// Largest lag held by a [`LaggedDesign`].
pub const MAX_LAG: usize = 2;

/// A variable at a given lag, e.g. `k[t-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaggedVar {
    pub name: String,
    pub lag: usize,
}

impl LaggedVar {
    pub fn new(name: impl Into<String>, lag: usize) -> Self {
        Self {
            name: name.into(),
            lag,
        }
    }
}

impl fmt::Display for LaggedVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lag == 0 {
            write!(f, "{}[t]", self.name)
        } else {
            write!(f, "{}[t-{}]", self.name, self.lag)
        }
    }
}

/// Lagged column blocks for one partition over the common usable rows
/// `t = 2..T-1`.
///
/// Row `i` of the lag-`l` block for role `r` is row `i + 2 - l` of the source
/// frame restricted to the variables with role `r`.
#[derive(Debug, Clone)]
pub struct LaggedDesign {
    partition: StatePartition,
    // Indexed by [role][lag].
    blocks: [[DMatrix<f64>; MAX_LAG + 1]; 3],
    t_eff: usize,
}

fn role_index(role: Role) -> usize {
    match role {
        Role::Exo => 0,
        Role::Endo => 1,
        Role::Control => 2,
    }
}

pub fn build_lagged_design(frame: &TimeSeriesFrame, part: &StatePartition) -> Result<LaggedDesign> {
    let t = frame.len();
    if t < MIN_ROWS {
        return Err(Error::InsufficientRows {
            needed: MIN_ROWS,
            got: t,
        });
    }
    for name in part.all_names() {
        frame.index_of(name)?;
    }
    let t_eff = t - MAX_LAG;
    let block = |role: Role, lag: usize| -> Result<DMatrix<f64>> {
        let start = MAX_LAG - lag;
        frame.select(part.names(role), start..start + t_eff)
    };
    let roles = [Role::Exo, Role::Endo, Role::Control];
    let mut blocks: [[DMatrix<f64>; MAX_LAG + 1]; 3] = Default::default();
    for role in roles {
        for lag in 0..=MAX_LAG {
            blocks[role_index(role)][lag] = block(role, lag)?;
        }
    }
    Ok(LaggedDesign {
        partition: part.clone(),
        blocks,
        t_eff,
    })
}

impl LaggedDesign {
    pub fn partition(&self) -> &StatePartition {
        &self.partition
    }

    /// Usable row count, `T - 2`.
    pub fn t_eff(&self) -> usize {
        self.t_eff
    }

    pub fn block(&self, role: Role, lag: usize) -> &DMatrix<f64> {
        &self.blocks[role_index(role)][lag]
    }

    /// Copy with every block centered over the usable rows.
    pub fn centered(&self) -> LaggedDesign {
        let mut out = self.clone();
        for role in out.blocks.iter_mut() {
            for b in role.iter_mut() {
                center_columns(b);
            }
        }
        out
    }

    /// Horizontal concatenation of the requested `(role, lag)` blocks, with
    /// matching column labels.
    pub fn stack(&self, parts: &[(Role, usize)]) -> (DMatrix<f64>, Vec<LaggedVar>) {
        let ncols: usize = parts.iter().map(|&(r, l)| self.block(r, l).ncols()).sum();
        let mut out = DMatrix::zeros(self.t_eff, ncols);
        let mut labels = Vec::with_capacity(ncols);
        let mut col = 0;
        for &(role, lag) in parts {
            let b = self.block(role, lag);
            out.columns_mut(col, b.ncols()).copy_from(b);
            col += b.ncols();
            labels.extend(
                self.partition
                    .names(role)
                    .iter()
                    .map(|n| LaggedVar::new(n.clone(), lag)),
            );
        }
        (out, labels)
    }

    /// Column of a single lagged variable.
    pub fn column(&self, var: &LaggedVar) -> Result<nalgebra::DVectorView<'_, f64>> {
        let role = self
            .partition
            .role_of(&var.name)
            .ok_or_else(|| Error::UnknownVariable(var.name.clone()))?;
        if var.lag > MAX_LAG {
            return Err(Error::Config(format!("lag {} exceeds {MAX_LAG}", var.lag)));
        }
        let idx = self
            .partition
            .names(role)
            .iter()
            .position(|n| *n == var.name)
            .expect("role_of found it");
        Ok(self.block(role, var.lag).column(idx))
    }
}
