//! Shared domain types: partitions, samples, lagged designs and coefficient
//! matrices.

mod design;
mod frame;
mod moments;
mod params;
mod partition;

pub use design::{build_lagged_design, LaggedDesign, LaggedVar, MAX_LAG};
pub use frame::{TimeSeriesFrame, MIN_ROWS};
pub use moments::{Moments, GRAM_RANK_TOL};
pub use params::{fit_params, NamedMatrix, ShockVariance, StateSpaceParams};
pub(crate) use params::degenerate;
pub use partition::{Role, StatePartition};

#[cfg(test)]
pub(crate) use params::fit_centered;
