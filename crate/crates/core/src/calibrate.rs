//! Empirical size and power of the Srivastava diagonality test.

use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::centered;
use crate::search::replication_seed;
use crate::stats::{srivastava_test_with, SrivastavaOptions};

/// One grid point: `repetitions` samples of `n` rows from a `p`-variate
/// normal with unit variances and every pairwise correlation equal to
/// `correlation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub alpha: f64,
    pub n: usize,
    pub p: usize,
    pub correlation: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub cell: CalibrationCell,
    pub rejections: usize,
}

impl CalibrationRow {
    pub fn rejection_rate(&self) -> f64 {
        self.rejections as f64 / self.cell.repetitions as f64
    }

    /// Binomial standard error of the rejection rate under rate `alpha`.
    pub fn standard_error(&self) -> f64 {
        let a = self.cell.alpha;
        (a * (1.0 - a) / self.cell.repetitions as f64).sqrt()
    }
}

impl CalibrationCell {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.p < 2 {
            return Err(Error::Config(format!("p must be at least 2, got {}", self.p)));
        }
        if self.n < self.p + 3 {
            return Err(Error::Config(format!("n must be at least p + 3 = {}, got {}", self.p + 3, self.n)));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(Error::Config(format!(
                "correlation must lie in [0, 1), got {}",
                self.correlation
            )));
        }
        Ok(())
    }
}

/// `n x p` draw with unit variances and equal pairwise correlation `rho`,
/// built from one shared factor.
pub fn equicorrelated_sample(n: usize, p: usize, rho: f64, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::<f64>::from_fn(n, p + 1, |_, _| StandardNormal.sample(&mut rng));
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    DMatrix::from_fn(n, p, |i, j| a * raw[(i, p)] + b * raw[(i, j)])
}

/// Runs one cell on the current rayon pool. Repetition `r` draws from
/// `replication_seed(seed, r)`, so results do not depend on thread count.
/// Samples are demeaned, which spends one coefficient per column.
pub fn calibrate_cell(cell: &CalibrationCell, seed: u64) -> Result<CalibrationRow> {
    cell.validate()?;
    let opts = SrivastavaOptions {
        coefficients_used: 1,
        unbiased_divisor: false,
    };
    let rejections = (0..cell.repetitions)
        .into_par_iter()
        .map(|r| {
            let x = centered(&equicorrelated_sample(cell.n, cell.p, cell.correlation, replication_seed(seed, r)));
            srivastava_test_with(&x, cell.alpha, opts).map(|s| s.rejected as usize)
        })
        .sum::<Result<usize>>()?;
    Ok(CalibrationRow {
        cell: *cell,
        rejections,
    })
}

/// Runs every cell; cell `i` uses master seed `replication_seed(seed, i)`.
pub fn calibrate(cells: &[CalibrationCell], seed: u64) -> Result<Vec<CalibrationRow>> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| calibrate_cell(c, replication_seed(seed, i)))
        .collect()
}

pub const CSV_HEADER: [&str; 8] = [
    "rejection_rate",
    "alpha",
    "difference",
    "n",
    "correlation",
    "m",
    "repetitions",
    "rejections",
];

/// One row per cell; `difference` is the rejection rate minus `alpha`.
pub fn write_calibration_csv<W: Write>(rows: &[CalibrationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let c = &r.cell;
        w.write_record([
            r.rejection_rate().to_string(),
            c.alpha.to_string(),
            (r.rejection_rate() - c.alpha).to_string(),
            c.n.to_string(),
            c.correlation.to_string(),
            c.p.to_string(),
            c.repetitions.to_string(),
            r.rejections.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
