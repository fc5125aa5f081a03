//! Gaussian log-likelihood and penalized scores of fitted candidates.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_lagged_design, LaggedDesign, LaggedVar, Moments, StatePartition, TimeSeriesFrame};

/// Variance floor applied before taking logarithms.
pub const SIGMA2_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub log_likelihood: f64,
    pub bic: f64,
    pub aic: f64,
    /// Mean squared residual of each equation, in `all_names` order.
    pub per_equation_sigma2: Vec<f64>,
    pub n_params: usize,
    pub t_eff: usize,
}

/// Free parameters of a partition: entries of `A` to `D`, the diagonal of
/// `E`, and one variance per observable.
pub fn n_params(part: &StatePartition) -> usize {
    let (z, x, y) = (
        part.exo_states().len(),
        part.endo_states().len(),
        part.controls().len(),
    );
    y * x + y * z + x * x + x * z + z + part.k()
}

/// `L = -(T/2) (k (1 + ln 2 pi) + sum ln sigma_i^2)` from per-equation
/// variances over `t_eff` rows.
pub fn log_likelihood(sigma2: &[f64], t_eff: usize) -> f64 {
    let k = sigma2.len() as f64;
    let log_sum: f64 = sigma2.iter().map(|s| s.max(SIGMA2_FLOOR).ln()).sum();
    -(t_eff as f64 / 2.0) * (k * (1.0 + (2.0 * PI).ln()) + log_sum)
}

fn report(part: &StatePartition, sigma2: Vec<f64>, t_eff: usize) -> ScoreReport {
    let sigma2: Vec<f64> = sigma2.into_iter().map(|s| s.max(SIGMA2_FLOOR)).collect();
    let ll = log_likelihood(&sigma2, t_eff);
    let np = n_params(part);
    ScoreReport {
        log_likelihood: ll,
        bic: -2.0 * ll + np as f64 * (t_eff as f64).ln(),
        aic: -2.0 * ll + 2.0 * np as f64,
        per_equation_sigma2: sigma2,
        n_params: np,
        t_eff,
    }
}

fn lagged(names: &[String], lag: usize) -> Vec<LaggedVar> {
    names.iter().map(|n| LaggedVar::new(n.clone(), lag)).collect()
}

/// Scores `part` from sample moments: each exogenous state's residual
/// variance given its own lag, then each endogenous state and control given
/// `[x_{t-1}, z_t]`.
pub fn score_moments(m: &Moments, part: &StatePartition) -> Result<ScoreReport> {
    let mut sigma2 = Vec::with_capacity(part.k());
    for z in part.exo_states() {
        let r = m.residual_cov(&[LaggedVar::new(z.clone(), 0)], &[LaggedVar::new(z.clone(), 1)])?;
        sigma2.push(r[(0, 0)]);
    }
    let mut cond = lagged(part.endo_states(), 1);
    cond.extend(lagged(part.exo_states(), 0));
    let mut targets = lagged(part.endo_states(), 0);
    targets.extend(lagged(part.controls(), 0));
    let r = m.residual_cov(&targets, &cond)?;
    sigma2.extend(r.diagonal().iter());
    Ok(report(part, sigma2, m.t_eff()))
}

pub fn score_design(design: &LaggedDesign) -> Result<ScoreReport> {
    score_moments(&Moments::from_design(design), design.partition())
}

pub fn score(frame: &TimeSeriesFrame, part: &StatePartition) -> Result<ScoreReport> {
    score_design(&build_lagged_design(frame, part)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKey {
    #[default]
    Loglik,
    Bic,
    Aic,
}

impl ScoreKey {
    /// Orders `a` before `b` when `a` scores better.
    pub fn better(self, a: &ScoreReport, b: &ScoreReport) -> Ordering {
        match self {
            ScoreKey::Loglik => b.log_likelihood.total_cmp(&a.log_likelihood),
            ScoreKey::Bic => a.bic.total_cmp(&b.bic),
            ScoreKey::Aic => a.aic.total_cmp(&b.aic),
        }
    }

    pub fn value(self, s: &ScoreReport) -> f64 {
        match self {
            ScoreKey::Loglik => s.log_likelihood,
            ScoreKey::Bic => s.bic,
            ScoreKey::Aic => s.aic,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScoreKey::Loglik => "loglik",
            ScoreKey::Bic => "bic",
            ScoreKey::Aic => "aic",
        }
    }
}

impl fmt::Display for ScoreKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreKey {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglik" => Ok(ScoreKey::Loglik),
            "bic" => Ok(ScoreKey::Bic),
            "aic" => Ok(ScoreKey::Aic),
            other => Err(Error::Config(format!(
                "unknown score `{other}` (expected loglik, bic or aic)"
            ))),
        }
    }
}

/// Best first by `key`; ties are broken by the canonical partition encoding.
pub fn compare(
    mut scored: Vec<(StatePartition, ScoreReport)>,
    key: ScoreKey,
) -> Vec<(StatePartition, ScoreReport)> {
    scored.sort_by(|(pa, a), (pb, b)| {
        key.better(a, b)
            .then_with(|| pa.canonical().cmp(&pb.canonical()))
    });
    scored
}
