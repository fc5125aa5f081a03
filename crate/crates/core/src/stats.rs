//! Statistical primitives: residual regression, partial-correlation t-tests
//! and the Srivastava test for a diagonal covariance matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::linalg::{centered, least_squares, RankDeficient};

/// Default relative tolerance for the small-residual guard.
pub const DEFAULT_GUARD_TOL: f64 = 1e-10;

pub(crate) fn residualize_raw(
    targets: &DMatrix<f64>,
    regressors: &DMatrix<f64>,
) -> std::result::Result<DMatrix<f64>, RankDeficient> {
    let y = centered(targets);
    if regressors.ncols() == 0 {
        return Ok(y);
    }
    let x = centered(regressors);
    Ok(least_squares(&x, &y)?.residuals)
}

/// Residuals of `targets` after projection onto a constant and `regressors`.
///
/// With no regressors this returns the mean-centered targets.
pub fn residualize(targets: &DMatrix<f64>, regressors: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if targets.nrows() != regressors.nrows() {
        return Err(Error::Dimension(format!(
            "targets have {} rows, regressors {}",
            targets.nrows(),
            regressors.nrows()
        )));
    }
    residualize_raw(targets, regressors).map_err(|e| Error::DegenerateDesign {
        columns: e.dependent.iter().map(|i| format!("regressor[{i}]")).collect(),
    })
}

/// Outcome of a partial-correlation t-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialCorr {
    /// Partial correlation; `None` when the guard fired.
    pub r: Option<f64>,
    pub t_stat: Option<f64>,
    pub df: usize,
    pub p_value: f64,
    pub guard_triggered: bool,
}

/// Correlation test from residual second moments: `saa`, `sbb`, `sab` are
/// the residual (co)variances after conditioning on `n_cond` columns, and
/// `raw_var_*` the variances of the unconditioned centered series, all over
/// `n` rows.
#[allow(clippy::too_many_arguments)]
pub(crate) fn corr_test_from_moments(
    saa: f64,
    sbb: f64,
    sab: f64,
    raw_var_a: f64,
    raw_var_b: f64,
    n: usize,
    n_cond: usize,
    guard_tol: f64,
) -> Result<PartialCorr> {
    if !(raw_var_a > 0.0) || !(raw_var_b > 0.0) {
        return Err(Error::DegenerateInput(
            "series has zero variance; correlation is undefined".into(),
        ));
    }
    if n <= n_cond + 3 {
        return Err(Error::InsufficientRows {
            needed: n_cond + 4,
            got: n,
        });
    }
    let df = n - n_cond - 2;
    if saa < guard_tol * raw_var_a || sbb < guard_tol * raw_var_b {
        return Ok(PartialCorr {
            r: None,
            t_stat: None,
            df,
            p_value: 1.0,
            guard_triggered: true,
        });
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0);
    let one_minus = 1.0 - r * r;
    let t = if one_minus <= 0.0 {
        f64::INFINITY.copysign(r)
    } else {
        r * (df as f64 / one_minus).sqrt()
    };
    Ok(PartialCorr {
        r: Some(r),
        t_stat: Some(t),
        df,
        p_value: two_sided_t(t, df),
        guard_triggered: false,
    })
}

fn two_sided_t(t: f64, df: usize) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

fn two_sided_normal(z: f64) -> f64 {
    if !z.is_finite() {
        return 0.0;
    }
    let dist = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * dist.sf(z.abs())).clamp(0.0, 1.0)
}

/// t-test of zero partial correlation between `a` and `b` given `conditioning`.
///
/// Both series are residualized on the conditioning columns (plus a
/// constant). If either residual variance falls below `guard_tol` times the
/// series' raw variance the test is passed through: `guard_triggered` is set,
/// `r` is unset and the p-value is 1. Otherwise `t = r sqrt(df / (1 - r^2))`
/// with `df = n - |conditioning| - 2`, and the p-value is two-sided.
pub fn partial_corr_test(
    a: &DVector<f64>,
    b: &DVector<f64>,
    conditioning: &DMatrix<f64>,
    guard_tol: f64,
) -> Result<PartialCorr> {
    let n = a.len();
    if b.len() != n || conditioning.nrows() != n {
        return Err(Error::Dimension(format!(
            "series lengths {}, {} and conditioning rows {} differ",
            n,
            b.len(),
            conditioning.nrows()
        )));
    }
    let mut pair = DMatrix::zeros(n, 2);
    pair.set_column(0, a);
    pair.set_column(1, b);
    let raw = centered(&pair);
    let resid = residualize(&pair, conditioning)?;
    let (ra, rb) = (resid.column(0), resid.column(1));
    let nf = n as f64;
    corr_test_from_moments(
        ra.norm_squared() / nf,
        rb.norm_squared() / nf,
        ra.dot(&rb) / nf,
        raw.column(0).norm_squared() / nf,
        raw.column(1).norm_squared() / nf,
        n,
        conditioning.ncols(),
        guard_tol,
    )
}

/// How the Srivastava statistic's sample size and covariance are formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrivastavaOptions {
    /// Regression coefficients per equation spent producing the residuals
    /// (intercept included); `n_eff = rows - coefficients_used`.
    pub coefficients_used: usize,
    /// Divide the cross-product matrix by `n_eff - 1` instead of `n_eff`.
    pub unbiased_divisor: bool,
}

impl Default for SrivastavaOptions {
    fn default() -> Self {
        Self {
            coefficients_used: 0,
            unbiased_divisor: false,
        }
    }
}

/// Srivastava's T3 statistic for the null hypothesis that the covariance of
/// the residual columns is diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrivastavaStat {
    pub t3: f64,
    pub gamma3: f64,
    pub a20: f64,
    pub a40: f64,
    /// Dimension of the tested covariance.
    pub p: usize,
    pub n_eff: usize,
    /// The `1 - a40 / (p a20^2)` term was negative and was replaced by
    /// `1 - sum s_ii^4 / (sum s_ii^2)^2`.
    pub denominator_substituted: bool,
    pub p_value: f64,
    pub rejected: bool,
}

/// Srivastava test with `n_eff` equal to the row count.
pub fn srivastava_test(residuals: &DMatrix<f64>, alpha: f64) -> Result<SrivastavaStat> {
    srivastava_test_with(residuals, alpha, SrivastavaOptions::default())
}

/// Computes
///
/// ```text
/// gamma3 = n/(n-1) * (tr(S^2) - tr(S)^2 / n) / sum s_ii^2
/// a20    = n / (p (n+2)) * sum s_ii^2
/// a40    = sum s_ii^4 / p
/// T3     = (n/2) (gamma3 - 1) / sqrt(1 - a40 / (p a20^2))
/// ```
///
/// with `S` the residual cross-product matrix over `n = n_eff`, and a
/// two-sided standard normal p-value. Residual columns are taken as already
/// centered.
pub fn srivastava_test_with(
    residuals: &DMatrix<f64>,
    alpha: f64,
    opts: SrivastavaOptions,
) -> Result<SrivastavaStat> {
    let (rows, p) = residuals.shape();
    if p < 2 {
        return Err(Error::Dimension(format!(
            "diagonality test needs at least 2 columns, got {p}"
        )));
    }
    if rows < p + 2 {
        return Err(Error::InsufficientRows {
            needed: p + 2,
            got: rows,
        });
    }
    if residuals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("residual matrix".into()));
    }
    if opts.coefficients_used + 2 > rows {
        return Err(Error::InsufficientRows {
            needed: opts.coefficients_used + 2,
            got: rows,
        });
    }
    let n_eff = rows - opts.coefficients_used;
    let divisor = if opts.unbiased_divisor {
        n_eff as f64 - 1.0
    } else {
        n_eff as f64
    };
    let s = residuals.tr_mul(residuals) / divisor;
    srivastava_from_cov(&s, n_eff, alpha)
}

/// The Srivastava statistic from a residual covariance matrix `s` and its
/// effective sample size.
pub(crate) fn srivastava_from_cov(s: &DMatrix<f64>, n_eff: usize, alpha: f64) -> Result<SrivastavaStat> {
    let p = s.nrows();
    let n = n_eff as f64;
    let tr = s.trace();
    let tr_sq = s.norm_squared(); // tr(S^2) for symmetric S
    let diag2: f64 = (0..p).map(|i| s[(i, i)].powi(2)).sum();
    let diag4: f64 = (0..p).map(|i| s[(i, i)].powi(4)).sum();
    if !(diag2 > 0.0) {
        return Err(Error::DegenerateInput(
            "all residual variances are zero".into(),
        ));
    }
    let pf = p as f64;
    let gamma3 = n / (n - 1.0) * (tr_sq - tr * tr / n) / diag2;
    let a20 = n / (pf * (n + 2.0)) * diag2;
    let a40 = diag4 / pf;

    let mut denom = 1.0 - (a40 / (a20 * a20)) / pf;
    let mut substituted = false;
    if denom < 0.0 {
        denom = 1.0 - diag4 / (diag2 * diag2);
        substituted = true;
    }
    // denom is zero only when a single column carries all the variance, in
    // which case S is trivially diagonal.
    let t3 = if denom > 0.0 {
        (n / 2.0) * (gamma3 - 1.0) / denom.sqrt()
    } else {
        0.0
    };
    let p_value = two_sided_normal(t3);
    Ok(SrivastavaStat {
        t3,
        gamma3,
        a20,
        a40,
        p,
        n_eff,
        denominator_substituted: substituted,
        p_value,
        rejected: p_value <= alpha,
    })
}
