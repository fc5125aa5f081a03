//! Conditional-independence obligations implied by a candidate partition and
//! the two strategies for testing them.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LaggedDesign, LaggedVar, Moments, StatePartition, MAX_LAG};
use crate::scoring::{score_moments, ScoreReport};
use crate::stats::{corr_test_from_moments, srivastava_from_cov, PartialCorr, SrivastavaStat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObligationKind {
    /// Time-t endogenous variables are independent given `[x_{t-1}, z_t]`.
    EndoPair,
    /// Lagged endogenous states are independent of current exogenous states
    /// given `z_{t-1}`.
    LagstateExo,
    /// Time-t endogenous variables are independent of `z_{t-1}` given
    /// `[x_{t-1}, z_t]`.
    EndoLagexo,
    /// Current exogenous states are mutually independent given `z_{t-1}`.
    ExoPair,
}

impl ObligationKind {
    pub fn name(self) -> &'static str {
        match self {
            ObligationKind::EndoPair => "endo-pair",
            ObligationKind::LagstateExo => "lagstate-exo",
            ObligationKind::EndoLagexo => "endo-lagexo",
            ObligationKind::ExoPair => "exo-pair",
        }
    }
}

/// `var_a` independent of `var_b` given `conditioning`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiObligation {
    pub kind: ObligationKind,
    pub var_a: LaggedVar,
    pub var_b: LaggedVar,
    pub conditioning: Vec<LaggedVar>,
}

impl fmt::Display for CiObligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} _||_ {} | [", self.var_a, self.var_b)?;
        for (i, v) in self.conditioning.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

fn lagged(names: &[String], lag: usize) -> Vec<LaggedVar> {
    names.iter().map(|n| LaggedVar::new(n.clone(), lag)).collect()
}

/// Every obligation of `part`, in a fixed order: endo pairs, lagged-state and
/// exogenous pairs, endogenous and lagged-exogenous pairs (only when
/// `include_endo_lagexo`), then exogenous pairs.
///
/// ```
/// use statelearn::model::StatePartition;
/// use statelearn::validity::generate_obligations;
///
/// let part = StatePartition::new(["g", "q"], ["k"], ["c"]).unwrap();
/// assert_eq!(generate_obligations(&part, true).len(), 1 + 2 + 4 + 1);
/// ```
pub fn generate_obligations(part: &StatePartition, include_endo_lagexo: bool) -> Vec<CiObligation> {
    let x_lag = lagged(part.endo_states(), 1);
    let z_now = lagged(part.exo_states(), 0);
    let z_lag = lagged(part.exo_states(), 1);
    let mut w_now = lagged(part.endo_states(), 0);
    w_now.extend(lagged(part.controls(), 0));
    let state_cond: Vec<LaggedVar> = x_lag.iter().chain(&z_now).cloned().collect();

    let mut out = Vec::new();
    let mut push = |kind, a: &LaggedVar, b: &LaggedVar, cond: &Vec<LaggedVar>| {
        out.push(CiObligation {
            kind,
            var_a: a.clone(),
            var_b: b.clone(),
            conditioning: cond.clone(),
        })
    };
    for i in 0..w_now.len() {
        for j in i + 1..w_now.len() {
            push(ObligationKind::EndoPair, &w_now[i], &w_now[j], &state_cond);
        }
    }
    for x in &x_lag {
        for z in &z_now {
            push(ObligationKind::LagstateExo, x, z, &z_lag);
        }
    }
    if include_endo_lagexo {
        for w in &w_now {
            for z in &z_lag {
                push(ObligationKind::EndoLagexo, w, z, &state_cond);
            }
        }
    }
    for i in 0..z_now.len() {
        for j in i + 1..z_now.len() {
            push(ObligationKind::ExoPair, &z_now[i], &z_now[j], &z_lag);
        }
    }
    out
}

/// Number of obligations without generating them.
pub fn obligation_count(part: &StatePartition, include_endo_lagexo: bool) -> usize {
    let e = part.exo_states().len();
    let s = part.endo_states().len();
    let c = part.controls().len();
    let pairs = |n: usize| n * n.saturating_sub(1) / 2;
    pairs(s + c) + s * e + if include_endo_lagexo { (s + c) * e } else { 0 } + pairs(e)
}

/// How a candidate is judged. `ScoreOnly` skips testing and treats every
/// fittable candidate as valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    Multiple,
    Srivastava,
    ScoreOnly,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Multiple => "multiple",
            Strategy::Srivastava => "srivastava",
            Strategy::ScoreOnly => "score-only",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiple" => Ok(Strategy::Multiple),
            "srivastava" => Ok(Strategy::Srivastava),
            "score-only" => Ok(Strategy::ScoreOnly),
            other => Err(Error::Config(format!("unknown test strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "kebab-case")]
pub enum TestRecord {
    PartialCorr {
        obligation: CiObligation,
        #[serde(flatten)]
        result: PartialCorr,
    },
    Srivastava(SrivastavaStat),
}

impl TestRecord {
    pub fn p_value(&self) -> f64 {
        match self {
            TestRecord::PartialCorr { result, .. } => result.p_value,
            TestRecord::Srivastava(s) => s.p_value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub partition: StatePartition,
    pub strategy: Strategy,
    pub tests: Vec<TestRecord>,
    pub sig_level_used: f64,
    pub valid: bool,
    pub n_endo: usize,
    /// Absent only when the candidate could not be fitted.
    pub score: Option<ScoreReport>,
    /// Why the candidate could not be tested; such candidates are invalid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub untestable: Option<String>,
}

impl ValidityReport {
    pub fn log_likelihood(&self) -> f64 {
        self.score
            .as_ref()
            .map_or(f64::NEG_INFINITY, |s| s.log_likelihood)
    }

    /// Smallest p-value, or 1 when nothing was tested.
    pub fn p_min(&self) -> f64 {
        self.tests.iter().map(TestRecord::p_value).fold(1.0, f64::min)
    }

    pub const CSV_HEADER: [&'static str; 5] = ["partition", "strategy", "valid", "p_min", "log_likelihood"];

    pub fn csv_record(&self) -> [String; 5] {
        [
            self.partition.to_string(),
            self.strategy.to_string(),
            self.valid.to_string(),
            format!("{:e}", self.p_min()),
            format!("{}", self.log_likelihood()),
        ]
    }

    fn untestable(part: &StatePartition, strategy: Strategy, alpha: f64, reason: String) -> Self {
        ValidityReport {
            partition: part.clone(),
            strategy,
            tests: Vec::new(),
            sig_level_used: alpha,
            valid: false,
            n_endo: part.n_endo(),
            score: None,
            untestable: Some(reason),
        }
    }
}

fn check_design(design: &LaggedDesign, part: &StatePartition) -> Result<()> {
    if design.partition() != part {
        return Err(Error::Config(format!(
            "design was built for `{}`, not `{part}`",
            design.partition()
        )));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Residual covariance of a target list given a conditioning list, with a
/// lookup from lagged variable to position.
struct ResidualSet {
    index: HashMap<LaggedVar, usize>,
    cov: DMatrix<f64>,
}

impl ResidualSet {
    fn new(m: &Moments, targets: Vec<LaggedVar>, cond: &[LaggedVar]) -> Result<Self> {
        let cov = m.residual_cov(&targets, cond)?;
        Ok(Self {
            index: targets.into_iter().enumerate().map(|(i, v)| (v, i)).collect(),
            cov,
        })
    }

    fn test(&self, m: &Moments, ob: &CiObligation, guard_tol: f64) -> Result<PartialCorr> {
        let (ia, ib) = (self.index[&ob.var_a], self.index[&ob.var_b]);
        let (raw_a, raw_b) = (m.variance(&ob.var_a)?, m.variance(&ob.var_b)?);
        corr_test_from_moments(
            self.cov[(ia, ia)],
            self.cov[(ib, ib)],
            self.cov[(ia, ib)],
            raw_a,
            raw_b,
            m.t_eff(),
            ob.conditioning.len(),
            guard_tol,
        )
        .map_err(|e| match e {
            Error::DegenerateInput(_) => Error::DegenerateInput(format!(
                "`{}` or `{}` has zero variance",
                ob.var_a.name, ob.var_b.name
            )),
            other => other,
        })
    }
}

type Outcome = Result<(Vec<TestRecord>, f64, bool)>;

fn run_multiple(m: &Moments, part: &StatePartition, alpha: f64, guard_tol: f64, include_endo_lagexo: bool) -> Outcome {
    let obligations = generate_obligations(part, include_endo_lagexo);
    let x_lag = lagged(part.endo_states(), 1);
    let z_now = lagged(part.exo_states(), 0);
    let z_lag = lagged(part.exo_states(), 1);
    let state_cond: Vec<LaggedVar> = x_lag.iter().chain(&z_now).cloned().collect();
    let mut state_targets = lagged(part.endo_states(), 0);
    state_targets.extend(lagged(part.controls(), 0));
    state_targets.extend(z_lag.iter().cloned());
    let state_set = ResidualSet::new(m, state_targets, &state_cond)?;
    let exo_targets = x_lag.iter().chain(&z_now).cloned().collect();
    let exo_set = ResidualSet::new(m, exo_targets, &z_lag)?;

    let sig = if obligations.is_empty() {
        alpha
    } else {
        alpha / obligations.len() as f64
    };
    let mut tests = Vec::with_capacity(obligations.len());
    let mut valid = true;
    for ob in obligations {
        let set = match ob.kind {
            ObligationKind::EndoPair | ObligationKind::EndoLagexo => &state_set,
            ObligationKind::LagstateExo | ObligationKind::ExoPair => &exo_set,
        };
        let result = set.test(m, &ob, guard_tol)?;
        valid &= result.p_value > sig;
        tests.push(TestRecord::PartialCorr { obligation: ob, result });
    }
    Ok((tests, sig, valid))
}

fn run_srivastava(m: &Moments, part: &StatePartition, alpha: f64) -> Outcome {
    if part.k() < 2 {
        return Err(Error::Dimension(format!(
            "the diagonality test needs at least 2 observables, got {}",
            part.k()
        )));
    }
    let mut targets = lagged(part.controls(), 1);
    targets.extend(lagged(part.endo_states(), 1));
    targets.extend(lagged(part.exo_states(), 0));
    let mut cond = lagged(part.endo_states(), 2);
    cond.extend(lagged(part.exo_states(), 1));
    let coefficients_used = 1 + cond.len();
    let t_eff = m.t_eff();
    if t_eff < coefficients_used + targets.len() + 2 {
        return Err(Error::InsufficientRows {
            needed: coefficients_used + targets.len() + 2 + MAX_LAG,
            got: t_eff + MAX_LAG,
        });
    }
    let n_eff = t_eff - coefficients_used;
    // Residual moments come with divisor T_eff; the statistic uses n_eff.
    let s = m.residual_cov(&targets, &cond)? * (t_eff as f64 / n_eff as f64);
    let stat = srivastava_from_cov(&s, n_eff, alpha)?;
    let valid = stat.p_value > alpha;
    Ok((vec![TestRecord::Srivastava(stat)], alpha, valid))
}

fn finish(m: &Moments, part: &StatePartition, strategy: Strategy, alpha: f64, outcome: Outcome) -> Result<ValidityReport> {
    let untestable = |columns: Vec<String>| {
        ValidityReport::untestable(
            part,
            strategy,
            alpha,
            format!("rank-deficient regressors: {}", columns.join(", ")),
        )
    };
    let (tests, sig, valid) = match outcome {
        Ok(v) => v,
        Err(Error::DegenerateDesign { columns }) => return Ok(untestable(columns)),
        Err(e) => return Err(e),
    };
    let score = match score_moments(m, part) {
        Ok(s) => s,
        Err(Error::DegenerateDesign { columns }) => return Ok(untestable(columns)),
        Err(e) => return Err(e),
    };
    Ok(ValidityReport {
        partition: part.clone(),
        strategy,
        tests,
        sig_level_used: sig,
        valid,
        n_endo: part.n_endo(),
        score: Some(score),
        untestable: None,
    })
}

/// Validity of `part` from precomputed sample moments; what [`check`] does
/// after forming them. The search calls this once per candidate with moments
/// shared across the whole sample.
pub fn check_moments(
    m: &Moments,
    part: &StatePartition,
    strategy: Strategy,
    alpha: f64,
    guard_tol: f64,
    include_endo_lagexo: bool,
) -> Result<ValidityReport> {
    check_alpha(alpha)?;
    let outcome = match strategy {
        Strategy::Multiple => run_multiple(m, part, alpha, guard_tol, include_endo_lagexo),
        Strategy::Srivastava => run_srivastava(m, part, alpha),
        Strategy::ScoreOnly => Ok((Vec::new(), alpha, true)),
    };
    if let Err(e @ Error::Dimension(_)) = outcome {
        return Err(e);
    }
    finish(m, part, strategy, alpha, outcome)
}

/// Partial-correlation test of every obligation at the Bonferroni level
/// `alpha / |obligations|`.
///
/// Rank-deficient conditioning sets make the candidate untestable (reported
/// invalid, not an error); a constant series is an error.
pub fn check_multiple(design: &LaggedDesign, part: &StatePartition, alpha: f64, guard_tol: f64) -> Result<ValidityReport> {
    check(design, part, Strategy::Multiple, alpha, guard_tol, true)
}

/// Srivastava diagonality test on the residuals of `[y_{t-1}, x_{t-1}, z_t]`
/// regressed on `[x_{t-2}, z_{t-1}]`, with `n_eff = T_eff - 1 - |x| - |z|`.
///
/// Valid when the test does not reject at `alpha`. Needs at least two
/// observables.
pub fn check_srivastava(design: &LaggedDesign, part: &StatePartition, alpha: f64) -> Result<ValidityReport> {
    check(design, part, Strategy::Srivastava, alpha, 0.0, true)
}

/// Dispatches on `strategy`. `include_endo_lagexo` switches the
/// endogenous/lagged-exogenous obligations of the multiple strategy.
pub fn check(
    design: &LaggedDesign,
    part: &StatePartition,
    strategy: Strategy,
    alpha: f64,
    guard_tol: f64,
    include_endo_lagexo: bool,
) -> Result<ValidityReport> {
    check_design(design, part)?;
    let m = Moments::from_design(design);
    check_moments(&m, part, strategy, alpha, guard_tol, include_endo_lagexo)
}
