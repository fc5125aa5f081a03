//! Exhaustive tiered search over partitions with minimum-state-variable
//! early stopping, plus the Monte Carlo driver.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Moments, StatePartition, TimeSeriesFrame};
use crate::scoring::ScoreKey;
use crate::simulate::{simulate, SimConfig};
use crate::stats::DEFAULT_GUARD_TOL;
use crate::validity::{check_moments, Strategy, ValidityReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub alpha: f64,
    pub strategy: Strategy,
    /// Ranking key in score-only mode.
    pub score: ScoreKey,
    /// Largest tier to open; `None` means `k - 2`.
    pub max_states: Option<usize>,
    pub guard_tol: f64,
    /// Worker threads; 0 uses one per core.
    pub parallelism: usize,
    /// Test the endogenous/lagged-exogenous obligations (multiple strategy).
    pub include_endo_lagexo: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            strategy: Strategy::Multiple,
            score: ScoreKey::Loglik,
            max_states: None,
            guard_tol: DEFAULT_GUARD_TOL,
            parallelism: 0,
            include_endo_lagexo: true,
        }
    }
}

impl SearchConfig {
    /// Checks the configuration against `k` observables and returns the
    /// resolved largest tier.
    pub fn validate(&self, k: usize) -> Result<usize> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.guard_tol >= 0.0 && self.guard_tol.is_finite()) {
            return Err(Error::Config(format!("guard tolerance must be finite and >= 0, got {}", self.guard_tol)));
        }
        if k < 3 {
            return Err(Error::Config(format!("search needs at least 3 observables, got {k}")));
        }
        let max = self.max_states.unwrap_or(k - 2);
        if max == 0 || max > k - 2 {
            return Err(Error::Config(format!(
                "max_states must lie in 1..={} for {k} observables, got {max}",
                k - 2
            )));
        }
        Ok(max)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `C(k, s) 2^s`.
pub fn tier_size(k: usize, s: usize) -> usize {
    binomial(k, s) << s
}

/// Candidates in tiers `1..=max_states`.
pub fn cumulative_size(k: usize, max_states: usize) -> usize {
    (1..=max_states).map(|s| tier_size(k, s)).sum()
}

/// Every partition of `names` with exactly `s` states.
///
/// State subsets come in lexicographic order of column positions; within a
/// subset, labelings run through the bitmasks `0..2^s`, where bit `j` set
/// makes the `j`-th chosen column exogenous.
///
/// ```
/// use statelearn::search::enumerate_tier;
///
/// let names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
/// let tier = enumerate_tier(&names, 1).unwrap();
/// assert_eq!(tier.len(), 6);
/// assert_eq!(tier[0].to_string(), "exo=;endo=a;controls=b,c");
/// ```
pub fn enumerate_tier(names: &[String], s: usize) -> Result<Vec<StatePartition>> {
    let k = names.len();
    if s == 0 || s + 2 > k {
        return Err(Error::Config(format!(
            "tier {s} is out of range 1..={} for {k} observables",
            k.saturating_sub(2)
        )));
    }
    let mut out = Vec::with_capacity(tier_size(k, s));
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        for mask in 0u64..(1 << s) {
            let mut exo = Vec::new();
            let mut endo = Vec::new();
            for (j, &i) in idx.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    exo.push(names[i].as_str());
                } else {
                    endo.push(names[i].as_str());
                }
            }
            out.push(StatePartition::from_states(names, &exo, &endo)?);
        }
        // Next combination in lexicographic order.
        let Some(pos) = (0..s).rev().find(|&p| idx[p] < k - s + p) else {
            break;
        };
        idx[pos] += 1;
        for p in pos + 1..s {
            idx[p] = idx[p - 1] + 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub strategy: Strategy,
    /// Best first.
    pub valid_models: Vec<ValidityReport>,
    pub models_tested: usize,
    pub tiers_completed: usize,
    pub stopped_early: bool,
}

impl SearchResult {
    pub fn winner(&self) -> Option<&ValidityReport> {
        self.valid_models.first()
    }
}

fn check_columns(frame: &TimeSeriesFrame) -> Result<()> {
    for (j, name) in frame.names().iter().enumerate() {
        let col = frame.values().column(j);
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            return Err(Error::DegenerateInput(format!("column `{name}` is constant")));
        }
    }
    Ok(())
}

/// Orders tested reports: more endogenous states, then higher likelihood,
/// then canonical encoding.
pub fn sort_reports(reports: &mut [ValidityReport]) {
    reports.sort_by(|a, b| {
        b.n_endo
            .cmp(&a.n_endo)
            .then_with(|| b.log_likelihood().total_cmp(&a.log_likelihood()))
            .then_with(|| a.partition.canonical().cmp(&b.partition.canonical()))
    });
}

fn sort_by_score(reports: &mut [ValidityReport], key: ScoreKey) {
    reports.sort_by(|a, b| {
        let ord = match (&a.score, &b.score) {
            (Some(sa), Some(sb)) => key.better(sa, sb),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        ord.then_with(|| a.partition.canonical().cmp(&b.partition.canonical()))
    });
}

fn evaluate(m: &Moments, part: &StatePartition, cfg: &SearchConfig) -> Result<ValidityReport> {
    check_moments(m, part, cfg.strategy, cfg.alpha, cfg.guard_tol, cfg.include_endo_lagexo)
}

/// Search on the current rayon pool.
fn search_here(frame: &TimeSeriesFrame, cfg: &SearchConfig) -> Result<SearchResult> {
    let max = cfg.validate(frame.width())?;
    check_columns(frame)?;
    let moments = Moments::from_frame(frame)?;
    let names = frame.names();
    let mut valid = Vec::new();
    let mut tested = 0;
    let mut tiers = 0;
    let mut stopped_early = false;
    for s in 1..=max {
        let tier = enumerate_tier(names, s)?;
        let reports = tier
            .par_iter()
            .map(|p| evaluate(&moments, p, cfg))
            .collect::<Result<Vec<_>>>()?;
        tested += reports.len();
        tiers = s;
        valid.extend(reports.into_iter().filter(|r| r.valid));
        if cfg.strategy != Strategy::ScoreOnly && !valid.is_empty() {
            stopped_early = s < max;
            break;
        }
    }
    if cfg.strategy == Strategy::ScoreOnly {
        sort_by_score(&mut valid, cfg.score);
    } else {
        sort_reports(&mut valid);
    }
    Ok(SearchResult {
        strategy: cfg.strategy,
        valid_models: valid,
        models_tested: tested,
        tiers_completed: tiers,
        stopped_early,
    })
}

/// Runs the tiered search.
///
/// Tiers `s = 1, 2, ...` are evaluated in full, candidates in parallel. With
/// a testing strategy the search stops after the first tier containing a
/// valid candidate; in score-only mode every tier up to `max_states` is
/// ranked. An empty `valid_models` is a legal outcome.
pub fn run_search(frame: &TimeSeriesFrame, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.pool()?.install(|| search_here(frame, cfg))
}

/// Simulation seed of replication `rep`: the first output of ChaCha8 seeded
/// with `master` on stream `rep`.
pub fn replication_seed(master: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(rep as u64);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyRow {
    pub partition: StatePartition,
    pub wins: usize,
    pub valid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRep {
    pub rep: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    /// Every partition valid at least once; most wins first, then most valid.
    pub rows: Vec<TallyRow>,
    pub reps: usize,
    pub no_winner: usize,
    pub skipped: Vec<SkippedRep>,
    /// Size of the candidate space up to the deepest tier any replication
    /// opened.
    pub candidates_considered: usize,
}

impl MonteCarloResult {
    pub fn row(&self, part: &StatePartition) -> Option<&TallyRow> {
        self.rows.iter().find(|r| r.partition.same_roles(part))
    }
}

/// Repeats [`run_search`] on `reps` fresh samples of `n_small` rows drawn
/// from `sim`, with seeds from [`replication_seed`] applied to `sim.seed`.
pub fn monte_carlo(cfg: &SearchConfig, sim: &SimConfig, reps: usize, n_small: usize) -> Result<MonteCarloResult> {
    if reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let k = sim.partition().k();
    cfg.validate(k)?;
    let mut base = sim.clone();
    base.n = n_small;
    base.validate()?;

    let outcomes: Vec<(u64, Result<SearchResult>)> = cfg.pool()?.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut sc = base.clone();
                sc.seed = replication_seed(sim.seed, rep);
                let res = simulate(&sc).and_then(|f| search_here(&f, cfg));
                (sc.seed, res)
            })
            .collect()
    });

    let mut tally: BTreeMap<String, TallyRow> = BTreeMap::new();
    let mut no_winner = 0;
    let mut skipped = Vec::new();
    let mut deepest = 0;
    for (rep, (seed, res)) in outcomes.into_iter().enumerate() {
        let res = match res {
            Ok(r) => r,
            Err(e) => {
                skipped.push(SkippedRep {
                    rep,
                    seed,
                    error: e.to_string(),
                });
                continue;
            }
        };
        deepest = deepest.max(res.tiers_completed);
        for (i, m) in res.valid_models.iter().enumerate() {
            let row = tally
                .entry(m.partition.canonical())
                .or_insert_with(|| TallyRow {
                    partition: m.partition.clone(),
                    wins: 0,
                    valid: 0,
                });
            row.valid += 1;
            if i == 0 {
                row.wins += 1;
            }
        }
        if res.valid_models.is_empty() {
            no_winner += 1;
        }
    }
    let mut rows: Vec<TallyRow> = tally.into_values().collect();
    rows.sort_by(|a, b| {
        b.wins
            .cmp(&a.wins)
            .then(b.valid.cmp(&a.valid))
            .then_with(|| a.partition.canonical().cmp(&b.partition.canonical()))
    });
    Ok(MonteCarloResult {
        rows,
        reps,
        no_winner,
        skipped,
        candidates_considered: cumulative_size(k, deepest),
    })
}

fn joined(names: &[String]) -> String {
    names.join(" ")
}

/// Ranked models as CSV: `index, exogenous_states, endogenous_states` and a
/// score column (`log_likelihood`, or the chosen key in score-only mode).
/// State names within a cell are space separated.
pub fn write_results_csv<W: Write>(res: &SearchResult, key: ScoreKey, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let score_only = res.strategy == Strategy::ScoreOnly;
    let col = if score_only && key != ScoreKey::Loglik {
        key.name()
    } else {
        "log_likelihood"
    };
    w.write_record(["index", "exogenous_states", "endogenous_states", col])?;
    for (i, m) in res.valid_models.iter().enumerate() {
        let value = match (&m.score, score_only) {
            (Some(s), true) => key.value(s),
            (Some(s), false) => s.log_likelihood,
            (None, _) => f64::NAN,
        };
        w.write_record([
            i.to_string(),
            joined(m.partition.exo_states()),
            joined(m.partition.endo_states()),
            value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Tally as CSV: `index, exogenous_states, endogenous_states, wins, valid`.
pub fn write_tally_csv<W: Write>(mc: &MonteCarloResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "exogenous_states", "endogenous_states", "wins", "valid"])?;
    for (i, r) in mc.rows.iter().enumerate() {
        w.write_record([
            i.to_string(),
            joined(r.partition.exo_states()),
            joined(r.partition.endo_states()),
            r.wins.to_string(),
            r.valid.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StateSpaceParams;
    use nalgebra::DMatrix;
    use super::Strategy;
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("v{i}")).collect()
    }

    #[test]
    fn tier_counts() {
        assert_eq!(enumerate_tier(&names(3), 1).unwrap().len(), 6);
        assert_eq!(cumulative_size(9, 3), 834);
        assert_eq!(cumulative_size(11, 7), 93_434);
        assert_eq!(cumulative_size(9, 7), 16_866);
        assert!(enumerate_tier(&names(3), 2).is_err());
        assert!(enumerate_tier(&names(3), 0).is_err());
    }

    proptest! {
        #[test]
        fn enumeration_matches_counter_and_is_distinct(k in 3usize..=7, s_off in 0usize..5) {
            let s = 1 + s_off % (k - 2);
            let tier = enumerate_tier(&names(k), s).unwrap();
            prop_assert_eq!(tier.len(), tier_size(k, s));
            let distinct: std::collections::BTreeSet<_> = tier.iter().map(|p| p.canonical()).collect();
            prop_assert_eq!(distinct.len(), tier.len());
            prop_assert!(tier.iter().all(|p| p.n_states() == s));
        }
    }

    #[test]
    fn tier_sizes_for_larger_k() {
        // Independent counter: number of role assignments with exactly s states.
        for k in 3..=12usize {
            for s in 1..=k - 2 {
                let brute = (0..3u32.pow(k as u32))
                    .filter(|&code| {
                        let mut c = code;
                        let mut states = 0;
                        for _ in 0..k {
                            if c % 3 != 2 {
                                states += 1;
                            }
                            c /= 3;
                        }
                        states == s
                    })
                    .count();
                assert_eq!(tier_size(k, s), brute, "k={k} s={s}");
            }
        }
    }

    #[test]
    fn config_validation() {
        let cfg = SearchConfig::default();
        assert_eq!(cfg.validate(9).unwrap(), 7);
        assert!(cfg.validate(2).is_err());
        assert!(SearchConfig { alpha: 0.0, ..cfg.clone() }.validate(9).is_err());
        assert!(SearchConfig { max_states: Some(8), ..cfg.clone() }.validate(9).is_err());
    }

    fn sim_cfg(n: usize, seed: u64) -> SimConfig {
        let part = StatePartition::new(["z"], ["x"], ["y", "w"]).unwrap();
        let params = StateSpaceParams::new(
            part,
            DMatrix::from_row_slice(2, 1, &[0.6, -0.4]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.7]),
            DMatrix::from_element(1, 1, 0.7),
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 0.8),
            vec![1.0, 0.1, 0.2, 0.2],
        )
        .unwrap();
        SimConfig::new(params, n, seed)
    }

    #[test]
    fn recovers_truth_and_stops_at_its_tier() {
        let cfg = sim_cfg(20_000, 2);
        let frame = simulate(&cfg).unwrap();
        for strategy in [Strategy::Multiple, Strategy::Srivastava] {
            let res = run_search(&frame, &SearchConfig { strategy, ..Default::default() }).unwrap();
            let w = res.winner().unwrap();
            assert!(w.partition.same_roles(cfg.partition()), "{strategy}: {}", w.partition);
            assert_eq!(res.tiers_completed, 2);
            assert!(res.valid_models.iter().all(|m| m.partition.n_states() == 2));
        }
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let frame = simulate(&sim_cfg(300, 2)).unwrap();
        let one = run_search(&frame, &SearchConfig { parallelism: 1, ..Default::default() }).unwrap();
        let four = run_search(&frame, &SearchConfig { parallelism: 4, ..Default::default() }).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn score_only_ranks_every_candidate() {
        let frame = simulate(&sim_cfg(300, 3)).unwrap();
        let cfg = SearchConfig {
            strategy: Strategy::ScoreOnly,
            score: ScoreKey::Bic,
            ..Default::default()
        };
        let res = run_search(&frame, &cfg).unwrap();
        assert_eq!(res.models_tested, cumulative_size(4, 2));
        assert_eq!(res.valid_models.len(), res.models_tested);
        assert!(!res.stopped_early);
        let bics: Vec<f64> = res.valid_models.iter().map(|m| m.score.as_ref().unwrap().bic).collect();
        assert!(bics.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sorting_matches_resort_oracle() {
        let frame = simulate(&sim_cfg(150, 4)).unwrap();
        let m = Moments::from_frame(&frame).unwrap();
        let mut reports: Vec<ValidityReport> = enumerate_tier(frame.names(), 2)
            .unwrap()
            .iter()
            .map(|p| evaluate(&m, p, &SearchConfig::default()).unwrap())
            .collect();
        let mut oracle: Vec<(usize, f64, String)> = reports
            .iter()
            .map(|r| (r.n_endo, r.log_likelihood(), r.partition.canonical()))
            .collect();
        oracle.sort_by(|a, b| {
            b.0.cmp(&a.0)
                .then(b.1.partial_cmp(&a.1).unwrap())
                .then(a.2.cmp(&b.2))
        });
        sort_reports(&mut reports);
        let got: Vec<String> = reports.iter().map(|r| r.partition.canonical()).collect();
        let want: Vec<String> = oracle.into_iter().map(|o| o.2).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn constant_column_is_an_error() {
        let frame = simulate(&sim_cfg(100, 5)).unwrap();
        let mut v = frame.values().clone();
        v.column_mut(2).fill(1.0);
        let frame = TimeSeriesFrame::new(frame.names().to_vec(), v).unwrap();
        assert!(matches!(
            run_search(&frame, &SearchConfig::default()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn monte_carlo_single_rep_equals_search() {
        let sim = sim_cfg(0, 11);
        let cfg = SearchConfig::default();
        let mc = monte_carlo(&cfg, &sim, 1, 200).unwrap();
        let mut one = sim.clone();
        one.n = 200;
        one.seed = replication_seed(11, 0);
        let res = run_search(&simulate(&one).unwrap(), &cfg).unwrap();
        assert_eq!(mc.rows.len(), res.valid_models.len());
        let w = res.winner().unwrap();
        assert_eq!(mc.row(&w.partition).unwrap().wins, 1);
    }

    #[test]
    fn monte_carlo_accounting() {
        let mc = monte_carlo(&SearchConfig::default(), &sim_cfg(0, 12), 20, 100).unwrap();
        let wins: usize = mc.rows.iter().map(|r| r.wins).sum();
        assert_eq!(wins + mc.no_winner + mc.skipped.len(), 20);
        assert!(monte_carlo(&SearchConfig::default(), &sim_cfg(0, 12), 0, 100).is_err());
    }

    #[test]
    fn csv_layouts() {
        let frame = simulate(&sim_cfg(500, 6)).unwrap();
        let res = run_search(&frame, &SearchConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_results_csv(&res, ScoreKey::Loglik, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,exogenous_states,endogenous_states,log_likelihood\n0,z,x,"));
    }
}
