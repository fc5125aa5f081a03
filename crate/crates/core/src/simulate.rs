//! Synthetic samples from a known state-space model.
//!
//! Seed-to-stream mapping: a `ChaCha8Rng` is seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`. For every period, burn-in included,
//! one standard normal draw is taken per observable in
//! [`StatePartition::all_names`] order (exogenous states, endogenous states,
//! controls) and scaled by the square root of that equation's variance.
//! Draws are taken even for zero-variance equations, so changing a variance
//! never shifts the stream of the others. Normals come from
//! `rand_distr::StandardNormal` (ziggurat). Other implementations may use a
//! different generator; only this mapping is specific to this crate.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{StatePartition, StateSpaceParams, TimeSeriesFrame, MIN_ROWS};

pub const DEFAULT_BURN_IN: usize = 1_000;

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// Everything needed to reproduce a simulated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: StateSpaceParams,
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Output column order; defaults to the partition's order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
}

impl SimConfig {
    pub fn new(params: StateSpaceParams, n: usize, seed: u64) -> Self {
        Self {
            params,
            n,
            seed,
            burn_in: DEFAULT_BURN_IN,
            columns: None,
        }
    }

    pub fn partition(&self) -> &StatePartition {
        &self.params.partition
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns
            .clone()
            .unwrap_or_else(|| self.partition().all_names().cloned().collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_ROWS {
            return Err(Error::InsufficientRows {
                needed: MIN_ROWS,
                got: self.n,
            });
        }
        // Re-run the parameter invariants: the struct fields are public.
        StateSpaceParams::new(
            self.params.partition.clone(),
            self.params.a.clone(),
            self.params.b.clone(),
            self.params.c.clone(),
            self.params.d.clone(),
            self.params.e.clone(),
            self.params.shock_variances.clone(),
        )?;
        let rho = self.params.c_spectral_radius();
        if !(rho < 1.0) {
            return Err(Error::NonStationary(format!(
                "spectral radius of C is {rho}, must be below 1"
            )));
        }
        if let Some(cols) = &self.columns {
            let mut a: Vec<&String> = cols.iter().collect();
            let mut b: Vec<&String> = self.partition().all_names().collect();
            a.sort();
            b.sort();
            if a != b {
                return Err(Error::Config(
                    "`columns` must list every observable exactly once".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Simulated sample plus the shocks that produced it (`n x k`, partition order).
pub struct Simulation {
    pub frame: TimeSeriesFrame,
    pub shocks: DMatrix<f64>,
}

/// Draws `cfg.n` rows after discarding `cfg.burn_in`, from zero initial
/// conditions.
pub fn simulate(cfg: &SimConfig) -> Result<TimeSeriesFrame> {
    Ok(simulate_with_shocks(cfg)?.frame)
}

pub fn simulate_with_shocks(cfg: &SimConfig) -> Result<Simulation> {
    cfg.validate()?;
    let p = &cfg.params;
    let part = &p.partition;
    let nz = part.exo_states().len();
    let nx = part.endo_states().len();
    let ny = part.controls().len();
    let k = part.k();
    let sd: Vec<f64> = p.shock_variances.iter().map(|v| v.sqrt()).collect();
    let e_diag: Vec<f64> = (0..nz).map(|i| p.e[(i, i)]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z = DVector::<f64>::zeros(nz);
    let mut x = DVector::<f64>::zeros(nx);
    let mut eps = DVector::<f64>::zeros(k);

    // Rows in partition order; permuted to the output order at the end.
    let mut data = DMatrix::<f64>::zeros(cfg.n, k);
    let mut shocks = DMatrix::<f64>::zeros(cfg.n, k);

    for t in 0..(cfg.burn_in + cfg.n) {
        for (i, e) in eps.iter_mut().enumerate() {
            let draw: f64 = StandardNormal.sample(&mut rng);
            *e = sd[i] * draw;
        }
        let x_prev = x.clone();
        for i in 0..nz {
            z[i] = e_diag[i] * z[i] + eps[i];
        }
        x = &p.c * &x_prev + &p.d * &z + eps.rows(nz, nx);
        let y = &p.a * &x_prev + &p.b * &z + eps.rows(nz + nx, ny);

        if t >= cfg.burn_in {
            let row = t - cfg.burn_in;
            for i in 0..nz {
                data[(row, i)] = z[i];
            }
            for i in 0..nx {
                data[(row, nz + i)] = x[i];
            }
            for i in 0..ny {
                data[(row, nz + nx + i)] = y[i];
            }
            shocks.row_mut(row).copy_from(&eps.transpose());
        }
    }

    let partition_order: Vec<String> = part.all_names().cloned().collect();
    let frame = TimeSeriesFrame::new(partition_order, data)?;
    let frame = match &cfg.columns {
        Some(cols) => frame.reorder(cols)?,
        None => frame,
    };
    Ok(Simulation { frame, shocks })
}

/// Built-in parameterizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 9 observables: exogenous `g`, `z`; endogenous `k`; six controls.
    SmallRbcLike,
    /// 17 observables: exogenous `nu`, `a`, `z`; endogenous `p`; 13 controls.
    MediumNkLike,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::SmallRbcLike, Preset::MediumNkLike];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SmallRbcLike => "small-rbc-like",
            Preset::MediumNkLike => "medium-nk-like",
        }
    }

    /// The parameterization with `n = 100_000`, seed 0 and the default burn-in.
    pub fn config(self) -> SimConfig {
        match self {
            Preset::SmallRbcLike => small_rbc_like(),
            Preset::MediumNkLike => medium_nk_like(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

pub fn preset(name: &str) -> Result<SimConfig> {
    Ok(name.parse::<Preset>()?.config())
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

// Coefficients for both presets are listed in book/src/simulator.md; keep the
// two in sync.

fn small_rbc_like() -> SimConfig {
    let exo = ["g", "z"];
    let endo = ["k"];
    let controls = ["w", "r", "y", "c", "l", "i"];
    let partition = StatePartition::new(exo, endo, controls).expect("static partition");

    // Rows: w, r, y, c, l, i. Columns of B: g, z.
    let a = DMatrix::from_column_slice(6, 1, &[0.45, -0.60, 0.35, 0.55, -0.30, -0.40]);
    let b = DMatrix::from_row_slice(
        6,
        2,
        &[
            -0.15, 0.90, //
            0.10, 1.00, //
            0.25, 1.20, //
            -0.35, 0.50, //
            0.45, 0.70, //
            -0.25, 1.60,
        ],
    );
    let c = DMatrix::from_element(1, 1, 0.85);
    let d = DMatrix::from_row_slice(1, 2, &[0.20, 0.40]);
    let e = DMatrix::from_diagonal(&DVector::from_vec(vec![0.90, 0.95]));
    // g, z, k, then controls.
    let shock_variances = vec![1.0, 0.5, 0.02, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05];
    let params = StateSpaceParams::new(partition, a, b, c, d, e, shock_variances)
        .expect("static parameters");
    SimConfig {
        params,
        n: 100_000,
        seed: 0,
        burn_in: DEFAULT_BURN_IN,
        columns: Some(strings(&["g", "z", "k", "w", "r", "y", "c", "l", "i"])),
    }
}

fn medium_nk_like() -> SimConfig {
    let exo = ["nu", "a", "z"];
    let endo = ["p"];
    let controls = [
        "y", "i", "pi", "y_gap", "r_nat", "r_real", "n", "m_real", "m_nominal", "w", "c",
        "w_real", "mu",
    ];
    let partition = StatePartition::new(exo, endo, controls).expect("static partition");

    let a = DMatrix::from_column_slice(
        13,
        1,
        &[
            0.30, -0.25, 0.40, -0.20, 0.15, -0.35, 0.25, -0.45, 0.50, 0.20, 0.35, -0.30, 0.10,
        ],
    );
    // Columns: nu, a, z.
    let b = DMatrix::from_row_slice(
        13,
        3,
        &[
            -0.40, 0.90, 0.20, //
            0.80, -0.15, 0.30, //
            -0.30, -0.40, 0.25, //
            -0.50, 0.10, 0.35, //
            0.05, 0.60, 0.45, //
            0.70, 0.20, -0.15, //
            -0.35, -0.30, 0.40, //
            -0.60, 0.45, 0.10, //
            -0.45, 0.35, 0.30, //
            0.15, 0.55, 0.20, //
            -0.25, 0.80, 0.30, //
            0.20, 0.50, -0.25, //
            0.40, -0.50, 0.15,
        ],
    );
    let c = DMatrix::from_element(1, 1, 0.80);
    let d = DMatrix::from_row_slice(1, 3, &[-0.30, -0.25, 0.20]);
    let e = DMatrix::from_diagonal(&DVector::from_vec(vec![0.50, 0.90, 0.70]));
    let mut shock_variances = vec![1.0, 0.6, 0.8, 0.02];
    shock_variances.extend(std::iter::repeat_n(0.05, 13));
    let params = StateSpaceParams::new(partition, a, b, c, d, e, shock_variances)
        .expect("static parameters");
    let columns = strings(&[
        "nu", "a", "z", "p", "y", "i", "pi", "y_gap", "r_nat", "r_real", "n", "m_real",
        "m_nominal", "w", "c", "w_real", "mu",
    ]);
    SimConfig {
        params,
        n: 100_000,
        seed: 0,
        burn_in: DEFAULT_BURN_IN,
        columns: Some(columns),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_lagged_design, Role};

    fn single_exo(e: f64, n: usize) -> SimConfig {
        let part = StatePartition::new(["z"], Vec::<String>::new(), ["y"]).unwrap();
        let params = StateSpaceParams::new(
            part,
            DMatrix::zeros(1, 0),
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, 1),
            DMatrix::from_element(1, 1, e),
            vec![1.0, 1.0],
        )
        .unwrap();
        SimConfig::new(params, n, 11)
    }

    fn lag1_autocorr(v: &[f64]) -> f64 {
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let num: f64 = (1..n).map(|t| (v[t] - mean) * (v[t - 1] - mean)).sum();
        let den: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
        num / den
    }

    #[test]
    fn zero_coefficients_give_iid_normals() {
        let mut cfg = single_exo(0.0, 100_000);
        cfg.params.b[(0, 0)] = 0.0;
        let frame = simulate(&cfg).unwrap();
        for name in ["z", "y"] {
            let col = frame.column(name).unwrap();
            let mean = col.mean();
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!((var - 1.0).abs() < 0.05, "{name} variance {var}");
        }
    }

    #[test]
    fn ar1_autocorrelation_matches_coefficient() {
        let frame = simulate(&single_exo(0.5, 100_000)).unwrap();
        let z: Vec<f64> = frame.column("z").unwrap().iter().copied().collect();
        let r = lag1_autocorr(&z);
        // Standard error is about (1 - 0.25) / sqrt(n) = 0.0024.
        assert!((r - 0.5).abs() < 0.01, "autocorrelation {r}");
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let mut cfg = preset("small-rbc-like").unwrap();
        cfg.n = 500;
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.values().as_slice(), b.values().as_slice());
        cfg.seed = 1;
        let c = simulate(&cfg).unwrap();
        assert_ne!(a.values().as_slice(), c.values().as_slice());
    }

    #[test]
    fn exogenous_states_rebuild_from_shocks() {
        let mut cfg = preset("small-rbc-like").unwrap();
        cfg.n = 300;
        let sim = simulate_with_shocks(&cfg).unwrap();
        let part = cfg.partition().clone();
        let design = build_lagged_design(&sim.frame, &part).unwrap();
        let z_now = design.block(Role::Exo, 0);
        let z_lag = design.block(Role::Exo, 1);
        for i in 0..part.exo_states().len() {
            let e = cfg.params.e[(i, i)];
            for row in 0..design.t_eff() {
                // Design row `row` is sample period `row + 2`.
                let rebuilt = e * z_lag[(row, i)] + sim.shocks[(row + 2, i)];
                assert_eq!(rebuilt, z_now[(row, i)]);
            }
        }
    }

    #[test]
    fn preset_partitions() {
        let rbc = preset("small-rbc-like").unwrap();
        let p = rbc.partition();
        assert_eq!(
            (p.exo_states().len(), p.endo_states().len(), p.controls().len()),
            (2, 1, 6)
        );
        assert!(rbc.params.e_spectral_radius() < 1.0);
        assert!(rbc.params.e_spectral_radius() < 0.99);
        assert!(rbc.params.c_spectral_radius() < 0.99);

        let nk = preset("medium-nk-like").unwrap();
        let p = nk.partition();
        assert_eq!(
            (p.exo_states().len(), p.endo_states().len(), p.controls().len()),
            (3, 1, 13)
        );
        assert!(nk.params.e_spectral_radius() < 0.99);
        assert!(nk.validate().is_ok());
        assert!(matches!(preset("dsge"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = single_exo(0.5, 3);
        assert!(matches!(simulate(&cfg), Err(Error::InsufficientRows { .. })));
        cfg.n = 10;
        cfg.params.e[(0, 0)] = 1.0;
        assert!(matches!(simulate(&cfg), Err(Error::NonStationary(_))));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = preset("medium-nk-like").unwrap();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: SimConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
