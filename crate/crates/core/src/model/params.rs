use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::design::{build_lagged_design, LaggedDesign, LaggedVar};
use super::frame::TimeSeriesFrame;
use super::partition::{Role, StatePartition};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, spectral_radius};

/// Coefficient matrices of
///
/// ```text
/// y_t = A x_{t-1} + B z_t (+ u_y)
/// x_t = C x_{t-1} + D z_t (+ u_x)
/// z_t = E z_{t-1} + eps_t
/// ```
///
/// with `E` diagonal and one shock variance per observable equation, stored
/// in [`StatePartition::all_names`] order. Variances on the `x` and `y`
/// equations may be zero (an exact solution); all must be finite and
/// non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsJson", into = "ParamsJson")]
pub struct StateSpaceParams {
    pub partition: StatePartition,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub shock_variances: Vec<f64>,
}

impl StateSpaceParams {
    pub fn new(
        partition: StatePartition,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        e: DMatrix<f64>,
        shock_variances: Vec<f64>,
    ) -> Result<Self> {
        let p = Self {
            partition,
            a,
            b,
            c,
            d,
            e,
            shock_variances,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let nx = self.partition.endo_states().len();
        let ny = self.partition.controls().len();
        let nz = self.partition.exo_states().len();
        let check = |name: &str, m: &DMatrix<f64>, r: usize, c: usize| -> Result<()> {
            if m.shape() != (r, c) {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {r}x{c}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("matrix {name}")));
            }
            Ok(())
        };
        check("A", &self.a, ny, nx)?;
        check("B", &self.b, ny, nz)?;
        check("C", &self.c, nx, nx)?;
        check("D", &self.d, nx, nz)?;
        check("E", &self.e, nz, nz)?;
        for i in 0..nz {
            for j in 0..nz {
                if i != j && self.e[(i, j)] != 0.0 {
                    return Err(Error::InvalidParams("E must be diagonal".into()));
                }
            }
            if self.e[(i, i)].abs() >= 1.0 {
                return Err(Error::NonStationary(format!(
                    "|e| = {} for exogenous state `{}` must be below 1",
                    self.e[(i, i)].abs(),
                    self.partition.exo_states()[i]
                )));
            }
        }
        if self.shock_variances.len() != self.partition.k() {
            return Err(Error::Dimension(format!(
                "{} shock variances for {} observables",
                self.shock_variances.len(),
                self.partition.k()
            )));
        }
        if let Some(v) = self
            .shock_variances
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidParams(format!(
                "shock variance {v} must be finite and non-negative"
            )));
        }
        Ok(())
    }

    pub fn shock_variance(&self, name: &str) -> Option<f64> {
        self.partition
            .all_names()
            .position(|n| n == name)
            .map(|i| self.shock_variances[i])
    }

    /// Spectral radius of the endogenous-state transition `C`.
    pub fn c_spectral_radius(&self) -> f64 {
        spectral_radius(&self.c)
    }

    pub fn e_spectral_radius(&self) -> f64 {
        (0..self.e.nrows())
            .map(|i| self.e[(i, i)].abs())
            .fold(0.0, f64::max)
    }
}

/// Row-major matrix with explicit row and column labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl NamedMatrix {
    pub fn new(rows: &[String], cols: &[String], m: &DMatrix<f64>) -> Self {
        Self {
            rows: rows.to_vec(),
            cols: cols.to_vec(),
            data: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    /// Rebuilds the matrix, reordering to the requested labels.
    pub fn to_matrix(&self, rows: &[String], cols: &[String]) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows.len() || self.data.iter().any(|r| r.len() != self.cols.len()) {
            return Err(Error::Dimension("matrix data does not match its labels".into()));
        }
        let find = |labels: &[String], want: &String| {
            labels
                .iter()
                .position(|l| l == want)
                .ok_or_else(|| Error::UnknownVariable(want.clone()))
        };
        if rows.len() != self.rows.len() || cols.len() != self.cols.len() {
            return Err(Error::Dimension("matrix labels do not match the partition".into()));
        }
        let ri = rows.iter().map(|r| find(&self.rows, r)).collect::<Result<Vec<_>>>()?;
        let ci = cols.iter().map(|c| find(&self.cols, c)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.data[ri[i]][ci[j]]
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShockVariance {
    pub name: String,
    pub variance: f64,
}

/// On-disk JSON layout of [`StateSpaceParams`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamsJson {
    partition: StatePartition,
    a: NamedMatrix,
    b: NamedMatrix,
    c: NamedMatrix,
    d: NamedMatrix,
    e: NamedMatrix,
    shock_variances: Vec<ShockVariance>,
}

impl From<StateSpaceParams> for ParamsJson {
    fn from(p: StateSpaceParams) -> Self {
        let (x, y, z) = (
            p.partition.endo_states(),
            p.partition.controls(),
            p.partition.exo_states(),
        );
        ParamsJson {
            a: NamedMatrix::new(y, x, &p.a),
            b: NamedMatrix::new(y, z, &p.b),
            c: NamedMatrix::new(x, x, &p.c),
            d: NamedMatrix::new(x, z, &p.d),
            e: NamedMatrix::new(z, z, &p.e),
            shock_variances: p
                .partition
                .all_names()
                .zip(&p.shock_variances)
                .map(|(n, v)| ShockVariance {
                    name: n.clone(),
                    variance: *v,
                })
                .collect(),
            partition: p.partition,
        }
    }
}

impl TryFrom<ParamsJson> for StateSpaceParams {
    type Error = Error;
    fn try_from(j: ParamsJson) -> Result<Self> {
        let part = j.partition;
        let (x, y, z) = (part.endo_states(), part.controls(), part.exo_states());
        let a = j.a.to_matrix(y, x)?;
        let b = j.b.to_matrix(y, z)?;
        let c = j.c.to_matrix(x, x)?;
        let d = j.d.to_matrix(x, z)?;
        let e = j.e.to_matrix(z, z)?;
        let shock_variances = part
            .all_names()
            .map(|n| {
                j.shock_variances
                    .iter()
                    .find(|s| &s.name == n)
                    .map(|s| s.variance)
                    .ok_or_else(|| Error::Parse(format!("missing shock variance for `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        StateSpaceParams::new(part, a, b, c, d, e, shock_variances)
    }
}

pub(crate) fn degenerate(labels: &[LaggedVar], dependent: &[usize]) -> Error {
    Error::DegenerateDesign {
        columns: dependent.iter().map(|&i| labels[i].to_string()).collect(),
    }
}

/// Per-equation residuals of the state-space regressions, in
/// [`StatePartition::all_names`] order.
pub(crate) struct Fitted {
    pub params: StateSpaceParams,
    #[cfg_attr(not(test), allow(dead_code))]
    pub residuals: DMatrix<f64>,
}

/// Gaussian maximum-likelihood fit (per-equation least squares) on a design
/// whose blocks are already centered.
pub(crate) fn fit_centered(design: &LaggedDesign) -> Result<Fitted> {
    let part = design.partition().clone();
    let nx = part.endo_states().len();
    let nz = part.exo_states().len();
    let t_eff = design.t_eff();

    let (regs, labels) = design.stack(&[(Role::Endo, 1), (Role::Exo, 0)]);
    let (targets, _) = design.stack(&[(Role::Endo, 0), (Role::Control, 0)]);
    let fit = least_squares(&regs, &targets).map_err(|e| degenerate(&labels, &e.dependent))?;
    // coef is (nx + nz) x (nx + ny); transpose gives one row per equation.
    let coef_t = fit.coef.transpose();
    let c = coef_t.view((0, 0), (nx, nx)).into_owned();
    let d = coef_t.view((0, nx), (nx, nz)).into_owned();
    let a = coef_t.view((nx, 0), (coef_t.nrows() - nx, nx)).into_owned();
    let b = coef_t.view((nx, nx), (coef_t.nrows() - nx, nz)).into_owned();

    let mut e = DMatrix::zeros(nz, nz);
    let mut z_resid = DMatrix::zeros(t_eff, nz);
    let z_now = design.block(Role::Exo, 0);
    let z_lag = design.block(Role::Exo, 1);
    for i in 0..nz {
        let xi = z_lag.column(i).into_owned();
        let yi = z_now.column(i).into_owned();
        let fit = least_squares(&DMatrix::from_column_slice(t_eff, 1, xi.as_slice()), &DMatrix::from_column_slice(t_eff, 1, yi.as_slice()))
            .map_err(|_| Error::DegenerateDesign {
                columns: vec![LaggedVar::new(part.exo_states()[i].clone(), 1).to_string()],
            })?;
        e[(i, i)] = fit.coef[(0, 0)];
        z_resid.set_column(i, &fit.residuals.column(0));
    }

    // all_names order: exo, endo, controls.
    let mut residuals = DMatrix::zeros(t_eff, part.k());
    residuals.columns_mut(0, nz).copy_from(&z_resid);
    residuals
        .columns_mut(nz, fit.residuals.ncols())
        .copy_from(&fit.residuals);
    let shock_variances = residuals
        .column_iter()
        .map(|c| c.norm_squared() / t_eff as f64)
        .collect();

    // Sample estimates of E can exceed 1 in magnitude on short, persistent
    // samples; keep them rather than failing the fit.
    let params = StateSpaceParams {
        partition: part,
        a,
        b,
        c,
        d,
        e,
        shock_variances,
    };
    Ok(Fitted { params, residuals })
}

/// Maximum-likelihood coefficient matrices for `part` on `frame`.
///
/// Each control and endogenous state is regressed on `[x_{t-1}, z_t]`, each
/// exogenous state on its own lag, all over the usable rows `t = 2..T-1`
/// after centering. Shock variances are mean squared residuals (divisor
/// `T - 2`).
pub fn fit_params(frame: &TimeSeriesFrame, part: &StatePartition) -> Result<StateSpaceParams> {
    let design = build_lagged_design(frame, part)?.centered();
    Ok(fit_centered(&design)?.params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate, Preset};

    #[test]
    fn json_round_trip_and_reorder() {
        let cfg = Preset::SmallRbcLike.config();
        let json = serde_json::to_string(&cfg.params).unwrap();
        let back: StateSpaceParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg.params);
    }

    #[test]
    fn rejects_non_diagonal_or_explosive_e() {
        let part = StatePartition::new(["z1", "z2"], Vec::<String>::new(), ["y"]).unwrap();
        let base = |e: DMatrix<f64>| {
            StateSpaceParams::new(
                part.clone(),
                DMatrix::zeros(1, 0),
                DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                DMatrix::zeros(0, 0),
                DMatrix::zeros(0, 2),
                e,
                vec![1.0, 1.0, 0.0],
            )
        };
        assert!(base(DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.5])).is_err());
        assert!(matches!(
            base(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5])),
            Err(Error::NonStationary(_))
        ));
        assert!(base(DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, -0.5])).is_ok());
    }

    #[test]
    fn exact_data_recovers_ground_truth() {
        let mut cfg = Preset::SmallRbcLike.config();
        let nz = cfg.partition().exo_states().len();
        for v in cfg.params.shock_variances.iter_mut().skip(nz) {
            *v = 0.0;
        }
        cfg.n = 400;
        let frame = simulate(&cfg).unwrap();
        let fitted = fit_params(&frame, cfg.partition()).unwrap();
        for (name, (got, want)) in [
            ("A", (&fitted.a, &cfg.params.a)),
            ("B", (&fitted.b, &cfg.params.b)),
            ("C", (&fitted.c, &cfg.params.c)),
            ("D", (&fitted.d, &cfg.params.d)),
        ] {
            let diff = (got - want).amax();
            assert!(diff < 1e-9, "{name} differs by {diff}");
        }
    }

    #[test]
    fn duplicated_constant_regressor_is_degenerate() {
        let names: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let m = DMatrix::from_fn(20, 4, |i, j| match j {
            0 | 1 => 3.0,
            _ => ((i * 7 + j * 3) % 5) as f64,
        });
        let frame = TimeSeriesFrame::new(names.clone(), m).unwrap();
        let part = StatePartition::from_states(&names, &["a", "b"], &[]).unwrap();
        match fit_params(&frame, &part) {
            Err(Error::DegenerateDesign { columns }) => {
                assert!(!columns.is_empty());
                assert!(columns.iter().all(|c| c.starts_with('a') || c.starts_with('b')));
            }
            other => panic!("expected degenerate design, got {other:?}"),
        }
    }

    #[test]
    fn residuals_satisfy_normal_equations() {
        let mut cfg = Preset::SmallRbcLike.config();
        cfg.n = 500;
        let frame = simulate(&cfg).unwrap();
        let design = build_lagged_design(&frame, cfg.partition()).unwrap().centered();
        let fitted = fit_centered(&design).unwrap();
        let (regs, _) = design.stack(&[(Role::Endo, 1), (Role::Exo, 0)]);
        let nz = cfg.partition().exo_states().len();
        let eq = fitted.residuals.columns(nz, fitted.residuals.ncols() - nz);
        let cross = regs.transpose() * eq;
        let scale = regs.norm() * eq.norm();
        assert!(cross.amax() <= 1e-8 * scale, "cross {}", cross.amax());
        let zl = design.block(Role::Exo, 1);
        for i in 0..nz {
            let c = zl.column(i).dot(&fitted.residuals.column(i));
            assert!(c.abs() <= 1e-8 * zl.column(i).norm() * fitted.residuals.column(i).norm());
        }
    }
}
