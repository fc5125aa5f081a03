//! Impulse responses of a fitted state-space model and of a VAR(1) baseline.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{centered, least_squares, spectral_radius};
use crate::model::{degenerate, LaggedVar, Role, StateSpaceParams, TimeSeriesFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfRequest {
    pub model: StateSpaceParams,
    /// An exogenous or endogenous state.
    pub shocked: String,
    /// Size of the impulse in shock standard deviations.
    pub magnitude: f64,
    /// Number of periods returned, impact included.
    pub horizon: usize,
}

/// Responses by period (rows, period 0 is impact) and variable (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct IrfPath {
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
}

impl IrfPath {
    pub fn horizon(&self) -> usize {
        self.values.nrows()
    }

    pub fn response(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        Ok(self.values.column(j).iter().copied().collect())
    }

    /// Long format: one `period,variable,response` row per cell, periods in
    /// order and variables in column order within a period.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["period", "variable", "response"])?;
        for t in 0..self.values.nrows() {
            for (j, name) in self.names.iter().enumerate() {
                w.write_record([t.to_string(), name.clone(), self.values[(t, j)].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the output of [`IrfPath::write_csv`].
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["period", "variable", "response"] {
            return Err(Error::Parse("expected header `period,variable,response`".into()));
        }
        let mut names: Vec<String> = Vec::new();
        let mut cells: Vec<(usize, usize, f64)> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Parse(format!("row {}: bad {what}", line + 2));
            let period: usize = rec[0].parse().map_err(|_| bad("period"))?;
            let value: f64 = rec[2].parse().map_err(|_| bad("response"))?;
            let j = match names.iter().position(|n| n == &rec[1]) {
                Some(j) => j,
                None => {
                    names.push(rec[1].to_string());
                    names.len() - 1
                }
            };
            cells.push((period, j, value));
        }
        let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
        if cells.len() != rows * names.len() {
            return Err(Error::Parse("IRF table is not a complete period x variable grid".into()));
        }
        let mut values = DMatrix::zeros(rows, names.len());
        for (t, j, v) in cells {
            values[(t, j)] = v;
        }
        Ok(Self { names, values })
    }
}

fn check_horizon(horizon: usize, magnitude: f64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if !magnitude.is_finite() {
        return Err(Error::Config(format!("shock magnitude must be finite, got {magnitude}")));
    }
    Ok(())
}

/// Iterates the state-space equations from a one-time impulse.
///
/// A shock to exogenous state `j` sets `z_0 = m sd_j e_j`, so `x_0 = D z_0`
/// and `y_0 = B z_0` respond on impact. A shock to an endogenous state sets
/// `x_0` alone; controls respond from period 1 through `A`. No further
/// shocks arrive.
///
/// ```
/// use nalgebra::DMatrix;
/// use statelearn::irf::{irf_statespace, IrfRequest};
/// use statelearn::model::{StatePartition, StateSpaceParams};
///
/// let part = StatePartition::new(["z"], Vec::<String>::new(), ["y"]).unwrap();
/// let model = StateSpaceParams::new(
///     part,
///     DMatrix::zeros(1, 0),
///     DMatrix::from_element(1, 1, 2.0),
///     DMatrix::zeros(0, 0),
///     DMatrix::zeros(0, 1),
///     DMatrix::from_element(1, 1, 0.5),
///     vec![1.0, 0.0],
/// )
/// .unwrap();
/// let path = irf_statespace(&IrfRequest { model, shocked: "z".into(), magnitude: 1.0, horizon: 4 }).unwrap();
/// assert_eq!(path.response("z").unwrap(), [1.0, 0.5, 0.25, 0.125]);
/// assert_eq!(path.response("y").unwrap(), [2.0, 1.0, 0.5, 0.25]);
/// ```
pub fn irf_statespace(req: &IrfRequest) -> Result<IrfPath> {
    check_horizon(req.horizon, req.magnitude)?;
    let p = &req.model;
    let part = &p.partition;
    let role = part
        .role_of(&req.shocked)
        .ok_or_else(|| Error::UnknownVariable(req.shocked.clone()))?;
    if role == Role::Control {
        return Err(Error::ShockedControl(req.shocked.clone()));
    }
    let rho_c = p.c_spectral_radius();
    let rho_e = p.e_spectral_radius();
    if !(rho_c < 1.0 && rho_e < 1.0) {
        return Err(Error::NonStationary(format!(
            "spectral radii of C and E are {rho_c} and {rho_e}; both must be below 1"
        )));
    }
    let nz = part.exo_states().len();
    let nx = part.endo_states().len();
    let ny = part.controls().len();
    let sd = p
        .shock_variance(&req.shocked)
        .expect("states have variances")
        .sqrt();
    let impulse = req.magnitude * sd;

    let mut z = DVector::<f64>::zeros(nz);
    let mut x = DVector::<f64>::zeros(nx);
    let mut y = DVector::<f64>::zeros(ny);
    let pos = |names: &[String]| names.iter().position(|n| *n == req.shocked).expect("role checked");
    match role {
        Role::Exo => {
            z[pos(part.exo_states())] = impulse;
            x = &p.d * &z;
            y = &p.b * &z;
        }
        Role::Endo => x[pos(part.endo_states())] = impulse,
        Role::Control => unreachable!(),
    }

    let mut values = DMatrix::zeros(req.horizon, part.k());
    for t in 0..req.horizon {
        if t > 0 {
            let x_prev = x.clone();
            z = &p.e * &z;
            x = &p.c * &x_prev + &p.d * &z;
            y = &p.a * &x_prev + &p.b * &z;
        }
        let mut row = values.row_mut(t);
        row.columns_mut(0, nz).copy_from(&z.transpose());
        row.columns_mut(nz, nx).copy_from(&x.transpose());
        row.columns_mut(nz + nx, ny).copy_from(&y.transpose());
    }
    Ok(IrfPath {
        names: part.all_names().cloned().collect(),
        values,
    })
}

/// Unrestricted VAR(1) on centered data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Var1Fit {
    pub names: Vec<String>,
    /// `coef[(i, j)]` is the effect of variable `j` at `t-1` on variable `i`.
    pub coef: DMatrix<f64>,
    /// Residual covariance, divisor `T - 1`.
    pub resid_cov: DMatrix<f64>,
}

impl Var1Fit {
    pub fn residual_sd(&self, name: &str) -> Result<f64> {
        let j = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        Ok(self.resid_cov[(j, j)].sqrt())
    }
}

/// Least-squares regression of every variable on the first lags of all
/// variables, after centering over the usable rows.
pub fn fit_var1(frame: &TimeSeriesFrame) -> Result<Var1Fit> {
    let (t, k) = (frame.len(), frame.width());
    if t < k + 3 {
        return Err(Error::InsufficientRows {
            needed: k + 3,
            got: t,
        });
    }
    let v = frame.values();
    let lagged = centered(&v.rows(0, t - 1).into_owned());
    let current = centered(&v.rows(1, t - 1).into_owned());
    let labels: Vec<LaggedVar> = frame.names().iter().map(|n| LaggedVar::new(n.clone(), 1)).collect();
    let fit = least_squares(&lagged, &current).map_err(|e| degenerate(&labels, &e.dependent))?;
    let resid_cov = fit.residuals.tr_mul(&fit.residuals) / (t - 1) as f64;
    Ok(Var1Fit {
        names: frame.names().to_vec(),
        coef: fit.coef.transpose(),
        resid_cov,
    })
}

/// `path_h = coef^h shock` for `h = 0..horizon`.
///
/// Refuses a coefficient matrix with spectral radius of 1 or more unless
/// `allow_nonstationary` is set.
pub fn irf_var1(
    names: &[String],
    coef: &DMatrix<f64>,
    shock: &DVector<f64>,
    horizon: usize,
    allow_nonstationary: bool,
) -> Result<IrfPath> {
    check_horizon(horizon, 1.0)?;
    let k = names.len();
    if coef.shape() != (k, k) || shock.len() != k {
        return Err(Error::Dimension(format!(
            "{k} names, coefficient matrix {:?}, shock of length {}",
            coef.shape(),
            shock.len()
        )));
    }
    if shock.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("shock vector".into()));
    }
    let rho = spectral_radius(coef);
    if !allow_nonstationary && !(rho < 1.0) {
        return Err(Error::NonStationary(format!(
            "VAR coefficient matrix has spectral radius {rho}"
        )));
    }
    let mut values = DMatrix::zeros(horizon, k);
    let mut state = shock.clone();
    for h in 0..horizon {
        if h > 0 {
            state = coef * &state;
        }
        values.row_mut(h).copy_from(&state.transpose());
    }
    Ok(IrfPath {
        names: names.to_vec(),
        values,
    })
}

/// VAR(1) response to a plain (non-orthogonalized) shock of `magnitude`
/// residual standard deviations to `shocked`.
pub fn irf_var1_fitted(fit: &Var1Fit, shocked: &str, magnitude: f64, horizon: usize, allow_nonstationary: bool) -> Result<IrfPath> {
    check_horizon(horizon, magnitude)?;
    let j = fit
        .names
        .iter()
        .position(|n| n == shocked)
        .ok_or_else(|| Error::UnknownVariable(shocked.to_string()))?;
    let mut shock = DVector::zeros(fit.names.len());
    shock[j] = magnitude * fit.residual_sd(shocked)?;
    irf_var1(&fit.names, &fit.coef, &shock, horizon, allow_nonstationary)
}
