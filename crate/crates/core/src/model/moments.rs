use std::collections::HashMap;

use nalgebra::DMatrix;

use super::design::{LaggedDesign, LaggedVar, MAX_LAG};
use super::frame::{TimeSeriesFrame, MIN_ROWS};
use super::partition::Role;
use crate::error::{Error, Result};
use crate::linalg::center_columns;

/// Threshold on the squared distance of a unit-variance conditioning column
/// to the span of the others. Cross-products carry rounding of order
/// `sqrt(T) * eps`, so this sits well above it.
pub const GRAM_RANK_TOL: f64 = 1e-12;

/// Centered second moments (divisor `T_eff`) of lagged variables over the
/// usable rows `t = 2..T-1`.
///
/// Every conditional variance the search needs is a Schur complement of this
/// matrix, so it is formed once per sample and shared by all candidates.
#[derive(Debug, Clone)]
pub struct Moments {
    index: HashMap<LaggedVar, usize>,
    cov: DMatrix<f64>,
    t_eff: usize,
}

impl Moments {
    fn from_panel(labels: Vec<LaggedVar>, mut panel: DMatrix<f64>) -> Self {
        center_columns(&mut panel);
        let t_eff = panel.nrows();
        let cov = panel.tr_mul(&panel) / t_eff as f64;
        Self {
            index: labels.into_iter().enumerate().map(|(i, v)| (v, i)).collect(),
            cov,
            t_eff,
        }
    }

    /// Moments of every column of `frame` at lags `0..=2`.
    pub fn from_frame(frame: &TimeSeriesFrame) -> Result<Self> {
        let t = frame.len();
        if t < MIN_ROWS {
            return Err(Error::InsufficientRows {
                needed: MIN_ROWS,
                got: t,
            });
        }
        let t_eff = t - MAX_LAG;
        let k = frame.width();
        let mut labels = Vec::with_capacity(k * (MAX_LAG + 1));
        let mut panel = DMatrix::zeros(t_eff, k * (MAX_LAG + 1));
        for lag in 0..=MAX_LAG {
            let start = MAX_LAG - lag;
            for (j, name) in frame.names().iter().enumerate() {
                panel
                    .column_mut(lag * k + j)
                    .copy_from(&frame.values().view((start, j), (t_eff, 1)));
                labels.push(LaggedVar::new(name.clone(), lag));
            }
        }
        Ok(Self::from_panel(labels, panel))
    }

    /// Moments of every block of `design`.
    pub fn from_design(design: &LaggedDesign) -> Self {
        let parts: Vec<(Role, usize)> = (0..=MAX_LAG)
            .flat_map(|lag| [Role::Exo, Role::Endo, Role::Control].map(|r| (r, lag)))
            .collect();
        let (panel, labels) = design.stack(&parts);
        Self::from_panel(labels, panel)
    }

    pub fn t_eff(&self) -> usize {
        self.t_eff
    }

    fn idx(&self, v: &LaggedVar) -> Result<usize> {
        self.index
            .get(v)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(v.to_string()))
    }

    pub fn variance(&self, v: &LaggedVar) -> Result<f64> {
        let i = self.idx(v)?;
        Ok(self.cov[(i, i)])
    }

    /// Covariance block between two variable lists.
    pub fn cov(&self, a: &[LaggedVar], b: &[LaggedVar]) -> Result<DMatrix<f64>> {
        let ia = a.iter().map(|v| self.idx(v)).collect::<Result<Vec<_>>>()?;
        let ib = b.iter().map(|v| self.idx(v)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(ia.len(), ib.len(), |i, j| self.cov[(ia[i], ib[j])]))
    }

    /// Covariance of the residuals of `targets` after regression on `cond`
    /// (with intercept), i.e. `S_tt - S_tc S_cc^-1 S_ct`.
    ///
    /// Conditioning columns closer than [`GRAM_RANK_TOL`] (squared, in
    /// correlation units) to the span of the others are reported as a
    /// [`Error::DegenerateDesign`]; constant conditioning columns are always
    /// dependent.
    pub fn residual_cov(&self, targets: &[LaggedVar], cond: &[LaggedVar]) -> Result<DMatrix<f64>> {
        let all: Vec<LaggedVar> = cond.iter().chain(targets).cloned().collect();
        let mut m = self.cov(&all, &all)?;
        let p = cond.len();
        let n = all.len();
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let d = m[(i, i)];
                if d > 0.0 {
                    d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] /= scale[i] * scale[j];
            }
        }

        // Symmetric elimination of the conditioning block, largest remaining
        // diagonal first.
        let mut remaining: Vec<usize> = (0..p).collect();
        let mut dependent = Vec::new();
        while !remaining.is_empty() {
            let (pos, &piv) = remaining
                .iter()
                .enumerate()
                .max_by(|a, b| m[(*a.1, *a.1)].total_cmp(&m[(*b.1, *b.1)]))
                .expect("non-empty");
            let d = m[(piv, piv)];
            if !(d > GRAM_RANK_TOL) {
                dependent.extend(remaining.iter().copied());
                break;
            }
            remaining.swap_remove(pos);
            let col: Vec<f64> = (0..n).map(|i| m[(i, piv)]).collect();
            for i in 0..n {
                if col[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    m[(i, j)] -= col[i] * col[j] / d;
                }
            }
        }
        if !dependent.is_empty() {
            dependent.sort_unstable();
            return Err(Error::DegenerateDesign {
                columns: dependent.iter().map(|&i| cond[i].to_string()).collect(),
            });
        }
        let q = targets.len();
        Ok(DMatrix::from_fn(q, q, |i, j| {
            m[(p + i, p + j)] * scale[p + i] * scale[p + j]
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_lagged_design, StatePartition};
    use crate::stats::residualize;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn frame(n: usize, seed: u64) -> TimeSeriesFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::<f64>::from_fn(n, 4, |_, _| StandardNormal.sample(&mut rng));
        for i in 1..n {
            m[(i, 0)] += 0.7 * m[(i - 1, 0)];
            m[(i, 1)] += 0.5 * m[(i, 0)] - 0.3 * m[(i - 1, 2)];
            m[(i, 3)] += m[(i, 1)] + 0.2 * m[(i - 1, 3)];
        }
        TimeSeriesFrame::new(vec!["a".into(), "b".into(), "c".into(), "d".into()], m).unwrap()
    }

    #[test]
    fn residual_cov_matches_qr_residuals() {
        let f = frame(400, 1);
        let mom = Moments::from_frame(&f).unwrap();
        let part = StatePartition::new(["a"], ["b"], ["c", "d"]).unwrap();
        let design = build_lagged_design(&f, &part).unwrap();
        let targets = [LaggedVar::new("d", 0), LaggedVar::new("c", 0), LaggedVar::new("a", 1)];
        let cond = [LaggedVar::new("b", 1), LaggedVar::new("a", 0), LaggedVar::new("c", 2)];
        let stack = |vars: &[LaggedVar]| {
            let mut out = DMatrix::zeros(design.t_eff(), vars.len());
            for (j, v) in vars.iter().enumerate() {
                out.set_column(j, &design.column(v).unwrap());
            }
            out
        };
        let r = residualize(&stack(&targets), &stack(&cond)).unwrap();
        let direct = r.tr_mul(&r) / design.t_eff() as f64;
        let via = mom.residual_cov(&targets, &cond).unwrap();
        assert!((direct - via).amax() < 1e-12);
    }

    #[test]
    fn frame_and_design_moments_agree() {
        let f = frame(100, 2);
        let part = StatePartition::new(["c"], ["a", "d"], ["b"]).unwrap();
        let a = Moments::from_frame(&f).unwrap();
        let b = Moments::from_design(&build_lagged_design(&f, &part).unwrap());
        let vars: Vec<LaggedVar> = ["a", "b", "c", "d"]
            .iter()
            .flat_map(|n| (0..=MAX_LAG).map(move |l| LaggedVar::new(*n, l)))
            .collect();
        assert!((a.cov(&vars, &vars).unwrap() - b.cov(&vars, &vars).unwrap()).amax() < 1e-13);
    }

    #[test]
    fn dependent_conditioning_is_reported() {
        let f = frame(200, 3);
        let mut v = f.values().clone();
        let a = v.column(0).into_owned();
        v.set_column(2, &(a * -3.0));
        let f = TimeSeriesFrame::new(f.names().to_vec(), v).unwrap();
        let mom = Moments::from_frame(&f).unwrap();
        let err = mom
            .residual_cov(&[LaggedVar::new("d", 0)], &[LaggedVar::new("a", 0), LaggedVar::new("c", 0)])
            .unwrap_err();
        let Error::DegenerateDesign { columns } = err else { panic!() };
        assert_eq!(columns.len(), 1);
    }
}
