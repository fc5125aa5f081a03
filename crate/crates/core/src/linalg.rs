//! Least squares by Householder QR with column-norm pivoting.
//!
//! Columns are scaled to unit norm before factoring, so the rank decision is
//! about collinearity and not about the units the data happen to be in. A
//! column whose distance to the span of the previously pivoted columns falls
//! below [`RANK_TOL`] is reported as dependent; no pseudo-inverse fallback
//! exists.

use nalgebra::{DMatrix, DVector};

/// Relative tolerance on the pivoted diagonal of `R` (columns have unit norm).
pub const RANK_TOL: f64 = 1e-10;

/// The regressor matrix does not have full column rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RankDeficient {
    pub rank: usize,
    /// Indices (into the original column order) of the dependent columns.
    pub dependent: Vec<usize>,
}

/// A full-column-rank pivoted QR factorization `X P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// Householder vectors below the diagonal, `R` on and above it.
    packed: DMatrix<f64>,
    tau: Vec<f64>,
    /// `perm[j]` is the original column placed at pivot position `j`.
    perm: Vec<usize>,
    scale: Vec<f64>,
}

/// Applies `I - tau u uᵀ` to `col`, where `u = (0.., 1, v[k+1..])` has its
/// unit entry at `k`.
fn reflect(v: &[f64], tau: f64, k: usize, col: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let vt = &v[k + 1..];
    let (ck, ct) = col[k..].split_first_mut().expect("k < m");
    let dot = tau * (*ck + vt.iter().zip(ct.iter()).map(|(a, b)| a * b).sum::<f64>());
    *ck -= dot;
    for (c, &vi) in ct.iter_mut().zip(vt) {
        *c -= dot * vi;
    }
}

impl PivotedQr {
    pub fn new(x: &DMatrix<f64>) -> Result<Self, RankDeficient> {
        let (m, n) = x.shape();
        let mut a = x.clone();
        let mut scale = vec![1.0; n];
        for j in 0..n {
            let norm = a.column(j).norm();
            if norm > 0.0 && norm.is_finite() {
                scale[j] = norm;
                a.column_mut(j).scale_mut(1.0 / norm);
            }
        }

        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = vec![0.0; n.min(m)];
        let steps = n.min(m);
        let mut rank = 0;

        for k in 0..steps {
            // Pivot: remaining column with the largest trailing norm.
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let s = a.view((k, j), (m - k, 1)).norm_squared();
                if s > best_norm {
                    best_norm = s;
                    best = j;
                }
            }
            if best != k {
                a.swap_columns(k, best);
                perm.swap(k, best);
            }
            let alpha_norm = best_norm.sqrt();
            if !(alpha_norm > RANK_TOL) {
                break;
            }
            rank += 1;

            // Householder reflector zeroing a[k+1.., k].
            let x0 = a[(k, k)];
            let beta = if x0 >= 0.0 { -alpha_norm } else { alpha_norm };
            let v0 = x0 - beta;
            for x in &mut a.as_mut_slice()[k * m + k + 1..(k + 1) * m] {
                *x /= v0;
            }
            let t = (beta - x0) / beta;
            tau[k] = t;
            a[(k, k)] = beta;

            let data = a.as_mut_slice();
            let (head, tail) = data.split_at_mut((k + 1) * m);
            let v = &head[k * m..];
            for col in tail.chunks_exact_mut(m) {
                reflect(v, t, k, col);
            }
        }

        if rank < n {
            let mut dependent: Vec<usize> = perm[rank..].to_vec();
            dependent.sort_unstable();
            return Err(RankDeficient { rank, dependent });
        }

        Ok(Self {
            packed: a,
            tau,
            perm,
            scale,
        })
    }

    pub fn ncols(&self) -> usize {
        self.perm.len()
    }

    fn reflector(&self, k: usize) -> &[f64] {
        let m = self.packed.nrows();
        &self.packed.as_slice()[k * m..(k + 1) * m]
    }

    /// Overwrites `b` with `Qᵀ b`.
    fn apply_qt(&self, b: &mut DMatrix<f64>) {
        let m = b.nrows();
        for k in 0..self.tau.len() {
            for col in b.as_mut_slice().chunks_exact_mut(m) {
                reflect(self.reflector(k), self.tau[k], k, col);
            }
        }
    }

    /// Overwrites `b` with `Q b`.
    fn apply_q(&self, b: &mut DMatrix<f64>) {
        let m = b.nrows();
        for k in (0..self.tau.len()).rev() {
            for col in b.as_mut_slice().chunks_exact_mut(m) {
                reflect(self.reflector(k), self.tau[k], k, col);
            }
        }
    }

    /// Residuals of each column of `y` after projection onto the column space.
    pub fn residuals(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.ncols();
        let mut b = y.clone();
        self.apply_qt(&mut b);
        for c in 0..b.ncols() {
            for i in 0..n {
                b[(i, c)] = 0.0;
            }
        }
        self.apply_q(&mut b);
        b
    }

    /// Least-squares coefficients, one column per column of `y`.
    pub fn solve(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.ncols();
        let mut b = y.clone();
        self.apply_qt(&mut b);
        let mut coef = DMatrix::zeros(n, y.ncols());
        for c in 0..y.ncols() {
            let mut z = DVector::zeros(n);
            for i in (0..n).rev() {
                let mut s = b[(i, c)];
                for j in (i + 1)..n {
                    s -= self.packed[(i, j)] * z[j];
                }
                z[i] = s / self.packed[(i, i)];
            }
            for j in 0..n {
                let orig = self.perm[j];
                coef[(orig, c)] = z[j] / self.scale[orig];
            }
        }
        coef
    }
}

/// Least-squares fit of every column of `y` on `x` (no intercept).
pub struct LeastSquares {
    pub coef: DMatrix<f64>,
    pub residuals: DMatrix<f64>,
}

pub fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<LeastSquares, RankDeficient> {
    if x.ncols() == 0 {
        return Ok(LeastSquares {
            coef: DMatrix::zeros(0, y.ncols()),
            residuals: y.clone(),
        });
    }
    let qr = PivotedQr::new(x)?;
    Ok(LeastSquares {
        coef: qr.solve(y),
        residuals: qr.residuals(y),
    })
}

/// Subtracts each column's mean in place.
pub fn center_columns(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return;
    }
    for mut col in m.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }
}

pub fn centered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    center_columns(&mut out);
    out
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn design() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            6,
            3,
            &[
                1.0, 0.5, -2.0, //
                2.0, -1.0, 0.3, //
                0.1, 3.0, 1.0, //
                -1.5, 0.2, 0.7, //
                0.9, -0.4, -1.1, //
                2.2, 1.7, 0.05,
            ],
        )
    }

    #[test]
    fn recovers_exact_coefficients() {
        let x = design();
        let beta = DMatrix::from_column_slice(3, 2, &[1.0, -2.0, 0.5, 0.0, 3.0, -1.0]);
        let y = &x * &beta;
        let fit = least_squares(&x, &y).unwrap();
        assert_relative_eq!(fit.coef, beta, epsilon = 1e-12);
        assert!(fit.residuals.amax() < 1e-12);
    }

    #[test]
    fn residuals_are_orthogonal_to_regressors() {
        let x = design();
        let y = DMatrix::from_column_slice(6, 1, &[0.3, -1.0, 2.5, 0.1, 0.0, -0.7]);
        let fit = least_squares(&x, &y).unwrap();
        let cross = x.transpose() * &fit.residuals;
        assert!(cross.amax() < 1e-12);
        // Independent route: normal equations.
        let xtx = x.transpose() * &x;
        let beta = xtx.try_inverse().unwrap() * x.transpose() * &y;
        assert_relative_eq!(fit.coef, beta, epsilon = 1e-10);
    }

    #[test]
    fn duplicate_column_is_rank_deficient() {
        let mut x = design();
        let c0 = x.column(0).clone_owned();
        x.set_column(2, &(c0 * 4.0));
        let err = PivotedQr::new(&x).unwrap_err();
        assert_eq!(err.rank, 2);
        assert_eq!(err.dependent.len(), 1);
        assert!(err.dependent[0] == 0 || err.dependent[0] == 2);
    }

    #[test]
    fn zero_column_is_rank_deficient() {
        let mut x = design();
        x.column_mut(1).fill(0.0);
        let err = PivotedQr::new(&x).unwrap_err();
        assert_eq!(err.dependent, vec![1]);
    }

    #[test]
    fn badly_scaled_columns_are_not_flagged() {
        let mut x = design();
        x.column_mut(1).scale_mut(1e-9);
        x.column_mut(2).scale_mut(1e9);
        assert!(PivotedQr::new(&x).is_ok());
    }

    #[test]
    fn spectral_radius_of_rotation() {
        let r = DMatrix::from_row_slice(2, 2, &[0.0, -0.8, 0.8, 0.0]);
        assert_relative_eq!(spectral_radius(&r), 0.8, epsilon = 1e-12);
    }
}
