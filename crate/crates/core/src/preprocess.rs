//! Detrending of raw series before the search.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::TimeSeriesFrame;

/// Replaces every column by the residuals of its own AR(1) regression with
/// intercept, then subtracts their mean. The first row is lost.
pub fn detrend(frame: &TimeSeriesFrame) -> Result<TimeSeriesFrame> {
    let (t, k) = (frame.len(), frame.width());
    let v = frame.values();
    let mut out = DMatrix::zeros(t - 1, k);
    for (j, name) in frame.names().iter().enumerate() {
        let col = v.column(j);
        let lag = col.rows(0, t - 1);
        let cur = col.rows(1, t - 1);
        let n = (t - 1) as f64;
        let (ml, mc) = (lag.sum() / n, cur.sum() / n);
        let sxx: f64 = lag.iter().map(|x| (x - ml).powi(2)).sum();
        if !(sxx > 0.0) || col.iter().all(|&x| x == col[0]) {
            return Err(Error::DegenerateInput(format!("column `{name}` is constant")));
        }
        let sxy: f64 = lag.iter().zip(cur.iter()).map(|(x, y)| (x - ml) * (y - mc)).sum();
        let beta = sxy / sxx;
        let resid: Vec<f64> = lag
            .iter()
            .zip(cur.iter())
            .map(|(x, y)| (y - mc) - beta * (x - ml))
            .collect();
        let mean = resid.iter().sum::<f64>() / n;
        for (i, r) in resid.iter().enumerate() {
            out[(i, j)] = r - mean;
        }
    }
    TimeSeriesFrame::new(frame.names().to_vec(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn lag1_autocorr(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        let den: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
        num / den
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn ar1_residuals_are_white() {
        let e = noise(10_000, 1);
        let mut x = vec![0.0; e.len()];
        for i in 1..x.len() {
            x[i] = 3.0 + 0.8 * x[i - 1] + e[i];
        }
        let frame = TimeSeriesFrame::new(vec!["x".into()], DMatrix::from_vec(x.len(), 1, x.clone())).unwrap();
        assert!(lag1_autocorr(&x) > 0.7);
        let out = detrend(&frame).unwrap();
        assert_eq!(out.len(), 9_999);
        let r: Vec<f64> = out.values().iter().copied().collect();
        assert!(lag1_autocorr(&r).abs() < 0.03);
        assert!(r.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn white_input_is_only_demeaned() {
        let e: Vec<f64> = noise(10_000, 2).iter().map(|v| v + 5.0).collect();
        let frame = TimeSeriesFrame::new(vec!["e".into()], DMatrix::from_vec(e.len(), 1, e.clone())).unwrap();
        let out = detrend(&frame).unwrap();
        let mean = e[1..].iter().sum::<f64>() / 9_999.0;
        let max_gap = out
            .values()
            .iter()
            .zip(&e[1..])
            .map(|(o, x)| (o - (x - mean)).abs())
            .fold(0.0, f64::max);
        // AR coefficient of order 1/sqrt(n) moves each value by a few hundredths at most.
        assert!(max_gap < 0.1, "{max_gap}");
    }

    #[test]
    fn constant_column_is_named() {
        let m = DMatrix::from_fn(10, 2, |i, j| if j == 1 { 4.0 } else { i as f64 * i as f64 });
        let frame = TimeSeriesFrame::new(vec!["a".into(), "flat".into()], m).unwrap();
        let err = detrend(&frame).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
        assert!(err.to_string().contains("`flat`"));
    }
}
