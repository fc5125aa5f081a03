use nalgebra::{DMatrix, DVector};

use statelearn::model::{fit_params, NamedMatrix, StatePartition, StateSpaceParams};
use statelearn::simulate::{simulate, Preset};

fn blocks(p: &StateSpaceParams) -> [NamedMatrix; 5] {
    let (z, x, y) = (p.partition.exo_states(), p.partition.endo_states(), p.partition.controls());
    [
        NamedMatrix::new(y, x, &p.a),
        NamedMatrix::new(y, z, &p.b),
        NamedMatrix::new(x, x, &p.c),
        NamedMatrix::new(x, z, &p.d),
        NamedMatrix::new(z, z, &p.e),
    ]
}

#[test]
fn long_sample_fit_is_within_a_hundredth() {
    let sim = Preset::SmallRbcLike.config();
    let frame = simulate(&sim).unwrap();
    let fit = fit_params(&frame, &sim.params.partition).unwrap();
    for (est, truth) in blocks(&fit).iter().zip(blocks(&sim.params)) {
        for (r, row) in est.data.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let want = truth.data[r][c];
                assert!((v - want).abs() < 0.01, "{} <- {}: {v} vs {want}", est.rows[r], est.cols[c]);
            }
        }
    }
}

#[test]
fn fit_follows_relabeling() {
    let mut sim = Preset::SmallRbcLike.config();
    sim.n = 2_000;
    let frame = simulate(&sim).unwrap();
    let truth = &sim.params.partition;
    let rev = |v: &[String]| v.iter().rev().cloned().collect::<Vec<_>>();
    let permuted = StatePartition::new(rev(truth.exo_states()), rev(truth.endo_states()), rev(truth.controls())).unwrap();

    let a = fit_params(&frame, truth).unwrap();
    let b = fit_params(&frame, &permuted).unwrap();
    for (x, y) in blocks(&a).iter().zip(blocks(&b)) {
        let relabeled = y.to_matrix(&x.rows, &x.cols).unwrap();
        let original = x.to_matrix(&x.rows, &x.cols).unwrap();
        assert!((relabeled - original).amax() < 1e-10);
    }
    for name in truth.all_names() {
        let (va, vb) = (a.shock_variance(name).unwrap(), b.shock_variance(name).unwrap());
        assert!((va - vb).abs() <= 1e-12 * va.max(1.0), "{name}");
    }
}

/// OLS coefficients and their t statistics.
fn ols_t(x: &DMatrix<f64>, y: &DVector<f64>) -> Vec<f64> {
    let xtx_inv = (x.transpose() * x).try_inverse().unwrap();
    let beta = &xtx_inv * x.transpose() * y;
    let resid = y - x * &beta;
    let s2 = resid.norm_squared() / (x.nrows() - x.ncols()) as f64;
    (0..x.ncols()).map(|j| beta[j] / (s2 * xtx_inv[(j, j)]).sqrt()).collect()
}

#[test]
fn exogenous_states_are_granger_independent() {
    let sim = Preset::SmallRbcLike.config();
    let frame = simulate(&sim).unwrap();
    let part = &sim.params.partition;
    let n = frame.len();
    let lagged: Vec<&String> = part.exo_states().iter().chain(part.endo_states()).collect();
    let x = DMatrix::from_fn(n - 1, lagged.len() + 1, |i, j| {
        if j == lagged.len() {
            1.0
        } else {
            frame.column(lagged[j]).unwrap()[i]
        }
    });
    let endo_cols = part.exo_states().len()..lagged.len();
    for z in part.exo_states() {
        let col = frame.column(z).unwrap();
        let y = DVector::from_fn(n - 1, |i, _| col[i + 1]);
        let t = ols_t(&x, &y);
        for j in endo_cols.clone() {
            assert!(t[j].abs() < 2.576, "{z} on lagged {}: t = {}", lagged[j], t[j]);
        }
    }
}

#[test]
fn exogenous_residuals_are_uncorrelated() {
    let sim = Preset::SmallRbcLike.config();
    let frame = simulate(&sim).unwrap();
    let fit = fit_params(&frame, &sim.params.partition).unwrap();
    let z = fit.partition.exo_states();
    let n = frame.len() - 1;
    let resid: Vec<DVector<f64>> = z
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let col = frame.column(name).unwrap();
            let r = DVector::from_fn(n, |t, _| col[t + 1] - fit.e[(i, i)] * col[t]);
            let mean = r.mean();
            r.add_scalar(-mean)
        })
        .collect();
    let bound = 3.0 / (n as f64).sqrt();
    for i in 0..z.len() {
        for j in 0..i {
            let r = resid[i].dot(&resid[j]) / (resid[i].norm() * resid[j].norm());
            assert!(r.abs() < bound, "{} / {}: {r}", z[i], z[j]);
        }
    }
}

#[test]
fn preset_roles() {
    for (preset, sizes) in [(Preset::SmallRbcLike, (2, 1, 6)), (Preset::MediumNkLike, (3, 1, 13))] {
        let p = preset.config().params;
        let part = &p.partition;
        assert_eq!((part.exo_states().len(), part.endo_states().len(), part.controls().len()), sizes);
        assert!(p.e_spectral_radius() < 0.99 && p.c_spectral_radius() < 0.99);
    }
}
