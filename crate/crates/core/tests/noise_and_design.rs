//! Statistical checks of the data generators and of whitening.

mod common;

use common::rng;
use wlasso::covariance::{build_precision, CovarianceModel};
use wlasso::linalg::DenseMatrix;
use wlasso::simulate::{gen_design, gen_noise, DesignSpec};

fn lag1_autocorrelation(e: &DenseMatrix) -> (f64, f64) {
    let (mut num, mut den, mut var) = (0.0, 0.0, 0.0);
    for i in 0..e.rows() {
        let row = e.row(i);
        num += row.windows(2).map(|w| w[0] * w[1]).sum::<f64>();
        den += row[..row.len() - 1].iter().map(|v| v * v).sum::<f64>();
        var += row.iter().map(|v| v * v).sum::<f64>();
    }
    (num / den, var / (e.rows() * e.cols()) as f64)
}

#[test]
fn white_noise_has_no_lag_one_correlation() {
    let model = CovarianceModel::ar1(0.0, 2.0, 100).unwrap();
    let e = gen_noise(&model, 10_000, &mut rng(1)).unwrap();
    let (rho, var) = lag1_autocorrelation(&e);
    assert!(rho.abs() < 0.02, "{rho}");
    assert!((var / 2.0 - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn ar1_noise_has_target_correlation_and_variance() {
    let model = CovarianceModel::ar1(0.5, 1.0, 100).unwrap();
    let e = gen_noise(&model, 10_000, &mut rng(2)).unwrap();
    let (rho, var) = lag1_autocorrelation(&e);
    assert!((rho - 0.5).abs() < 0.02, "{rho}");
    assert!((var / (1.0 / 0.75) - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn stationary_start_has_stationary_variance() {
    // the first column is drawn from the stationary law, not from zero
    let model = CovarianceModel::ar1(0.95, 1.0, 5).unwrap();
    let e = gen_noise(&model, 40_000, &mut rng(3)).unwrap();
    let target = 1.0 / (1.0 - 0.95 * 0.95);
    for t in [0, 4] {
        let v = (0..e.rows()).map(|i| e[(i, t)].powi(2)).sum::<f64>() / e.rows() as f64;
        assert!((v / target - 1.0).abs() < 0.05, "column {t}: {v} vs {target}");
    }
}

#[test]
fn noise_rows_are_uncorrelated() {
    let q = 50;
    let reps = 400;
    let model = CovarianceModel::ar1(0.5, 1.0, q).unwrap();
    let mut r = rng(4);
    let (mut cross, mut norm0, mut norm1) = (0.0, 0.0, 0.0);
    for _ in 0..reps {
        let e = gen_noise(&model, 2, &mut r).unwrap();
        for t in 0..q {
            cross += e[(0, t)] * e[(1, t)];
            norm0 += e[(0, t)].powi(2);
            norm1 += e[(1, t)].powi(2);
        }
    }
    let corr = cross / (norm0 * norm1).sqrt();
    let bound = 3.0 / ((reps * q) as f64).sqrt();
    assert!(corr.abs() < bound, "{corr} vs {bound}");
}

#[test]
fn regression_design_has_compound_symmetry() {
    let x = gen_design(&DesignSpec::CorrelatedRegression { p: 9, rho: 0.6 }, 100_000, &mut rng(5)).unwrap();
    let n = x.rows() as f64;
    let g = x.t_matmul(&x).unwrap().scale(1.0 / n);
    for i in 0..9 {
        assert!((g[(i, i)] - 1.0).abs() < 0.02, "variance {i}: {}", g[(i, i)]);
        for j in 0..i {
            let c = g[(i, j)] / (g[(i, i)] * g[(j, j)]).sqrt();
            assert!((c - 0.6).abs() < 0.02, "correlation ({i},{j}) = {c}");
        }
    }
}

#[test]
fn whitened_noise_has_identity_covariance() {
    for model in [
        CovarianceModel::ar1(0.9, 1.5, 6).unwrap(),
        CovarianceModel::arm(vec![0.4, 0.3, -0.2], 0.7, 8).unwrap(),
    ] {
        let q = model.dim();
        let half = build_precision(&model).unwrap().half().clone();
        let e = gen_noise(&model, 20_000, &mut rng(6)).unwrap();
        let w = e.matmul(&half).unwrap();
        let cov = w.t_matmul(&w).unwrap().scale(1.0 / w.rows() as f64);
        let defect = cov.sub(&DenseMatrix::identity(q)).unwrap().max_abs();
        assert!(defect < 0.05, "{} deviates by {defect}", model.label());
    }
}
