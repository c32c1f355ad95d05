use nalgebra::{DMatrix, DVector};

use super::{
    check_lambda, condition_number, finish_fit, fit_metrics, DesignMatrix, EstimatorError, EstimatorTag, FitResult,
    Standardized, DEFAULT_CONDITION_LIMIT,
};

/// Original-scale ridge coefficients for `(Z'Z + λI) b = Z'y_c` on standardized
/// non-intercept columns; the intercept is left unpenalized.
pub(crate) fn ridge_coefficients(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>, EstimatorError> {
    let st = Standardized::new(x, y);
    let p = st.z.ncols();
    if p == 0 {
        return Ok(st.original_scale(&DVector::zeros(0)));
    }
    let b = if lambda == 0.0 {
        if st.scales.contains(&0.0) {
            return Err(EstimatorError::SingularDesign {
                condition: f64::INFINITY,
            });
        }
        let svd = st.z.clone().svd(true, true);
        let condition = condition_number(&svd.singular_values);
        if !(condition <= DEFAULT_CONDITION_LIMIT) {
            return Err(EstimatorError::SingularDesign { condition });
        }
        svd.solve(&st.y_centered, 0.0).map_err(|_| EstimatorError::SingularDesign { condition })?
    } else {
        let gram = st.z.transpose() * &st.z + DMatrix::identity(p, p) * lambda;
        let rhs = st.z.transpose() * &st.y_centered;
        gram.cholesky()
            .ok_or(EstimatorError::SingularDesign {
                condition: f64::INFINITY,
            })?
            .solve(&rhs)
    };
    Ok(st.original_scale(&b))
}

pub fn fit_ridge(d: &DesignMatrix, lambda: f64) -> Result<FitResult, EstimatorError> {
    check_lambda(lambda)?;
    let coefficients = ridge_coefficients(d.x(), d.y(), lambda)?;
    Ok(finish_fit(EstimatorTag::Ridge, d, coefficients, Some(lambda)))
}

/// Out-of-fold predictions from `n` explicit ridge refits, each leaving one row out
/// and re-standardizing on the remaining rows.
pub fn loo_ridge_predictions(d: &DesignMatrix, lambda: f64) -> Result<Vec<f64>, EstimatorError> {
    check_lambda(lambda)?;
    let n = d.n();
    if n < 3 {
        return Err(EstimatorError::InsufficientSample { n, required: 3 });
    }
    (0..n)
        .map(|i| {
            let (x, y) = d.without_row(i);
            let b = ridge_coefficients(&x, &y, lambda)?;
            Ok(d.x().row(i).dot(&b.transpose()))
        })
        .collect()
}

/// Leave-one-out ridge. Metrics are out of fold, with R² taken about the
/// full-sample mean, so it can be negative. Coefficients are the full-sample fit.
pub fn loo_ridge(d: &DesignMatrix, lambda: f64) -> Result<FitResult, EstimatorError> {
    let predictions = loo_ridge_predictions(d, lambda)?;
    let mut fit = fit_ridge(d, lambda)?;
    let y = d.y().as_slice();
    let m = fit_metrics(y, &predictions);
    fit.estimator = EstimatorTag::RidgeLoo;
    fit.residuals = y.iter().zip(&predictions).map(|(a, b)| a - b).collect();
    fit.predictions = predictions;
    fit.r2 = m.r2;
    fit.rmse = m.rmse;
    fit.sign_accuracy = m.sign_accuracy;
    Ok(fit)
}

/// Picks the grid value with the lowest LOO RMSE (first on ties). Returns the
/// choice and the score of every grid point.
pub fn select_ridge_lambda(d: &DesignMatrix, grid: &[f64]) -> Result<(f64, Vec<(f64, f64)>), EstimatorError> {
    if grid.is_empty() {
        return Err(EstimatorError::InvalidDesign("empty lambda grid".into()));
    }
    let mut scores = Vec::with_capacity(grid.len());
    for &lambda in grid {
        scores.push((lambda, loo_ridge(d, lambda)?.rmse));
    }
    let best = scores
        .iter()
        .fold(None::<(f64, f64)>, |acc, &(l, s)| match acc {
            Some((_, best)) if best <= s => acc,
            _ => Some((l, s)),
        })
        .map(|(l, _)| l)
        .expect("grid is nonempty");
    Ok((best, scores))
}

/// Coefficients over a grid of penalties, one vector per grid value.
pub fn ridge_path(d: &DesignMatrix, grid: &[f64]) -> Result<Vec<Vec<f64>>, EstimatorError> {
    grid.iter()
        .map(|&l| {
            check_lambda(l)?;
            Ok(ridge_coefficients(d.x(), d.y(), l)?.as_slice().to_vec())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_ols;

    fn fixture() -> DesignMatrix {
        let rows = vec![
            vec![0.5, 1.2],
            vec![1.5, -0.3],
            vec![-0.7, 0.8],
            vec![2.2, 1.9],
            vec![0.1, -1.1],
        ];
        let y = [1.3, 2.9, -0.4, 5.1, 0.2];
        DesignMatrix::with_intercept(&rows, &y, &["a", "b"]).unwrap()
    }

    #[test]
    fn zero_penalty_is_ols() {
        let d = fixture();
        let r = fit_ridge(&d, 0.0).unwrap();
        let o = fit_ols(&d).unwrap();
        for (a, b) in r.coefficients.iter().zip(&o.coefficients) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn huge_penalty_shrinks_to_mean() {
        let d = fixture();
        let r = fit_ridge(&d, 1e9).unwrap();
        let mean = d.y().mean();
        assert!(r.coefficients[1..].iter().all(|b| b.abs() < 1e-6));
        assert!((r.coefficients[0] - mean).abs() < 1e-6);
    }

    /// Direct solve of the 2×2 standardized system by Cramer's rule.
    #[test]
    fn matches_dense_solve() {
        let d = fixture();
        let lambda = 0.7;
        let n = 5.0;
        let cols: Vec<Vec<f64>> = (1..3).map(|j| d.x().column(j).iter().cloned().collect()).collect();
        let y: Vec<f64> = d.y().iter().cloned().collect();
        let ym = y.iter().sum::<f64>() / n;
        let z: Vec<(Vec<f64>, f64, f64)> = cols
            .iter()
            .map(|c| {
                let m = c.iter().sum::<f64>() / n;
                let s = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
                (c.iter().map(|v| (v - m) / s).collect(), m, s)
            })
            .collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let yc: Vec<f64> = y.iter().map(|v| v - ym).collect();
        let (a11, a12, a22) = (dot(&z[0].0, &z[0].0) + lambda, dot(&z[0].0, &z[1].0), dot(&z[1].0, &z[1].0) + lambda);
        let (r1, r2) = (dot(&z[0].0, &yc), dot(&z[1].0, &yc));
        let det = a11 * a22 - a12 * a12;
        let b1 = (r1 * a22 - a12 * r2) / det;
        let b2 = (a11 * r2 - a12 * r1) / det;
        let beta1 = b1 / z[0].2;
        let beta2 = b2 / z[1].2;
        let alpha = ym - beta1 * z[0].1 - beta2 * z[1].1;

        let fit = fit_ridge(&d, lambda).unwrap();
        for (got, want) in fit.coefficients.iter().zip([alpha, beta1, beta2]) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        let resid_ok = fit
            .residuals
            .iter()
            .zip(&fit.predictions)
            .zip(y.iter())
            .all(|((e, p), y)| (e - (y - p)).abs() < 1e-12);
        assert!(resid_ok);
    }

    #[test]
    fn shrinks_monotonically() {
        let d = fixture();
        let grid = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0];
        let path = ridge_path(&d, &grid).unwrap();
        let st = Standardized::new(d.x(), d.y());
        let norms: Vec<f64> = path.iter().map(|c| st.standardized_scale(c).norm()).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{norms:?}");
    }

    #[test]
    fn constant_response_has_no_skill() {
        let rows = vec![vec![0.5], vec![1.5], vec![-0.7], vec![2.2], vec![0.1]];
        let d = DesignMatrix::with_intercept(&rows, &[3.0; 5], &["a"]).unwrap();
        let fit = loo_ridge(&d, 1.0).unwrap();
        assert!(fit.predictions.iter().all(|p| (p - 3.0).abs() < 1e-12));
        assert!(fit.r2 <= 0.0);
    }

    #[test]
    fn loo_needs_three_rows_and_valid_lambda() {
        let d = fixture();
        assert!(matches!(fit_ridge(&d, -1.0), Err(EstimatorError::BadLambda(_))));
        assert!(matches!(fit_ridge(&d, f64::NAN), Err(EstimatorError::BadLambda(_))));
        let (best, scores) = select_ridge_lambda(&d, &[0.01, 1.0, 100.0]).unwrap();
        assert_eq!(scores.len(), 3);
        assert!(scores.iter().any(|(l, _)| *l == best));
    }
}
