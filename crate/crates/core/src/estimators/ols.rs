use nalgebra::{DMatrix, DVector};

use super::{condition_number, finish_fit, DesignMatrix, EstimatorError, EstimatorTag, FitResult, DEFAULT_CONDITION_LIMIT};
use crate::dist::student_t_two_sided_p;

/// Leverage at or above `1 - LEVERAGE_EPS` makes the HC3 weight undefined.
const LEVERAGE_EPS: f64 = 1e-10;

/// Heteroskedasticity-consistent covariance variants. Reports use `Hc3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcVariant {
    /// `e²`
    Hc0,
    /// `e² · n / (n − k)`
    Hc1,
    /// `e² / (1 − h)`
    Hc2,
    /// `e² / (1 − h)²`
    Hc3,
}

struct Decomposition {
    /// `(X'X)⁻¹`
    xtx_inv: DMatrix<f64>,
    coefficients: DVector<f64>,
    leverage: DVector<f64>,
}

fn decompose(x: &DMatrix<f64>, y: &DVector<f64>, condition_limit: f64) -> Result<Decomposition, EstimatorError> {
    let svd = x.clone().svd(true, true);
    let condition = condition_number(&svd.singular_values);
    if !(condition <= condition_limit) {
        return Err(EstimatorError::SingularDesign { condition });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;

    // beta = V S⁻¹ U'y ; (X'X)⁻¹ = V S⁻² V' ; h_ii = |U_i|²
    let uty = u.transpose() * y;
    let scaled = DVector::from_iterator(s.len(), uty.iter().zip(s.iter()).map(|(a, si)| a / si));
    let coefficients = v_t.transpose() * scaled;
    let v_scaled = DMatrix::from_fn(v_t.ncols(), s.len(), |i, j| v_t[(j, i)] / (s[j] * s[j]));
    let xtx_inv = v_scaled * v_t;
    let leverage = DVector::from_iterator(u.nrows(), u.row_iter().map(|r| r.norm_squared()));
    Ok(Decomposition {
        xtx_inv,
        coefficients,
        leverage,
    })
}

/// Hat-matrix diagonal `h_ii = x_i' (X'X)⁻¹ x_i`.
pub fn hat_diagonal(d: &DesignMatrix) -> Result<Vec<f64>, EstimatorError> {
    Ok(decompose(d.x(), d.y(), DEFAULT_CONDITION_LIMIT)?.leverage.as_slice().to_vec())
}

fn sandwich(x: &DMatrix<f64>, xtx_inv: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let k = x.ncols();
    let mut meat = DMatrix::zeros(k, k);
    for (i, w) in weights.iter().enumerate() {
        let xi = x.row(i);
        meat += xi.transpose() * xi * *w;
    }
    xtx_inv * meat * xtx_inv
}

/// Sandwich covariance `(X'X)⁻¹ X' diag(ω) X (X'X)⁻¹` of the OLS coefficients.
pub fn robust_covariance(d: &DesignMatrix, variant: HcVariant) -> Result<DMatrix<f64>, EstimatorError> {
    let dec = decompose(d.x(), d.y(), DEFAULT_CONDITION_LIMIT)?;
    let residuals = d.y() - d.x() * &dec.coefficients;
    let weights = omega(&residuals, &dec.leverage, d.n(), d.k(), variant)?;
    Ok(sandwich(d.x(), &dec.xtx_inv, &weights))
}

fn omega(
    residuals: &DVector<f64>,
    leverage: &DVector<f64>,
    n: usize,
    k: usize,
    variant: HcVariant,
) -> Result<Vec<f64>, EstimatorError> {
    if matches!(variant, HcVariant::Hc2 | HcVariant::Hc3) {
        if let Some((row, &h)) = leverage.iter().enumerate().find(|(_, h)| **h >= 1.0 - LEVERAGE_EPS) {
            return Err(EstimatorError::LeverageOne { row, leverage: h });
        }
    }
    let dof = n as f64 / (n - k) as f64;
    Ok(residuals
        .iter()
        .zip(leverage.iter())
        .map(|(e, h)| {
            let e2 = e * e;
            match variant {
                HcVariant::Hc0 => e2,
                HcVariant::Hc1 => e2 * dof,
                HcVariant::Hc2 => e2 / (1.0 - h),
                HcVariant::Hc3 => e2 / ((1.0 - h) * (1.0 - h)),
            }
        })
        .collect())
}

/// Ordinary least squares with HC3 standard errors and Student-t p-values on `n − k` degrees of freedom.
pub fn fit_ols(d: &DesignMatrix) -> Result<FitResult, EstimatorError> {
    fit_ols_with_limit(d, DEFAULT_CONDITION_LIMIT)
}

pub(crate) fn fit_ols_with_limit(d: &DesignMatrix, condition_limit: f64) -> Result<FitResult, EstimatorError> {
    let dec = decompose(d.x(), d.y(), condition_limit)?;
    let mut fit = finish_fit(EstimatorTag::OlsHc3, d, dec.coefficients.clone(), None);
    let residuals = DVector::from_column_slice(&fit.residuals);
    let weights = omega(&residuals, &dec.leverage, d.n(), d.k(), HcVariant::Hc3)?;
    let cov = sandwich(d.x(), &dec.xtx_inv, &weights);

    let df = (d.n() - d.k()) as f64;
    let se: Vec<f64> = (0..d.k()).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let mut t_stats = Vec::with_capacity(d.k());
    let mut p_values = Vec::with_capacity(d.k());
    for (b, s) in fit.coefficients.iter().zip(&se) {
        let (t, p) = if *s > 0.0 {
            let t = b / s;
            (t, student_t_two_sided_p(t, df))
        } else if *b == 0.0 {
            (0.0, 1.0)
        } else {
            // exact fit: zero standard error on a nonzero estimate
            (b.signum() * f64::INFINITY, 0.0)
        };
        t_stats.push(t);
        p_values.push(p);
    }
    fit.hc3_se = Some(se);
    fit.t_stats = Some(t_stats);
    fit.p_values = Some(p_values);
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple(x: &[f64], y: &[f64]) -> DesignMatrix {
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
        DesignMatrix::with_intercept(&rows, y, &["x"]).unwrap()
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 5.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let fit = fit_ols(&simple(&x, &y)).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit.p_values.unwrap().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    /// Hand computation for x = (0,1,2,3), y = (1,2,2,4):
    /// x̄ = 1.5, ȳ = 2.25, Sxx = 5, Sxy = 4.5 → b = 0.9, a = 0.9.
    /// Fitted (0.9, 1.8, 2.7, 3.6), residuals (0.1, 0.2, −0.7, 0.4).
    /// h_i = 1/4 + (x_i − 1.5)²/5 = (0.7, 0.3, 0.3, 0.7).
    #[test]
    fn hand_dataset_hc3() {
        let d = simple(&[0.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 4.0]);
        let fit = fit_ols(&d).unwrap();
        assert!((fit.coefficients[0] - 0.9).abs() < 1e-12);
        assert!((fit.coefficients[1] - 0.9).abs() < 1e-12);

        let h = hat_diagonal(&d).unwrap();
        for (got, want) in h.iter().zip([0.7, 0.3, 0.3, 0.7]) {
            assert!((got - want).abs() < 1e-12);
        }

        // ω_i = e_i² / (1 − h_i)²
        let e = [0.1, 0.2, -0.7, 0.4];
        let hh = [0.7, 0.3, 0.3, 0.7];
        let w: Vec<f64> = e.iter().zip(hh).map(|(e, h)| e * e / ((1.0 - h) * (1.0 - h))).collect();
        // (X'X)⁻¹ = [[7/10, −3/10], [−3/10, 1/5]]
        let a = [[0.7, -0.3], [-0.3, 0.2]];
        let xs = [0.0, 1.0, 2.0, 3.0];
        let mut meat = [[0.0; 2]; 2];
        for i in 0..4 {
            let xi = [1.0, xs[i]];
            for r in 0..2 {
                for c in 0..2 {
                    meat[r][c] += w[i] * xi[r] * xi[c];
                }
            }
        }
        let mut cov = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        cov[r][c] += a[r][p] * meat[p][q] * a[q][c];
                    }
                }
            }
        }
        let se = fit.hc3_se.unwrap();
        assert!((se[0] - cov[0][0].sqrt()).abs() < 1e-10);
        assert!((se[1] - cov[1][1].sqrt()).abs() < 1e-10);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![4.0, 4.0], vec![5.0, 5.0]];
        let d = DesignMatrix::with_intercept(&rows, &[1.0, 3.0, 2.0, 5.0], &["a", "b"]).unwrap();
        assert!(matches!(fit_ols(&d), Err(EstimatorError::SingularDesign { .. })));
    }

    #[test]
    fn leverage_one_rejected() {
        // a dummy that is nonzero on a single row gives that row leverage 1
        let rows = vec![vec![0.0], vec![0.0], vec![0.0], vec![1.0]];
        let d = DesignMatrix::with_intercept(&rows, &[1.0, 2.0, 3.0, 4.0], &["dummy"]).unwrap();
        assert!(matches!(fit_ols(&d), Err(EstimatorError::LeverageOne { row: 3, .. })));
    }

    #[test]
    fn hc_variants_order() {
        let d = simple(&[0.0, 1.0, 2.0, 3.0, 4.0, 6.0], &[1.0, 2.5, 2.0, 4.1, 3.9, 7.0]);
        let var = |v| robust_covariance(&d, v).unwrap()[(1, 1)];
        let (h0, h1, h2, h3) = (var(HcVariant::Hc0), var(HcVariant::Hc1), var(HcVariant::Hc2), var(HcVariant::Hc3));
        assert!(h0 < h1 && h0 < h2 && h2 < h3);
        assert!((h1 - h0 * 6.0 / 4.0).abs() < 1e-12);
    }
}
