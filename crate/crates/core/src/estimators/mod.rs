//! Regression estimators for the statement-window equation: OLS with
//! heteroskedasticity-consistent covariance, ridge, lasso and leave-one-out
//! ridge, plus the fit statistics reported for each.

mod lasso;
mod ols;
mod ridge;
mod specs;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lasso::{fit_lasso, lasso_null_lambda, LassoOptions};
pub use ols::{fit_ols, hat_diagonal, robust_covariance, HcVariant};
pub use ridge::{fit_ridge, loo_ridge, loo_ridge_predictions, ridge_path, select_ridge_lambda};
pub use specs::{
    builtin_spec, design_for_spec, run_spec, subgroup_fits, FitConfig, SpecDefinition, SpecFits, SubgroupOutcome,
    SubgroupStatus, BUILTIN_SPECS, DEFAULT_CONTROLS, EXPECTATION_TERMS, TEXT_TERMS,
};

/// Designs whose condition number exceeds this are treated as singular.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("singular design (condition number {condition:e})")]
    SingularDesign { condition: f64 },
    #[error("observation {row} has leverage {leverage} (HC3 undefined)")]
    LeverageOne { row: usize, leverage: f64 },
    #[error("lasso did not converge after {sweeps} sweeps (max KKT violation {max_violation:e})")]
    NoConvergence { sweeps: usize, max_violation: f64 },
    #[error("dependent variable has zero variance")]
    ZeroVariance,
    #[error("insufficient sample: {n} observations, {required} required")]
    InsufficientSample { n: usize, required: usize },
    #[error("penalty must be finite and non-negative, got {0}")]
    BadLambda(f64),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("unknown specification `{0}`")]
    UnknownSpec(String),
}

/// Regressor matrix with a leading intercept column, the response, and column names.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    y: DVector<f64>,
    column_names: Vec<String>,
}

impl DesignMatrix {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, column_names: Vec<String>) -> Result<Self, EstimatorError> {
        let (n, k) = x.shape();
        if k == 0 {
            return Err(EstimatorError::InvalidDesign("no columns".into()));
        }
        if y.len() != n {
            return Err(EstimatorError::InvalidDesign(format!("{n} rows but {} responses", y.len())));
        }
        if column_names.len() != k {
            return Err(EstimatorError::InvalidDesign(format!("{k} columns but {} names", column_names.len())));
        }
        if n <= k {
            return Err(EstimatorError::InsufficientSample { n, required: k + 1 });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(EstimatorError::InvalidDesign("non-finite entry".into()));
        }
        if x.column(0).iter().any(|v| *v != 1.0) {
            return Err(EstimatorError::InvalidDesign("first column must be the intercept (all ones)".into()));
        }
        Ok(Self { x, y, column_names })
    }

    /// Prepends an intercept to row-major regressors.
    pub fn with_intercept(rows: &[Vec<f64>], y: &[f64], names: &[&str]) -> Result<Self, EstimatorError> {
        let n = rows.len();
        let p = names.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(EstimatorError::InvalidDesign("ragged regressor rows".into()));
        }
        let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
        let mut column_names = vec!["intercept".to_string()];
        column_names.extend(names.iter().map(|s| s.to_string()));
        Self::new(x, DVector::from_column_slice(y), column_names)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// Copy with row `i` removed. The result may have `n <= k`.
    pub(crate) fn without_row(&self, i: usize) -> (DMatrix<f64>, DVector<f64>) {
        (self.x.clone().remove_row(i), self.y.clone().remove_row(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorTag {
    #[serde(rename = "OLS-HC3")]
    OlsHc3,
    #[serde(rename = "Ridge")]
    Ridge,
    #[serde(rename = "Lasso")]
    Lasso,
    #[serde(rename = "Ridge LOO")]
    RidgeLoo,
}

impl EstimatorTag {
    pub const ALL: [EstimatorTag; 4] = [
        EstimatorTag::OlsHc3,
        EstimatorTag::Ridge,
        EstimatorTag::Lasso,
        EstimatorTag::RidgeLoo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorTag::OlsHc3 => "OLS-HC3",
            EstimatorTag::Ridge => "Ridge",
            EstimatorTag::Lasso => "Lasso",
            EstimatorTag::RidgeLoo => "Ridge LOO",
        }
    }
}

impl fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimator: EstimatorTag,
    pub column_names: Vec<String>,
    pub n: usize,
    pub k: usize,
    pub lambda: Option<f64>,
    pub coefficients: Vec<f64>,
    pub hc3_se: Option<Vec<f64>>,
    pub t_stats: Option<Vec<f64>>,
    pub p_values: Option<Vec<f64>>,
    /// In-sample fitted values, or out-of-fold predictions for `RidgeLoo`.
    pub predictions: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r2: f64,
    pub rmse: f64,
    pub sign_accuracy: f64,
    /// Coordinate-descent sweeps (lasso only).
    pub sweeps: Option<usize>,
}

impl FitResult {
    /// Residual degrees of freedom `n - k`.
    pub fn df_resid(&self) -> usize {
        self.n - self.k
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        let i = self.column_names.iter().position(|c| c == name)?;
        Some(self.coefficients[i])
    }

    /// Two-sided `level` confidence intervals from the HC3 standard errors.
    pub fn confidence_intervals(&self, level: f64) -> Option<Vec<(f64, f64)>> {
        let se = self.hc3_se.as_ref()?;
        let q = crate::dist::student_t_quantile(0.5 + level / 2.0, self.df_resid() as f64);
        Some(
            self.coefficients
                .iter()
                .zip(se)
                .map(|(b, s)| (b - q * s, b + q * s))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub r2: f64,
    pub rmse: f64,
    /// Percent of observations whose predicted sign equals the realized sign.
    pub sign_accuracy: f64,
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn sums(y: &[f64], yhat: &[f64]) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    let sst: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    let hits = y.iter().zip(yhat).filter(|(a, b)| sign(**a) == sign(**b)).count();
    (sse, sst, 100.0 * hits as f64 / n)
}

/// R², RMSE and sign accuracy of predictions `yhat` against `y`.
pub fn metrics(y: &[f64], yhat: &[f64]) -> Result<Metrics, EstimatorError> {
    if y.len() != yhat.len() || y.len() < 2 {
        return Err(EstimatorError::InvalidDesign(format!(
            "metrics need two equal-length series of at least 2 values ({} vs {})",
            y.len(),
            yhat.len()
        )));
    }
    let (sse, sst, sign_accuracy) = sums(y, yhat);
    if sst == 0.0 {
        return Err(EstimatorError::ZeroVariance);
    }
    Ok(Metrics {
        r2: 1.0 - sse / sst,
        rmse: (sse / y.len() as f64).sqrt(),
        sign_accuracy,
    })
}

/// Like [`metrics`] but reports R² = 0 for a constant response instead of failing.
pub(crate) fn fit_metrics(y: &[f64], yhat: &[f64]) -> Metrics {
    let (sse, sst, sign_accuracy) = sums(y, yhat);
    Metrics {
        r2: if sst == 0.0 { 0.0 } else { 1.0 - sse / sst },
        rmse: (sse / y.len() as f64).sqrt(),
        sign_accuracy,
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<(), EstimatorError> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(EstimatorError::BadLambda(lambda))
    }
}

/// Condition number of `m` from its singular values; infinite when rank deficient.
pub(crate) fn condition_number(singular_values: &DVector<f64>) -> f64 {
    let max = singular_values.iter().cloned().fold(0.0, f64::max);
    let min = singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Non-intercept columns centred and scaled by their population standard deviation.
#[derive(Debug, Clone)]
pub(crate) struct Standardized {
    pub z: DMatrix<f64>,
    pub means: Vec<f64>,
    /// Zero for constant columns, whose `z` column is left at zero.
    pub scales: Vec<f64>,
    pub y_mean: f64,
    pub y_centered: DVector<f64>,
}

impl Standardized {
    pub fn new(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        let n = x.nrows();
        let p = x.ncols() - 1;
        let nf = n as f64;
        let mut z = DMatrix::zeros(n, p);
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        for j in 0..p {
            let col = x.column(j + 1);
            let mean = col.iter().sum::<f64>() / nf;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
            let sd = var.sqrt();
            // relative guard: a column equal to a constant up to rounding is constant
            let scale = if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 0.0 };
            if scale > 0.0 {
                for i in 0..n {
                    z[(i, j)] = (col[i] - mean) / scale;
                }
            }
            means.push(mean);
            scales.push(scale);
        }
        let y_mean = y.iter().sum::<f64>() / nf;
        let y_centered = y.map(|v| v - y_mean);
        Self {
            z,
            means,
            scales,
            y_mean,
            y_centered,
        }
    }

    /// Maps standardized slopes back to original-scale coefficients (intercept first).
    pub fn original_scale(&self, b: &DVector<f64>) -> DVector<f64> {
        let p = self.scales.len();
        let mut out = DVector::zeros(p + 1);
        let mut intercept = self.y_mean;
        for j in 0..p {
            let beta = if self.scales[j] > 0.0 { b[j] / self.scales[j] } else { 0.0 };
            out[j + 1] = beta;
            intercept -= beta * self.means[j];
        }
        out[0] = intercept;
        out
    }

    /// Standardized slopes from original-scale coefficients (intercept dropped).
    #[cfg(test)]
    pub fn standardized_scale(&self, coefficients: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.scales.len(),
            self.scales.iter().zip(&coefficients[1..]).map(|(s, b)| s * b),
        )
    }
}

pub(crate) fn finish_fit(
    estimator: EstimatorTag,
    d: &DesignMatrix,
    coefficients: DVector<f64>,
    lambda: Option<f64>,
) -> FitResult {
    let fitted = d.x() * &coefficients;
    let residuals = d.y() - &fitted;
    let m = fit_metrics(d.y().as_slice(), fitted.as_slice());
    FitResult {
        estimator,
        column_names: d.column_names().to_vec(),
        n: d.n(),
        k: d.k(),
        lambda,
        coefficients: coefficients.as_slice().to_vec(),
        hc3_se: None,
        t_stats: None,
        p_values: None,
        predictions: fitted.as_slice().to_vec(),
        residuals: residuals.as_slice().to_vec(),
        r2: m.r2,
        rmse: m.rmse,
        sign_accuracy: m.sign_accuracy,
        sweeps: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_perfect_and_inverted() {
        let y = [1.0, -2.0, 3.0, -0.5];
        let m = metrics(&y, &y).unwrap();
        assert_eq!((m.r2, m.rmse, m.sign_accuracy), (1.0, 0.0, 100.0));
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        assert_eq!(metrics(&y, &neg).unwrap().sign_accuracy, 0.0);
        let mean = y.iter().sum::<f64>() / 4.0;
        assert!(metrics(&y, &[mean; 4]).unwrap().r2.abs() < 1e-15);
    }

    #[test]
    fn metrics_zero_sign_rule() {
        // only an exact zero prediction matches a zero outcome
        let m = metrics(&[0.0, 1.0, -1.0], &[0.0, 1e-9, 0.0]).unwrap();
        assert!((m.sign_accuracy - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_errors() {
        assert_eq!(metrics(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]), Err(EstimatorError::ZeroVariance));
        assert!(metrics(&[1.0], &[1.0]).is_err());
        assert!(metrics(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn design_validation() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(DesignMatrix::with_intercept(&rows, &[1.0, 2.0, 3.0], &["x"]).is_ok());
        assert!(matches!(
            DesignMatrix::with_intercept(&rows[..2], &[1.0, 2.0], &["x"]),
            Err(EstimatorError::InsufficientSample { .. })
        ));
        let bad = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 1.0, 1.0, 2.0]);
        assert!(DesignMatrix::new(bad, DVector::from_vec(vec![1.0, 2.0, 3.0]), vec!["a".into(), "b".into()]).is_err());
        let nan_rows = vec![vec![0.0], vec![f64::NAN], vec![2.0]];
        assert!(DesignMatrix::with_intercept(&nan_rows, &[1.0, 2.0, 3.0], &["x"]).is_err());
    }
}
