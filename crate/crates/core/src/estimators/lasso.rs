//! Cyclic coordinate descent for
//! `(1 / 2n) |y_c − Z b|² + λ |b|₁`
//! on standardized columns (population variance), intercept unpenalized.

use nalgebra::DVector;

use super::{check_lambda, finish_fit, DesignMatrix, EstimatorError, EstimatorTag, FitResult, Standardized};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    /// Stop when no coefficient moves more than this in a sweep.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Allowed stationarity violation on exit.
    pub kkt_tolerance: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_sweeps: 100_000,
            kkt_tolerance: 1e-6,
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Smallest penalty at which every slope is exactly zero: `max_j |Z_j' y_c| / n`.
pub fn lasso_null_lambda(d: &DesignMatrix) -> f64 {
    let st = Standardized::new(d.x(), d.y());
    let n = d.n() as f64;
    (0..st.z.ncols())
        .map(|j| st.z.column(j).dot(&st.y_centered).abs() / n)
        .fold(0.0, f64::max)
}

/// Largest KKT violation of standardized slopes `b`.
fn kkt_violation(st: &Standardized, b: &DVector<f64>, lambda: f64) -> f64 {
    let n = st.z.nrows() as f64;
    let residual = &st.y_centered - &st.z * b;
    (0..b.len())
        .filter(|&j| st.scales[j] > 0.0)
        .map(|j| {
            let grad = st.z.column(j).dot(&residual) / n;
            if b[j] == 0.0 {
                (grad.abs() - lambda).max(0.0)
            } else {
                (grad - lambda * b[j].signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn fit_lasso(d: &DesignMatrix, lambda: f64) -> Result<FitResult, EstimatorError> {
    fit_lasso_with(d, lambda, &LassoOptions::default())
}

pub(crate) fn fit_lasso_with(d: &DesignMatrix, lambda: f64, opts: &LassoOptions) -> Result<FitResult, EstimatorError> {
    check_lambda(lambda)?;
    let st = Standardized::new(d.x(), d.y());
    let n = d.n() as f64;
    let p = st.z.ncols();
    let mut b = DVector::<f64>::zeros(p);
    let mut residual = st.y_centered.clone();
    let mut sweeps = 0usize;
    let mut converged = p == 0;

    while !converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            if st.scales[j] == 0.0 {
                continue;
            }
            let col = st.z.column(j);
            // standardized columns have z_j'z_j / n = 1
            let curvature = col.norm_squared() / n;
            let rho = col.dot(&residual) / n + curvature * b[j];
            let updated = soft_threshold(rho, lambda) / curvature;
            let delta = updated - b[j];
            if delta != 0.0 {
                residual.axpy(-delta, &col, 1.0);
                b[j] = updated;
                max_change = max_change.max(delta.abs());
            }
        }
        converged = max_change < opts.tolerance;
    }

    let violation = kkt_violation(&st, &b, lambda);
    if !converged || violation > opts.kkt_tolerance {
        return Err(EstimatorError::NoConvergence {
            sweeps,
            max_violation: violation,
        });
    }
    let mut fit = finish_fit(EstimatorTag::Lasso, d, st.original_scale(&b), Some(lambda));
    fit.sweeps = Some(sweeps);
    Ok(fit)
}
