//! Named regression specifications over the event table.
//!
//! A specification regresses a statement-window repricing on the matching
//! shock-window repricing, market controls, text features and pre-event
//! expectations. The fiscal-interaction variant adds a fiscal indicator and
//! its product with the initial shock.

use serde::{Deserialize, Serialize};

use super::{
    fit_lasso, fit_ols, fit_ridge, loo_ridge, select_ridge_lambda, DesignMatrix, EstimatorError, EstimatorTag,
    FitResult,
};
use crate::calendar::ShockType;
use crate::dataset::EventRow;

pub const DEFAULT_CONTROLS: [&str; 3] = ["d_fx_shock", "d_vix_shock", "d_cds_shock"];
pub const TEXT_TERMS: [&str; 4] = ["tone", "guidance_score", "uncertainty_level", "uncertainty_change"];
pub const EXPECTATION_TERMS: [&str; 1] = ["selic_year_pre"];

pub const BUILTIN_SPECS: [&str; 4] = ["di252_baseline", "di252_fiscal", "di504_baseline", "slope_baseline"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecDefinition {
    pub name: String,
    pub label: String,
    pub target: String,
    pub initial_shock: String,
    pub controls: Vec<String>,
    pub text: Vec<String>,
    pub expectations: Vec<String>,
    pub fiscal_interaction: bool,
}

impl SpecDefinition {
    /// Regressor names in design order, intercept first.
    pub fn column_names(&self) -> Vec<String> {
        let mut cols = vec!["intercept".to_string(), self.initial_shock.clone()];
        cols.extend(self.controls.iter().cloned());
        cols.extend(self.text.iter().cloned());
        cols.extend(self.expectations.iter().cloned());
        if self.fiscal_interaction {
            cols.push("fiscal".to_string());
            cols.push(format!("fiscal_x_{}", self.initial_shock));
        }
        cols
    }
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Built-in specifications, using `controls` as the market-control set.
pub fn builtin_spec(name: &str, controls: &[String]) -> Option<SpecDefinition> {
    let (label, target, shock, fiscal) = match name {
        "di252_baseline" => ("DI 252d baseline", "d_di252_statement", "d_di252_shock", false),
        "di252_fiscal" => ("DI 252d + fiscal interaction", "d_di252_statement", "d_di252_shock", true),
        "di504_baseline" => ("DI 504d baseline", "d_di504_statement", "d_di504_shock", false),
        "slope_baseline" => ("Slope 21-504 baseline", "d_slope_statement", "d_slope_shock", false),
        _ => return None,
    };
    Some(SpecDefinition {
        name: name.to_string(),
        label: label.to_string(),
        target: target.to_string(),
        initial_shock: shock.to_string(),
        controls: controls.to_vec(),
        text: strings(&TEXT_TERMS),
        expectations: strings(&EXPECTATION_TERMS),
        fiscal_interaction: fiscal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub ridge_lambda: f64,
    /// When set, the ridge penalty is chosen from this grid by LOO RMSE.
    pub ridge_grid: Option<Vec<f64>>,
    pub lasso_lambda: f64,
    /// Minimum complete observations for a specification or subgroup to be estimated.
    pub min_n: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            ridge_lambda: 1.0,
            ridge_grid: None,
            lasso_lambda: 1.0,
            min_n: 20,
        }
    }
}

/// Builds the design for `spec`, keeping rows where every column is present.
/// Returns the design and the ids of the rows used.
pub fn design_for_spec(rows: &[EventRow], spec: &SpecDefinition) -> Result<(DesignMatrix, Vec<String>), EstimatorError> {
    let regressors: Vec<String> = spec.column_names().into_iter().skip(1).collect();
    let base: Vec<&str> = std::iter::once(spec.initial_shock.as_str())
        .chain(spec.controls.iter().map(String::as_str))
        .chain(spec.text.iter().map(String::as_str))
        .chain(spec.expectations.iter().map(String::as_str))
        .collect();
    let lookup = |row: &EventRow, f: &str| row.value(f).map_err(|_| EstimatorError::UnknownField(f.to_string()));

    let mut x_rows = Vec::new();
    let mut y = Vec::new();
    let mut ids = Vec::new();
    'rows: for row in rows {
        let Some(target) = lookup(row, &spec.target)? else { continue };
        let mut values = Vec::with_capacity(regressors.len());
        for f in &base {
            match lookup(row, f)? {
                Some(v) => values.push(v),
                None => continue 'rows,
            }
        }
        if spec.fiscal_interaction {
            let fiscal = if row.shock_type == ShockType::Fiscal { 1.0 } else { 0.0 };
            values.push(fiscal);
            values.push(fiscal * values[0]);
        }
        x_rows.push(values);
        y.push(target);
        ids.push(row.event_id.clone());
    }
    let k = regressors.len() + 1;
    if x_rows.len() <= k {
        return Err(EstimatorError::InsufficientSample {
            n: x_rows.len(),
            required: k + 1,
        });
    }
    let names: Vec<&str> = regressors.iter().map(String::as_str).collect();
    Ok((DesignMatrix::with_intercept(&x_rows, &y, &names)?, ids))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFits {
    pub spec: String,
    pub label: String,
    pub target: String,
    pub n: usize,
    /// Rows skipped because a required field was absent.
    pub incomplete_rows: usize,
    pub ridge_lambda: f64,
    pub fits: Vec<FitResult>,
    /// Estimators that failed, with the reason.
    pub failures: Vec<(EstimatorTag, String)>,
}

impl SpecFits {
    pub fn fit(&self, tag: EstimatorTag) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.estimator == tag)
    }
}

/// Runs OLS-HC3, ridge, lasso and LOO ridge on one specification.
pub fn run_spec(rows: &[EventRow], spec: &SpecDefinition, cfg: &FitConfig) -> Result<SpecFits, EstimatorError> {
    let k = spec.column_names().len();
    let required = cfg.min_n.max(k + 1);
    let (design, ids) = match design_for_spec(rows, spec) {
        Err(EstimatorError::InsufficientSample { n, .. }) => {
            return Err(EstimatorError::InsufficientSample { n, required })
        }
        other => other?,
    };
    if design.n() < required {
        return Err(EstimatorError::InsufficientSample {
            n: design.n(),
            required,
        });
    }

    let ridge_lambda = match &cfg.ridge_grid {
        Some(grid) => select_ridge_lambda(&design, grid)?.0,
        None => cfg.ridge_lambda,
    };

    let mut fits = Vec::new();
    let mut failures = Vec::new();
    let attempts: [(EstimatorTag, Result<FitResult, EstimatorError>); 4] = [
        (EstimatorTag::OlsHc3, fit_ols(&design)),
        (EstimatorTag::Ridge, fit_ridge(&design, ridge_lambda)),
        (EstimatorTag::Lasso, fit_lasso(&design, cfg.lasso_lambda)),
        (EstimatorTag::RidgeLoo, loo_ridge(&design, ridge_lambda)),
    ];
    for (tag, outcome) in attempts {
        match outcome {
            Ok(fit) => fits.push(fit),
            Err(e) => failures.push((tag, e.to_string())),
        }
    }
    Ok(SpecFits {
        spec: spec.name.clone(),
        label: spec.label.clone(),
        target: spec.target.clone(),
        n: ids.len(),
        incomplete_rows: rows.len() - ids.len(),
        ridge_lambda,
        fits,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubgroupStatus {
    Fitted { specs: Vec<SpecFits> },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupOutcome {
    pub shock_type: ShockType,
    pub n: usize,
    #[serde(flatten)]
    pub status: SubgroupStatus,
}

/// Separate fits per shock type, for groups with at least `cfg.min_n` events.
/// Interaction specifications are not estimated within a single shock type.
pub fn subgroup_fits(rows: &[EventRow], specs: &[SpecDefinition], cfg: &FitConfig) -> Vec<SubgroupOutcome> {
    ShockType::ALL
        .iter()
        .filter_map(|&shock_type| {
            let group: Vec<EventRow> = rows.iter().filter(|r| r.shock_type == shock_type).cloned().collect();
            if group.is_empty() {
                return None;
            }
            let n = group.len();
            let status = if n < cfg.min_n {
                SubgroupStatus::Skipped {
                    reason: format!("{n} events, minimum {}", cfg.min_n),
                }
            } else {
                let mut fitted = Vec::new();
                let mut problems = Vec::new();
                for spec in specs.iter().filter(|s| !s.fiscal_interaction) {
                    match run_spec(&group, spec, cfg) {
                        Ok(f) => fitted.push(f),
                        Err(e) => problems.push(format!("{}: {e}", spec.name)),
                    }
                }
                if fitted.is_empty() {
                    SubgroupStatus::Skipped {
                        reason: if problems.is_empty() {
                            "no specification applies".to_string()
                        } else {
                            problems.join("; ")
                        },
                    }
                } else {
                    SubgroupStatus::Fitted { specs: fitted }
                }
            };
            Some(SubgroupOutcome { shock_type, n, status })
        })
        .collect()
}
