//! Browser bindings for a few eventcurve operations.
//!
//! Every export takes plain strings and numbers and returns a JSON string, so
//! the page needs no generated type glue. The `*_json` functions hold the
//! logic and are what the native tests exercise.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use eventcurve::calendar::{build_windows, parse_iso_date, Event, ShockType, TradingCalendar, Window};
use eventcurve::dataset::{read_event_rows, EventRow};
use eventcurve::estimators::{
    builtin_spec, design_for_spec, fit_lasso, lasso_null_lambda, ridge_path, select_ridge_lambda, DEFAULT_CONTROLS,
};
use eventcurve::textfeat::{analyze_text, Lexicon, ToneDenominator};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Event table of the bundled demo fixture.
const DEMO_DATASET: &str = include_str!("../../../fixtures/demo/golden/events_dataset.csv");

#[wasm_bindgen]
pub fn score_statement(text: &str, prev_text: &str, polar: bool) -> Result<String, JsError> {
    score_statement_json(text, prev_text, polar).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn regularization_path(spec: &str, points: usize) -> Result<String, JsError> {
    regularization_path_json(spec, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn event_windows(shock_date: &str, next_statement: &str, holidays: &str) -> Result<String, JsError> {
    event_windows_json(shock_date, next_statement, holidays).map_err(|e| JsError::new(&e))
}

/// Sentence labels and document features under the builtin lexicon. An empty
/// `prev_text` means no previous statement, so the uncertainty change is zero.
pub fn score_statement_json(text: &str, prev_text: &str, polar: bool) -> Result<String, String> {
    let denominator = if polar { ToneDenominator::Polar } else { ToneDenominator::InScope };
    let prev = Some(prev_text).filter(|p| !p.trim().is_empty());
    let analysis = analyze_text(text, prev, &Lexicon::builtin(), denominator);
    serde_json::to_string(&analysis).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct PathPoint {
    lambda: f64,
    coefficients: Vec<f64>,
}

#[derive(Serialize)]
struct RidgePath {
    points: Vec<PathPoint>,
    loo_rmse: Vec<f64>,
    selected_lambda: f64,
}

#[derive(Serialize)]
struct RegPath {
    spec: String,
    n: usize,
    columns: Vec<String>,
    ridge: RidgePath,
    lasso: Vec<PathPoint>,
    lasso_null_lambda: f64,
}

fn demo_rows() -> Result<Vec<EventRow>, String> {
    read_event_rows(DEMO_DATASET.as_bytes()).map_err(|e| e.to_string())
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (points - 1) as f64;
    (0..points).map(|i| lo * (step * i as f64).exp()).collect()
}

/// Ridge and lasso coefficient paths of a builtin specification on the demo
/// dataset. Ridge runs over 1e-2..1e4 with LOO scores; lasso runs from 1e-3
/// of the null penalty up to the null penalty itself.
pub fn regularization_path_json(spec: &str, points: usize) -> Result<String, String> {
    if !(2..=200).contains(&points) {
        return Err(format!("points must be between 2 and 200, got {points}"));
    }
    let controls: Vec<String> = DEFAULT_CONTROLS.map(String::from).to_vec();
    let def = builtin_spec(spec, &controls).ok_or_else(|| format!("unknown specification `{spec}`"))?;
    let rows = demo_rows()?;
    let (design, _) = design_for_spec(&rows, &def).map_err(|e| e.to_string())?;

    let ridge_grid = log_grid(1e-2, 1e4, points);
    let ridge_coefs = ridge_path(&design, &ridge_grid).map_err(|e| e.to_string())?;
    let (selected, scores) = select_ridge_lambda(&design, &ridge_grid).map_err(|e| e.to_string())?;

    let null = lasso_null_lambda(&design);
    let lasso = log_grid(null * 1e-3, null, points)
        .into_iter()
        .map(|lambda| {
            fit_lasso(&design, lambda)
                .map(|f| PathPoint { lambda, coefficients: f.coefficients })
                .map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;

    let out = RegPath {
        spec: def.label.clone(),
        n: design.n(),
        columns: design.column_names().to_vec(),
        ridge: RidgePath {
            points: ridge_grid
                .iter()
                .zip(ridge_coefs)
                .map(|(&lambda, coefficients)| PathPoint { lambda, coefficients })
                .collect(),
            loo_rmse: scores.into_iter().map(|(_, s)| s).collect(),
            selected_lambda: selected,
        },
        lasso,
        lasso_null_lambda: null,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct WindowJson {
    start: String,
    end: String,
    length_days: i64,
}

impl From<Window> for WindowJson {
    fn from(w: Window) -> Self {
        Self {
            start: w.start_date.to_string(),
            end: w.end_date.to_string(),
            length_days: w.length_days,
        }
    }
}

#[derive(Serialize)]
struct WindowsJson {
    same_day_statement: bool,
    shock: WindowJson,
    statement: WindowJson,
    trading_days: Vec<String>,
}

/// Shock and statement windows on a weekday calendar minus `holidays`
/// (comma- or whitespace-separated ISO dates).
pub fn event_windows_json(shock_date: &str, next_statement: &str, holidays: &str) -> Result<String, String> {
    let shock = parse_iso_date(shock_date)?;
    let statement = parse_iso_date(next_statement)?;
    let closed: Vec<NaiveDate> = holidays
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(parse_iso_date)
        .collect::<Result<_, _>>()?;

    let first = shock.checked_sub_days(Days::new(30)).ok_or("shock date out of range")?;
    let last = statement.checked_add_days(Days::new(30)).ok_or("statement date out of range")?;
    let days = first
        .iter_days()
        .take_while(|d| *d <= last)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) && !closed.contains(d));
    let cal = TradingCalendar::from_unsorted(days).map_err(|e| e.to_string())?;

    let ev = Event::new("demo", shock, ShockType::Fiscal, None, statement).map_err(|e| e.to_string())?;
    let w = build_windows(&cal, &ev).map_err(|e| e.to_string())?;
    let trading_days = cal
        .dates()
        .iter()
        .filter(|d| **d >= w.shock.start_date && **d <= w.statement.end_date)
        .map(|d| d.to_string())
        .collect();
    let out = WindowsJson {
        same_day_statement: ev.is_same_day_statement(),
        shock: w.shock.into(),
        statement: w.statement.into(),
        trading_days,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}
