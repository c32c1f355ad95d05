use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use eventcurve::calendar::{build_windows, Event, ShockType, TradingCalendar};
use eventcurve::config::RunConfig;
use eventcurve::dataset::read_event_rows;
use eventcurve::estimators::{fit_lasso, fit_ols, lasso_null_lambda, ridge_path, DesignMatrix};
use eventcurve::report::build_dataset;
use proptest::prelude::*;

fn weekday_calendar(start: NaiveDate, len: u64, closed: &[u64]) -> TradingCalendar {
    let days = (0..len)
        .filter(|i| !closed.contains(i))
        .map(|i| start + Days::new(i))
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun));
    TradingCalendar::from_unsorted(days).unwrap()
}

fn design(rows: &[Vec<f64>], y: &[f64]) -> DesignMatrix {
    let names: Vec<String> = (0..rows[0].len()).map(|j| format!("x{j}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    DesignMatrix::with_intercept(rows, y, &names).unwrap()
}

fn population_sd(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    (v.map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

prop_compose! {
    fn regression(max_k: usize)(k in 1..=max_k, extra in 3usize..30)
        (rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, k), k + extra),
         noise in prop::collection::vec(-5.0f64..5.0, k + extra),
         beta in prop::collection::vec(-3.0f64..3.0, k))
        -> (Vec<Vec<f64>>, Vec<f64>)
    {
        let y = rows.iter().zip(&noise).map(|(r, e)| 1.0 + r.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>() + e).collect();
        (rows, y)
    }
}

proptest! {
    #[test]
    fn windows_are_chained_on_trading_days(
        shock_offset in 5u64..60,
        gap in 0u64..40,
        closed in prop::collection::vec(0u64..120, 0..8),
    ) {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let cal = weekday_calendar(start, 130, &closed);
        let shock = start + Days::new(shock_offset);
        let statement = shock + Days::new(gap);
        let ev = Event::new("p", shock, ShockType::External, None, statement).unwrap();
        match build_windows(&cal, &ev) {
            Ok(w) => {
                prop_assert!(cal.contains(w.shock.start_date) && cal.contains(w.shock.end_date));
                prop_assert!(cal.contains(w.statement.end_date));
                prop_assert!(w.shock.start_date < shock && shock <= w.shock.end_date);
                prop_assert_eq!(w.statement.start_date, w.shock.end_date);
                prop_assert!(w.statement.end_date > statement);
                prop_assert!(w.statement.end_date > w.statement.start_date);
            }
            // only a statement inside the gap before the effective shock date has no window
            Err(_) => prop_assert!(cal.first_trading_strictly_after(statement).unwrap() <= cal.first_trading_on_or_after(shock).unwrap()),
        }
    }

    #[test]
    fn ols_is_equivariant_in_y((rows, y) in regression(4), scale in 0.5f64..4.0, shift in -20.0f64..20.0) {
        let base = fit_ols(&design(&rows, &y)).unwrap();
        let moved: Vec<f64> = y.iter().map(|v| scale * v + shift).collect();
        let fit = fit_ols(&design(&rows, &moved)).unwrap();
        prop_assert!((fit.coefficients[0] - (scale * base.coefficients[0] + shift)).abs() < 1e-6);
        for (a, b) in fit.coefficients[1..].iter().zip(&base.coefficients[1..]) {
            prop_assert!((a - scale * b).abs() < 1e-6 * (1.0 + b.abs()));
        }
        prop_assert!((fit.r2 - base.r2).abs() < 1e-9);
    }

    #[test]
    fn ridge_shrinks_standardized_slopes((rows, y) in regression(4)) {
        let d = design(&rows, &y);
        let grid = [0.0, 0.1, 1.0, 10.0, 100.0, 1e4];
        let path = ridge_path(&d, &grid).unwrap();
        let scales: Vec<f64> = (0..rows[0].len()).map(|j| population_sd(rows.iter().map(move |r| r[j]))).collect();
        let norms: Vec<f64> = path
            .iter()
            .map(|b| b[1..].iter().zip(&scales).map(|(c, s)| (c * s).powi(2)).sum::<f64>())
            .collect();
        for pair in norms.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn lasso_at_null_penalty_is_the_mean((rows, y) in regression(4), factor in 1.0f64..3.0) {
        let d = design(&rows, &y);
        let fit = fit_lasso(&d, factor * lasso_null_lambda(&d)).unwrap();
        prop_assert!(fit.coefficients[1..].iter().all(|b| *b == 0.0));
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        prop_assert!((fit.coefficients[0] - mean).abs() < 1e-9 * (1.0 + mean.abs()));
    }
}

#[test]
fn small_fixture_builds_from_the_library() {
    let cfg_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/small/run.cfg");
    let cfg = RunConfig::load(&cfg_path).unwrap();
    let table = build_dataset(&cfg).unwrap();
    assert_eq!(table.rows.len(), 11);
    assert_eq!(table.drops.len(), 1);
    assert_eq!(table.drops[0].event_id, "S07");

    let golden = std::fs::read(cfg_path.parent().unwrap().join("golden/events_dataset.csv")).unwrap();
    let frozen = read_event_rows(golden.as_slice()).unwrap();
    assert_eq!(frozen, table.rows);
}
