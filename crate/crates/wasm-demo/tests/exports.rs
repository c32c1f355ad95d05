use eventcurve_wasm::{event_windows_json, regularization_path_json, score_statement_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn scoring_reports_sentences_and_bounded_tone() {
    let text = "Inflation pressures remain elevated. The committee will keep rates unchanged for an extended period.";
    let v = parse(score_statement_json(text, "", false).unwrap());
    assert_eq!(v["sentences"].as_array().unwrap().len(), 2);
    let f = &v["features"];
    assert!(f["tone"].as_f64().unwrap().abs() <= 1.0);
    assert_eq!(f["uncertainty_change"].as_f64().unwrap(), 0.0);
    let score = f["guidance_score"].as_f64().unwrap();
    let product = f["guidance_direction"].as_f64().unwrap() * f["guidance_explicitness"].as_f64().unwrap();
    assert_eq!(score, product);
}

#[test]
fn empty_statement_scores_zero() {
    let v = parse(score_statement_json("", "", true).unwrap());
    assert_eq!(v["features"]["tone"].as_f64().unwrap(), 0.0);
    assert!(v["sentences"].as_array().unwrap().is_empty());
}

#[test]
fn paths_shrink_towards_zero() {
    let v = parse(regularization_path_json("di252_baseline", 12).unwrap());
    assert_eq!(v["n"].as_u64().unwrap(), 59);
    let cols = v["columns"].as_array().unwrap().len();
    let ridge = v["ridge"]["points"].as_array().unwrap();
    assert_eq!(ridge.len(), 12);
    assert_eq!(v["ridge"]["loo_rmse"].as_array().unwrap().len(), 12);
    let slopes = |p: &Value| -> f64 {
        p["coefficients"].as_array().unwrap()[1..].iter().map(|c| c.as_f64().unwrap().abs()).sum()
    };
    assert!(slopes(&ridge[11]) < slopes(&ridge[0]));
    let lasso = v["lasso"].as_array().unwrap();
    let last = &lasso[lasso.len() - 1];
    assert_eq!(last["coefficients"].as_array().unwrap().len(), cols);
    assert_eq!(slopes(last), 0.0);
}

#[test]
fn path_rejects_bad_arguments() {
    assert!(regularization_path_json("nope", 10).is_err());
    assert!(regularization_path_json("di252_baseline", 1).is_err());
}

#[test]
fn windows_follow_the_trading_calendar() {
    // Friday shock, statement the following Wednesday, Monday closed
    let v = parse(event_windows_json("2021-03-05", "2021-03-10", "2021-03-08").unwrap());
    assert_eq!(v["shock"]["start"], "2021-03-04");
    assert_eq!(v["shock"]["end"], "2021-03-05");
    assert_eq!(v["statement"]["start"], "2021-03-05");
    assert_eq!(v["statement"]["end"], "2021-03-11");
    assert_eq!(v["same_day_statement"], false);
    assert!(!v["trading_days"].as_array().unwrap().iter().any(|d| d == "2021-03-08"));

    // weekend shock moves to the next trading day
    let v = parse(event_windows_json("2021-03-06", "2021-03-10", "").unwrap());
    assert_eq!(v["shock"]["start"], "2021-03-05");
    assert_eq!(v["shock"]["end"], "2021-03-08");

    // a same-day statement on a non-trading day leaves no statement window
    let err = event_windows_json("2021-03-06", "2021-03-06", "").unwrap_err();
    assert!(err.contains("does not follow"), "{err}");
}

#[test]
fn windows_reject_bad_dates() {
    assert!(event_windows_json("2021/03/05", "2021-03-10", "").is_err());
    assert!(event_windows_json("2021-03-10", "2021-03-05", "").is_err());
}
