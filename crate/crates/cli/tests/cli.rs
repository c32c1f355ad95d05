use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use tempfile::TempDir;

const OUTPUTS: [&str; 11] = [
    "events_dataset.csv",
    "drops.csv",
    "fits.json",
    "table2.csv",
    "fig2_tone_series.csv",
    "fig3_distributions.csv",
    "fig4_scatter.csv",
    "fig5_by_type.csv",
    "figA1_rmse.csv",
    "figA2_text_coefs.csv",
    "figA3_forest.csv",
];

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        if name == "golden" || name == "out" {
            continue;
        }
        let target = to.join(&name);
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Copy of a bundled fixture in a scratch directory; outputs land in `out/`.
fn workspace(name: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    copy_dir(&fixture(name), dir.path());
    dir
}

fn eventcurve(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eventcurve"))
        .args(args)
        .arg("--config")
        .arg(dir.join("run.cfg"))
        .output()
        .unwrap()
}

fn text(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn demo_matches_golden_outputs() {
    let dir = workspace("demo");
    let start = Instant::now();
    let out = eventcurve(dir.path(), &["all"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(start.elapsed().as_secs_f64() < 10.0);
    for file in OUTPUTS {
        let got = text(dir.path().join("out").join(file));
        let want = text(fixture("demo").join("golden").join(file));
        assert!(got == want, "{file} differs from golden");
    }
}

#[test]
fn small_build_matches_golden_and_logs_the_drop() {
    let dir = workspace("small");
    let out = eventcurve(dir.path(), &["build"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let dataset = text(dir.path().join("out/events_dataset.csv"));
    assert_eq!(dataset, text(fixture("small").join("golden/events_dataset.csv")));
    assert_eq!(dataset.lines().count(), 1 + 11);
    let drops = text(dir.path().join("out/drops.csv"));
    assert_eq!(drops, "event_id,reason\nS07,missing_value:di_252d@2017-07-12\n");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (workspace("demo"), workspace("demo"));
    for dir in [&a, &b] {
        assert!(eventcurve(dir.path(), &["all"]).status.success());
    }
    for file in OUTPUTS {
        assert_eq!(fs::read(a.path().join("out").join(file)).unwrap(), fs::read(b.path().join("out").join(file)).unwrap(), "{file}");
    }
}

#[test]
fn missing_market_file_is_bad_input() {
    let dir = workspace("small");
    fs::remove_file(dir.path().join("market.csv")).unwrap();
    let out = eventcurve(dir.path(), &["build"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("market.csv"), "{}", stderr(&out));
}

#[test]
fn malformed_input_is_bad_input_with_location() {
    let dir = workspace("small");
    let events = text(dir.path().join("events.csv"));
    fs::write(dir.path().join("events.csv"), events.replacen("2017-", "2017/", 2)).unwrap();
    let out = eventcurve(dir.path(), &["build"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("events.csv:2:"), "{}", stderr(&out));
}

#[test]
fn empty_events_file_gives_empty_dataset() {
    let dir = workspace("small");
    for contents in ["", "id,shock_date,shock_type,prev_statement_date,next_statement_date\n"] {
        fs::write(dir.path().join("events.csv"), contents).unwrap();
        let out = eventcurve(dir.path(), &["build"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let dataset = text(dir.path().join("out/events_dataset.csv"));
        assert_eq!(dataset.lines().count(), 1);
        assert!(dataset.starts_with("event_id,shock_type,"));
    }
    // fitting an empty dataset reports skips rather than failing
    let out = eventcurve(dir.path(), &["fit"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(text(dir.path().join("out/table2.csv")).contains("skipped: insufficient sample"));
}

#[test]
fn later_stages_require_earlier_outputs() {
    let dir = workspace("small");
    assert_eq!(eventcurve(dir.path(), &["fit"]).status.code(), Some(3));
    assert_eq!(eventcurve(dir.path(), &["figures"]).status.code(), Some(3));
    assert!(eventcurve(dir.path(), &["build"]).status.success());
    assert_eq!(eventcurve(dir.path(), &["figures"]).status.code(), Some(3));
    assert!(eventcurve(dir.path(), &["fit"]).status.success());
    assert!(eventcurve(dir.path(), &["figures"]).status.success());
}

#[test]
fn single_spec_gives_four_estimator_rows() {
    let dir = workspace("demo");
    assert!(eventcurve(dir.path(), &["build"]).status.success());
    let out = eventcurve(dir.path(), &["fit", "--spec", "di504_baseline"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = text(dir.path().join("out/table2.csv"));
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let estimators: Vec<&str> = rows.iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    assert_eq!(estimators, ["OLS-HC3", "Ridge", "Lasso", "Ridge LOO"]);
    assert!(rows.iter().all(|r| r.starts_with("DI 504d baseline,")));
}

#[test]
fn flags_override_config() {
    let dir = workspace("demo");
    assert!(eventcurve(dir.path(), &["build"]).status.success());

    assert!(eventcurve(dir.path(), &["fit", "--lambda", "7.5"]).status.success());
    let fits = text(dir.path().join("out/fits.json"));
    assert!(fits.contains("\"ridge_lambda\": 7.5"));

    assert!(eventcurve(dir.path(), &["fit", "--min-n", "100"]).status.success());
    let table = text(dir.path().join("out/table2.csv"));
    assert_eq!(table.lines().filter(|l| l.contains("skipped: insufficient sample")).count(), 4);

    assert_eq!(eventcurve(dir.path(), &["fit", "--spec", "nonexistent"]).status.code(), Some(2));
    assert_eq!(eventcurve(dir.path(), &["fit", "--lambda", "-1"]).status.code(), Some(2));
}

#[test]
fn subgroups_follow_min_n() {
    let dir = workspace("demo");
    assert!(eventcurve(dir.path(), &["build"]).status.success());
    assert!(eventcurve(dir.path(), &["fit"]).status.success());
    let fits: serde_json::Value = serde_json::from_str(&text(dir.path().join("out/fits.json"))).unwrap();
    let groups = fits["subgroups"].as_array().unwrap();
    assert_eq!(groups.len(), 4);
    let fitted: Vec<&str> = groups
        .iter()
        .filter(|g| g["status"] == "fitted")
        .map(|g| g["shock_type"].as_str().unwrap())
        .collect();
    assert_eq!(fitted, ["fiscal"]);
}

#[test]
fn figure_files_have_exact_headers() {
    let dir = workspace("demo");
    assert!(eventcurve(dir.path(), &["all"]).status.success());
    let expected = [
        ("fig2_tone_series.csv", "date,tone"),
        ("fig3_distributions.csv", "window_kind,maturity,repricing"),
        ("fig4_scatter.csv", "d_di252_shock,d_di252_statement"),
        ("fig5_by_type.csv", "shock_type,d_di252_statement"),
        ("figA1_rmse.csv", "spec,estimator,rmse"),
        ("figA2_text_coefs.csv", "shock_type,term,coefficient"),
        ("figA3_forest.csv", "term,coefficient,ci_low,ci_high"),
    ];
    for (file, header) in expected {
        let body = text(dir.path().join("out").join(file));
        assert_eq!(body.lines().next(), Some(header), "{file}");
    }
    let retained = text(dir.path().join("out/events_dataset.csv")).lines().count() - 1;
    assert_eq!(text(dir.path().join("out/fig4_scatter.csv")).lines().count() - 1, retained);
    // only the estimable subgroup appears in the subgroup text coefficients
    let a2 = text(dir.path().join("out/figA2_text_coefs.csv"));
    assert!(a2.lines().skip(1).all(|l| l.starts_with("fiscal,")));
    assert_eq!(a2.lines().count() - 1, 4);
}
