//! Regenerates the bundled synthetic fixtures.
//!
//! ```text
//! cargo run -p eventcurve --example gen_fixture -- fixtures
//! ```
//!
//! Two fixtures are written:
//!
//! * `small`: 12 events in 2017, one of which hits a blank DI cell, so the
//!   dataset has 11 rows and one logged drop.
//! * `demo`: 75 events from 2015 to 2022. The 15 shocks before 2016-08-31 fall
//!   outside the sample; of the remaining 60, one political shock is answered
//!   by a statement on the last trading day of the panel and cannot be closed,
//!   leaving 59 events (24 fiscal, 16 monetary-policy, 10 external, 9 political).
//!
//! Market levels follow random walks. Each event adds a jump on its
//! effective shock day and another on the day after its statement, chosen so
//! that the statement-window DI repricing follows a linear equation in the
//! shock-window repricing, the market controls, the statement text features
//! and the pre-event expected policy rate, plus Gaussian noise.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use eventcurve::calendar::{build_windows, Event, ShockType, TradingCalendar};
use eventcurve::ingest::{asof_merge, ExpectationsPanel, SeriesTable, SELIC_YEAR};
use eventcurve::textfeat::{analyze_text, Lexicon, StatementFeatures, ToneDenominator};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

/// Planted coefficients of the DI 252d statement-window equation (bp).
const ALPHA: f64 = 30.0;
const BETA: f64 = 0.35;
const GAMMA_FX: f64 = 4.0;
const GAMMA_VIX: f64 = 1.5;
const GAMMA_CDS: f64 = 0.3;
const THETA_TONE: f64 = 40.0;
const THETA_GUIDANCE: f64 = 15.0;
const THETA_UNC: f64 = -20.0;
const THETA_UNC_CHANGE: f64 = 10.0;
const PI_SELIC: f64 = -3.0;
const NOISE_BP: f64 = 20.0;

const HAWK: [&str; 4] = [
    "The Committee sees inflationary pressures and upside risks to inflation.",
    "Copom judges that a restrictive monetary policy stance remains necessary.",
    "Inflation expectations stand above the target, which calls for vigilance.",
    "The Committee considers a rate hike to keep inflation expectations anchored.",
];
const DOVE: [&str; 4] = [
    "The Committee notes that disinflation is progressing and economic slowdown adds slack.",
    "Inflation expectations below the target allow an accommodative monetary policy.",
    "Copom considers that the disinflationary process supports easing.",
    "The Committee judges that a rate cut is consistent with inflation at target.",
];
const NEUTRAL: [&str; 3] = [
    "The Committee decided to maintain the Selic rate unchanged.",
    "Copom sees balanced risks for the inflation outlook.",
    "Inflation expectations remain stable around the target.",
];
const OUT_OF_SCOPE: [&str; 4] = [
    "Global activity was mixed over the period.",
    "Commodity prices rose in recent weeks.",
    "Economic data releases came in broadly as forecast.",
    "Labor market indicators showed modest gains.",
];
const UNCERTAIN: [&str; 3] = [
    "Uncertainty about the fiscal outlook weighs on inflation expectations.",
    "The Committee remains cautious given volatility in the interest rate market.",
    "Copom notes that uncertainties surrounding inflation remain elevated.",
];
const TIGHTEN_EXPLICIT: &str = "The Committee anticipates further adjustment of the policy rate at the next meeting.";
const TIGHTEN_VAGUE: &str = "Further adjustments to monetary policy may be appropriate.";
const EASE_EXPLICIT: &str = "The Committee anticipates further reductions of the Selic rate at the next meeting.";
const EASE_VAGUE: &str = "Further reductions of the interest rate remain possible.";

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).expect("valid date")
}

fn holidays(year: i32) -> Vec<NaiveDate> {
    [(1, 1), (4, 21), (5, 1), (9, 7), (10, 12), (11, 2), (11, 15), (12, 25)]
        .iter()
        .map(|&(m, day)| d(year, m, day))
        .collect()
}

fn trading_days(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut day = start;
    while day <= end {
        let weekend = matches!(day.weekday(), Weekday::Sat | Weekday::Sun);
        if !weekend && !holidays(day.year()).contains(&day) {
            out.push(day);
        }
        day += Duration::days(1);
    }
    out
}

fn statement_text(rng: &mut StdRng, stance: i32) -> String {
    let mut sentences: Vec<&str> = Vec::new();
    let pick = |rng: &mut StdRng, pool: &[&'static str]| pool[rng.random_range(0..pool.len())];
    let hawks = stance.max(0) as usize + rng.random_range(0..2);
    let doves = (-stance).max(0) as usize + rng.random_range(0..2);
    for _ in 0..hawks {
        sentences.push(pick(rng, &HAWK));
    }
    for _ in 0..doves {
        sentences.push(pick(rng, &DOVE));
    }
    for _ in 0..rng.random_range(1..3) {
        sentences.push(pick(rng, &NEUTRAL));
    }
    for _ in 0..rng.random_range(1..4) {
        sentences.push(pick(rng, &OUT_OF_SCOPE));
    }
    for _ in 0..rng.random_range(0..3) {
        sentences.push(pick(rng, &UNCERTAIN));
    }
    if stance != 0 && rng.random_bool(0.6) {
        let explicit = rng.random_bool(0.5);
        sentences.push(match (stance > 0, explicit) {
            (true, true) => TIGHTEN_EXPLICIT,
            (true, false) => TIGHTEN_VAGUE,
            (false, true) => EASE_EXPLICIT,
            (false, false) => EASE_VAGUE,
        });
    }
    sentences.shuffle(rng);
    let mut text = String::new();
    for (i, s) in sentences.iter().enumerate() {
        text.push_str(s);
        text.push(if i % 3 == 2 { '\n' } else { ' ' });
    }
    text.trim_end().to_string() + "\n"
}

/// Daily series as increments so jumps can be added before levels are formed.
struct Series {
    name: &'static str,
    start: f64,
    /// Increments are log-returns rather than differences.
    multiplicative: bool,
    increments: Vec<f64>,
    /// Decimal places written to the CSV.
    decimals: usize,
    blanks: Vec<bool>,
}

impl Series {
    fn new(rng: &mut StdRng, name: &'static str, start: f64, sd: f64, multiplicative: bool, decimals: usize, n: usize) -> Self {
        let noise = Normal::new(0.0, sd).expect("valid sd");
        let mut increments: Vec<f64> = (0..n).map(|_| noise.sample(rng)).collect();
        increments[0] = 0.0;
        Series {
            name,
            start,
            multiplicative,
            increments,
            decimals,
            blanks: vec![false; n],
        }
    }

    fn levels(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.increments
            .iter()
            .map(|inc| {
                acc += inc;
                if self.multiplicative {
                    self.start * acc.exp()
                } else {
                    self.start + acc
                }
            })
            .collect()
    }

    /// Sum of increments over `(from, to]`.
    fn change(&self, from: usize, to: usize) -> f64 {
        self.increments[from + 1..=to].iter().sum()
    }
}

fn write_market(path: &Path, dates: &[NaiveDate], series: &[Series]) {
    let levels: Vec<Vec<f64>> = series.iter().map(Series::levels).collect();
    let mut out = String::from("date");
    for s in series {
        out.push(',');
        out.push_str(s.name);
    }
    out.push('\n');
    for (i, day) in dates.iter().enumerate() {
        write!(out, "{day}").unwrap();
        for (s, lv) in series.iter().zip(&levels) {
            if s.blanks[i] {
                out.push(',');
            } else {
                write!(out, ",{:.*}", s.decimals, lv[i]).unwrap();
            }
        }
        out.push('\n');
    }
    fs::write(path, out).expect("write market");
}

/// Weekly survey on Fridays with a few unpublished cells.
fn focus_table(rng: &mut StdRng, start: NaiveDate, end: NaiveDate) -> SeriesTable {
    let mut table = SeriesTable::new(vec![SELIC_YEAR.to_string(), "ipca_year".to_string()]);
    let step = Normal::new(0.0, 0.12).expect("valid sd");
    let (mut selic, mut ipca) = (12.5f64, 5.5f64);
    let mut day = start;
    while day.weekday() != Weekday::Fri {
        day += Duration::days(1);
    }
    let mut first = true;
    while day <= end {
        selic = (selic + step.sample(rng)).clamp(2.0, 15.0);
        ipca = (ipca + step.sample(rng) * 0.5).clamp(1.5, 11.0);
        let blank = !first && rng.random_bool(0.05);
        let round = |v: f64| (v * 100.0).round() / 100.0;
        table
            .push_row(day, vec![(!blank).then_some(round(selic)), Some(round(ipca))])
            .expect("consistent width");
        first = false;
        day += Duration::days(7);
    }
    table
}

fn statement_dates(first: NaiveDate, last: NaiveDate) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut day = first;
    while day <= last {
        out.push(day);
        day += Duration::days(28);
    }
    out
}

struct Plan {
    event: Event,
    /// Skip the planted jumps (the event's statement window cannot be closed).
    plant: bool,
}

fn random_shock_in(rng: &mut StdRng, cal: &TradingCalendar, prev: NaiveDate, next: NaiveDate) -> NaiveDate {
    let lo = cal.first_trading_strictly_after(prev).expect("calendar covers statements") + Duration::days(1);
    let hi = next - Duration::days(1);
    let span = (hi - lo).num_days().max(0);
    lo + Duration::days(rng.random_range(0..=span))
}

struct Fixture {
    dates: Vec<NaiveDate>,
    statements: Vec<NaiveDate>,
    plans: Vec<Plan>,
    series: Vec<Series>,
    focus: SeriesTable,
    texts: BTreeMap<NaiveDate, String>,
}

fn plant(fx: &mut Fixture, rng: &mut StdRng) {
    let cal = TradingCalendar::new(fx.dates.clone()).expect("calendar");
    let index: BTreeMap<NaiveDate, usize> = fx.dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let lex = Lexicon::builtin();
    let mut features: BTreeMap<NaiveDate, StatementFeatures> = BTreeMap::new();
    let mut prev: Option<&String> = None;
    for (day, text) in &fx.texts {
        let a = analyze_text(text, prev.map(String::as_str), &lex, ToneDenominator::InScope);
        features.insert(*day, a.features);
        prev = Some(text);
    }
    let expectations = ExpectationsPanel::from_table(fx.focus.clone());
    let col = |name: &str| fx.series.iter().position(|s| s.name == name);
    let (di21, di252, di504) = (col("di_21d").unwrap(), col("di_252d").unwrap(), col("di_504d").unwrap());
    let (fxc, vix, cds) = (col("fx"), col("vix"), col("cds_5y"));

    let n01 = Normal::new(0.0, 1.0).unwrap();
    let mut last_end = 0usize;
    for plan in &fx.plans {
        if !plan.plant {
            continue;
        }
        let w = build_windows(&cal, &plan.event).expect("planted events have windows");
        let (t0, t1, t2) = (index[&w.shock.start_date], index[&w.shock.end_date], index[&w.statement.end_date]);
        assert!(t0 >= last_end, "event windows overlap at {}", plan.event.id);
        last_end = t2;

        // shock-day jumps
        let mut control = |c: Option<usize>, sd: f64, scale: f64, rng: &mut StdRng| {
            c.map(|c| {
                fx.series[c].increments[t1] += sd * n01.sample(rng);
                fx.series[c].change(t0, t1) * scale
            })
        };
        let d_fx = control(fxc, 0.01, 100.0, rng);
        let d_vix = control(vix, 2.0, 1.0, rng);
        let d_cds = control(cds, 10.0, 1.0, rng);
        let shock_bp = 0.2 * d_cds.unwrap_or(0.0) + 15.0 * n01.sample(rng);
        fx.series[di252].increments[t1] += shock_bp / 100.0;
        fx.series[di21].increments[t1] += (0.5 * shock_bp + 5.0 * n01.sample(rng)) / 100.0;
        fx.series[di504].increments[t1] += (1.2 * shock_bp + 8.0 * n01.sample(rng)) / 100.0;
        let x252 = fx.series[di252].change(t0, t1) * 100.0;
        let x504 = fx.series[di504].change(t0, t1) * 100.0;

        let text = features[&plan.event.next_statement_date];
        let selic = asof_merge(&expectations, w.shock.start_date, SELIC_YEAR)
            .unwrap()
            .expect("survey starts before the first event");
        let systematic = ALPHA
            + GAMMA_FX * d_fx.unwrap_or(0.0)
            + GAMMA_VIX * d_vix.unwrap_or(0.0)
            + GAMMA_CDS * d_cds.unwrap_or(0.0)
            + THETA_TONE * text.tone
            + THETA_GUIDANCE * text.guidance_score
            + THETA_UNC * text.uncertainty_level
            + THETA_UNC_CHANGE * text.uncertainty_change
            + PI_SELIC * selic;
        // heteroskedastic noise, larger after large shocks
        let scale = NOISE_BP * (1.0 + x252.abs() / 40.0);
        let y252 = systematic + BETA * x252 + scale * n01.sample(rng);
        let y504 = 1.1 * systematic + 0.3 * x504 + 1.2 * scale * n01.sample(rng);
        let y21 = 0.5 * y252 + 5.0 * n01.sample(rng);
        for (c, target) in [(di252, y252), (di504, y504), (di21, y21)] {
            let drift = fx.series[c].change(t1, t2) * 100.0;
            fx.series[c].increments[t2] += (target - drift) / 100.0;
        }
    }
}

fn market_series(rng: &mut StdRng, n: usize, full: bool) -> Vec<Series> {
    let mut s = vec![
        Series::new(rng, "di_21d", 13.0, 0.02, false, 4, n),
        Series::new(rng, "di_252d", 12.5, 0.03, false, 4, n),
        Series::new(rng, "di_504d", 12.8, 0.035, false, 4, n),
        Series::new(rng, "fx", 3.2, 0.008, true, 4, n),
    ];
    if full {
        s.push(Series::new(rng, "oil", 55.0, 0.015, true, 2, n));
    }
    s.push(Series::new(rng, "vix", 16.0, 0.8, false, 2, n));
    s.push(Series::new(rng, "cds_5y", 250.0, 2.0, false, 2, n));
    if full {
        s.push(Series::new(rng, "ust_10y", 2.2, 0.04, false, 4, n));
        // a few missing quotes on series that are not used as controls
        for name in ["oil", "ust_10y"] {
            let i = s.iter().position(|x| x.name == name).unwrap();
            for day in 1..n {
                s[i].blanks[day] = rng.random_bool(0.03);
            }
        }
    }
    s
}

fn write_fixture(dir: &Path, fx: &Fixture, config: &str) {
    fs::create_dir_all(dir.join("statements")).unwrap();
    write_market(&dir.join("market.csv"), &fx.dates, &fx.series);
    let mut focus = Vec::new();
    fx.focus.write(&mut focus).unwrap();
    fs::write(dir.join("focus.csv"), focus).unwrap();
    for (day, text) in &fx.texts {
        fs::write(dir.join("statements").join(format!("{day}.txt")), text).unwrap();
    }
    let mut events = String::from("id,shock_date,shock_type,prev_statement_date,next_statement_date\n");
    for p in &fx.plans {
        let e = &p.event;
        let prev = e.prev_statement_date.map(|d| d.to_string()).unwrap_or_default();
        writeln!(events, "{},{},{},{},{}", e.id, e.shock_date, e.shock_type.as_str(), prev, e.next_statement_date).unwrap();
    }
    fs::write(dir.join("events.csv"), events).unwrap();
    fs::write(dir.join("run.cfg"), config).unwrap();
}

fn texts_for(rng: &mut StdRng, statements: &[NaiveDate]) -> BTreeMap<NaiveDate, String> {
    let mut stance = 0i32;
    statements
        .iter()
        .map(|day| {
            stance = (stance + rng.random_range(-1..=1)).clamp(-2, 2);
            (*day, statement_text(rng, stance))
        })
        .collect()
}

fn demo(rng: &mut StdRng) -> Fixture {
    let statements = statement_dates(d(2015, 1, 7), d(2022, 12, 31));
    let last = *statements.last().unwrap();
    let dates = trading_days(d(2014, 12, 1), last);
    assert_eq!(*dates.last().unwrap(), last, "final statement must be a trading day");
    let cal = TradingCalendar::new(dates.clone()).unwrap();
    let sample_start = d(2016, 8, 31);

    // intervals (statements[i-1], statements[i]]
    let pre: Vec<usize> = (1..statements.len()).filter(|&i| statements[i] < sample_start).collect();
    let post: Vec<usize> = (1..statements.len() - 1).filter(|&i| statements[i - 1] > sample_start).collect();
    let mut pre_pick = pre.clone();
    pre_pick.shuffle(rng);
    pre_pick.truncate(15);
    let mut post_pick = post.clone();
    post_pick.shuffle(rng);
    post_pick.truncate(59);

    let mut types: Vec<ShockType> = [(ShockType::Fiscal, 24), (ShockType::MonetaryPolicyCopom, 16), (ShockType::External, 10), (ShockType::Political, 9)]
        .iter()
        .flat_map(|&(t, n)| std::iter::repeat_n(t, n))
        .collect();
    types.shuffle(rng);

    let mut raw: Vec<(usize, ShockType, bool)> = Vec::new();
    for &i in &pre_pick {
        raw.push((i, ShockType::ALL[rng.random_range(0..4)], true));
    }
    for (&i, &t) in post_pick.iter().zip(&types) {
        raw.push((i, t, true));
    }
    raw.push((statements.len() - 1, ShockType::Political, false));
    raw.sort();

    let plans = raw
        .iter()
        .enumerate()
        .map(|(k, &(i, t, plant))| {
            let (prev, next) = (statements[i - 1], statements[i]);
            let shock = if t == ShockType::MonetaryPolicyCopom { next } else { random_shock_in(rng, &cal, prev, next) };
            Plan {
                event: Event::new(format!("E{:03}", k + 1), shock, t, Some(prev), next).unwrap(),
                plant,
            }
        })
        .collect();

    let n = dates.len();
    let series = market_series(rng, n, true);
    let focus = focus_table(rng, d(2014, 11, 1), last);
    let texts = texts_for(rng, &statements);
    Fixture {
        dates,
        statements,
        plans,
        series,
        focus,
        texts,
    }
}

fn small(rng: &mut StdRng) -> (Fixture, String) {
    let statements = statement_dates(d(2017, 1, 11), d(2018, 1, 31));
    let last = *statements.last().unwrap();
    let dates = trading_days(d(2016, 12, 1), last + Duration::days(10));
    let cal = TradingCalendar::new(dates.clone()).unwrap();
    let plans: Vec<Plan> = (1..=12)
        .map(|i| {
            let t = ShockType::ALL[(i - 1) % 4];
            let (prev, next) = (statements[i - 1], statements[i]);
            let shock = if t == ShockType::MonetaryPolicyCopom { next } else { random_shock_in(rng, &cal, prev, next) };
            Plan {
                event: Event::new(format!("S{i:02}"), shock, t, Some(prev), next).unwrap(),
                plant: true,
            }
        })
        .collect();
    let series = market_series(rng, dates.len(), false);
    let focus = focus_table(rng, d(2016, 11, 1), last);
    let texts = texts_for(rng, &statements);
    let mut fx = Fixture {
        dates,
        statements,
        plans,
        series,
        focus,
        texts,
    };
    plant(&mut fx, rng);
    // blank the DI 252d quote on the effective shock day of the seventh event
    let victim = &fx.plans[6].event;
    let effective = cal.first_trading_on_or_after(victim.shock_date).unwrap();
    let row = fx.dates.iter().position(|d| *d == effective).unwrap();
    let col = fx.series.iter().position(|s| s.name == "di_252d").unwrap();
    fx.series[col].blanks[row] = true;
    let note = format!("{} {}", victim.id, effective);
    (fx, note)
}

const DEMO_CFG: &str = r#"# Synthetic demonstration run: 75 raw events, 59 retained.
events = "events.csv"
market = "market.csv"
focus = "focus.csv"
statements = "statements"
output_dir = "out"
sample_start = "2016-08-31"
specs = ["di252_baseline", "di252_fiscal", "di504_baseline", "slope_baseline"]
lambda = 1.0
lasso_lambda = 1.0
min_n = 20
"#;

const SMALL_CFG: &str = r#"# Twelve events, one with a blank DI quote.
events = "events.csv"
market = "market.csv"
focus = "focus.csv"
statements = "statements"
output_dir = "out"
specs = ["di252_small"]
min_n = 8

[[spec]]
name = "di252_small"
label = "DI 252d small"
target = "d_di252_statement"
initial_shock = "d_di252_shock"
controls = ["d_fx_shock"]
text = ["tone"]
expectations = []
"#;

fn main() {
    let root: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()).into();

    let mut rng = StdRng::seed_from_u64(20_160_831);
    let mut demo = demo(&mut rng);
    plant(&mut demo, &mut rng);
    write_fixture(&root.join("demo"), &demo, DEMO_CFG);
    println!(
        "demo: {} events, {} statements, {} trading days",
        demo.plans.len(),
        demo.statements.len(),
        demo.dates.len()
    );

    let mut rng = StdRng::seed_from_u64(2017);
    let (small, blanked) = small(&mut rng);
    write_fixture(&root.join("small"), &small, SMALL_CFG);
    println!("small: {} events, blank di_252d for {blanked}", small.plans.len());
}
