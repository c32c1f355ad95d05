//! One row per event: repricing over both windows, shock-window market
//! controls, text features of the statement closing the statement window, and
//! pre-event survey expectations.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{build_shock_window, build_statement_window, Event, ShockType, TradingCalendar, Window};
use crate::ingest::{self, asof_merge, ExpectationsPanel, MarketPanel};
use crate::textfeat::StatementFeatures;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("missing {field} on {date}")]
    MissingValue { field: String, date: NaiveDate },
    #[error("{source_name} has no `{column}` column")]
    MissingColumn { source_name: &'static str, column: String },
    #[error("sample is empty")]
    EmptySample,
    #[error("need at least 3 complete rows, found {0}")]
    InsufficientData(usize),
    #[error("zero variance in `{0}`")]
    ZeroVariance(String),
    #[error("unknown row field `{0}`")]
    UnknownField(String),
    #[error("event dataset: {0}")]
    Csv(String),
}

/// How a market field is quoted, which determines how its change is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quote {
    /// Percent per annum; change reported in basis points.
    PercentRate,
    /// Already in basis points; plain difference.
    BasisPoints,
    /// Price level; change reported in percent.
    Price,
    /// Index level; plain difference.
    Level,
}

pub fn quote_of(field: &str) -> Quote {
    match field {
        ingest::DI_21D | ingest::DI_252D | ingest::DI_504D | ingest::UST_10Y => Quote::PercentRate,
        ingest::CDS_5Y => Quote::BasisPoints,
        ingest::FX | ingest::OIL => Quote::Price,
        _ => Quote::Level,
    }
}

/// Change of `field` over the window, in the unit implied by [`quote_of`].
pub fn repricing(panel: &MarketPanel, w: &Window, field: &str) -> Result<f64, DatasetError> {
    let value = |date: NaiveDate| {
        panel.get(date, field).ok_or_else(|| DatasetError::MissingValue {
            field: field.to_string(),
            date,
        })
    };
    let start = value(w.start_date)?;
    let end = value(w.end_date)?;
    Ok(match quote_of(field) {
        Quote::PercentRate => (end - start) * 100.0,
        Quote::BasisPoints | Quote::Level => end - start,
        Quote::Price => (end / start - 1.0) * 100.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeOrientation {
    /// di_504d − di_21d
    #[default]
    LongMinusShort,
    /// di_21d − di_504d
    ShortMinusLong,
}

impl SlopeOrientation {
    pub fn slope(self, short: f64, long: f64) -> f64 {
        match self {
            SlopeOrientation::LongMinusShort => long - short,
            SlopeOrientation::ShortMinusLong => short - long,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub event_id: String,
    pub shock_type: ShockType,
    pub shock_date: NaiveDate,
    pub prev_statement_date: Option<NaiveDate>,
    pub next_statement_date: NaiveDate,
    pub shock_start: NaiveDate,
    pub shock_end: NaiveDate,
    pub statement_end: NaiveDate,
    pub shock_window_days: i64,
    pub statement_window_days: i64,
    pub d_di21_shock: f64,
    pub d_di252_shock: f64,
    pub d_di504_shock: f64,
    pub d_slope_shock: f64,
    pub d_di21_statement: f64,
    pub d_di252_statement: f64,
    pub d_di504_statement: f64,
    pub d_slope_statement: f64,
    pub d_fx_shock: Option<f64>,
    pub d_oil_shock: Option<f64>,
    pub d_vix_shock: Option<f64>,
    pub d_cds_shock: Option<f64>,
    pub d_ust_shock: Option<f64>,
    pub tone: f64,
    pub guidance_direction: i8,
    pub guidance_explicitness: f64,
    pub guidance_score: f64,
    pub uncertainty_level: f64,
    pub uncertainty_change: f64,
    pub selic_year_pre: Option<f64>,
}

/// Numeric columns addressable by name from regression specifications.
pub const NUMERIC_FIELDS: &[&str] = &[
    "d_di21_shock",
    "d_di252_shock",
    "d_di504_shock",
    "d_slope_shock",
    "d_di21_statement",
    "d_di252_statement",
    "d_di504_statement",
    "d_slope_statement",
    "d_fx_shock",
    "d_oil_shock",
    "d_vix_shock",
    "d_cds_shock",
    "d_ust_shock",
    "tone",
    "guidance_direction",
    "guidance_explicitness",
    "guidance_score",
    "uncertainty_level",
    "uncertainty_change",
    "selic_year_pre",
    "shock_window_days",
    "statement_window_days",
];

impl EventRow {
    /// Value of a numeric column; `Ok(None)` for an absent optional cell.
    pub fn value(&self, field: &str) -> Result<Option<f64>, DatasetError> {
        Ok(match field {
            "d_di21_shock" => Some(self.d_di21_shock),
            "d_di252_shock" => Some(self.d_di252_shock),
            "d_di504_shock" => Some(self.d_di504_shock),
            "d_slope_shock" => Some(self.d_slope_shock),
            "d_di21_statement" => Some(self.d_di21_statement),
            "d_di252_statement" => Some(self.d_di252_statement),
            "d_di504_statement" => Some(self.d_di504_statement),
            "d_slope_statement" => Some(self.d_slope_statement),
            "d_fx_shock" => self.d_fx_shock,
            "d_oil_shock" => self.d_oil_shock,
            "d_vix_shock" => self.d_vix_shock,
            "d_cds_shock" => self.d_cds_shock,
            "d_ust_shock" => self.d_ust_shock,
            "tone" => Some(self.tone),
            "guidance_direction" => Some(f64::from(self.guidance_direction)),
            "guidance_explicitness" => Some(self.guidance_explicitness),
            "guidance_score" => Some(self.guidance_score),
            "uncertainty_level" => Some(self.uncertainty_level),
            "uncertainty_change" => Some(self.uncertainty_change),
            "selic_year_pre" => self.selic_year_pre,
            "shock_window_days" => Some(self.shock_window_days as f64),
            "statement_window_days" => Some(self.statement_window_days as f64),
            other => return Err(DatasetError::UnknownField(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropReason {
    BeforeSampleStart,
    ShockWindowUnavailable,
    StatementWindowUnavailable,
    MissingValue { field: String, date: NaiveDate },
    MissingStatement(NaiveDate),
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::BeforeSampleStart => f.write_str("before_sample_start"),
            DropReason::ShockWindowUnavailable => f.write_str("shock_window_unavailable"),
            DropReason::StatementWindowUnavailable => f.write_str("statement_window_unavailable"),
            DropReason::MissingValue { field, date } => write!(f, "missing_value:{field}@{date}"),
            DropReason::MissingStatement(date) => write!(f, "missing_statement:{date}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedEvent {
    pub event_id: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Events shocked before this date are dropped before any window is built.
    pub sample_start: Option<NaiveDate>,
    pub slope: SlopeOrientation,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            sample_start: Some(NaiveDate::from_ymd_opt(2016, 8, 31).expect("valid date")),
            slope: SlopeOrientation::LongMinusShort,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventTable {
    pub rows: Vec<EventRow>,
    pub drops: Vec<DroppedEvent>,
}

const DI_REQUIRED: [&str; 3] = [ingest::DI_21D, ingest::DI_252D, ingest::DI_504D];

fn build_row(
    ev: &Event,
    cal: &TradingCalendar,
    panel: &MarketPanel,
    expectations: &ExpectationsPanel,
    features: &BTreeMap<NaiveDate, StatementFeatures>,
    slope: SlopeOrientation,
) -> Result<EventRow, DropReason> {
    let w1 = build_shock_window(cal, ev).map_err(|_| DropReason::ShockWindowUnavailable)?;
    let w2 = build_statement_window(cal, ev, w1.end_date).map_err(|_| DropReason::StatementWindowUnavailable)?;

    let required = |w: &Window, field: &str| {
        repricing(panel, w, field).map_err(|e| match e {
            DatasetError::MissingValue { field, date } => DropReason::MissingValue { field, date },
            other => unreachable!("repricing only reports missing values: {other}"),
        })
    };
    let [di21_1, di252_1, di504_1] = DI_REQUIRED.map(|f| required(&w1, f));
    let [di21_2, di252_2, di504_2] = DI_REQUIRED.map(|f| required(&w2, f));
    let (di21_1, di252_1, di504_1) = (di21_1?, di252_1?, di504_1?);
    let (di21_2, di252_2, di504_2) = (di21_2?, di252_2?, di504_2?);

    let text = features
        .get(&ev.next_statement_date)
        .ok_or(DropReason::MissingStatement(ev.next_statement_date))?;

    let control = |field: &str| {
        if panel.has_field(field) {
            repricing(panel, &w1, field).ok()
        } else {
            None
        }
    };
    let selic_year_pre = asof_merge(expectations, w1.start_date, ingest::SELIC_YEAR).ok().flatten();

    Ok(EventRow {
        event_id: ev.id.clone(),
        shock_type: ev.shock_type,
        shock_date: ev.shock_date,
        prev_statement_date: ev.prev_statement_date,
        next_statement_date: ev.next_statement_date,
        shock_start: w1.start_date,
        shock_end: w1.end_date,
        statement_end: w2.end_date,
        shock_window_days: w1.length_days,
        statement_window_days: w2.length_days,
        d_di21_shock: di21_1,
        d_di252_shock: di252_1,
        d_di504_shock: di504_1,
        d_slope_shock: slope.slope(di21_1, di504_1),
        d_di21_statement: di21_2,
        d_di252_statement: di252_2,
        d_di504_statement: di504_2,
        d_slope_statement: slope.slope(di21_2, di504_2),
        d_fx_shock: control(ingest::FX),
        d_oil_shock: control(ingest::OIL),
        d_vix_shock: control(ingest::VIX),
        d_cds_shock: control(ingest::CDS_5Y),
        d_ust_shock: control(ingest::UST_10Y),
        tone: text.tone,
        guidance_direction: text.guidance_direction,
        guidance_explicitness: text.guidance_explicitness,
        guidance_score: text.guidance_score,
        uncertainty_level: text.uncertainty_level,
        uncertainty_change: text.uncertainty_change,
        selic_year_pre,
    })
}

fn event_order(a: &Event, b: &Event) -> std::cmp::Ordering {
    (&a.id, a.shock_date, a.shock_type, a.next_statement_date, a.prev_statement_date).cmp(&(
        &b.id,
        b.shock_date,
        b.shock_type,
        b.next_statement_date,
        b.prev_statement_date,
    ))
}

/// Collapses events into the analytical table. Rows and drops come out ordered
/// by event id regardless of input order.
pub fn build_event_rows(
    events: &[Event],
    cal: &TradingCalendar,
    panel: &MarketPanel,
    expectations: &ExpectationsPanel,
    statement_features: &BTreeMap<NaiveDate, StatementFeatures>,
    opts: &BuildOptions,
) -> Result<EventTable, DatasetError> {
    for di in DI_REQUIRED {
        if !panel.has_field(di) {
            return Err(DatasetError::MissingColumn {
                source_name: "market panel",
                column: di.to_string(),
            });
        }
    }
    if !expectations.table().has_field(ingest::SELIC_YEAR) {
        return Err(DatasetError::MissingColumn {
            source_name: "expectations panel",
            column: ingest::SELIC_YEAR.to_string(),
        });
    }

    let mut ordered: Vec<&Event> = events.iter().collect();
    ordered.sort_by(|a, b| event_order(a, b));

    let mut table = EventTable::default();
    for ev in ordered {
        if opts.sample_start.is_some_and(|s| ev.shock_date < s) {
            table.drops.push(DroppedEvent {
                event_id: ev.id.clone(),
                reason: DropReason::BeforeSampleStart,
            });
            continue;
        }
        match build_row(ev, cal, panel, expectations, statement_features, opts.slope) {
            Ok(row) => table.rows.push(row),
            Err(reason) => {
                log::info!("dropping event {}: {reason}", ev.id);
                table.drops.push(DroppedEvent {
                    event_id: ev.id.clone(),
                    reason,
                });
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionRow {
    pub shock_type: ShockType,
    pub events: usize,
    /// Percent of all events.
    pub share: f64,
}

pub fn composition_from_counts(counts: &[(ShockType, usize)]) -> Result<Vec<CompositionRow>, DatasetError> {
    let total: usize = counts.iter().map(|(_, c)| c).sum();
    if total == 0 {
        return Err(DatasetError::EmptySample);
    }
    Ok(counts
        .iter()
        .filter(|(_, c)| *c > 0)
        .map(|&(shock_type, events)| CompositionRow {
            shock_type,
            events,
            share: 100.0 * events as f64 / total as f64,
        })
        .collect())
}

/// Event counts and percentage shares by shock type.
pub fn sample_summary(rows: &[EventRow]) -> Result<Vec<CompositionRow>, DatasetError> {
    let counts: Vec<(ShockType, usize)> = ShockType::ALL
        .iter()
        .map(|t| (*t, rows.iter().filter(|r| r.shock_type == *t).count()))
        .collect();
    composition_from_counts(&counts)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Pearson correlation between two row fields over rows where both are present.
pub fn stage_correlation(rows: &[EventRow], field_shock: &str, field_statement: &str) -> Result<f64, DatasetError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in rows {
        if let (Some(x), Some(y)) = (r.value(field_shock)?, r.value(field_statement)?) {
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.len() < 3 {
        return Err(DatasetError::InsufficientData(xs.len()));
    }
    pearson(&xs, &ys).ok_or_else(|| DatasetError::ZeroVariance(format!("{field_shock} or {field_statement}")))
}

pub fn write_event_rows<W: Write>(rows: &[EventRow], writer: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        // serde only emits the header alongside the first record
        w.write_record(EVENT_COLUMNS).map_err(|e| DatasetError::Csv(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| DatasetError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| DatasetError::Csv(e.to_string()))
}

pub fn read_event_rows<R: Read>(reader: R) -> Result<Vec<EventRow>, DatasetError> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(|e| DatasetError::Csv(e.to_string()))).collect()
}

pub fn write_drops<W: Write>(drops: &[DroppedEvent], writer: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| DatasetError::Csv(e.to_string());
    w.write_record(["event_id", "reason"]).map_err(csv_err)?;
    for d in drops {
        w.write_record([d.event_id.as_str(), &d.reason.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| DatasetError::Csv(e.to_string()))
}

/// Column order of `events_dataset.csv`.
pub const EVENT_COLUMNS: [&str; 30] = [
    "event_id",
    "shock_type",
    "shock_date",
    "prev_statement_date",
    "next_statement_date",
    "shock_start",
    "shock_end",
    "statement_end",
    "shock_window_days",
    "statement_window_days",
    "d_di21_shock",
    "d_di252_shock",
    "d_di504_shock",
    "d_slope_shock",
    "d_di21_statement",
    "d_di252_statement",
    "d_di504_statement",
    "d_slope_statement",
    "d_fx_shock",
    "d_oil_shock",
    "d_vix_shock",
    "d_cds_shock",
    "d_ust_shock",
    "tone",
    "guidance_direction",
    "guidance_explicitness",
    "guidance_score",
    "uncertainty_level",
    "uncertainty_change",
    "selic_year_pre",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::{parse_iso_date, WindowKind};

    fn d(s: &str) -> NaiveDate {
        parse_iso_date(s).unwrap()
    }

    fn panel(text: &str) -> MarketPanel {
        MarketPanel::read(text.as_bytes(), "m.csv").unwrap()
    }

    fn window(a: &str, b: &str) -> Window {
        Window {
            kind: WindowKind::PreShockToShock,
            start_date: d(a),
            end_date: d(b),
            length_days: (d(b) - d(a)).num_days(),
        }
    }

    const MARKET: &str = "date,di_21d,di_252d,di_504d,fx,oil,vix,cds_5y,ust_10y\n\
        2024-01-02,11.65,13.25,10.05,5.00,80,13.2,135,3.95\n\
        2024-01-03,11.70,13.50,10.10,5.10,76,14.0,137.5,3.91\n\
        2024-01-04,11.70,13.50,,5.10,76,14.0,137.5,3.91\n";

    #[test]
    fn repricing_units() {
        let p = panel(MARKET);
        let w = window("2024-01-02", "2024-01-03");
        assert!((repricing(&p, &w, "di_252d").unwrap() - 25.0).abs() < 1e-9);
        assert!((repricing(&p, &w, "fx").unwrap() - 2.0).abs() < 1e-9);
        assert!((repricing(&p, &w, "oil").unwrap() + 5.0).abs() < 1e-9);
        assert!((repricing(&p, &w, "vix").unwrap() - 0.8).abs() < 1e-9);
        assert!((repricing(&p, &w, "cds_5y").unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(repricing(&p, &window("2024-01-03", "2024-01-04"), "di_252d").unwrap(), 0.0);
        assert_eq!(
            repricing(&p, &window("2024-01-03", "2024-01-04"), "di_504d"),
            Err(DatasetError::MissingValue {
                field: "di_504d".into(),
                date: d("2024-01-04")
            })
        );
    }

    #[test]
    fn slope_orientation() {
        assert_eq!(SlopeOrientation::LongMinusShort.slope(2.0, 5.0), 3.0);
        assert_eq!(SlopeOrientation::ShortMinusLong.slope(2.0, 5.0), -3.0);
    }

    #[test]
    fn composition_matches_published_shares() {
        let rows = composition_from_counts(&[
            (ShockType::Fiscal, 24),
            (ShockType::MonetaryPolicyCopom, 16),
            (ShockType::External, 10),
            (ShockType::Political, 9),
        ])
        .unwrap();
        let shares: Vec<f64> = rows.iter().map(|r| r.share).collect();
        for (got, want) in shares.iter().zip([40.7, 27.1, 16.9, 15.3]) {
            assert!((got - want).abs() < 0.05, "{got} vs {want}");
        }
        assert!((shares.iter().sum::<f64>() - 100.0).abs() < 0.1);

        let single = composition_from_counts(&[(ShockType::External, 3)]).unwrap();
        assert_eq!(single[0].share, 100.0);
        let even = composition_from_counts(&[(ShockType::Fiscal, 2), (ShockType::Political, 2)]).unwrap();
        assert_eq!((even[0].share, even[1].share), (50.0, 50.0));
        assert_eq!(composition_from_counts(&[]), Err(DatasetError::EmptySample));
    }

    #[test]
    fn pearson_extremes() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[3.0; 4]), None);
    }

    #[test]
    fn drop_reasons_are_machine_readable() {
        assert_eq!(DropReason::BeforeSampleStart.to_string(), "before_sample_start");
        assert_eq!(
            DropReason::MissingValue {
                field: "di_252d".into(),
                date: d("2024-01-03")
            }
            .to_string(),
            "missing_value:di_252d@2024-01-03"
        );
    }

    #[test]
    fn empty_rows_still_write_header() {
        let mut buf = Vec::new();
        write_event_rows(&[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.trim_end(), EVENT_COLUMNS.join(","));
        assert!(read_event_rows(text.as_bytes()).unwrap().is_empty());
    }
}
