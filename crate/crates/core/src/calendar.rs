//! Trading-day calendar and the two analytical windows built around each event.
//!
//! The calendar is inferred from the dates present in the market panel: a
//! "trading day" is simply a day with data. Every event produces a
//! `PreShockToShock` window (last trading day strictly before the shock to the
//! first trading day on or after it) and a `ShockToStatement` window (from that
//! effective shock date to the first trading day strictly after the next
//! statement). The strict-after rule means a statement released on the shock
//! date itself is measured on the following session.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default first admissible shock date.
pub const DEFAULT_SAMPLE_START: &str = "2016-08-31";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalendarError {
    #[error("trading calendar is empty")]
    EmptyCalendar,
    #[error("trading dates must be strictly increasing ({prev} then {next})")]
    NotIncreasing { prev: NaiveDate, next: NaiveDate },
    #[error("no trading date {relation} {date}")]
    NoTradingDate { relation: &'static str, date: NaiveDate },
    #[error("{kind} window unavailable for event {event_id}: {detail}")]
    WindowUnavailable {
        event_id: String,
        kind: WindowKind,
        detail: String,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("event {event_id}: shock date {shock} is after next statement {statement}")]
    StatementBeforeShock {
        event_id: String,
        shock: NaiveDate,
        statement: NaiveDate,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Ordered set of dates on which market data exist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
}

impl TradingCalendar {
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self, CalendarError> {
        if dates.is_empty() {
            return Err(CalendarError::EmptyCalendar);
        }
        for pair in dates.windows(2) {
            if pair[0] >= pair[1] {
                return Err(CalendarError::NotIncreasing {
                    prev: pair[0],
                    next: pair[1],
                });
            }
        }
        Ok(Self { dates })
    }

    /// Builds a calendar from arbitrary dates, sorting and deduplicating.
    pub fn from_unsorted<I: IntoIterator<Item = NaiveDate>>(dates: I) -> Result<Self, CalendarError> {
        let mut dates: Vec<NaiveDate> = dates.into_iter().collect();
        dates.sort_unstable();
        dates.dedup();
        Self::new(dates)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.dates.binary_search(&d).is_ok()
    }

    pub fn first(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    /// Greatest trading date `<= d`.
    pub fn last_trading_on_or_before(&self, d: NaiveDate) -> Result<NaiveDate, CalendarError> {
        let idx = self.dates.partition_point(|x| *x <= d);
        idx.checked_sub(1)
            .map(|i| self.dates[i])
            .ok_or(CalendarError::NoTradingDate {
                relation: "on or before",
                date: d,
            })
    }

    /// Greatest trading date `< d`.
    pub fn last_trading_strictly_before(&self, d: NaiveDate) -> Result<NaiveDate, CalendarError> {
        let idx = self.dates.partition_point(|x| *x < d);
        idx.checked_sub(1)
            .map(|i| self.dates[i])
            .ok_or(CalendarError::NoTradingDate {
                relation: "strictly before",
                date: d,
            })
    }

    /// Smallest trading date `>= d`.
    pub fn first_trading_on_or_after(&self, d: NaiveDate) -> Result<NaiveDate, CalendarError> {
        let idx = self.dates.partition_point(|x| *x < d);
        self.dates
            .get(idx)
            .copied()
            .ok_or(CalendarError::NoTradingDate {
                relation: "on or after",
                date: d,
            })
    }

    /// Smallest trading date `> d`.
    pub fn first_trading_strictly_after(&self, d: NaiveDate) -> Result<NaiveDate, CalendarError> {
        let idx = self.dates.partition_point(|x| *x <= d);
        self.dates
            .get(idx)
            .copied()
            .ok_or(CalendarError::NoTradingDate {
                relation: "strictly after",
                date: d,
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShockType {
    #[serde(rename = "fiscal")]
    Fiscal,
    #[serde(rename = "monetary_policy")]
    MonetaryPolicyCopom,
    #[serde(rename = "external")]
    External,
    #[serde(rename = "political")]
    Political,
}

impl ShockType {
    pub const ALL: [ShockType; 4] = [
        ShockType::Fiscal,
        ShockType::MonetaryPolicyCopom,
        ShockType::External,
        ShockType::Political,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ShockType::Fiscal => "fiscal",
            ShockType::MonetaryPolicyCopom => "monetary_policy",
            ShockType::External => "external",
            ShockType::Political => "political",
        }
    }

    /// Human-readable label used in summary tables.
    pub fn label(self) -> &'static str {
        match self {
            ShockType::Fiscal => "Fiscal",
            ShockType::MonetaryPolicyCopom => "Monetary Policy/Copom",
            ShockType::External => "External",
            ShockType::Political => "Political",
        }
    }
}

impl fmt::Display for ShockType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShockType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "fiscal" => Ok(ShockType::Fiscal),
            "monetary_policy" => Ok(ShockType::MonetaryPolicyCopom),
            "external" => Ok(ShockType::External),
            "political" => Ok(ShockType::Political),
            other => Err(format!(
                "unknown shock_type `{other}` (expected fiscal|monetary_policy|external|political)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub id: String,
    pub shock_date: NaiveDate,
    pub shock_type: ShockType,
    pub prev_statement_date: Option<NaiveDate>,
    pub next_statement_date: NaiveDate,
}

impl Event {
    pub fn new(
        id: impl Into<String>,
        shock_date: NaiveDate,
        shock_type: ShockType,
        prev_statement_date: Option<NaiveDate>,
        next_statement_date: NaiveDate,
    ) -> Result<Self, CalendarError> {
        let id = id.into();
        if shock_date > next_statement_date {
            return Err(CalendarError::StatementBeforeShock {
                event_id: id,
                shock: shock_date,
                statement: next_statement_date,
            });
        }
        Ok(Self {
            id,
            shock_date,
            shock_type,
            prev_statement_date,
            next_statement_date,
        })
    }

    pub fn is_same_day_statement(&self) -> bool {
        self.shock_date == self.next_statement_date
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WindowKind {
    #[serde(rename = "pre_shock_to_shock")]
    PreShockToShock,
    #[serde(rename = "shock_to_statement")]
    ShockToStatement,
}

impl WindowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WindowKind::PreShockToShock => "pre_shock_to_shock",
            WindowKind::ShockToStatement => "shock_to_statement",
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub kind: WindowKind,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Calendar days between start and end.
    pub length_days: i64,
}

impl Window {
    fn new(kind: WindowKind, start_date: NaiveDate, end_date: NaiveDate) -> Self {
        Self {
            kind,
            start_date,
            end_date,
            length_days: (end_date - start_date).num_days(),
        }
    }
}

fn unavailable(ev: &Event, kind: WindowKind, detail: impl Into<String>) -> CalendarError {
    CalendarError::WindowUnavailable {
        event_id: ev.id.clone(),
        kind,
        detail: detail.into(),
    }
}

pub fn build_shock_window(cal: &TradingCalendar, ev: &Event) -> Result<Window, CalendarError> {
    let kind = WindowKind::PreShockToShock;
    let start = cal
        .last_trading_strictly_before(ev.shock_date)
        .map_err(|e| unavailable(ev, kind, e.to_string()))?;
    let end = cal
        .first_trading_on_or_after(ev.shock_date)
        .map_err(|e| unavailable(ev, kind, e.to_string()))?;
    Ok(Window::new(kind, start, end))
}

/// `effective_shock` is the end of the event's shock window.
pub fn build_statement_window(
    cal: &TradingCalendar,
    ev: &Event,
    effective_shock: NaiveDate,
) -> Result<Window, CalendarError> {
    let kind = WindowKind::ShockToStatement;
    if !cal.contains(effective_shock) {
        return Err(unavailable(
            ev,
            kind,
            format!("effective shock date {effective_shock} is not a trading date"),
        ));
    }
    let end = cal
        .first_trading_strictly_after(ev.next_statement_date)
        .map_err(|e| unavailable(ev, kind, e.to_string()))?;
    if end <= effective_shock {
        // statement dated inside the non-trading gap that precedes the effective shock date
        return Err(unavailable(
            ev,
            kind,
            format!("statement response {end} does not follow effective shock {effective_shock}"),
        ));
    }
    Ok(Window::new(kind, effective_shock, end))
}

/// Both windows of an event, shock window first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventWindows {
    pub shock: Window,
    pub statement: Window,
}

pub fn build_windows(cal: &TradingCalendar, ev: &Event) -> Result<EventWindows, CalendarError> {
    let shock = build_shock_window(cal, ev)?;
    let statement = build_statement_window(cal, ev, shock.end_date)?;
    Ok(EventWindows { shock, statement })
}

/// Splits events into those on/after `start` and those before it (in input order).
pub fn partition_by_sample_start(events: Vec<Event>, start: NaiveDate) -> (Vec<Event>, Vec<Event>) {
    events.into_iter().partition(|e| e.shock_date >= start)
}

pub fn parse_iso_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date `{s}`: {e}"))
}

const EVENTS_HEADER: [&str; 5] = [
    "id",
    "shock_date",
    "shock_type",
    "prev_statement_date",
    "next_statement_date",
];

/// Reads the events CSV (`id,shock_date,shock_type,prev_statement_date,next_statement_date`).
pub fn load_events(path: &Path) -> Result<Vec<Event>, CalendarError> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| CalendarError::Io {
        path: display.clone(),
        message: e.to_string(),
    })?;
    read_events(file, &display)
}

pub fn read_events<R: std::io::Read>(reader: R, source: &str) -> Result<Vec<Event>, CalendarError> {
    let parse_err = |line: u64, message: String| CalendarError::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found.is_empty() {
        // a zero-byte file is an empty event list
        return Ok(Vec::new());
    }
    if found != EVENTS_HEADER {
        return Err(parse_err(
            1,
            format!("expected header `{}`, found `{}`", EVENTS_HEADER.join(","), found.join(",")),
        ));
    }
    let mut events = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| rec.get(i).unwrap_or("");
        let date = |i: usize| parse_iso_date(field(i)).map_err(|m| parse_err(line, format!("{}: {m}", EVENTS_HEADER[i])));
        let id = field(0);
        if id.is_empty() {
            return Err(parse_err(line, "empty event id".into()));
        }
        let shock_date = date(1)?;
        let shock_type = ShockType::from_str(field(2)).map_err(|m| parse_err(line, m))?;
        let prev = if field(3).is_empty() { None } else { Some(date(3)?) };
        let next = date(4)?;
        let ev = Event::new(id, shock_date, shock_type, prev, next).map_err(|e| parse_err(line, e.to_string()))?;
        events.push(ev);
    }
    Ok(events)
}
