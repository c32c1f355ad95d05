//! CSV panels keyed by date, the statement corpus, and the as-of lookup used
//! for survey expectations.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use crate::calendar::{parse_iso_date, TradingCalendar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("{path}:{line}: column `{column}`: {message}")]
    Parse {
        path: String,
        line: u64,
        column: String,
        message: String,
    },
    #[error("{path}:{line}: duplicate date {date}")]
    DuplicateDate {
        path: String,
        line: u64,
        date: NaiveDate,
    },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("bad statement filename `{0}` (expected YYYY-MM-DD.txt)")]
    BadFilename(String),
    #[error("statement {0} is empty")]
    EmptyDocument(String),
    #[error("duplicate statement date {0}")]
    DuplicateStatement(NaiveDate),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub const DI_21D: &str = "di_21d";
pub const DI_252D: &str = "di_252d";
pub const DI_504D: &str = "di_504d";
pub const FX: &str = "fx";
pub const OIL: &str = "oil";
pub const VIX: &str = "vix";
pub const CDS_5Y: &str = "cds_5y";
pub const UST_10Y: &str = "ust_10y";
pub const SELIC_YEAR: &str = "selic_year";

pub const MARKET_FIELDS: [&str; 8] = [DI_21D, DI_252D, DI_504D, FX, OIL, VIX, CDS_5Y, UST_10Y];
const DI_FIELDS: [&str; 3] = [DI_21D, DI_252D, DI_504D];

/// Date-keyed table of optional numeric cells. Column order follows the file.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    columns: Vec<String>,
    dates: Vec<NaiveDate>,
    rows: Vec<Vec<Option<f64>>>,
}

impl SeriesTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            dates: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; the date must exceed every date already present.
    pub fn push_row(&mut self, date: NaiveDate, values: Vec<Option<f64>>) -> Result<(), String> {
        if values.len() != self.columns.len() {
            return Err(format!("expected {} values, got {}", self.columns.len(), values.len()));
        }
        if let Some(last) = self.dates.last() {
            if *last >= date {
                return Err(format!("date {date} does not follow {last}"));
            }
        }
        self.dates.push(date);
        self.rows.push(values);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
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

    pub fn column_index(&self, field: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == field)
    }

    pub fn has_field(&self, field: &str) -> bool {
        self.column_index(field).is_some()
    }

    /// Cell value; `None` when the date is absent, the field unknown, or the cell empty.
    pub fn get(&self, date: NaiveDate, field: &str) -> Option<f64> {
        let col = self.column_index(field)?;
        let row = self.dates.binary_search(&date).ok()?;
        self.rows[row][col]
    }

    pub fn row(&self, i: usize) -> (NaiveDate, &[Option<f64>]) {
        (self.dates[i], &self.rows[i])
    }

    /// Rows dated strictly before `cutoff`, all columns preserved.
    pub fn truncated_before(&self, cutoff: NaiveDate) -> Self {
        let n = self.dates.partition_point(|d| *d < cutoff);
        Self {
            columns: self.columns.clone(),
            dates: self.dates[..n].to_vec(),
            rows: self.rows[..n].to_vec(),
        }
    }

    pub fn read<R: Read>(reader: R, source: &str) -> Result<Self, IngestError> {
        Self::read_checked(reader, source, |_, _| Ok(()))
    }

    /// Like [`SeriesTable::read`], with `check(column, value)` applied to every present cell.
    pub fn read_checked<R: Read>(
        reader: R,
        source: &str,
        check: impl Fn(&str, f64) -> Result<(), String>,
    ) -> Result<Self, IngestError> {
        let parse_err = |line: u64, column: &str, message: String| IngestError::Parse {
            path: source.to_string(),
            line,
            column: column.to_string(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| parse_err(1, "", e.to_string()))?
            .clone();
        if header.get(0) != Some("date") {
            return Err(parse_err(1, "date", "first column must be `date`".into()));
        }
        let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        for (i, c) in columns.iter().enumerate() {
            if c.is_empty() || columns[..i].contains(c) {
                return Err(parse_err(1, c, "empty or repeated column name".into()));
            }
        }

        let mut by_date: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                parse_err(line, "", e.to_string())
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let date = parse_iso_date(rec.get(0).unwrap_or("")).map_err(|m| parse_err(line, "date", m))?;
            let mut values = Vec::with_capacity(columns.len());
            for (j, col) in columns.iter().enumerate() {
                let cell = rec.get(j + 1).unwrap_or("");
                if cell.is_empty() {
                    values.push(None);
                    continue;
                }
                let v: f64 = cell
                    .parse()
                    .map_err(|_| parse_err(line, col, format!("not a number: `{cell}`")))?;
                if !v.is_finite() {
                    return Err(parse_err(line, col, format!("non-finite value `{cell}`")));
                }
                check(col, v).map_err(|m| parse_err(line, col, m))?;
                values.push(Some(v));
            }
            if by_date.contains_key(&date) {
                return Err(IngestError::DuplicateDate {
                    path: source.to_string(),
                    line,
                    date,
                });
            }
            by_date.insert(date, values);
        }

        let mut table = SeriesTable::new(columns);
        for (date, values) in by_date {
            table.dates.push(date);
            table.rows.push(values);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        Self::read(file, &path.display().to_string())
    }

    /// Writes the table back as CSV. Values use the shortest representation that
    /// parses back to the same `f64`.
    pub fn write<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (date, row) in self.dates.iter().zip(&self.rows) {
            let mut rec = vec![date.format("%Y-%m-%d").to_string()];
            rec.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Daily market series keyed by trading date.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPanel(SeriesTable);

impl MarketPanel {
    pub fn read<R: Read>(reader: R, source: &str) -> Result<Self, IngestError> {
        SeriesTable::read_checked(reader, source, |col, v| {
            if DI_FIELDS.contains(&col) && v <= 0.0 {
                Err(format!("rate must be positive, got {v}"))
            } else {
                Ok(())
            }
        })
        .map(Self)
    }

    pub fn table(&self) -> &SeriesTable {
        &self.0
    }

    pub fn get(&self, date: NaiveDate, field: &str) -> Option<f64> {
        self.0.get(date, field)
    }

    pub fn has_field(&self, field: &str) -> bool {
        self.0.has_field(field)
    }

    /// Trading calendar implied by the panel's dates.
    pub fn calendar(&self) -> Result<TradingCalendar, crate::calendar::CalendarError> {
        TradingCalendar::new(self.0.dates.clone())
    }
}

pub fn load_market(path: &Path) -> Result<MarketPanel, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    MarketPanel::read(file, &path.display().to_string())
}

/// Survey expectations keyed by publication date.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationsPanel(SeriesTable);

impl ExpectationsPanel {
    pub fn from_table(table: SeriesTable) -> Self {
        Self(table)
    }

    pub fn read<R: Read>(reader: R, source: &str) -> Result<Self, IngestError> {
        SeriesTable::read(reader, source).map(Self)
    }

    pub fn table(&self) -> &SeriesTable {
        &self.0
    }

    /// Drops every publication dated on or after `cutoff`.
    pub fn truncated_before(&self, cutoff: NaiveDate) -> Self {
        Self(self.0.truncated_before(cutoff))
    }
}

pub fn load_expectations(path: &Path) -> Result<ExpectationsPanel, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    ExpectationsPanel::read(file, &path.display().to_string())
}

/// Latest available value of `field` published strictly before `cutoff`.
///
/// Publications with an empty cell for `field` are skipped, so the result is
/// the last observation that actually existed before the cutoff.
pub fn asof_merge(exp: &ExpectationsPanel, cutoff: NaiveDate, field: &str) -> Result<Option<f64>, IngestError> {
    let table = &exp.0;
    let col = table
        .column_index(field)
        .ok_or_else(|| IngestError::UnknownField(field.to_string()))?;
    let end = table.dates.partition_point(|d| *d < cutoff);
    Ok(table.rows[..end].iter().rev().find_map(|row| row[col]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementDoc {
    pub statement_date: NaiveDate,
    pub text: String,
}

fn statement_date_from_name(name: &str) -> Option<NaiveDate> {
    let stem = name.strip_suffix(".txt")?;
    if stem.len() != 10 {
        return None;
    }
    NaiveDate::parse_from_str(stem, "%Y-%m-%d").ok()
}

/// Loads every `YYYY-MM-DD.txt` file in `dir`, sorted by date.
pub fn load_statements(dir: &Path) -> Result<Vec<StatementDoc>, IngestError> {
    let entries = std::fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        if entry.file_type().map_err(|e| io_err(&entry.path(), e))?.is_file() {
            paths.push(entry.path());
        }
    }
    paths.sort();

    let mut docs = Vec::with_capacity(paths.len());
    for path in paths {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let date = statement_date_from_name(&name).ok_or_else(|| IngestError::BadFilename(name.clone()))?;
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        if text.trim().is_empty() {
            return Err(IngestError::EmptyDocument(name));
        }
        docs.push(StatementDoc {
            statement_date: date,
            text,
        });
    }
    docs.sort_by_key(|d| d.statement_date);
    if let Some(pair) = docs.windows(2).find(|p| p[0].statement_date == p[1].statement_date) {
        return Err(IngestError::DuplicateStatement(pair[0].statement_date));
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> NaiveDate {
        parse_iso_date(s).unwrap()
    }

    const HEADER: &str = "date,di_21d,di_252d,di_504d,fx,oil,vix,cds_5y,ust_10y\n";

    #[test]
    fn loads_three_rows_and_extra_columns() {
        let text = "date,di_21d,di_252d,di_504d,fx,oil,vix,cds_5y,ust_10y,ibov\n\
                    2024-01-02,11.65,10.20,10.05,4.85,75.1,13.2,135,3.95,132000\n\
                    2024-01-03,11.66,10.25,10.10,4.90,74.0,14.0,137,3.91,131000\n\
                    2024-01-04,11.64,10.30,,4.88,73.2,13.8,136,3.99,\n";
        let p = MarketPanel::read(text.as_bytes(), "m.csv").unwrap();
        assert_eq!(p.table().len(), 3);
        assert_eq!(p.get(d("2024-01-03"), DI_252D), Some(10.25));
        assert_eq!(p.get(d("2024-01-04"), DI_504D), None);
        assert_eq!(p.get(d("2024-01-02"), "ibov"), Some(132000.0));
        assert_eq!(p.get(d("2024-01-05"), DI_252D), None);
    }

    #[test]
    fn duplicate_date_rejected() {
        let text = format!("{HEADER}2024-01-02,11,10,10,5,70,13,130,4\n2024-01-02,11,10,10,5,70,13,130,4\n");
        match MarketPanel::read(text.as_bytes(), "m.csv") {
            Err(IngestError::DuplicateDate { line, date, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(date, d("2024-01-02"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let text = format!("{HEADER}2024-01-02,11,10,10,5,70,13,130,4\n2024-01-03,11,abc,10,5,70,13,130,4\n");
        match MarketPanel::read(text.as_bytes(), "m.csv") {
            Err(IngestError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, DI_252D);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_rate_rejected() {
        let text = format!("{HEADER}2024-01-02,11,0,10,5,70,13,130,4\n");
        assert!(matches!(
            MarketPanel::read(text.as_bytes(), "m.csv"),
            Err(IngestError::Parse { .. })
        ));
    }

    #[test]
    fn unsorted_rows_are_ordered() {
        let text = format!("{HEADER}2024-01-03,11,10,10,5,70,13,130,4\n2024-01-02,12,10,10,5,70,13,130,4\n");
        let p = MarketPanel::read(text.as_bytes(), "m.csv").unwrap();
        assert_eq!(p.table().dates(), &[d("2024-01-02"), d("2024-01-03")]);
        assert_eq!(p.get(d("2024-01-02"), DI_21D), Some(12.0));
    }

    fn focus() -> ExpectationsPanel {
        ExpectationsPanel::read("date,selic_year\n2024-01-05,13.0\n2024-01-12,13.5\n".as_bytes(), "f.csv").unwrap()
    }

    #[test]
    fn asof_is_strictly_before() {
        let f = focus();
        assert_eq!(asof_merge(&f, d("2024-01-12"), SELIC_YEAR), Ok(Some(13.0)));
        assert_eq!(asof_merge(&f, d("2024-01-01"), SELIC_YEAR), Ok(None));
        assert_eq!(asof_merge(&f, d("2024-01-20"), SELIC_YEAR), Ok(Some(13.5)));
        assert_eq!(
            asof_merge(&f, d("2024-01-20"), "ipca"),
            Err(IngestError::UnknownField("ipca".into()))
        );
    }

    #[test]
    fn asof_skips_missing_cells() {
        let f = ExpectationsPanel::read(
            "date,selic_year,ipca\n2024-01-05,13.0,4.0\n2024-01-12,,4.1\n".as_bytes(),
            "f.csv",
        )
        .unwrap();
        assert_eq!(asof_merge(&f, d("2024-01-20"), SELIC_YEAR), Ok(Some(13.0)));
        assert_eq!(asof_merge(&f, d("2024-01-20"), "ipca"), Ok(Some(4.1)));
    }

    #[test]
    fn statements_dir() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("2024-03-20.txt"), "Second. Text.").unwrap();
        std::fs::write(dir.path().join("2024-01-31.txt"), "First text.").unwrap();
        let docs = load_statements(dir.path()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].statement_date, d("2024-01-31"));

        std::fs::write(dir.path().join("copom.txt"), "x").unwrap();
        assert_eq!(load_statements(dir.path()), Err(IngestError::BadFilename("copom.txt".into())));
        std::fs::remove_file(dir.path().join("copom.txt")).unwrap();

        std::fs::write(dir.path().join("2024-05-08.txt"), "").unwrap();
        assert_eq!(
            load_statements(dir.path()),
            Err(IngestError::EmptyDocument("2024-05-08.txt".into()))
        );
    }

    fn arb_table() -> impl Strategy<Value = SeriesTable> {
        let row = proptest::collection::vec(
            proptest::option::weighted(0.85, (-1e6f64..1e6).prop_filter("finite", |v| v.is_finite())),
            3,
        );
        proptest::collection::btree_map(0u32..5000, row, 0..40).prop_map(|rows| {
            let base = d("2010-01-01");
            let mut t = SeriesTable::new(vec!["a".into(), "b".into(), "c".into()]);
            for (off, vals) in rows {
                t.push_row(base + chrono::Days::new(off as u64), vals).unwrap();
            }
            t
        })
    }

    proptest! {
        #[test]
        fn table_roundtrips_exactly(t in arb_table()) {
            let mut first = Vec::new();
            t.write(&mut first).unwrap();
            let back = SeriesTable::read(first.as_slice(), "rt.csv").unwrap();
            prop_assert_eq!(&back, &t);
            let mut second = Vec::new();
            back.write(&mut second).unwrap();
            prop_assert_eq!(first, second);
        }

        #[test]
        fn asof_never_looks_ahead(t in arb_table(), cut in 0u32..5200) {
            let cutoff = d("2010-01-01") + chrono::Days::new(cut as u64);
            let exp = ExpectationsPanel::from_table(t.clone());
            let got = asof_merge(&exp, cutoff, "b").unwrap();
            // brute force: scan all rows, keep last present value dated before the cutoff
            let mut expected = None;
            for i in 0..t.len() {
                let (date, row) = t.row(i);
                if date < cutoff && row[1].is_some() {
                    expected = row[1];
                }
            }
            prop_assert_eq!(got, expected);
            let truncated = exp.truncated_before(cutoff);
            prop_assert_eq!(asof_merge(&truncated, cutoff, "b").unwrap(), got);
        }
    }
}
