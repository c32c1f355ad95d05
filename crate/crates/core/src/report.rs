//! The three pipeline stages behind the command line: build the event
//! dataset, fit the specifications, and write figure data.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::{load_events, CalendarError, ShockType};
use crate::config::{ConfigError, RunConfig};
use crate::dataset::{
    build_event_rows, read_event_rows, sample_summary, stage_correlation, write_drops, write_event_rows,
    BuildOptions, CompositionRow, DatasetError, EventRow, EventTable,
};
use crate::dist::student_t_quantile;
use crate::estimators::{
    run_spec, subgroup_fits, EstimatorTag, FitResult, SpecDefinition, SpecFits, SubgroupStatus, TEXT_TERMS,
};
use crate::ingest::{load_expectations, load_market, load_statements, IngestError};
use crate::textfeat::{score_corpus, Lexicon, LexiconError, StatementFeatures};

pub const DATASET_FILE: &str = "events_dataset.csv";
pub const DROPS_FILE: &str = "drops.csv";
pub const FITS_FILE: &str = "fits.json";
pub const TABLE2_FILE: &str = "table2.csv";
pub const FIGURE_FILES: [&str; 7] = [
    "fig2_tone_series.csv",
    "fig3_distributions.csv",
    "fig4_scatter.csv",
    "fig5_by_type.csv",
    "figA1_rmse.csv",
    "figA2_text_coefs.csv",
    "figA3_forest.csv",
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("input not found: {0}")]
    MissingInput(PathBuf),
    #[error("{0} not found; run the earlier stage first")]
    MissingPrerequisite(PathBuf),
    #[error(transparent)]
    Calendar(#[from] CalendarError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl PipelineError {
    /// Process exit status: 2 for bad input, 3 for a missing earlier stage,
    /// 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::MissingInput(_)
            | PipelineError::Calendar(_)
            | PipelineError::Ingest(_)
            | PipelineError::Lexicon(_) => 2,
            PipelineError::MissingPrerequisite(_) => 3,
            PipelineError::Dataset(_) | PipelineError::Output { .. } => 1,
        }
    }
}

fn output_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn require_input(path: &Path) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingInput(path.to_path_buf()))
    }
}

fn create(cfg: &RunConfig, file: &str) -> Result<(PathBuf, BufWriter<File>), PipelineError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| output_err(&cfg.output_dir, e))?;
    let path = cfg.output_path(file);
    let f = File::create(&path).map_err(|e| output_err(&path, e))?;
    Ok((path, BufWriter::new(f)))
}

fn load_lexicon(cfg: &RunConfig) -> Result<Lexicon, PipelineError> {
    match &cfg.lexicon {
        Some(path) => {
            require_input(path)?;
            Ok(Lexicon::load(path)?)
        }
        None => Ok(Lexicon::builtin()),
    }
}

/// Statement features keyed by statement date, in date order.
pub fn statement_features(cfg: &RunConfig) -> Result<Vec<(chrono::NaiveDate, StatementFeatures)>, PipelineError> {
    require_input(&cfg.statements)?;
    let lex = load_lexicon(cfg)?;
    let docs = load_statements(&cfg.statements)?;
    Ok(score_corpus(&docs, &lex, cfg.tone_denominator))
}

/// Loads every input and assembles the event table in memory.
pub fn build_dataset(cfg: &RunConfig) -> Result<EventTable, PipelineError> {
    for p in [&cfg.events, &cfg.market, &cfg.focus, &cfg.statements] {
        require_input(p)?;
    }
    let events = load_events(&cfg.events)?;
    let market = load_market(&cfg.market)?;
    let calendar = market.calendar()?;
    let expectations = load_expectations(&cfg.focus)?;
    let features: BTreeMap<_, _> = statement_features(cfg)?.into_iter().collect();
    let opts = BuildOptions {
        sample_start: cfg.sample_start,
        slope: cfg.slope,
    };
    Ok(build_event_rows(&events, &calendar, &market, &expectations, &features, &opts)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildSummary {
    pub rows: usize,
    pub drops: usize,
    pub dataset: PathBuf,
}

pub fn cmd_build(cfg: &RunConfig) -> Result<BuildSummary, PipelineError> {
    let table = build_dataset(cfg)?;
    let (dataset, mut w) = create(cfg, DATASET_FILE)?;
    write_event_rows(&table.rows, &mut w)?;
    w.flush().map_err(|e| output_err(&dataset, e))?;
    let (drops_path, mut w) = create(cfg, DROPS_FILE)?;
    write_drops(&table.drops, &mut w)?;
    w.flush().map_err(|e| output_err(&drops_path, e))?;
    log::info!("{} rows, {} dropped -> {}", table.rows.len(), table.drops.len(), dataset.display());
    Ok(BuildSummary {
        rows: table.rows.len(),
        drops: table.drops.len(),
        dataset,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub term: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub t: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRecord {
    pub estimator: EstimatorTag,
    pub n: usize,
    pub k: usize,
    pub lambda: Option<f64>,
    pub r2: f64,
    pub rmse: f64,
    pub sign_accuracy: f64,
    pub sweeps: Option<usize>,
    pub coefficients: Vec<CoefficientRecord>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&FitResult> for EstimatorRecord {
    fn from(f: &FitResult) -> Self {
        let pick = |v: &Option<Vec<f64>>, i: usize| v.as_ref().and_then(|v| finite(v[i]));
        let coefficients = f
            .column_names
            .iter()
            .enumerate()
            .map(|(i, term)| CoefficientRecord {
                term: term.clone(),
                estimate: f.coefficients[i],
                se: pick(&f.hc3_se, i),
                t: pick(&f.t_stats, i),
                p: pick(&f.p_values, i),
            })
            .collect();
        EstimatorRecord {
            estimator: f.estimator,
            n: f.n,
            k: f.k,
            lambda: f.lambda,
            r2: f.r2,
            rmse: f.rmse,
            sign_accuracy: f.sign_accuracy,
            sweeps: f.sweeps,
            coefficients,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub estimator: EstimatorTag,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SpecStatus {
    Fitted {
        n: usize,
        incomplete_rows: usize,
        ridge_lambda: f64,
        estimators: Vec<EstimatorRecord>,
        failures: Vec<FailureRecord>,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecRecord {
    pub spec: String,
    pub label: String,
    pub target: String,
    #[serde(flatten)]
    pub status: SpecStatus,
}

impl SpecRecord {
    fn fitted(f: &SpecFits) -> Self {
        SpecRecord {
            spec: f.spec.clone(),
            label: f.label.clone(),
            target: f.target.clone(),
            status: SpecStatus::Fitted {
                n: f.n,
                incomplete_rows: f.incomplete_rows,
                ridge_lambda: f.ridge_lambda,
                estimators: f.fits.iter().map(EstimatorRecord::from).collect(),
                failures: f
                    .failures
                    .iter()
                    .map(|(estimator, reason)| FailureRecord {
                        estimator: *estimator,
                        reason: reason.clone(),
                    })
                    .collect(),
            },
        }
    }

    fn skipped(spec: &SpecDefinition, reason: String) -> Self {
        SpecRecord {
            spec: spec.name.clone(),
            label: spec.label.clone(),
            target: spec.target.clone(),
            status: SpecStatus::Skipped { reason },
        }
    }

    pub fn estimator(&self, tag: EstimatorTag) -> Option<&EstimatorRecord> {
        match &self.status {
            SpecStatus::Fitted { estimators, .. } => estimators.iter().find(|e| e.estimator == tag),
            SpecStatus::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubgroupRecordStatus {
    Fitted { specifications: Vec<SpecRecord> },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupRecord {
    pub shock_type: ShockType,
    pub n: usize,
    #[serde(flatten)]
    pub status: SubgroupRecordStatus,
}

/// Everything `fits.json` holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n_events: usize,
    pub composition: Vec<CompositionRow>,
    /// Correlation between shock-window and statement-window DI 252d repricing.
    pub stage_correlation_di252: Option<f64>,
    pub ridge_lambda: f64,
    pub lasso_lambda: f64,
    pub min_n: usize,
    pub specifications: Vec<SpecRecord>,
    pub subgroups: Vec<SubgroupRecord>,
}

impl FitReport {
    /// The specification figures are drawn from: `di252_baseline` if fitted,
    /// otherwise the first fitted one.
    pub fn headline(&self) -> Option<&SpecRecord> {
        headline(&self.specifications)
    }
}

fn headline(specs: &[SpecRecord]) -> Option<&SpecRecord> {
    let fitted = |s: &&SpecRecord| matches!(s.status, SpecStatus::Fitted { .. });
    specs
        .iter()
        .filter(fitted)
        .find(|s| s.spec == "di252_baseline")
        .or_else(|| specs.iter().find(fitted))
}

pub fn fit_report(rows: &[EventRow], cfg: &RunConfig) -> FitReport {
    let specifications = cfg
        .specs
        .iter()
        .map(|spec| match run_spec(rows, spec, &cfg.fit) {
            Ok(f) => SpecRecord::fitted(&f),
            Err(e) => {
                log::warn!("{}: {e}", spec.name);
                SpecRecord::skipped(spec, e.to_string())
            }
        })
        .collect();
    let subgroups = subgroup_fits(rows, &cfg.specs, &cfg.fit)
        .into_iter()
        .map(|g| SubgroupRecord {
            shock_type: g.shock_type,
            n: g.n,
            status: match g.status {
                SubgroupStatus::Fitted { specs } => SubgroupRecordStatus::Fitted {
                    specifications: specs.iter().map(SpecRecord::fitted).collect(),
                },
                SubgroupStatus::Skipped { reason } => SubgroupRecordStatus::Skipped { reason },
            },
        })
        .collect();
    FitReport {
        n_events: rows.len(),
        composition: sample_summary(rows).unwrap_or_default(),
        stage_correlation_di252: stage_correlation(rows, "d_di252_shock", "d_di252_statement").ok(),
        ridge_lambda: cfg.fit.ridge_lambda,
        lasso_lambda: cfg.fit.lasso_lambda,
        min_n: cfg.fit.min_n,
        specifications,
        subgroups,
    }
}

fn read_dataset(cfg: &RunConfig) -> Result<Vec<EventRow>, PipelineError> {
    let path = cfg.output_path(DATASET_FILE);
    let file = File::open(&path).map_err(|_| PipelineError::MissingPrerequisite(path.clone()))?;
    Ok(read_event_rows(file)?)
}

fn read_fits(cfg: &RunConfig) -> Result<FitReport, PipelineError> {
    let path = cfg.output_path(FITS_FILE);
    let text = std::fs::read_to_string(&path).map_err(|_| PipelineError::MissingPrerequisite(path.clone()))?;
    serde_json::from_str(&text).map_err(|e| output_err(&path, e))
}

/// Writes the estimator comparison table, one row per specification and estimator.
pub fn write_table2<W: Write>(report: &FitReport, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["Specification", "Estimator", "N", "R2", "RMSE", "Sign accuracy (%)", "Note"])?;
    for spec in &report.specifications {
        match &spec.status {
            SpecStatus::Skipped { reason } => {
                w.write_record([spec.label.as_str(), "", "", "", "", "", &format!("skipped: {reason}")])?;
            }
            SpecStatus::Fitted {
                n,
                estimators,
                failures,
                ..
            } => {
                for tag in EstimatorTag::ALL {
                    if let Some(e) = estimators.iter().find(|e| e.estimator == tag) {
                        w.write_record([
                            spec.label.clone(),
                            tag.to_string(),
                            e.n.to_string(),
                            format!("{:.3}", e.r2),
                            format!("{:.1}", e.rmse),
                            format!("{:.1}", e.sign_accuracy),
                            String::new(),
                        ])?;
                    } else if let Some(f) = failures.iter().find(|f| f.estimator == tag) {
                        w.write_record([
                            spec.label.clone(),
                            tag.to_string(),
                            n.to_string(),
                            String::new(),
                            String::new(),
                            String::new(),
                            format!("failed: {}", f.reason),
                        ])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    pub fitted: usize,
    pub skipped: usize,
    pub fits: PathBuf,
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<FitSummary, PipelineError> {
    let rows = read_dataset(cfg)?;
    let report = fit_report(&rows, cfg);

    let (fits, mut w) = create(cfg, FITS_FILE)?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(|e| output_err(&fits, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| output_err(&fits, e))?;

    let (table, mut w) = create(cfg, TABLE2_FILE)?;
    write_table2(&report, &mut w).map_err(|e| output_err(&table, e))?;

    let fitted = report
        .specifications
        .iter()
        .filter(|s| matches!(s.status, SpecStatus::Fitted { .. }))
        .count();
    let skipped = report.specifications.len() - fitted;
    log::info!("{fitted} specifications fitted, {skipped} skipped -> {}", fits.display());
    Ok(FitSummary { fitted, skipped, fits })
}

fn write_csv<I, R>(cfg: &RunConfig, file: &str, header: &[&str], records: I) -> Result<PathBuf, PipelineError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let (path, w) = create(cfg, file)?;
    let mut w = csv::Writer::from_writer(w);
    let err = |e: csv::Error| output_err(&path, e);
    w.write_record(header).map_err(err)?;
    for r in records {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| output_err(&path, e))?;
    Ok(path)
}

/// Forest-plot rows for the slopes of one OLS fit: estimate and the
/// two-sided 95% interval `b ± t(0.975, n − k) · se`.
pub fn forest_rows(fit: &EstimatorRecord) -> Vec<(String, f64, Option<(f64, f64)>)> {
    let q = student_t_quantile(0.975, (fit.n - fit.k) as f64);
    fit.coefficients
        .iter()
        .filter(|c| c.term != "intercept")
        .map(|c| (c.term.clone(), c.estimate, c.se.map(|s| (c.estimate - q * s, c.estimate + q * s))))
        .collect()
}

pub fn cmd_figures(cfg: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let rows = read_dataset(cfg)?;
    let report = read_fits(cfg)?;
    let tone = statement_features(cfg)?;
    let mut written = Vec::new();

    written.push(write_csv(
        cfg,
        FIGURE_FILES[0],
        &["date", "tone"],
        tone.iter().map(|(d, f)| [d.to_string(), f.tone.to_string()]),
    )?);

    let mut dist = Vec::new();
    for (kind, fields) in [
        ("pre_shock_to_shock", [("di_252d", "d_di252_shock"), ("di_504d", "d_di504_shock")]),
        ("shock_to_statement", [("di_252d", "d_di252_statement"), ("di_504d", "d_di504_statement")]),
    ] {
        for (maturity, field) in fields {
            for r in &rows {
                let v = r.value(field)?.expect("DI repricing is always present");
                dist.push([kind.to_string(), maturity.to_string(), v.to_string()]);
            }
        }
    }
    written.push(write_csv(cfg, FIGURE_FILES[1], &["window_kind", "maturity", "repricing"], dist)?);

    written.push(write_csv(
        cfg,
        FIGURE_FILES[2],
        &["d_di252_shock", "d_di252_statement"],
        rows.iter().map(|r| [r.d_di252_shock.to_string(), r.d_di252_statement.to_string()]),
    )?);

    written.push(write_csv(
        cfg,
        FIGURE_FILES[3],
        &["shock_type", "d_di252_statement"],
        rows.iter().map(|r| [r.shock_type.as_str().to_string(), r.d_di252_statement.to_string()]),
    )?);

    let mut rmse = Vec::new();
    for spec in &report.specifications {
        for tag in EstimatorTag::ALL {
            if let Some(e) = spec.estimator(tag) {
                rmse.push([spec.spec.clone(), tag.to_string(), e.rmse.to_string()]);
            }
        }
    }
    written.push(write_csv(cfg, FIGURE_FILES[4], &["spec", "estimator", "rmse"], rmse)?);

    let mut text_coefs = Vec::new();
    for group in &report.subgroups {
        if let SubgroupRecordStatus::Fitted { specifications } = &group.status {
            let Some(ols) = headline(specifications).and_then(|s| s.estimator(EstimatorTag::OlsHc3)) else {
                continue;
            };
            for c in ols.coefficients.iter().filter(|c| TEXT_TERMS.contains(&c.term.as_str())) {
                text_coefs.push([group.shock_type.as_str().to_string(), c.term.clone(), c.estimate.to_string()]);
            }
        }
    }
    written.push(write_csv(cfg, FIGURE_FILES[5], &["shock_type", "term", "coefficient"], text_coefs)?);

    let forest = report
        .headline()
        .and_then(|s| s.estimator(EstimatorTag::OlsHc3))
        .map(forest_rows)
        .unwrap_or_default();
    let fmt_opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    written.push(write_csv(
        cfg,
        FIGURE_FILES[6],
        &["term", "coefficient", "ci_low", "ci_high"],
        forest.into_iter().map(|(term, b, ci)| {
            [term, b.to_string(), fmt_opt(ci.map(|c| c.0)), fmt_opt(ci.map(|c| c.1))]
        }),
    )?);

    log::info!("{} figure files -> {}", written.len(), cfg.output_dir.display());
    Ok(written)
}

/// Runs build, fit and figures in order.
pub fn cmd_all(cfg: &RunConfig) -> Result<(), PipelineError> {
    cmd_build(cfg)?;
    cmd_fit(cfg)?;
    cmd_figures(cfg)?;
    Ok(())
}
