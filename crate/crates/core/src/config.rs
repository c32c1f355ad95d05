//! Run configuration: a small TOML key-value file. Relative paths resolve
//! against the directory containing the file.
//!
//! ```toml
//! events = "events.csv"
//! market = "market.csv"
//! focus = "focus.csv"
//! statements = "statements"
//! output_dir = "out"
//! # optional
//! lexicon = "lexicon.csv"
//! sample_start = "2016-08-31"
//! specs = ["di252_baseline", "di252_fiscal", "di504_baseline", "slope_baseline"]
//! lambda = 1.0
//! lasso_lambda = 1.0
//! min_n = 20
//! slope = "long_minus_short"
//! tone_denominator = "in_scope"
//! controls = ["d_fx_shock", "d_vix_shock", "d_cds_shock"]
//!
//! [[spec]]
//! name = "di252_small"
//! target = "d_di252_statement"
//! initial_shock = "d_di252_shock"
//! controls = []
//! ```

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::calendar::{parse_iso_date, DEFAULT_SAMPLE_START};
use crate::dataset::{SlopeOrientation, NUMERIC_FIELDS};
use crate::estimators::{
    builtin_spec, FitConfig, SpecDefinition, BUILTIN_SPECS, DEFAULT_CONTROLS,
    EXPECTATION_TERMS, TEXT_TERMS,
};
use crate::textfeat::ToneDenominator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomSpec {
    name: String,
    label: Option<String>,
    target: String,
    initial_shock: String,
    controls: Option<Vec<String>>,
    text: Option<Vec<String>>,
    expectations: Option<Vec<String>>,
    #[serde(default)]
    fiscal_interaction: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    events: PathBuf,
    market: PathBuf,
    focus: PathBuf,
    statements: PathBuf,
    output_dir: PathBuf,
    lexicon: Option<PathBuf>,
    sample_start: Option<String>,
    specs: Option<Vec<String>>,
    lambda: Option<f64>,
    ridge_grid: Option<Vec<f64>>,
    lasso_lambda: Option<f64>,
    min_n: Option<usize>,
    slope: Option<SlopeOrientation>,
    tone_denominator: Option<ToneDenominator>,
    controls: Option<Vec<String>>,
    #[serde(default)]
    spec: Vec<CustomSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub events: PathBuf,
    pub market: PathBuf,
    pub focus: PathBuf,
    pub statements: PathBuf,
    /// `None` selects the bundled lexicon.
    pub lexicon: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub sample_start: Option<NaiveDate>,
    pub specs: Vec<SpecDefinition>,
    pub fit: FitConfig,
    pub slope: SlopeOrientation,
    pub tone_denominator: ToneDenominator,
    pub controls: Vec<String>,
}

fn check_fields(spec: &SpecDefinition) -> Result<(), ConfigError> {
    let all = std::iter::once(&spec.target)
        .chain(std::iter::once(&spec.initial_shock))
        .chain(&spec.controls)
        .chain(&spec.text)
        .chain(&spec.expectations);
    for f in all {
        if !NUMERIC_FIELDS.contains(&f.as_str()) {
            return Err(ConfigError::Invalid(format!("spec `{}`: unknown field `{f}`", spec.name)));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };

        let sample_start = match raw.sample_start.as_deref() {
            None => Some(parse_iso_date(DEFAULT_SAMPLE_START).expect("valid default")),
            Some("none") => None,
            Some(s) => Some(parse_iso_date(s).map_err(ConfigError::Invalid)?),
        };
        let controls = raw
            .controls
            .unwrap_or_else(|| DEFAULT_CONTROLS.iter().map(|s| s.to_string()).collect());

        let mut custom = Vec::new();
        for c in raw.spec {
            custom.push(SpecDefinition {
                label: c.label.unwrap_or_else(|| c.name.clone()),
                name: c.name,
                target: c.target,
                initial_shock: c.initial_shock,
                controls: c.controls.unwrap_or_else(|| controls.clone()),
                text: c.text.unwrap_or_else(|| TEXT_TERMS.map(String::from).to_vec()),
                expectations: c.expectations.unwrap_or_else(|| EXPECTATION_TERMS.map(String::from).to_vec()),
                fiscal_interaction: c.fiscal_interaction,
            });
        }
        let names = raw.specs.unwrap_or_else(|| {
            let mut v: Vec<String> = BUILTIN_SPECS.iter().map(|s| s.to_string()).collect();
            v.extend(custom.iter().map(|c| c.name.clone()));
            v
        });
        let mut specs = Vec::with_capacity(names.len());
        for name in &names {
            let spec = custom
                .iter()
                .find(|c| &c.name == name)
                .cloned()
                .or_else(|| builtin_spec(name, &controls))
                .ok_or_else(|| ConfigError::Invalid(format!("unknown specification `{name}`")))?;
            check_fields(&spec)?;
            specs.push(spec);
        }

        let defaults = FitConfig::default();
        let fit = FitConfig {
            ridge_lambda: raw.lambda.unwrap_or(defaults.ridge_lambda),
            ridge_grid: raw.ridge_grid,
            lasso_lambda: raw.lasso_lambda.unwrap_or(defaults.lasso_lambda),
            min_n: raw.min_n.unwrap_or(defaults.min_n),
        };
        let cfg = RunConfig {
            events: resolve(raw.events),
            market: resolve(raw.market),
            focus: resolve(raw.focus),
            statements: resolve(raw.statements),
            lexicon: raw.lexicon.map(resolve),
            output_dir: resolve(raw.output_dir),
            sample_start,
            specs,
            fit,
            slope: raw.slope.unwrap_or_default(),
            tone_denominator: raw.tone_denominator.unwrap_or_default(),
            controls,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad_lambda = |l: f64| !(l.is_finite() && l >= 0.0);
        if bad_lambda(self.fit.ridge_lambda) || bad_lambda(self.fit.lasso_lambda) {
            return Err(ConfigError::Invalid("penalties must be finite and non-negative".into()));
        }
        if let Some(grid) = &self.fit.ridge_grid {
            if grid.is_empty() || grid.iter().any(|l| bad_lambda(*l)) {
                return Err(ConfigError::Invalid("ridge_grid must be a nonempty list of non-negative values".into()));
            }
        }
        for c in &self.controls {
            if !NUMERIC_FIELDS.contains(&c.as_str()) {
                return Err(ConfigError::Invalid(format!("unknown control `{c}`")));
            }
        }
        Ok(())
    }

    /// Keeps only the named specification.
    pub fn select_spec(&mut self, name: &str) -> Result<(), ConfigError> {
        let spec = self
            .specs
            .iter()
            .find(|s| s.name == name)
            .cloned()
            .or_else(|| builtin_spec(name, &self.controls))
            .ok_or_else(|| ConfigError::Invalid(format!("unknown specification `{name}`")))?;
        self.specs = vec![spec];
        Ok(())
    }

    pub fn output_path(&self, file: &str) -> PathBuf {
        self.output_dir.join(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
events = "events.csv"
market = "market.csv"
focus = "focus.csv"
statements = "statements"
output_dir = "out"
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let cfg = RunConfig::parse(MINIMAL, Path::new("/data/run")).unwrap();
        assert_eq!(cfg.events, PathBuf::from("/data/run/events.csv"));
        assert_eq!(cfg.sample_start, parse_iso_date("2016-08-31").ok());
        assert_eq!(cfg.specs.len(), 4);
        assert_eq!(cfg.fit.min_n, 20);
        assert_eq!(cfg.fit.ridge_lambda, 1.0);
        assert_eq!(cfg.slope, SlopeOrientation::LongMinusShort);
        assert_eq!(cfg.tone_denominator, ToneDenominator::InScope);
        assert_eq!(cfg.controls, vec!["d_fx_shock", "d_vix_shock", "d_cds_shock"]);
        assert!(cfg.lexicon.is_none());
    }

    #[test]
    fn overrides_and_custom_spec() {
        let text = format!(
            "{MINIMAL}\nspecs = [\"small\", \"di504_baseline\"]\nlambda = 2.5\nslope = \"short_minus_long\"\nsample_start = \"none\"\n\
             [[spec]]\nname = \"small\"\ntarget = \"d_di252_statement\"\ninitial_shock = \"d_di252_shock\"\ncontrols = []\ntext = [\"tone\"]\n"
        );
        let cfg = RunConfig::parse(&text, Path::new(".")).unwrap();
        assert_eq!(cfg.specs.len(), 2);
        assert_eq!(cfg.specs[0].column_names(), vec!["intercept", "d_di252_shock", "tone", "selic_year_pre"]);
        assert_eq!(cfg.fit.ridge_lambda, 2.5);
        assert_eq!(cfg.slope, SlopeOrientation::ShortMinusLong);
        assert_eq!(cfg.sample_start, None);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse(&format!("{MINIMAL}\nspecs = [\"mystery\"]\n"), Path::new(".")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}\nlambda = -1.0\n"), Path::new(".")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}\ncontrols = [\"d_gold_shock\"]\n"), Path::new(".")).is_err());
        assert!(RunConfig::parse(&format!("{MINIMAL}\ncolour = \"blue\"\n"), Path::new(".")).is_err());
        assert!(RunConfig::parse("events = 3", Path::new(".")).is_err());
    }
}
