//! Run configuration read from a TOML file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::NaiveDate;
use resprod_core::{CreditPolicy, ExclusionThresholds, Window};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::InputError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub start: i32,
    pub end: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineSource {
    /// Cited-publication means of the corpus itself.
    Computed,
    /// `year,category,c_bar[,n_cited]` CSV.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Sds,
    Department,
    University,
    Region,
    Country,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scope::Sds => "sds",
            Scope::Department => "department",
            Scope::University => "university",
            Scope::Region => "region",
            Scope::Country => "country",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub window: WindowConfig,
    #[serde(deserialize_with = "cutoff_date")]
    pub citation_cutoff: Option<NaiveDate>,
    pub exclusions: ExclusionThresholds,
    pub credit: CreditPolicy,
    pub baselines: BaselineSource,
    pub scope: Vec<Scope>,
    /// Institution → region, used by the `region` scope.
    pub regions: BTreeMap<String, String>,
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window: WindowConfig {
                start: 2006,
                end: 2010,
            },
            citation_cutoff: NaiveDate::from_ymd_opt(2011, 12, 31),
            exclusions: ExclusionThresholds::default(),
            credit: CreditPolicy::default(),
            baselines: BaselineSource::Computed,
            scope: vec![Scope::Sds, Scope::Department, Scope::University, Scope::Country],
            regions: BTreeMap::new(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Accepts a TOML local date (`2011-12-31`) or a `"YYYY-MM-DD"` string.
fn cutoff_date<'de, D>(deserializer: D) -> std::result::Result<Option<NaiveDate>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    use serde::de::Error;
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(NaiveDate),
        Toml(toml::value::Datetime),
    }
    match Raw::deserialize(deserializer)? {
        Raw::Text(d) => Ok(Some(d)),
        Raw::Toml(dt) => match (dt.date, dt.time) {
            (Some(d), None) => NaiveDate::from_ymd_opt(d.year.into(), d.month.into(), d.day.into())
                .map(Some)
                .ok_or_else(|| D::Error::custom(format!("invalid date {dt}"))),
            _ => Err(D::Error::custom(format!("citation_cutoff must be a date, got {dt}"))),
        },
    }
}

/// A parsed configuration plus the settings that fell back to defaults.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub defaults_used: Vec<String>,
    /// Raw bytes of the file, when one was given.
    pub source: Option<(PathBuf, Vec<u8>)>,
}

const DEFAULTED_KEYS: [&str; 6] = [
    "window",
    "citation_cutoff",
    "exclusions",
    "credit",
    "baselines",
    "scope",
];

impl LoadedConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            let config = RunConfig::default();
            return Ok(LoadedConfig {
                defaults_used: DEFAULTED_KEYS.iter().map(|k| describe(&config, k)).collect(),
                config,
                source: None,
            });
        };
        let bytes = std::fs::read(path)
            .map_err(|e| InputError(format!("cannot read config {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| InputError(format!("{}: config is not UTF-8", path.display())))?;
        let table: toml::Table = toml::from_str(&text)
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let BaselineSource::File(p) = &mut config.baselines {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if config.output_dir.is_relative() && table.contains_key("output_dir") {
            config.output_dir = base.join(&config.output_dir);
        }
        let defaults_used = DEFAULTED_KEYS
            .iter()
            .filter(|k| !table.contains_key(**k))
            .map(|k| describe(&config, k))
            .collect();
        Ok(LoadedConfig {
            config,
            defaults_used,
            source: Some((path.to_owned(), bytes)),
        })
    }
}

fn describe(c: &RunConfig, key: &str) -> String {
    match key {
        "window" => format!("window = {}..={}", c.window.start, c.window.end),
        "citation_cutoff" => format!(
            "citation_cutoff = {}",
            c.citation_cutoff.map_or("none".to_owned(), |d| d.to_string())
        ),
        "exclusions" => format!(
            "exclusions = min_years {}, min_staff_uda {}, min_staff_total {}",
            c.exclusions.min_years, c.exclusions.min_staff_uda, c.exclusions.min_staff_total
        ),
        "credit" => {
            let w = c.credit.default_weights;
            format!(
                "credit = intramural_end {}, extramural_end {}, extramural_inner {}",
                w.intramural_end, w.extramural_end, w.extramural_inner
            )
        }
        "baselines" => "baselines = computed".to_owned(),
        "scope" => format!(
            "scope = {}",
            c.scope.iter().map(Scope::to_string).collect::<Vec<_>>().join(", ")
        ),
        _ => key.to_owned(),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| -> anyhow::Error { InputError(m).into() };
        self.window_range()?;
        let e = &self.exclusions;
        if !(e.min_years >= 0.0 && e.min_years.is_finite()) {
            return Err(err(format!("exclusions.min_years must be >= 0, got {}", e.min_years)));
        }
        self.credit
            .validate()
            .map_err(|e| err(format!("credit: {e}")))?;
        if self.scope.is_empty() {
            return Err(err("scope must list at least one level".into()));
        }
        if self.scope.contains(&Scope::Region) && self.regions.is_empty() {
            return Err(err("scope `region` needs a [regions] table".into()));
        }
        Ok(())
    }

    pub fn window_range(&self) -> Result<Window> {
        Window::new(self.window.start, self.window.end)
            .map_err(|e| InputError(format!("window: {e}")).into())
    }

    /// SHA-256 of the canonical JSON form (output directory excluded).
    pub fn sha256(&self) -> Result<String> {
        let json = serde_json::to_vec(self).context("serializing config")?;
        Ok(hex::encode(Sha256::digest(&json)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_documented_values() {
        let c = RunConfig::default();
        assert_eq!(c.exclusions.min_years, 3.0);
        assert_eq!(c.exclusions.min_staff_uda, 10);
        assert_eq!(c.exclusions.min_staff_total, 30);
        assert_eq!((c.window.start, c.window.end), (2006, 2010));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn file_overrides_and_defaults_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(
            &p,
            "baselines = { file = \"b.csv\" }\n[exclusions]\nmin_years = 1\n[credit]\nintramural_end = 0.35\n[credit.per_sds.BIO10]\nextramural_end = 0.25\n",
        )
        .unwrap();
        let l = LoadedConfig::load(Some(&p)).unwrap();
        assert_eq!(l.config.exclusions.min_years, 1.0);
        assert_eq!(l.config.exclusions.min_staff_total, 30);
        assert_eq!(l.config.credit.default_weights.intramural_end, 0.35);
        assert_eq!(l.config.credit.per_sds["BIO10"].extramural_end, 0.25);
        assert_eq!(l.config.baselines, BaselineSource::File(dir.path().join("b.csv")));
        assert!(l.defaults_used.iter().any(|d| d.starts_with("window")));
        assert!(!l.defaults_used.iter().any(|d| d.starts_with("exclusions")));
    }

    #[test]
    fn cutoff_accepts_toml_dates_and_strings() {
        for text in ["citation_cutoff = 2012-06-30\n", "citation_cutoff = \"2012-06-30\"\n"] {
            let c: RunConfig = toml::from_str(text).unwrap();
            assert_eq!(c.citation_cutoff, NaiveDate::from_ymd_opt(2012, 6, 30));
        }
        assert!(toml::from_str::<RunConfig>("citation_cutoff = 2012-06-30T10:00:00\n").is_err());
        assert!(toml::from_str::<RunConfig>("citation_cutoff = \"June\"\n").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "windw = 3\n").unwrap();
        let err = LoadedConfig::load(Some(&p)).unwrap_err();
        assert!(err.downcast_ref::<InputError>().is_some());
    }

    #[test]
    fn region_scope_needs_regions() {
        let c = RunConfig {
            scope: vec![Scope::Region],
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::default();
        let b = RunConfig {
            output_dir: "elsewhere".into(),
            ..RunConfig::default()
        };
        assert_eq!(a.sha256().unwrap(), b.sha256().unwrap());
        let c = RunConfig {
            seed: 1,
            ..RunConfig::default()
        };
        assert_ne!(a.sha256().unwrap(), c.sha256().unwrap());
    }
}
