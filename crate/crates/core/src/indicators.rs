//! Fractional Scientific Strength and the publication-count baselines.
//!
//! Everything is computed from one [`Scorer`], which resolves salaries,
//! normalized impacts and per-author credit once and then answers every
//! aggregation level:
//!
//! * `FSS_R = Σ (c/c̄)·f / (w_R·t)` per researcher;
//! * `FSS_S = Σ (c/c̄)·f / w_S` per (unit, SDS), with `f` the summed credit of
//!   the unit's SDS staff on each publication and `w_S = Σ salary·years`;
//! * `FSS_D` the mean of member `FSS_R` over their national SDS means;
//! * `FSS_U = Σ_k (FSS_Sk / mean_k)·(w_Sk / w_U)` over the SDSs of a unit;
//! * `P_U`, `FP_U` the mean standardized yearly (fractional) output.
//!
//! National means only count strictly positive ("productive") values; the
//! `FSS_S` mean is weighted by each unit's SDS labor cost.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{resolve_salary, Corpus, CsvTable, Researcher};
use crate::credit::{credit_shares, CreditPolicy, WeightingScheme};
use crate::error::{Error, Result};
use crate::normalize::{normalized_impact, BaselineTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Researcher,
    Sds,
    Department,
    UniversityUda,
    UniversityTotal,
    Region,
    Country,
}

impl Level {
    pub const ALL: [Level; 7] = [
        Level::Researcher,
        Level::Sds,
        Level::Department,
        Level::UniversityUda,
        Level::UniversityTotal,
        Level::Region,
        Level::Country,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Researcher => "researcher",
            Level::Sds => "sds",
            Level::Department => "department",
            Level::UniversityUda => "university_uda",
            Level::UniversityTotal => "university_total",
            Level::Region => "region",
            Level::Country => "country",
        }
    }

    /// Levels whose units are ranked within a group (SDS or UDA); their unit
    /// ids are written as `group/unit`.
    pub fn is_grouped(self) -> bool {
        matches!(self, Level::Researcher | Level::Sds | Level::UniversityUda)
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Level::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown level `{s}`")))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    FssR,
    /// Publications per year of work.
    Q,
    /// Fractional publications per year of work.
    Fq,
    FssS,
    FssD,
    FssU,
    PU,
    FpU,
}

impl Indicator {
    pub const ALL: [Indicator; 8] = [
        Indicator::FssR,
        Indicator::Q,
        Indicator::Fq,
        Indicator::FssS,
        Indicator::FssD,
        Indicator::FssU,
        Indicator::PU,
        Indicator::FpU,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Indicator::FssR => "fss_r",
            Indicator::Q => "q",
            Indicator::Fq => "fq",
            Indicator::FssS => "fss_s",
            Indicator::FssD => "fss_d",
            Indicator::FssU => "fss_u",
            Indicator::PU => "p_u",
            Indicator::FpU => "fp_u",
        }
    }
}

impl FromStr for Indicator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Indicator::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown indicator `{s}`")))
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    /// SDS or UDA for grouped levels.
    pub group: Option<String>,
    pub unit: String,
    pub value: f64,
}

impl ScoreEntry {
    pub fn unit_id(&self) -> String {
        match &self.group {
            Some(g) => format!("{g}/{}", self.unit),
            None => self.unit.clone(),
        }
    }
}

/// Scores of one indicator at one level, sorted by (group, unit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub level: Level,
    pub indicator: Indicator,
    pub entries: Vec<ScoreEntry>,
}

impl ScoreSet {
    pub fn new(level: Level, indicator: Indicator, mut entries: Vec<ScoreEntry>) -> Self {
        entries.sort_by(|a, b| (&a.group, &a.unit).cmp(&(&b.group, &b.unit)));
        ScoreSet {
            level,
            indicator,
            entries,
        }
    }

    pub fn get(&self, group: Option<&str>, unit: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.group.as_deref() == group && e.unit == unit)
            .map(|e| e.value)
    }

    /// Entries split by group, in group order. Ungrouped levels give a
    /// single `None` group.
    pub fn by_group(&self) -> BTreeMap<Option<&str>, Vec<&ScoreEntry>> {
        let mut out: BTreeMap<Option<&str>, Vec<&ScoreEntry>> = BTreeMap::new();
        for e in &self.entries {
            out.entry(e.group.as_deref()).or_default().push(e);
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// National means over productive units, keyed by SDS.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldMeans {
    pub fss_r: BTreeMap<String, f64>,
    /// Weighted by each unit's SDS labor cost.
    pub fss_s: BTreeMap<String, f64>,
    pub q: BTreeMap<String, f64>,
    pub fq: BTreeMap<String, f64>,
}

impl FieldMeans {
    pub fn mean(&self, indicator: Indicator, sds: &str) -> Result<f64> {
        let map = match indicator {
            Indicator::FssR => &self.fss_r,
            Indicator::FssS => &self.fss_s,
            Indicator::Q => &self.q,
            Indicator::Fq => &self.fq,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "no field mean is defined for `{other}`"
                )))
            }
        };
        map.get(sds).copied().ok_or_else(|| Error::MissingFieldMean {
            indicator: indicator.to_string(),
            sds: sds.to_owned(),
        })
    }
}

/// Per-researcher totals behind `FSS_R`, `Q` and `FQ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResearcherMetrics {
    pub salary: f64,
    pub years: f64,
    /// `Σ (c/c̄)·f` over the researcher's publications.
    pub weighted_impact: f64,
    pub publications: usize,
    /// `Σ f`.
    pub fractional_publications: f64,
}

impl ResearcherMetrics {
    pub fn fss(&self) -> f64 {
        self.weighted_impact / (self.salary * self.years)
    }

    pub fn q(&self) -> f64 {
        self.publications as f64 / self.years
    }

    pub fn fq(&self) -> f64 {
        self.fractional_publications / self.years
    }

    pub fn labor_cost(&self) -> f64 {
        self.salary * self.years
    }
}

/// Weighted mean of the strictly positive values, `None` when there are
/// none. Items are `(value, weight)`.
pub fn productive_mean(values: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (v, w) in values {
        if v > 0.0 {
            num += v * w;
            den += w;
        }
    }
    (den > 0.0).then(|| num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Credit {
    publication: usize,
    fraction: f64,
}

/// How a multi-field aggregate is assembled beyond the standard levels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregationOptions {
    /// Institution → region; enables the `region` level when nonempty.
    pub regions: BTreeMap<String, String>,
    /// Adds the single-unit `country` level.
    pub country: bool,
}

/// Every computed score set plus the national means used to standardize.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scores {
    pub sets: Vec<ScoreSet>,
    pub field_means: FieldMeans,
}

impl Scores {
    pub fn get(&self, level: Level, indicator: Indicator) -> Option<&ScoreSet> {
        self.sets
            .iter()
            .find(|s| s.level == level && s.indicator == indicator)
    }

    /// `level,unit_id,indicator,value`, one row per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,unit_id,indicator,value\n");
        for set in &self.sets {
            for e in &set.entries {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    set.level,
                    csv_field(&e.unit_id()),
                    set.indicator,
                    e.value
                ));
            }
        }
        out
    }
}

/// Reads `scores.csv` back into score sets, in file order of first
/// appearance of each (level, indicator).
pub fn read_scores_csv(path: &Path) -> Result<Vec<ScoreSet>> {
    let mut order: Vec<(Level, Indicator)> = Vec::new();
    let mut entries: BTreeMap<(Level, Indicator), Vec<ScoreEntry>> = BTreeMap::new();
    CsvTable::open(path, &["level", "unit_id", "indicator", "value"])?.for_each_row(|row| {
        let level: Level = row.parse("level")?;
        let indicator: Indicator = row.parse("indicator")?;
        let unit_id = row.req("unit_id")?;
        let (group, unit) = if level.is_grouped() {
            match unit_id.split_once('/') {
                Some((g, u)) => (Some(g.to_owned()), u.to_owned()),
                None => return Err(row.error("unit_id", "expected `group/unit`")),
            }
        } else {
            (None, unit_id.to_owned())
        };
        let value: f64 = row.parse("value")?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(row.error("value", format!("score must be finite and >= 0, got {value}")));
        }
        let key = (level, indicator);
        if !entries.contains_key(&key) {
            order.push(key);
        }
        entries.entry(key).or_default().push(ScoreEntry { group, unit, value });
        Ok(())
    })?;
    Ok(order
        .into_iter()
        .map(|k| ScoreSet::new(k.0, k.1, entries.remove(&k).unwrap_or_default()))
        .collect())
}

impl FieldMeans {
    /// `sds,indicator,mean`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sds,indicator,mean\n");
        for (indicator, map) in [
            (Indicator::FssR, &self.fss_r),
            (Indicator::FssS, &self.fss_s),
            (Indicator::Q, &self.q),
            (Indicator::Fq, &self.fq),
        ] {
            for (sds, m) in map {
                out.push_str(&format!("{},{indicator},{m}\n", csv_field(sds)));
            }
        }
        out
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut means = FieldMeans::default();
        CsvTable::open(path, &["sds", "indicator", "mean"])?.for_each_row(|row| {
            let sds = row.req("sds")?.to_owned();
            let indicator: Indicator = row.parse("indicator")?;
            let mean: f64 = row.parse("mean")?;
            if !(mean.is_finite() && mean > 0.0) {
                return Err(row.error("mean", "field means must be > 0"));
            }
            let map = match indicator {
                Indicator::FssR => &mut means.fss_r,
                Indicator::FssS => &mut means.fss_s,
                Indicator::Q => &mut means.q,
                Indicator::Fq => &mut means.fq,
                other => return Err(row.error("indicator", format!("`{other}` has no field mean"))),
            };
            if map.insert(sds, mean).is_some() {
                return Err(row.error("sds", "duplicate field mean"));
            }
            Ok(())
        })?;
        Ok(means)
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub struct Scorer<'a> {
    corpus: &'a Corpus,
    impacts: Vec<f64>,
    credits: Vec<Vec<Credit>>,
    metrics: Vec<ResearcherMetrics>,
}

impl<'a> Scorer<'a> {
    pub fn new(corpus: &'a Corpus, baselines: &BaselineTable, policy: &CreditPolicy) -> Result<Self> {
        policy.validate()?;
        let impacts: Vec<f64> = corpus
            .publications()
            .par_iter()
            .map(|p| normalized_impact(p, baselines))
            .collect::<Result<_>>()?;

        let schemes: HashMap<&str, WeightingScheme> = corpus
            .taxonomy()
            .iter()
            .map(|(sds, _)| (sds, policy.scheme_for(sds, corpus.taxonomy())))
            .collect();

        let researchers = corpus.researchers();
        let mut credits: Vec<Vec<Credit>> = vec![Vec::new(); researchers.len()];
        for (pi, p) in corpus.publications().iter().enumerate() {
            // one credit vector per distinct scheme on this byline
            let mut cache: Vec<(WeightingScheme, Vec<f64>)> = Vec::new();
            for (pos, a) in p.byline.iter().enumerate() {
                let Some(rid) = &a.researcher_id else { continue };
                let ri = corpus
                    .researcher_index(rid)
                    .expect("bylines validated against researchers");
                let scheme = schemes[researchers[ri].sds.as_str()];
                let shares = match cache.iter().position(|(s, _)| *s == scheme) {
                    Some(i) => &cache[i].1,
                    None => {
                        cache.push((scheme, credit_shares(&p.byline, &scheme)));
                        &cache.last().expect("just pushed").1
                    }
                };
                credits[ri].push(Credit {
                    publication: pi,
                    fraction: shares[pos],
                });
            }
        }

        let metrics: Vec<ResearcherMetrics> = researchers
            .par_iter()
            .zip(credits.par_iter())
            .map(|(r, cs)| {
                let salary = resolve_salary(r, corpus.salaries())?;
                let mut weighted_impact = 0.0;
                let mut fractional = 0.0;
                for c in cs {
                    weighted_impact += impacts[c.publication] * c.fraction;
                    fractional += c.fraction;
                }
                Ok(ResearcherMetrics {
                    salary,
                    years: r.years_in_window,
                    weighted_impact,
                    publications: cs.len(),
                    fractional_publications: fractional,
                })
            })
            .collect::<Result<_>>()?;

        Ok(Scorer {
            corpus,
            impacts,
            credits,
            metrics,
        })
    }

    pub fn corpus(&self) -> &Corpus {
        self.corpus
    }

    pub fn impacts(&self) -> &[f64] {
        &self.impacts
    }

    fn index(&self, researcher_id: &str) -> Result<usize> {
        self.corpus
            .researcher_index(researcher_id)
            .ok_or_else(|| Error::UnknownUnit(researcher_id.to_owned()))
    }

    /// Metrics of every researcher, in corpus order.
    pub fn all_metrics(&self) -> &[ResearcherMetrics] {
        &self.metrics
    }

    pub fn metrics(&self, researcher_id: &str) -> Result<&ResearcherMetrics> {
        Ok(&self.metrics[self.index(researcher_id)?])
    }

    pub fn fss_r(&self, researcher_id: &str) -> Result<f64> {
        Ok(self.metrics(researcher_id)?.fss())
    }

    /// Members of a group of researchers, in corpus order.
    fn members<F>(&self, pred: F) -> Vec<usize>
    where
        F: Fn(&Researcher) -> bool,
    {
        self.corpus
            .researchers()
            .iter()
            .enumerate()
            .filter(|(_, r)| pred(r))
            .map(|(i, _)| i)
            .collect()
    }

    /// `(Σ (c/c̄)·f, w_S)` for a set of researchers sharing one SDS. Each
    /// publication enters once, with the summed credit of the members.
    fn field_totals(&self, staff: &[usize]) -> (f64, f64) {
        let mut per_pub: BTreeMap<usize, f64> = BTreeMap::new();
        let mut labor = 0.0;
        for &ri in staff {
            labor += self.metrics[ri].labor_cost();
            for c in &self.credits[ri] {
                *per_pub.entry(c.publication).or_default() += c.fraction;
            }
        }
        let output = per_pub
            .into_iter()
            .map(|(pi, f)| self.impacts[pi] * f)
            .sum();
        (output, labor)
    }

    fn fss_s_of(&self, unit: &str, staff: &[usize]) -> Result<(f64, f64)> {
        let (output, labor) = self.field_totals(staff);
        if !(labor > 0.0) {
            return Err(Error::NonPositiveInput {
                unit: unit.to_owned(),
                detail: "total labor cost is zero".into(),
            });
        }
        Ok((output / labor, labor))
    }

    /// `FSS_S` of an institution's staff in one SDS.
    pub fn fss_s(&self, institution: &str, sds: &str) -> Result<f64> {
        let staff = self.members(|r| r.institution == institution && r.sds == sds);
        if staff.is_empty() {
            return Err(Error::UnknownUnit(format!("{sds}/{institution}")));
        }
        Ok(self.fss_s_of(&format!("{sds}/{institution}"), &staff)?.0)
    }

    /// National means over productive researchers and institutions.
    pub fn field_means(&self) -> Result<FieldMeans> {
        let mut per_sds: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.corpus.researchers().iter().enumerate() {
            per_sds.entry(r.sds.as_str()).or_default().push(i);
        }
        let mut means = FieldMeans::default();
        for (sds, members) in &per_sds {
            let ms = members.iter().map(|&i| &self.metrics[i]);
            for (map, f) in [
                (&mut means.fss_r, ResearcherMetrics::fss as fn(&ResearcherMetrics) -> f64),
                (&mut means.q, ResearcherMetrics::q),
                (&mut means.fq, ResearcherMetrics::fq),
            ] {
                if let Some(m) = productive_mean(ms.clone().map(|m| (f(m), 1.0))) {
                    map.insert((*sds).to_owned(), m);
                }
            }
        }

        let mut units: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for ((sds, inst), staff) in self.groups(|r| (r.sds.clone(), r.institution.clone())) {
            let (fss, labor) = self.fss_s_of(&format!("{sds}/{inst}"), &staff)?;
            units.entry(sds).or_default().push((fss, labor));
        }
        for (sds, values) in units {
            if let Some(m) = productive_mean(values.into_iter()) {
                means.fss_s.insert(sds, m);
            }
        }
        Ok(means)
    }

    fn groups<K, F>(&self, key: F) -> BTreeMap<K, Vec<usize>>
    where
        K: Ord,
        F: Fn(&Researcher) -> K,
    {
        let mut out: BTreeMap<K, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.corpus.researchers().iter().enumerate() {
            out.entry(key(r)).or_default().push(i);
        }
        out
    }

    fn standardized_mean(
        &self,
        members: &[usize],
        means: &FieldMeans,
        indicator: Indicator,
    ) -> Result<f64> {
        if members.is_empty() {
            return Err(Error::InvalidParameter("unit has no research staff".into()));
        }
        let mut total = 0.0;
        for &ri in members {
            let r = &self.corpus.researchers()[ri];
            let m = &self.metrics[ri];
            let value = match indicator {
                Indicator::FssR => m.fss(),
                Indicator::Q => m.q(),
                Indicator::Fq => m.fq(),
                _ => unreachable!("per-researcher indicators only"),
            };
            total += value / means.mean(indicator, &r.sds)?;
        }
        Ok(total / members.len() as f64)
    }

    /// `FSS_D`: mean ratio of member `FSS_R` to the national SDS mean.
    pub fn fss_d(&self, institution: &str, department: &str, means: &FieldMeans) -> Result<f64> {
        let members = self.members(|r| {
            r.institution == institution && r.department.as_deref() == Some(department)
        });
        if members.is_empty() {
            return Err(Error::UnknownUnit(format!("{institution}/{department}")));
        }
        self.standardized_mean(&members, means, Indicator::FssR)
    }

    /// `FSS_U` of an arbitrary set of researchers: their SDS pieces,
    /// standardized by the national `FSS_S` means and weighted by labor cost.
    pub fn fss_u_of(&self, unit: &str, members: &[usize], means: &FieldMeans) -> Result<f64> {
        let mut by_sds: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for &ri in members {
            by_sds
                .entry(self.corpus.researchers()[ri].sds.as_str())
                .or_default()
                .push(ri);
        }
        if by_sds.is_empty() {
            return Err(Error::UnknownUnit(unit.to_owned()));
        }
        let mut pieces = Vec::with_capacity(by_sds.len());
        for (sds, staff) in &by_sds {
            let (fss, labor) = self.fss_s_of(&format!("{unit}:{sds}"), staff)?;
            pieces.push((fss / means.mean(Indicator::FssS, sds)?, labor));
        }
        let total_labor: f64 = pieces.iter().map(|(_, w)| w).sum();
        Ok(pieces
            .iter()
            .map(|(ratio, w)| ratio * (w / total_labor))
            .sum())
    }

    /// `FSS_U` of an institution in one UDA.
    pub fn fss_u(&self, institution: &str, uda: &str, means: &FieldMeans) -> Result<f64> {
        let members = self.uda_members(institution, uda);
        self.fss_u_of(&format!("{uda}/{institution}"), &members, means)
    }

    fn uda_members(&self, institution: &str, uda: &str) -> Vec<usize> {
        self.members(|r| r.institution == institution && self.corpus.uda_of(r) == uda)
    }

    /// `P_U`: mean over the unit's staff of `Q_j / Q̄(sds_j)`.
    pub fn p_u(&self, institution: &str, uda: &str, means: &FieldMeans) -> Result<f64> {
        self.standardized_mean(&self.uda_members(institution, uda), means, Indicator::Q)
    }

    /// `FP_U`: as [`Scorer::p_u`] with fractional counts.
    pub fn fp_u(&self, institution: &str, uda: &str, means: &FieldMeans) -> Result<f64> {
        self.standardized_mean(&self.uda_members(institution, uda), means, Indicator::Fq)
    }

    /// Every score set the corpus supports, standard levels first.
    pub fn score_all(&self, options: &AggregationOptions) -> Result<Scores> {
        let means = self.field_means()?;
        let corpus = self.corpus;
        let exclusions = corpus.exclusions();
        let mut sets = Vec::new();

        // researcher level
        for (indicator, f) in [
            (Indicator::FssR, ResearcherMetrics::fss as fn(&ResearcherMetrics) -> f64),
            (Indicator::Q, ResearcherMetrics::q),
            (Indicator::Fq, ResearcherMetrics::fq),
        ] {
            let entries = corpus
                .researchers()
                .iter()
                .zip(&self.metrics)
                .map(|(r, m)| ScoreEntry {
                    group: Some(r.sds.clone()),
                    unit: r.id.clone(),
                    value: f(m),
                })
                .collect();
            sets.push(ScoreSet::new(Level::Researcher, indicator, entries));
        }

        // SDS level
        let sds_groups: Vec<((String, String), Vec<usize>)> = self
            .groups(|r| (r.sds.clone(), r.institution.clone()))
            .into_iter()
            .collect();
        let entries = sds_groups
            .par_iter()
            .map(|((sds, inst), staff)| {
                Ok(ScoreEntry {
                    group: Some(sds.clone()),
                    unit: inst.clone(),
                    value: self.fss_s_of(&format!("{sds}/{inst}"), staff)?.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        sets.push(ScoreSet::new(Level::Sds, Indicator::FssS, entries));

        // departments
        let departments: Vec<(String, Vec<usize>)> = self
            .groups(|r| {
                r.department
                    .as_ref()
                    .map(|d| format!("{}/{d}", r.institution))
            })
            .into_iter()
            .filter_map(|(k, v)| k.map(|k| (k, v)))
            .collect();
        if !departments.is_empty() {
            let (d, u) = self.ungrouped_pair(&departments, &means)?;
            sets.push(ScoreSet::new(Level::Department, Indicator::FssD, d));
            sets.push(ScoreSet::new(Level::Department, Indicator::FssU, u));
        }

        // institutions per UDA
        let uda_units: Vec<((String, String), Vec<usize>)> = self
            .groups(|r| (corpus.uda_of(r).to_owned(), r.institution.clone()))
            .into_iter()
            .filter(|((uda, inst), _)| !exclusions.excludes_uda_group(inst, uda))
            .collect();
        let rows = uda_units
            .par_iter()
            .map(|((uda, inst), members)| {
                let unit = format!("{uda}/{inst}");
                Ok([
                    self.fss_u_of(&unit, members, &means)?,
                    self.standardized_mean(members, &means, Indicator::Q)?,
                    self.standardized_mean(members, &means, Indicator::Fq)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, indicator) in [Indicator::FssU, Indicator::PU, Indicator::FpU]
            .into_iter()
            .enumerate()
        {
            let entries = uda_units
                .iter()
                .zip(&rows)
                .map(|(((uda, inst), _), row)| ScoreEntry {
                    group: Some(uda.clone()),
                    unit: inst.clone(),
                    value: row[k],
                })
                .collect();
            sets.push(ScoreSet::new(Level::UniversityUda, indicator, entries));
        }

        // whole institutions
        let institutions: Vec<(String, Vec<usize>)> = self
            .groups(|r| r.institution.clone())
            .into_iter()
            .filter(|(inst, _)| !exclusions.excludes_institution(inst))
            .collect();
        sets.extend(self.ungrouped_sets(Level::UniversityTotal, &institutions, &means)?);

        if !options.regions.is_empty() {
            let mut regions: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for (i, r) in corpus.researchers().iter().enumerate() {
                if let Some(region) = options.regions.get(&r.institution) {
                    regions.entry(region.clone()).or_default().push(i);
                }
            }
            let regions: Vec<_> = regions.into_iter().collect();
            sets.extend(self.ungrouped_sets(Level::Region, &regions, &means)?);
        }
        if options.country {
            let all = vec![("national".to_owned(), (0..corpus.researchers().len()).collect())];
            sets.extend(self.ungrouped_sets(Level::Country, &all, &means)?);
        }

        Ok(Scores {
            sets,
            field_means: means,
        })
    }

    fn ungrouped_pair(
        &self,
        units: &[(String, Vec<usize>)],
        means: &FieldMeans,
    ) -> Result<(Vec<ScoreEntry>, Vec<ScoreEntry>)> {
        let rows = units
            .par_iter()
            .map(|(unit, members)| {
                Ok((
                    self.standardized_mean(members, means, Indicator::FssR)?,
                    self.fss_u_of(unit, members, means)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let entry = |unit: &String, value| ScoreEntry {
            group: None,
            unit: unit.clone(),
            value,
        };
        Ok(units
            .iter()
            .zip(rows)
            .map(|((u, _), (d, f))| (entry(u, d), entry(u, f)))
            .unzip())
    }

    fn ungrouped_sets(
        &self,
        level: Level,
        units: &[(String, Vec<usize>)],
        means: &FieldMeans,
    ) -> Result<Vec<ScoreSet>> {
        let rows = units
            .par_iter()
            .map(|(unit, members)| {
                Ok([
                    self.fss_u_of(unit, members, means)?,
                    self.standardized_mean(members, means, Indicator::Q)?,
                    self.standardized_mean(members, means, Indicator::Fq)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok([Indicator::FssU, Indicator::PU, Indicator::FpU]
            .into_iter()
            .enumerate()
            .map(|(k, indicator)| {
                let entries = units
                    .iter()
                    .zip(&rows)
                    .map(|((unit, _), row)| ScoreEntry {
                        group: None,
                        unit: unit.clone(),
                        value: row[k],
                    })
                    .collect();
                ScoreSet::new(level, indicator, entries)
            })
            .collect())
    }
}
