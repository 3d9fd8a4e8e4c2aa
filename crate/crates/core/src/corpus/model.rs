use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Academic rank, the key for the national salary schedule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum AcademicRank {
    Full,
    Associate,
    Assistant,
    Other(String),
}

impl AcademicRank {
    pub fn as_str(&self) -> &str {
        match self {
            AcademicRank::Full => "full",
            AcademicRank::Associate => "associate",
            AcademicRank::Assistant => "assistant",
            AcademicRank::Other(s) => s,
        }
    }
}

impl FromStr for AcademicRank {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "" => return Err(Error::InvalidParameter("empty academic rank".into())),
            "full" => AcademicRank::Full,
            "associate" => AcademicRank::Associate,
            "assistant" => AcademicRank::Assistant,
            _ => AcademicRank::Other(s),
        })
    }
}

impl TryFrom<String> for AcademicRank {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AcademicRank> for String {
    fn from(r: AcademicRank) -> Self {
        r.as_str().to_owned()
    }
}

impl fmt::Display for AcademicRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Co-authorship convention declared for a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    Alphabetical,
    PositionWeighted,
}

impl Convention {
    pub fn as_str(self) -> &'static str {
        match self {
            Convention::Alphabetical => "alphabetical",
            Convention::PositionWeighted => "position_weighted",
        }
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "alphabetical" => Ok(Convention::Alphabetical),
            "position_weighted" => Ok(Convention::PositionWeighted),
            other => Err(Error::InvalidParameter(format!(
                "unknown co-authorship convention `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Researcher {
    pub id: String,
    pub name: Option<String>,
    pub sds: String,
    pub rank: AcademicRank,
    /// Explicit yearly salary; overrides the schedule when present.
    pub salary: Option<f64>,
    pub institution: String,
    pub department: Option<String>,
    /// Years of work inside the observation window (may be fractional).
    pub years_in_window: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Authorship {
    pub position: usize,
    /// `None` for authors outside the census (external co-authors).
    pub researcher_id: Option<String>,
    pub institution_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Publication {
    pub id: String,
    pub year: i32,
    pub subject_categories: Vec<String>,
    pub citations: u64,
    /// Sorted by position, positions are `1..=n`.
    pub byline: Vec<Authorship>,
}

impl Publication {
    pub fn authors(&self) -> usize {
        self.byline.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdsEntry {
    pub uda: String,
    pub convention: Convention,
}

/// SDS → UDA mapping plus the co-authorship convention of each SDS.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldTaxonomy {
    entries: BTreeMap<String, SdsEntry>,
}

impl FieldTaxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        sds: impl Into<String>,
        uda: impl Into<String>,
        convention: Convention,
    ) -> Result<()> {
        let sds = sds.into();
        let uda = uda.into();
        check_group_code("SDS", &sds)?;
        check_group_code("UDA", &uda)?;
        if self.entries.contains_key(&sds) {
            return Err(Error::InvalidParameter(format!(
                "SDS `{sds}` declared twice in taxonomy"
            )));
        }
        self.entries.insert(sds, SdsEntry { uda, convention });
        Ok(())
    }

    pub fn get(&self, sds: &str) -> Option<&SdsEntry> {
        self.entries.get(sds)
    }

    pub fn uda_of(&self, sds: &str) -> Option<&str> {
        self.entries.get(sds).map(|e| e.uda.as_str())
    }

    pub fn contains(&self, sds: &str) -> bool {
        self.entries.contains_key(sds)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SdsEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

// Grouped unit ids are written as `group/member`, so group codes may not
// contain the separator.
fn check_group_code(kind: &str, code: &str) -> Result<()> {
    if code.is_empty() || code.contains('/') {
        return Err(Error::InvalidParameter(format!(
            "{kind} code `{code}` must be nonempty and must not contain `/`"
        )));
    }
    Ok(())
}

/// National average salary by rank and (optionally) seniority band.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SalarySchedule {
    entries: BTreeMap<(AcademicRank, Option<String>), f64>,
}

impl SalarySchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        rank: AcademicRank,
        band: Option<String>,
        salary_per_year: f64,
    ) -> Result<()> {
        if !(salary_per_year.is_finite() && salary_per_year > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "salary for rank `{rank}` must be positive, got {salary_per_year}"
            )));
        }
        let key = (rank, band);
        if self.entries.contains_key(&key) {
            return Err(Error::InvalidParameter(format!(
                "salary schedule entry for rank `{}` band {:?} declared twice",
                key.0, key.1
            )));
        }
        self.entries.insert(key, salary_per_year);
        Ok(())
    }

    pub fn with(mut self, rank: AcademicRank, salary_per_year: f64) -> Result<Self> {
        self.insert(rank, None, salary_per_year)?;
        Ok(self)
    }

    /// Salary for a rank: the band-less entry when present, otherwise the
    /// average over the rank's seniority bands.
    pub fn for_rank(&self, rank: &AcademicRank) -> Option<f64> {
        if let Some(v) = self.entries.get(&(rank.clone(), None)) {
            return Some(*v);
        }
        let banded: Vec<f64> = self
            .entries
            .iter()
            .filter(|((r, _), _)| r == rank)
            .map(|(_, v)| *v)
            .collect();
        if banded.is_empty() {
            None
        } else {
            Some(banded.iter().sum::<f64>() / banded.len() as f64)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AcademicRank, Option<&str>, f64)> {
        self.entries
            .iter()
            .map(|((r, b), v)| (r, b.as_deref(), *v))
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        let mut out = SalarySchedule::new();
        for ((r, b), v) in &self.entries {
            out.insert(r.clone(), b.clone(), v * k)?;
        }
        Ok(out)
    }
}

/// Observation window, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: i32,
    pub end: i32,
}

impl Window {
    pub fn new(start: i32, end: i32) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidParameter(format!(
                "empty observation window {start}..={end}"
            )));
        }
        Ok(Window { start, end })
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }

    pub fn years(&self) -> u32 {
        (self.end - self.start + 1) as u32
    }
}

/// Units dropped from aggregate rankings by staff-size thresholds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitExclusions {
    /// (institution, UDA) pairs left out of per-UDA rankings.
    pub uda_groups: BTreeSet<(String, String)>,
    /// Institutions left out of whole-institution rankings.
    pub institutions: BTreeSet<String>,
}

impl UnitExclusions {
    pub fn excludes_uda_group(&self, institution: &str, uda: &str) -> bool {
        self.uda_groups
            .contains(&(institution.to_owned(), uda.to_owned()))
    }

    pub fn excludes_institution(&self, institution: &str) -> bool {
        self.institutions.contains(institution)
    }
}

/// Researchers, their publications and the reference tables needed to
/// score them. Immutable once built; every invariant is checked in
/// [`Corpus::new`].
#[derive(Debug, Clone)]
pub struct Corpus {
    researchers: Vec<Researcher>,
    publications: Vec<Publication>,
    taxonomy: FieldTaxonomy,
    salaries: SalarySchedule,
    window: Window,
    citation_cutoff: Option<NaiveDate>,
    exclusions: UnitExclusions,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(
        researchers: Vec<Researcher>,
        mut publications: Vec<Publication>,
        taxonomy: FieldTaxonomy,
        salaries: SalarySchedule,
        window: Window,
        citation_cutoff: Option<NaiveDate>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(researchers.len());
        for (i, r) in researchers.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::DuplicateResearcher(r.id.clone()));
            }
            validate_researcher(r, &taxonomy)?;
        }

        let mut pub_ids = HashSet::with_capacity(publications.len());
        for p in &mut publications {
            if !pub_ids.insert(p.id.clone()) {
                return Err(Error::InvalidCorpus(format!(
                    "duplicate publication id `{}`",
                    p.id
                )));
            }
            if !window.contains(p.year) {
                return Err(Error::InvalidCorpus(format!(
                    "publication `{}` year {} outside window {}..={}",
                    p.id, p.year, window.start, window.end
                )));
            }
            let mut seen_cat = HashSet::new();
            p.subject_categories.retain(|c| seen_cat.insert(c.clone()));
            if p.subject_categories.is_empty() {
                return Err(Error::InvalidCorpus(format!(
                    "publication `{}` has no subject category",
                    p.id
                )));
            }
            p.byline.sort_by_key(|a| a.position);
            validate_byline(p, &index)?;
        }

        Ok(Corpus {
            researchers,
            publications,
            taxonomy,
            salaries,
            window,
            citation_cutoff,
            exclusions: UnitExclusions::default(),
            index,
        })
    }

    pub fn researchers(&self) -> &[Researcher] {
        &self.researchers
    }

    pub fn publications(&self) -> &[Publication] {
        &self.publications
    }

    pub fn taxonomy(&self) -> &FieldTaxonomy {
        &self.taxonomy
    }

    pub fn salaries(&self) -> &SalarySchedule {
        &self.salaries
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn citation_cutoff(&self) -> Option<NaiveDate> {
        self.citation_cutoff
    }

    pub fn exclusions(&self) -> &UnitExclusions {
        &self.exclusions
    }

    pub fn researcher(&self, id: &str) -> Option<&Researcher> {
        self.index.get(id).map(|&i| &self.researchers[i])
    }

    pub fn researcher_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// UDA of a researcher, through the taxonomy.
    pub fn uda_of(&self, researcher: &Researcher) -> &str {
        self.taxonomy
            .uda_of(&researcher.sds)
            .expect("researcher SDS validated against taxonomy")
    }

    pub(crate) fn with_exclusions(mut self, exclusions: UnitExclusions) -> Self {
        self.exclusions = exclusions;
        self
    }

    /// Same corpus with every explicit and scheduled salary multiplied by `k`.
    pub fn with_scaled_salaries(&self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "salary scale must be positive, got {k}"
            )));
        }
        let mut out = self.clone();
        out.salaries = self.salaries.scaled(k)?;
        for r in &mut out.researchers {
            if let Some(s) = r.salary.as_mut() {
                *s *= k;
            }
        }
        Ok(out)
    }
}

fn validate_researcher(r: &Researcher, taxonomy: &FieldTaxonomy) -> Result<()> {
    if r.id.is_empty() {
        return Err(Error::InvalidCorpus("researcher with empty id".into()));
    }
    if !(r.years_in_window.is_finite() && r.years_in_window > 0.0) {
        return Err(Error::InvalidCorpus(format!(
            "researcher `{}` years_in_window must be > 0, got {}",
            r.id, r.years_in_window
        )));
    }
    if let Some(s) = r.salary {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidCorpus(format!(
                "researcher `{}` salary must be > 0, got {s}",
                r.id
            )));
        }
    }
    if !taxonomy.contains(&r.sds) {
        return Err(Error::UnknownSds {
            researcher: r.id.clone(),
            sds: r.sds.clone(),
        });
    }
    Ok(())
}

fn validate_byline(p: &Publication, index: &HashMap<String, usize>) -> Result<()> {
    if p.byline.is_empty() {
        return Err(Error::InvalidCorpus(format!(
            "publication `{}` has an empty byline",
            p.id
        )));
    }
    let mut seen = HashSet::new();
    for (i, a) in p.byline.iter().enumerate() {
        if a.position != i + 1 {
            return Err(Error::InvalidCorpus(format!(
                "publication `{}` byline positions must be 1..{} without gaps or repeats",
                p.id,
                p.byline.len()
            )));
        }
        if let Some(rid) = &a.researcher_id {
            if !index.contains_key(rid) {
                return Err(Error::InvalidCorpus(format!(
                    "publication `{}` names unknown researcher `{rid}`",
                    p.id
                )));
            }
            if !seen.insert(rid.as_str()) {
                return Err(Error::InvalidCorpus(format!(
                    "researcher `{rid}` appears twice in the byline of `{}`",
                    p.id
                )));
            }
        }
    }
    Ok(())
}
