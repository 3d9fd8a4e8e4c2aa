//! Corpus data model, ingestion, exclusion filters and synthetic fixtures.

mod io;
mod model;
mod synth;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use io::{
    export_corpus, load_corpus, read_bytes, CorpusPaths, LoadOptions, LoadReport, BYLINES_FILE,
    PUBLICATIONS_FILE, RESEARCHERS_FILE, SALARIES_FILE, TAXONOMY_FILE,
};
pub(crate) use io::{CsvTable, Row};
pub use model::{
    AcademicRank, Authorship, Convention, Corpus, FieldTaxonomy, Publication, Researcher,
    SalarySchedule, SdsEntry, UnitExclusions, Window,
};
pub use synth::{generate_synthetic_corpus, lotka_pmf, SyntheticParams};

use crate::error::{Error, Result};

/// Yearly salary of a researcher: the explicit value when the record has
/// one, otherwise the national schedule for the researcher's rank.
pub fn resolve_salary(researcher: &Researcher, schedule: &SalarySchedule) -> Result<f64> {
    if let Some(s) = researcher.salary {
        return Ok(s);
    }
    schedule
        .for_rank(&researcher.rank)
        .ok_or_else(|| Error::MissingRank(researcher.rank.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExclusionThresholds {
    /// Researchers with fewer years of work in the window are dropped.
    pub min_years: f64,
    /// (institution, UDA) groups with less staff leave per-UDA rankings.
    pub min_staff_uda: usize,
    /// Institutions with less total staff leave whole-institution rankings.
    pub min_staff_total: usize,
}

impl Default for ExclusionThresholds {
    fn default() -> Self {
        ExclusionThresholds {
            min_years: 3.0,
            min_staff_uda: 10,
            min_staff_total: 30,
        }
    }
}

impl ExclusionThresholds {
    pub const NONE: ExclusionThresholds = ExclusionThresholds {
        min_years: 0.0,
        min_staff_uda: 0,
        min_staff_total: 0,
    };
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExclusionReport {
    pub researchers_removed: Vec<String>,
    pub uda_groups_excluded: Vec<(String, String)>,
    pub institutions_excluded: Vec<String>,
}

/// Drops researchers with too short a presence in the window and marks
/// undersized (institution, UDA) groups and institutions as excluded from
/// their aggregate rankings.
///
/// Removed researchers stay in the bylines of their publications as
/// external authors, so co-author counts are unchanged.
pub fn apply_exclusions(
    corpus: &Corpus,
    thresholds: &ExclusionThresholds,
) -> Result<(Corpus, ExclusionReport)> {
    if !(thresholds.min_years >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "min_years must be >= 0, got {}",
            thresholds.min_years
        )));
    }
    let mut report = ExclusionReport::default();

    let (kept, removed): (Vec<Researcher>, Vec<Researcher>) = corpus
        .researchers()
        .iter()
        .cloned()
        .partition(|r| r.years_in_window >= thresholds.min_years);
    report.researchers_removed = removed.into_iter().map(|r| r.id).collect();

    let publications: Vec<Publication> = if report.researchers_removed.is_empty() {
        corpus.publications().to_vec()
    } else {
        let gone: std::collections::HashSet<&str> = report
            .researchers_removed
            .iter()
            .map(String::as_str)
            .collect();
        corpus
            .publications()
            .iter()
            .map(|p| {
                let mut p = p.clone();
                for a in &mut p.byline {
                    if a.researcher_id.as_deref().is_some_and(|id| gone.contains(id)) {
                        a.researcher_id = None;
                    }
                }
                p
            })
            .collect()
    };

    let mut uda_staff: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut total_staff: BTreeMap<String, usize> = BTreeMap::new();
    for r in &kept {
        let uda = corpus
            .taxonomy()
            .uda_of(&r.sds)
            .expect("validated SDS")
            .to_owned();
        *uda_staff.entry((r.institution.clone(), uda)).or_default() += 1;
        *total_staff.entry(r.institution.clone()).or_default() += 1;
    }

    let mut exclusions = corpus.exclusions().clone();
    for (group, n) in uda_staff {
        if n < thresholds.min_staff_uda {
            exclusions.uda_groups.insert(group);
        }
    }
    for (inst, n) in total_staff {
        if n < thresholds.min_staff_total {
            exclusions.institutions.insert(inst);
        }
    }
    report.uda_groups_excluded = exclusions.uda_groups.iter().cloned().collect();
    report.institutions_excluded = exclusions.institutions.iter().cloned().collect();

    let filtered = Corpus::new(
        kept,
        publications,
        corpus.taxonomy().clone(),
        corpus.salaries().clone(),
        corpus.window(),
        corpus.citation_cutoff(),
    )?
    .with_exclusions(exclusions);
    Ok((filtered, report))
}
