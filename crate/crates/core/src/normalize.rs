//! Citation baselines and field-normalized impact.
//!
//! The scaling factor `c̄` of a (year, subject category) cohort is the mean
//! citation count over the cohort's *cited* publications. A publication's
//! normalized impact is `c / c̄`; for publications filed under several
//! categories it is the unweighted mean of the per-category ratios.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CsvTable, Publication};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BaselineKey {
    pub year: i32,
    pub category: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntry {
    /// Mean citations of cited publications, always > 0.
    pub c_bar: f64,
    pub n_cited: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaselineTable {
    entries: BTreeMap<BaselineKey, BaselineEntry>,
}

impl BaselineTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, year: i32, category: impl Into<String>, entry: BaselineEntry) -> Result<()> {
        let category = category.into();
        if !(entry.c_bar.is_finite() && entry.c_bar > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "baseline for ({year}, {category}) must be > 0, got {}",
                entry.c_bar
            )));
        }
        self.entries.insert(BaselineKey { year, category }, entry);
        Ok(())
    }

    pub fn get(&self, year: i32, category: &str) -> Option<&BaselineEntry> {
        // BTreeMap lookups need an owned key; the table is small enough.
        self.entries.get(&BaselineKey {
            year,
            category: category.to_owned(),
        })
    }

    pub fn c_bar(&self, year: i32, category: &str) -> Option<f64> {
        self.get(year, category).map(|e| e.c_bar)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BaselineKey, &BaselineEntry)> {
        self.entries.iter()
    }

    /// Reads `year,category,c_bar,n_cited`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut table = BaselineTable::new();
        CsvTable::open(path, &["year", "category", "c_bar"])?.for_each_row(|row| {
            let year: i32 = row.parse("year")?;
            let category = row.req("category")?.to_owned();
            let c_bar: f64 = row.parse("c_bar")?;
            let n_cited: u64 = row.parse_opt("n_cited")?.unwrap_or(0);
            table
                .insert(year, category, BaselineEntry { c_bar, n_cited })
                .map_err(|e| row.error("c_bar", e.to_string()))
        })?;
        Ok(table)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,category,c_bar,n_cited\n");
        for (k, e) in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", k.year, k.category, e.c_bar, e.n_cited));
        }
        out
    }
}

/// Builds the cited-publication mean for every (year, category) cohort in
/// the corpus. Cohorts without a cited publication get no entry.
pub fn compute_baselines(corpus: &Corpus) -> BaselineTable {
    compute_baselines_from(corpus.publications())
}

pub fn compute_baselines_from<'a>(
    publications: impl IntoIterator<Item = &'a Publication>,
) -> BaselineTable {
    // Integer sums, so the result does not depend on visiting order.
    let mut acc: BTreeMap<BaselineKey, (u128, u64)> = BTreeMap::new();
    for p in publications {
        if p.citations == 0 {
            continue;
        }
        for cat in &p.subject_categories {
            let slot = acc
                .entry(BaselineKey {
                    year: p.year,
                    category: cat.clone(),
                })
                .or_default();
            slot.0 += u128::from(p.citations);
            slot.1 += 1;
        }
    }
    BaselineTable {
        entries: acc
            .into_iter()
            .map(|(k, (sum, n))| {
                (
                    k,
                    BaselineEntry {
                        c_bar: sum as f64 / n as f64,
                        n_cited: n,
                    },
                )
            })
            .collect(),
    }
}

/// `c / c̄` for the publication, averaged over its subject categories.
pub fn normalized_impact(publication: &Publication, baselines: &BaselineTable) -> Result<f64> {
    if publication.citations == 0 {
        return Ok(0.0);
    }
    let c = publication.citations as f64;
    let mut sum = 0.0;
    for cat in &publication.subject_categories {
        let c_bar = baselines
            .c_bar(publication.year, cat)
            .ok_or_else(|| Error::MissingBaseline {
                year: publication.year,
                category: cat.clone(),
            })?;
        sum += c / c_bar;
    }
    Ok(sum / publication.subject_categories.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Authorship;
    use proptest::prelude::*;

    fn publication(id: &str, year: i32, cats: &[&str], citations: u64) -> Publication {
        Publication {
            id: id.into(),
            year,
            subject_categories: cats.iter().map(|c| (*c).to_owned()).collect(),
            citations,
            byline: vec![Authorship {
                position: 1,
                researcher_id: None,
                institution_id: "X".into(),
            }],
        }
    }

    #[test]
    fn cited_mean_ignores_uncited() {
        let pubs: Vec<Publication> = [0, 3, 5, 10]
            .iter()
            .enumerate()
            .map(|(i, &c)| publication(&i.to_string(), 2008, &["Biochem"], c))
            .collect();
        let t = compute_baselines_from(&pubs);
        // cited set {3, 5, 10}
        assert_eq!(t.c_bar(2008, "Biochem"), Some(6.0));
        assert_eq!(t.get(2008, "Biochem").unwrap().n_cited, 3);
    }

    #[test]
    fn singleton_and_uncited_cohorts() {
        let pubs = vec![
            publication("a", 2009, &["Math"], 7),
            publication("b", 2010, &["Geo"], 0),
            publication("c", 2010, &["Geo"], 0),
        ];
        let t = compute_baselines_from(&pubs);
        assert_eq!(t.c_bar(2009, "Math"), Some(7.0));
        assert_eq!(t.c_bar(2010, "Geo"), None);
    }

    #[test]
    fn multi_category_publication_feeds_each_cohort() {
        let pubs = vec![
            publication("a", 2008, &["A", "B"], 4),
            publication("b", 2008, &["B"], 8),
        ];
        let t = compute_baselines_from(&pubs);
        assert_eq!(t.c_bar(2008, "A"), Some(4.0));
        assert_eq!(t.c_bar(2008, "B"), Some(6.0));
    }

    #[test]
    fn impact_examples() {
        let mut t = BaselineTable::new();
        t.insert(2008, "A", BaselineEntry { c_bar: 6.0, n_cited: 1 }).unwrap();
        t.insert(2008, "B", BaselineEntry { c_bar: 12.0, n_cited: 1 }).unwrap();
        assert_eq!(normalized_impact(&publication("p", 2008, &["A"], 12), &t).unwrap(), 2.0);
        assert_eq!(normalized_impact(&publication("p", 2008, &["A", "B"], 0), &t).unwrap(), 0.0);
        assert_eq!(normalized_impact(&publication("p", 2008, &["A", "B"], 6), &t).unwrap(), 0.75);
    }

    #[test]
    fn missing_key_with_citations_errors() {
        let t = BaselineTable::new();
        let err = normalized_impact(&publication("p", 2007, &["Z"], 3), &t).unwrap_err();
        assert!(matches!(err, Error::MissingBaseline { year: 2007, .. }));
        // uncited needs no baseline
        assert_eq!(normalized_impact(&publication("p", 2007, &["Z"], 0), &t).unwrap(), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let pubs = vec![
            publication("a", 2008, &["A"], 3),
            publication("b", 2008, &["A"], 4),
            publication("c", 2009, &["B"], 1),
        ];
        let t = compute_baselines_from(&pubs);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("baselines.csv");
        std::fs::write(&path, t.to_csv()).unwrap();
        assert_eq!(BaselineTable::read_csv(&path).unwrap(), t);
    }

    proptest! {
        #[test]
        fn cohort_mean_impact_is_one(cites in proptest::collection::vec(0u64..500, 1..60)) {
            let pubs: Vec<Publication> = cites
                .iter()
                .enumerate()
                .map(|(i, &c)| publication(&i.to_string(), 2008, &["K"], c))
                .collect();
            let t = compute_baselines_from(&pubs);
            let cited: Vec<f64> = pubs
                .iter()
                .filter(|p| p.citations > 0)
                .map(|p| normalized_impact(p, &t).unwrap())
                .collect();
            prop_assume!(!cited.is_empty());
            let mean = cited.iter().sum::<f64>() / cited.len() as f64;
            prop_assert!((mean - 1.0).abs() < 1e-12);
        }

        #[test]
        fn doubling_a_cohort_keeps_impacts(cites in proptest::collection::vec(1u64..500, 1..40)) {
            let pubs: Vec<Publication> = cites
                .iter()
                .enumerate()
                .map(|(i, &c)| publication(&i.to_string(), 2008, &["K"], c))
                .collect();
            let doubled: Vec<Publication> = pubs
                .iter()
                .map(|p| Publication { citations: 2 * p.citations, ..p.clone() })
                .collect();
            let t1 = compute_baselines_from(&pubs);
            let t2 = compute_baselines_from(&doubled);
            for (a, b) in pubs.iter().zip(&doubled) {
                let x = normalized_impact(a, &t1).unwrap();
                let y = normalized_impact(b, &t2).unwrap();
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn impact_strictly_increases_with_citations(c in 0u64..10_000, c_bar in 0.5f64..100.0) {
            let mut t = BaselineTable::new();
            t.insert(2008, "K", BaselineEntry { c_bar, n_cited: 1 }).unwrap();
            let lo = normalized_impact(&publication("a", 2008, &["K"], c), &t).unwrap();
            let hi = normalized_impact(&publication("a", 2008, &["K"], c + 1), &t).unwrap();
            prop_assert!(hi > lo);
        }
    }
}
