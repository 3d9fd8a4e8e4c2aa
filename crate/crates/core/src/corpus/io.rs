//! CSV ingestion and canonical export of a [`Corpus`].
//!
//! Every file is UTF-8, comma-delimited, with a header row. Columns are
//! matched by header name, so column order in input files is free; the
//! exporter always writes the canonical order listed below.
//!
//! | file               | columns                                                             |
//! |--------------------|---------------------------------------------------------------------|
//! | `researchers.csv`  | `id,name,sds,rank,salary,institution,department,years_in_window`     |
//! | `publications.csv` | `id,year,citations,subject_categories` (categories `;`-separated)   |
//! | `bylines.csv`      | `publication_id,position,researcher_id,institution_id`               |
//! | `taxonomy.csv`     | `sds,uda,convention`                                                |
//! | `salaries.csv`     | `rank,seniority_band,salary_per_year`                               |

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use csv::StringRecord;
use serde::Serialize;

use super::model::{
    AcademicRank, Authorship, Convention, Corpus, FieldTaxonomy, Publication, Researcher,
    SalarySchedule, Window,
};
use crate::error::{Error, Result};

pub const RESEARCHERS_FILE: &str = "researchers.csv";
pub const PUBLICATIONS_FILE: &str = "publications.csv";
pub const BYLINES_FILE: &str = "bylines.csv";
pub const TAXONOMY_FILE: &str = "taxonomy.csv";
pub const SALARIES_FILE: &str = "salaries.csv";

/// Locations of the five corpus files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPaths {
    pub researchers: PathBuf,
    pub publications: PathBuf,
    pub bylines: PathBuf,
    pub taxonomy: PathBuf,
    pub salaries: PathBuf,
}

impl CorpusPaths {
    /// The standard file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        CorpusPaths {
            researchers: dir.join(RESEARCHERS_FILE),
            publications: dir.join(PUBLICATIONS_FILE),
            bylines: dir.join(BYLINES_FILE),
            taxonomy: dir.join(TAXONOMY_FILE),
            salaries: dir.join(SALARIES_FILE),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Path> {
        [
            &self.researchers,
            &self.publications,
            &self.bylines,
            &self.taxonomy,
            &self.salaries,
        ]
        .into_iter()
        .map(PathBuf::as_path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOptions {
    pub window: Window,
    pub citation_cutoff: Option<NaiveDate>,
}

/// Row counts and non-fatal findings from a load.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub researchers: usize,
    pub publications: usize,
    pub authorships: usize,
    pub external_authorships: usize,
    pub warnings: Vec<String>,
}

pub fn load_corpus(paths: &CorpusPaths, options: &LoadOptions) -> Result<(Corpus, LoadReport)> {
    let mut report = LoadReport::default();

    let taxonomy = read_taxonomy(&paths.taxonomy)?;
    let salaries = read_salaries(&paths.salaries)?;
    let researchers = read_researchers(&paths.researchers, &taxonomy)?;
    let mut publications = read_publications(&paths.publications)?;
    if publications.is_empty() {
        report
            .warnings
            .push(format!("{}: no publications", paths.publications.display()));
    }

    let known: HashSet<&str> = researchers.iter().map(|r| r.id.as_str()).collect();
    attach_bylines(&paths.bylines, &mut publications, &known, &mut report)?;

    let before = publications.len();
    publications.retain(|p| options.window.contains(p.year));
    let dropped = before - publications.len();
    if dropped > 0 {
        report.warnings.push(format!(
            "{dropped} publication(s) outside window {}..={} ignored",
            options.window.start, options.window.end
        ));
    }

    report.researchers = researchers.len();
    report.publications = publications.len();
    report.authorships = publications.iter().map(|p| p.byline.len()).sum();
    report.external_authorships = publications
        .iter()
        .flat_map(|p| &p.byline)
        .filter(|a| a.researcher_id.is_none())
        .count();

    let corpus = Corpus::new(
        researchers,
        publications,
        taxonomy,
        salaries,
        options.window,
        options.citation_cutoff,
    )?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok((corpus, report))
}

/// Writes the corpus as canonical CSV files into `dir`.
pub fn export_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<CorpusPaths> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = CorpusPaths::in_dir(dir);

    write_rows(
        &paths.researchers,
        &[
            "id",
            "name",
            "sds",
            "rank",
            "salary",
            "institution",
            "department",
            "years_in_window",
        ],
        corpus.researchers().iter().map(|r| {
            vec![
                r.id.clone(),
                r.name.clone().unwrap_or_default(),
                r.sds.clone(),
                r.rank.to_string(),
                r.salary.map(|s| s.to_string()).unwrap_or_default(),
                r.institution.clone(),
                r.department.clone().unwrap_or_default(),
                r.years_in_window.to_string(),
            ]
        }),
    )?;
    write_rows(
        &paths.publications,
        &["id", "year", "citations", "subject_categories"],
        corpus.publications().iter().map(|p| {
            vec![
                p.id.clone(),
                p.year.to_string(),
                p.citations.to_string(),
                p.subject_categories.join(";"),
            ]
        }),
    )?;
    write_rows(
        &paths.bylines,
        &["publication_id", "position", "researcher_id", "institution_id"],
        corpus.publications().iter().flat_map(|p| {
            p.byline.iter().map(move |a| {
                vec![
                    p.id.clone(),
                    a.position.to_string(),
                    a.researcher_id.clone().unwrap_or_default(),
                    a.institution_id.clone(),
                ]
            })
        }),
    )?;
    write_rows(
        &paths.taxonomy,
        &["sds", "uda", "convention"],
        corpus.taxonomy().iter().map(|(sds, e)| {
            vec![
                sds.to_owned(),
                e.uda.clone(),
                e.convention.as_str().to_owned(),
            ]
        }),
    )?;
    write_rows(
        &paths.salaries,
        &["rank", "seniority_band", "salary_per_year"],
        corpus.salaries().iter().map(|(rank, band, v)| {
            vec![
                rank.to_string(),
                band.unwrap_or_default().to_owned(),
                v.to_string(),
            ]
        }),
    )?;
    Ok(paths)
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| Error::BadFile {
        path: path.to_owned(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// A header-indexed CSV file.
pub(crate) struct CsvTable {
    path: PathBuf,
    columns: HashMap<String, usize>,
    reader: Option<csv::Reader<File>>,
}

pub(crate) struct Row<'a> {
    table: &'a CsvTable,
    record: StringRecord,
    line: u64,
}

impl CsvTable {
    pub(crate) fn open(path: &Path, required: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let empty = file.metadata().map(|m| m.len() == 0).unwrap_or(false);
        if empty {
            return Ok(CsvTable {
                path: path.to_owned(),
                columns: HashMap::new(),
                reader: None,
            });
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let headers = reader.headers().map_err(|e| Error::BadFile {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        let columns: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_owned(), i))
            .collect();
        if columns.len() != headers.len() {
            return Err(Error::BadFile {
                path: path.to_owned(),
                message: "duplicate column names in header".into(),
            });
        }
        for col in required {
            if !columns.contains_key(*col) {
                return Err(Error::BadFile {
                    path: path.to_owned(),
                    message: format!("missing required column `{col}`"),
                });
            }
        }
        Ok(CsvTable {
            path: path.to_owned(),
            columns,
            reader: Some(reader),
        })
    }

    pub(crate) fn path(&self) -> &Path {
        &self.path
    }

    pub(crate) fn headers(&self) -> Vec<(&str, usize)> {
        let mut h: Vec<(&str, usize)> = self.columns.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        h.sort_by_key(|(_, i)| *i);
        h
    }

    /// Calls `f` on every data row.
    pub(crate) fn for_each_row(
        mut self,
        mut f: impl FnMut(&Row<'_>) -> Result<()>,
    ) -> Result<()> {
        let Some(mut reader) = self.reader.take() else {
            return Ok(());
        };
        let mut record = StringRecord::new();
        loop {
            let more = reader.read_record(&mut record).map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                Error::Malformed {
                    path: self.path.clone(),
                    line,
                    column: String::new(),
                    message: e.to_string(),
                }
            })?;
            if !more {
                return Ok(());
            }
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let row = Row {
                table: &self,
                record: record.clone(),
                line,
            };
            f(&row)?;
        }
    }
}

impl Row<'_> {
    pub(crate) fn line(&self) -> u64 {
        self.line
    }

    pub(crate) fn error(&self, column: &str, message: impl Into<String>) -> Error {
        Error::Malformed {
            path: self.table.path.clone(),
            line: self.line,
            column: column.to_owned(),
            message: message.into(),
        }
    }

    /// Trimmed, nonempty value of an optional column.
    pub(crate) fn opt(&self, column: &str) -> Option<&str> {
        let idx = *self.table.columns.get(column)?;
        self.record.get(idx).filter(|v| !v.is_empty())
    }

    pub(crate) fn at(&self, idx: usize) -> Option<&str> {
        self.record.get(idx)
    }

    pub(crate) fn req(&self, column: &str) -> Result<&str> {
        self.opt(column)
            .ok_or_else(|| self.error(column, "missing value"))
    }

    pub(crate) fn parse<T: FromStr>(&self, column: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.req(column)?;
        raw.parse::<T>()
            .map_err(|e| self.error(column, format!("cannot parse `{raw}`: {e}")))
    }

    pub(crate) fn parse_opt<T: FromStr>(&self, column: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.opt(column)
            .map(|raw| {
                raw.parse::<T>()
                    .map_err(|e| self.error(column, format!("cannot parse `{raw}`: {e}")))
            })
            .transpose()
    }
}

fn read_taxonomy(path: &Path) -> Result<FieldTaxonomy> {
    let mut taxonomy = FieldTaxonomy::new();
    CsvTable::open(path, &["sds", "uda", "convention"])?.for_each_row(|row| {
        let convention: Convention = row
            .req("convention")?
            .parse()
            .map_err(|e: Error| row.error("convention", e.to_string()))?;
        taxonomy
            .insert(row.req("sds")?, row.req("uda")?, convention)
            .map_err(|e| row.error("sds", e.to_string()))
    })?;
    if taxonomy.is_empty() {
        return Err(Error::BadFile {
            path: path.to_owned(),
            message: "taxonomy declares no SDS".into(),
        });
    }
    Ok(taxonomy)
}

fn read_salaries(path: &Path) -> Result<SalarySchedule> {
    let mut schedule = SalarySchedule::new();
    CsvTable::open(path, &["rank", "salary_per_year"])?.for_each_row(|row| {
        let rank: AcademicRank = row
            .req("rank")?
            .parse()
            .map_err(|e: Error| row.error("rank", e.to_string()))?;
        let band = row.opt("seniority_band").map(str::to_owned);
        let salary: f64 = row.parse("salary_per_year")?;
        schedule
            .insert(rank, band, salary)
            .map_err(|e| row.error("salary_per_year", e.to_string()))
    })?;
    Ok(schedule)
}

fn read_researchers(path: &Path, taxonomy: &FieldTaxonomy) -> Result<Vec<Researcher>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    CsvTable::open(
        path,
        &["id", "sds", "rank", "institution", "years_in_window"],
    )?
    .for_each_row(|row| {
        let id = row.req("id")?.to_owned();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateResearcher(id));
        }
        let sds = row.req("sds")?.to_owned();
        if !taxonomy.contains(&sds) {
            return Err(Error::UnknownSds { researcher: id, sds });
        }
        let rank: AcademicRank = row
            .req("rank")?
            .parse()
            .map_err(|e: Error| row.error("rank", e.to_string()))?;
        let salary: Option<f64> = row.parse_opt("salary")?;
        if let Some(s) = salary {
            if !(s.is_finite() && s > 0.0) {
                return Err(row.error("salary", format!("salary must be > 0, got {s}")));
            }
        }
        let years: f64 = row.parse("years_in_window")?;
        if !(years.is_finite() && years > 0.0) {
            return Err(row.error(
                "years_in_window",
                format!("years_in_window must be > 0, got {years}"),
            ));
        }
        out.push(Researcher {
            id,
            name: row.opt("name").map(str::to_owned),
            sds,
            rank,
            salary,
            institution: row.req("institution")?.to_owned(),
            department: row.opt("department").map(str::to_owned),
            years_in_window: years,
        });
        Ok(())
    })?;
    Ok(out)
}

fn read_publications(path: &Path) -> Result<Vec<Publication>> {
    let mut out = Vec::new();
    CsvTable::open(path, &["id", "year", "citations", "subject_categories"])?.for_each_row(
        |row| {
            let citations: i64 = row.parse("citations")?;
            if citations < 0 {
                return Err(row.error(
                    "citations",
                    format!("citations must be >= 0, got {citations}"),
                ));
            }
            let categories: Vec<String> = row
                .req("subject_categories")?
                .split(';')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(str::to_owned)
                .collect();
            if categories.is_empty() {
                return Err(row.error("subject_categories", "no subject category"));
            }
            out.push(Publication {
                id: row.req("id")?.to_owned(),
                year: row.parse("year")?,
                subject_categories: categories,
                citations: citations as u64,
                byline: Vec::new(),
            });
            Ok(())
        },
    )?;
    Ok(out)
}

fn attach_bylines(
    path: &Path,
    publications: &mut [Publication],
    known: &HashSet<&str>,
    report: &mut LoadReport,
) -> Result<()> {
    let index: HashMap<String, usize> = publications
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.clone(), i))
        .collect();
    let table = CsvTable::open(path, &["publication_id", "position", "institution_id"])?;
    let table_path = table.path().to_owned();
    table.for_each_row(|row| {
        let pid = row.req("publication_id")?;
        let Some(&pi) = index.get(pid) else {
            return Err(row.error(
                "publication_id",
                format!("unknown publication `{pid}`"),
            ));
        };
        let position: usize = row.parse("position")?;
        if position == 0 {
            return Err(row.error("position", "positions start at 1"));
        }
        let mut researcher_id = row.opt("researcher_id").map(str::to_owned);
        if let Some(rid) = &researcher_id {
            if !known.contains(rid.as_str()) {
                report.warnings.push(format!(
                    "{}:{}: unknown researcher `{rid}` kept as external author",
                    table_path.display(),
                    row.line()
                ));
                researcher_id = None;
            }
        }
        publications[pi].byline.push(Authorship {
            position,
            researcher_id,
            institution_id: row.req("institution_id")?.to_owned(),
        });
        Ok(())
    })?;
    if let Some(p) = publications.iter().find(|p| p.byline.is_empty()) {
        return Err(Error::BadFile {
            path: path.to_owned(),
            message: format!("publication `{}` has no byline rows", p.id),
        });
    }
    Ok(())
}

/// Reads a whole file into bytes, mapping the error to the file path.
pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
