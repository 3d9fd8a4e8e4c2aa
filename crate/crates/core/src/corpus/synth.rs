//! Seeded synthetic corpora for fixtures, tests and benchmarks.
//!
//! Publication counts of productive researchers follow Lotka's inverse-power
//! law, `P(k) ∝ k^-a` for `k = 1..=max_papers`. Citations are drawn from a
//! gamma-Poisson mixture around each subject category's intensity, which
//! gives the overdispersed, zero-inflated shape of real citation counts.

use chrono::NaiveDate;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Poisson};
use serde::{Deserialize, Serialize};

use super::model::{
    AcademicRank, Authorship, Convention, Corpus, FieldTaxonomy, Publication, Researcher,
    SalarySchedule, Window,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticParams {
    pub researchers: usize,
    pub sds_count: usize,
    pub uda_count: usize,
    pub institutions: usize,
    pub departments_per_institution: usize,
    pub window_start: i32,
    pub window_end: i32,
    pub categories_per_sds: usize,
    /// Mean citations per category; cycled over the categories.
    pub citation_intensity: Vec<f64>,
    pub lotka_exponent: f64,
    pub max_papers: usize,
    /// Share of researchers with no publication at all.
    pub unproductive_share: f64,
    /// Probability that a co-author slot is filled by a census researcher.
    pub internal_coauthor_share: f64,
    pub mean_coauthors: f64,
    pub max_authors: usize,
    pub multi_category_share: f64,
    /// Share of researchers present for only part of the window.
    pub partial_presence_share: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            researchers: 500,
            sds_count: 5,
            uda_count: 2,
            institutions: 12,
            departments_per_institution: 3,
            window_start: 2006,
            window_end: 2010,
            categories_per_sds: 2,
            citation_intensity: vec![4.0, 9.0, 15.0, 6.5, 22.0],
            lotka_exponent: 2.0,
            max_papers: 60,
            unproductive_share: 0.1,
            internal_coauthor_share: 0.3,
            mean_coauthors: 3.0,
            max_authors: 12,
            multi_category_share: 0.2,
            partial_presence_share: 0.15,
        }
    }
}

impl SyntheticParams {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("synthetic corpus: {m}")));
        if self.researchers == 0 {
            return bad("need at least one researcher");
        }
        if self.sds_count == 0 || self.uda_count == 0 || self.uda_count > self.sds_count {
            return bad("need 1 <= uda_count <= sds_count");
        }
        if self.institutions == 0 || self.departments_per_institution == 0 {
            return bad("need at least one institution and department");
        }
        if self.window_start > self.window_end {
            return bad("empty window");
        }
        if self.categories_per_sds == 0 || self.citation_intensity.is_empty() {
            return bad("need at least one category and citation intensity");
        }
        if self
            .citation_intensity
            .iter()
            .any(|c| !(c.is_finite() && *c > 0.0))
        {
            return bad("citation intensities must be positive");
        }
        if !(self.lotka_exponent.is_finite() && self.lotka_exponent > 0.0) || self.max_papers == 0
        {
            return bad("Lotka exponent must be positive and max_papers >= 1");
        }
        for (name, p) in [
            ("unproductive_share", self.unproductive_share),
            ("internal_coauthor_share", self.internal_coauthor_share),
            ("multi_category_share", self.multi_category_share),
            ("partial_presence_share", self.partial_presence_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.max_authors == 0 || !(self.mean_coauthors >= 0.0) {
            return bad("max_authors must be >= 1 and mean_coauthors >= 0");
        }
        Ok(())
    }
}

/// Lotka probabilities `P(k)` for `k = 1..=max_papers` (index 0 is `k = 1`).
pub fn lotka_pmf(exponent: f64, max_papers: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=max_papers)
        .map(|k| (k as f64).powf(-exponent))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

pub fn generate_synthetic_corpus(seed: u64, params: &SyntheticParams) -> Result<Corpus> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = Window::new(params.window_start, params.window_end)?;
    let window_years = window.years() as f64;

    let mut taxonomy = FieldTaxonomy::new();
    let mut categories: Vec<Vec<String>> = Vec::with_capacity(params.sds_count);
    for s in 0..params.sds_count {
        let convention = if s % 2 == 0 {
            Convention::PositionWeighted
        } else {
            Convention::Alphabetical
        };
        taxonomy.insert(
            format!("S{s:02}"),
            format!("U{:02}", s % params.uda_count),
            convention,
        )?;
        categories.push(
            (0..params.categories_per_sds)
                .map(|c| format!("C{s:02}{c:02}"))
                .collect(),
        );
    }
    let all_categories: Vec<&String> = categories.iter().flatten().collect();
    let intensity = |cat_idx: usize| {
        params.citation_intensity[cat_idx % params.citation_intensity.len()]
    };

    let salaries = SalarySchedule::new()
        .with(AcademicRank::Full, 100_000.0)?
        .with(AcademicRank::Associate, 70_000.0)?
        .with(AcademicRank::Assistant, 50_000.0)?;
    let ranks = [
        AcademicRank::Full,
        AcademicRank::Associate,
        AcademicRank::Assistant,
    ];
    let rank_pick = WeightedIndex::new([0.3, 0.35, 0.35]).expect("static weights");

    let mut researchers = Vec::with_capacity(params.researchers);
    for i in 0..params.researchers {
        let inst = rng.random_range(0..params.institutions);
        let dept = rng.random_range(0..params.departments_per_institution);
        let years = if rng.random_bool(params.partial_presence_share) {
            // quarter-year resolution keeps exported values short
            (rng.random_range(2..=(4.0 * window_years) as u32) as f64) / 4.0
        } else {
            window_years
        };
        let salary = if rng.random_bool(0.05) {
            Some(rng.random_range(40..=130) as f64 * 1000.0)
        } else {
            None
        };
        researchers.push(Researcher {
            id: format!("R{i:05}"),
            name: None,
            sds: format!("S{:02}", i % params.sds_count),
            rank: ranks[rank_pick.sample(&mut rng)].clone(),
            salary,
            institution: format!("I{inst:02}"),
            department: Some(format!("I{inst:02}-D{dept}")),
            years_in_window: years,
        });
    }

    let by_institution: Vec<Vec<usize>> = (0..params.institutions)
        .map(|inst| {
            let code = format!("I{inst:02}");
            researchers
                .iter()
                .enumerate()
                .filter(|(_, r)| r.institution == code)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let lotka = WeightedIndex::new(lotka_pmf(params.lotka_exponent, params.max_papers))
        .expect("positive Lotka weights");
    let coauthors = if params.mean_coauthors > 0.0 {
        Some(Poisson::new(params.mean_coauthors).expect("positive mean"))
    } else {
        None
    };

    let mut publications = Vec::new();
    for lead in 0..researchers.len() {
        if rng.random_bool(params.unproductive_share) {
            continue;
        }
        let papers = lotka.sample(&mut rng) + 1;
        let sds_idx = lead % params.sds_count;
        let lead_inst = researchers[lead].institution.clone();
        let inst_idx: usize = lead_inst[1..].parse().expect("generated code");

        for _ in 0..papers {
            let year = rng.random_range(window.start..=window.end);
            let own = rng.random_range(0..params.categories_per_sds);
            let mut cat_idx = vec![sds_idx * params.categories_per_sds + own];
            if all_categories.len() > 1 && rng.random_bool(params.multi_category_share) {
                let other = rng.random_range(0..all_categories.len());
                if other != cat_idx[0] {
                    cat_idx.push(other);
                }
            }
            let mean_intensity =
                cat_idx.iter().map(|&c| intensity(c)).sum::<f64>() / cat_idx.len() as f64;
            let lambda = Gamma::new(1.0, mean_intensity)
                .expect("positive intensity")
                .sample(&mut rng);
            let citations = if lambda > 0.0 {
                Poisson::new(lambda).expect("positive rate").sample(&mut rng) as u64
            } else {
                0
            };

            let extra = coauthors
                .as_ref()
                .map(|d| d.sample(&mut rng) as usize)
                .unwrap_or(0);
            let n = (1 + extra).min(params.max_authors);
            let lead_pos = rng.random_range(0..n);
            let mut on_byline = vec![lead];
            let mut byline = Vec::with_capacity(n);
            for pos in 0..n {
                let entry = if pos == lead_pos {
                    Authorship {
                        position: pos + 1,
                        researcher_id: Some(researchers[lead].id.clone()),
                        institution_id: lead_inst.clone(),
                    }
                } else if rng.random_bool(params.internal_coauthor_share) {
                    let pool = if rng.random_bool(0.6) {
                        &by_institution[inst_idx]
                    } else {
                        &by_institution[rng.random_range(0..params.institutions)]
                    };
                    let pick = if pool.is_empty() {
                        None
                    } else {
                        Some(pool[rng.random_range(0..pool.len())])
                    };
                    match pick {
                        Some(j) if !on_byline.contains(&j) => {
                            on_byline.push(j);
                            Authorship {
                                position: pos + 1,
                                researcher_id: Some(researchers[j].id.clone()),
                                institution_id: researchers[j].institution.clone(),
                            }
                        }
                        _ => external(pos, &lead_inst, &mut rng),
                    }
                } else {
                    external(pos, &lead_inst, &mut rng)
                };
                byline.push(entry);
            }

            publications.push(Publication {
                id: format!("P{:07}", publications.len()),
                year,
                subject_categories: cat_idx.iter().map(|&c| all_categories[c].clone()).collect(),
                citations,
                byline,
            });
        }
    }

    let cutoff = NaiveDate::from_ymd_opt(window.end + 1, 12, 31);
    Corpus::new(researchers, publications, taxonomy, salaries, window, cutoff)
}

fn external(pos: usize, lead_inst: &str, rng: &mut ChaCha8Rng) -> Authorship {
    let institution_id = if rng.random_bool(0.5) {
        lead_inst.to_owned()
    } else {
        format!("EXT{:03}", rng.random_range(0..200))
    };
    Authorship {
        position: pos + 1,
        researcher_id: None,
        institution_id,
    }
}
