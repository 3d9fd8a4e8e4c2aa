//! Naive recomputation of every indicator straight from the corpus CSV
//! files. Shares no code with the library: its own parsing, baselines,
//! credit rules and aggregation, written as plain loops over all rows.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

pub struct Researcher {
    pub id: String,
    pub sds: String,
    pub institution: String,
    pub department: Option<String>,
    pub salary: f64,
    pub years: f64,
}

pub struct Publication {
    pub year: i32,
    pub citations: f64,
    pub categories: Vec<String>,
    /// (researcher id, institution id) in byline order.
    pub byline: Vec<(Option<String>, String)>,
}

pub struct Oracle {
    pub researchers: Vec<Researcher>,
    pub publications: Vec<Publication>,
    pub uda: HashMap<String, String>,
    pub position_weighted: HashMap<String, bool>,
}

fn rows(path: &Path) -> Vec<HashMap<String, String>> {
    let mut reader = csv::Reader::from_path(path).expect("readable csv");
    let headers = reader.headers().unwrap().clone();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            headers
                .iter()
                .zip(r.iter())
                .map(|(h, v)| (h.to_owned(), v.trim().to_owned()))
                .collect()
        })
        .collect()
}

fn opt(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_owned())
}

/// Credit of every byline position, from the written rules.
pub fn credit(institutions: &[&str], position_weighted: bool) -> Vec<f64> {
    let n = institutions.len();
    if n == 1 {
        return vec![1.0];
    }
    if !position_weighted || n == 2 {
        return vec![1.0 / n as f64; n];
    }
    let intramural = institutions[0] == institutions[n - 1];
    let mut v = vec![0.0; n];
    if intramural {
        v[0] = 0.40;
        v[n - 1] = 0.40;
        for x in &mut v[1..n - 1] {
            *x = 0.20 / (n - 2) as f64;
        }
        return v;
    }
    match n {
        3 => vec![1.0 / 3.0; 3],
        4 => vec![0.30 / 0.90, 0.15 / 0.90, 0.15 / 0.90, 0.30 / 0.90],
        _ => {
            v[0] = 0.30;
            v[n - 1] = 0.30;
            v[1] = 0.15;
            v[n - 2] = 0.15;
            for x in &mut v[2..n - 2] {
                *x = 0.10 / (n - 4) as f64;
            }
            v
        }
    }
}

impl Oracle {
    pub fn load(dir: &Path, window: (i32, i32)) -> Oracle {
        let mut uda = HashMap::new();
        let mut position_weighted = HashMap::new();
        for r in rows(&dir.join("taxonomy.csv")) {
            uda.insert(r["sds"].clone(), r["uda"].clone());
            position_weighted.insert(r["sds"].clone(), r["convention"] == "position_weighted");
        }
        let mut pay = HashMap::new();
        for r in rows(&dir.join("salaries.csv")) {
            pay.insert(r["rank"].clone(), r["salary_per_year"].parse::<f64>().unwrap());
        }
        let researchers = rows(&dir.join("researchers.csv"))
            .into_iter()
            .map(|r| Researcher {
                salary: match opt(&r["salary"]) {
                    Some(s) => s.parse().unwrap(),
                    None => pay[&r["rank"]],
                },
                years: r["years_in_window"].parse().unwrap(),
                id: r["id"].clone(),
                sds: r["sds"].clone(),
                institution: r["institution"].clone(),
                department: opt(&r["department"]),
            })
            .collect();
        let mut by_id: BTreeMap<String, Publication> = BTreeMap::new();
        for r in rows(&dir.join("publications.csv")) {
            let year: i32 = r["year"].parse().unwrap();
            if year < window.0 || year > window.1 {
                continue;
            }
            by_id.insert(
                r["id"].clone(),
                Publication {
                    year,
                    citations: r["citations"].parse().unwrap(),
                    categories: r["subject_categories"].split(';').map(|c| c.trim().to_owned()).collect(),
                    byline: Vec::new(),
                },
            );
        }
        let mut entries: Vec<(String, usize, Option<String>, String)> = rows(&dir.join("bylines.csv"))
            .into_iter()
            .map(|r| {
                (
                    r["publication_id"].clone(),
                    r["position"].parse().unwrap(),
                    opt(&r["researcher_id"]),
                    r["institution_id"].clone(),
                )
            })
            .collect();
        entries.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
        for (pid, _, rid, inst) in entries {
            if let Some(p) = by_id.get_mut(&pid) {
                p.byline.push((rid, inst));
            }
        }
        Oracle {
            researchers,
            publications: by_id.into_values().collect(),
            uda,
            position_weighted,
        }
    }

    fn c_bar(&self, year: i32, category: &str) -> f64 {
        let (mut sum, mut n) = (0.0, 0.0);
        for p in &self.publications {
            if p.year == year && p.citations > 0.0 && p.categories.iter().any(|c| c == category) {
                sum += p.citations;
                n += 1.0;
            }
        }
        sum / n
    }

    pub fn impacts(&self) -> Vec<f64> {
        let mut cache: HashMap<(i32, String), f64> = HashMap::new();
        self.publications
            .iter()
            .map(|p| {
                if p.citations == 0.0 {
                    return 0.0;
                }
                let mut total = 0.0;
                for c in &p.categories {
                    let cb = *cache
                        .entry((p.year, c.clone()))
                        .or_insert_with(|| self.c_bar(p.year, c));
                    total += p.citations / cb;
                }
                total / p.categories.len() as f64
            })
            .collect()
    }
}

/// Per-researcher sums and every aggregate the oracle can answer.
pub struct Computed<'a> {
    o: &'a Oracle,
    impact: Vec<f64>,
    /// credit[p][pos] under the scheme of each SDS, computed lazily per SDS.
    credit_pw: Vec<Vec<f64>>,
    credit_alpha: Vec<Vec<f64>>,
    pub fss_r: Vec<f64>,
    pub q: Vec<f64>,
    pub fq: Vec<f64>,
    mean_r: HashMap<String, f64>,
    mean_q: HashMap<String, f64>,
    mean_fq: HashMap<String, f64>,
    mean_s: HashMap<String, f64>,
}

fn productive_mean(values: &[(f64, f64)]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for &(v, w) in values {
        if v > 0.0 {
            num += v * w;
            den += w;
        }
    }
    (den > 0.0).then(|| num / den)
}

impl<'a> Computed<'a> {
    pub fn new(o: &'a Oracle) -> Self {
        let impact = o.impacts();
        let mut credit_pw = Vec::new();
        let mut credit_alpha = Vec::new();
        for p in &o.publications {
            let insts: Vec<&str> = p.byline.iter().map(|(_, i)| i.as_str()).collect();
            credit_pw.push(credit(&insts, true));
            credit_alpha.push(credit(&insts, false));
        }
        let mut c = Computed {
            o,
            impact,
            credit_pw,
            credit_alpha,
            fss_r: Vec::new(),
            q: Vec::new(),
            fq: Vec::new(),
            mean_r: HashMap::new(),
            mean_q: HashMap::new(),
            mean_fq: HashMap::new(),
            mean_s: HashMap::new(),
        };
        for r in &o.researchers {
            let (mut s, mut n, mut f) = (0.0, 0.0, 0.0);
            for (pi, p) in o.publications.iter().enumerate() {
                for (pos, (rid, _)) in p.byline.iter().enumerate() {
                    if rid.as_deref() == Some(r.id.as_str()) {
                        let share = c.share(pi, pos, &r.sds);
                        s += c.impact[pi] * share;
                        n += 1.0;
                        f += share;
                    }
                }
            }
            c.fss_r.push(s / (r.salary * r.years));
            c.q.push(n / r.years);
            c.fq.push(f / r.years);
        }
        let sdss: BTreeSet<&String> = o.researchers.iter().map(|r| &r.sds).collect();
        for sds in sdss {
            let pick = |v: &Vec<f64>| -> Vec<(f64, f64)> {
                o.researchers
                    .iter()
                    .zip(v)
                    .filter(|(r, _)| &r.sds == sds)
                    .map(|(_, &x)| (x, 1.0))
                    .collect()
            };
            for (map, v) in [(&mut c.mean_r, &c.fss_r), (&mut c.mean_q, &c.q), (&mut c.mean_fq, &c.fq)] {
                if let Some(m) = productive_mean(&pick(v)) {
                    map.insert(sds.clone(), m);
                }
            }
            let insts: BTreeSet<&String> = o
                .researchers
                .iter()
                .filter(|r| &r.sds == sds)
                .map(|r| &r.institution)
                .collect();
            let units: Vec<(f64, f64)> = insts
                .into_iter()
                .map(|inst| {
                    let staff: Vec<usize> = (0..o.researchers.len())
                        .filter(|&i| &o.researchers[i].sds == sds && &o.researchers[i].institution == inst)
                        .collect();
                    c.fss_s_of(&staff)
                })
                .collect();
            if let Some(m) = productive_mean(&units) {
                c.mean_s.insert(sds.clone(), m);
            }
        }
        c
    }

    fn share(&self, pi: usize, pos: usize, sds: &str) -> f64 {
        if self.o.position_weighted[sds] {
            self.credit_pw[pi][pos]
        } else {
            self.credit_alpha[pi][pos]
        }
    }

    /// (FSS_S, labor) of researchers who share one SDS.
    pub fn fss_s_of(&self, staff: &[usize]) -> (f64, f64) {
        let mut labor = 0.0;
        for &i in staff {
            labor += self.o.researchers[i].salary * self.o.researchers[i].years;
        }
        let mut output = 0.0;
        for (pi, p) in self.o.publications.iter().enumerate() {
            let mut f = 0.0;
            for (pos, (rid, _)) in p.byline.iter().enumerate() {
                for &i in staff {
                    let r = &self.o.researchers[i];
                    if rid.as_deref() == Some(r.id.as_str()) {
                        f += self.share(pi, pos, &r.sds);
                    }
                }
            }
            output += self.impact[pi] * f;
        }
        (output / labor, labor)
    }

    fn mean_ratio(&self, members: &[usize], values: &[f64], means: &HashMap<String, f64>) -> f64 {
        let mut total = 0.0;
        for &i in members {
            total += values[i] / means[&self.o.researchers[i].sds];
        }
        total / members.len() as f64
    }

    pub fn fss_d(&self, members: &[usize]) -> f64 {
        self.mean_ratio(members, &self.fss_r, &self.mean_r)
    }

    pub fn p_u(&self, members: &[usize]) -> f64 {
        self.mean_ratio(members, &self.q, &self.mean_q)
    }

    pub fn fp_u(&self, members: &[usize]) -> f64 {
        self.mean_ratio(members, &self.fq, &self.mean_fq)
    }

    pub fn fss_u(&self, members: &[usize]) -> f64 {
        let sdss: BTreeSet<&String> = members.iter().map(|&i| &self.o.researchers[i].sds).collect();
        let mut pieces = Vec::new();
        for sds in sdss {
            let staff: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&i| &self.o.researchers[i].sds == sds)
                .collect();
            let (fss, w) = self.fss_s_of(&staff);
            pieces.push((fss / self.mean_s[sds], w));
        }
        let total: f64 = pieces.iter().map(|p| p.1).sum();
        pieces.iter().map(|(r, w)| r * w / total).sum()
    }

    fn select(&self, pred: impl Fn(&Researcher) -> bool) -> Vec<usize> {
        (0..self.o.researchers.len())
            .filter(|&i| pred(&self.o.researchers[i]))
            .collect()
    }

    /// Expected value of one `scores.csv` row, `None` if the oracle does not
    /// know the unit.
    pub fn expect(&self, level: &str, unit_id: &str, indicator: &str) -> Option<f64> {
        let split = || unit_id.split_once('/').expect("grouped id");
        let members = match level {
            "researcher" => {
                let (_, rid) = split();
                let i = self.o.researchers.iter().position(|r| r.id == rid)?;
                return match indicator {
                    "fss_r" => Some(self.fss_r[i]),
                    "q" => Some(self.q[i]),
                    "fq" => Some(self.fq[i]),
                    _ => None,
                };
            }
            "sds" => {
                let (sds, inst) = split();
                let staff = self.select(|r| r.sds == sds && r.institution == inst);
                return (indicator == "fss_s" && !staff.is_empty()).then(|| self.fss_s_of(&staff).0);
            }
            "department" => {
                let (inst, dept) = split();
                self.select(|r| r.institution == inst && r.department.as_deref() == Some(dept))
            }
            "university_uda" => {
                let (uda, inst) = split();
                self.select(|r| r.institution == inst && self.o.uda[&r.sds] == uda)
            }
            "university_total" => self.select(|r| r.institution == unit_id),
            "country" => self.select(|_| true),
            _ => return None,
        };
        if members.is_empty() {
            return None;
        }
        match indicator {
            "fss_d" => Some(self.fss_d(&members)),
            "fss_u" => Some(self.fss_u(&members)),
            "p_u" => Some(self.p_u(&members)),
            "fp_u" => Some(self.fp_u(&members)),
            _ => None,
        }
    }

    /// Number of units the oracle expects at each level.
    pub fn unit_counts(&self) -> BTreeMap<&'static str, usize> {
        let rs = &self.o.researchers;
        let count = |f: &dyn Fn(&Researcher) -> String| rs.iter().map(f).collect::<BTreeSet<_>>().len();
        BTreeMap::from([
            ("researcher", rs.len()),
            ("sds", count(&|r| format!("{}/{}", r.sds, r.institution))),
            (
                "department",
                rs.iter()
                    .filter_map(|r| r.department.as_ref().map(|d| format!("{}/{d}", r.institution)))
                    .collect::<BTreeSet<_>>()
                    .len(),
            ),
            ("university_uda", count(&|r| format!("{}/{}", self.o.uda[&r.sds], r.institution))),
            ("university_total", count(&|r| r.institution.clone())),
            ("country", 1),
        ])
    }
}
