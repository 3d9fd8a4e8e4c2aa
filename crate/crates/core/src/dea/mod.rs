//! Output-oriented data envelopment analysis.
//!
//! For each decision-making unit `o` the envelopment program
//!
//! ```text
//! maximize φ  s.t.  Σ λ_j x_j ≤ x_o,  Σ λ_j y_j ≥ φ y_o,  λ ≥ 0  (+ Σ λ_j = 1 under VRS)
//! ```
//!
//! gives the radial output expansion `φ ≥ 1`; technical efficiency is `1/φ`.
//! Scale efficiency is the ratio of the CRS and VRS efficiencies.

mod lp;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lp::{solve_lp, Constraint, LinearProgram, LpSolution, Relation};

use crate::corpus::{AcademicRank, CsvTable};
use crate::error::{Error, Result};
use crate::indicators::{csv_field, Scorer};

/// `|φ - 1|` below this marks a frontier unit.
pub const FRONTIER_TOLERANCE: f64 = 1e-6;
/// Intensities above this make a unit a peer.
pub const PEER_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dmu {
    pub id: String,
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl Dmu {
    pub fn new(id: impl Into<String>, inputs: Vec<f64>, outputs: Vec<f64>) -> Self {
        Dmu {
            id: id.into(),
            inputs,
            outputs,
        }
    }
}

/// Checks ids, dimensions and signs of a DMU set.
pub fn validate_dmus(dmus: &[Dmu]) -> Result<()> {
    let Some(first) = dmus.first() else {
        return Err(Error::InvalidParameter("DEA needs at least one DMU".into()));
    };
    let (ni, no) = (first.inputs.len(), first.outputs.len());
    let mut ids = BTreeSet::new();
    for d in dmus {
        let bad = |reason: String| Error::InvalidDmu {
            id: d.id.clone(),
            reason,
        };
        if !ids.insert(d.id.as_str()) {
            return Err(bad("duplicate id".into()));
        }
        if d.inputs.is_empty() || d.outputs.is_empty() {
            return Err(bad("needs at least one input and one output".into()));
        }
        if d.inputs.len() != ni || d.outputs.len() != no {
            return Err(bad(format!(
                "has {}/{} inputs/outputs, expected {ni}/{no}",
                d.inputs.len(),
                d.outputs.len()
            )));
        }
        if d.inputs.iter().chain(&d.outputs).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(bad("values must be finite and nonnegative".into()));
        }
        if !d.inputs.iter().any(|v| *v > 0.0) {
            return Err(bad("no strictly positive input".into()));
        }
        if !d.outputs.iter().any(|v| *v > 0.0) {
            return Err(bad("no strictly positive output".into()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeaModel {
    Crs,
    Vrs,
}

impl DeaModel {
    pub fn as_str(self) -> &'static str {
        match self {
            DeaModel::Crs => "crs",
            DeaModel::Vrs => "vrs",
        }
    }
}

impl FromStr for DeaModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "crs" => Ok(DeaModel::Crs),
            "vrs" => Ok(DeaModel::Vrs),
            _ => Err(Error::InvalidParameter(format!("unknown DEA model `{s}`"))),
        }
    }
}

impl fmt::Display for DeaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmuEfficiency {
    pub id: String,
    pub phi: f64,
    pub efficiency: f64,
    /// Peers with their intensities, in input order.
    pub peers: Vec<(String, f64)>,
    /// `x_o - Σ λ_j x_j` per input; informational only.
    pub input_slacks: Vec<f64>,
    /// `Σ λ_j y_j - φ y_o` per output; informational only.
    pub output_slacks: Vec<f64>,
}

impl DmuEfficiency {
    pub fn is_frontier(&self) -> bool {
        (self.phi - 1.0).abs() < FRONTIER_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeaResult {
    pub model: DeaModel,
    pub units: Vec<DmuEfficiency>,
}

impl DeaResult {
    pub fn get(&self, id: &str) -> Option<&DmuEfficiency> {
        self.units.iter().find(|u| u.id == id)
    }

    /// `id,model,phi,efficiency,peers` with peers joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,model,phi,efficiency,peers\n");
        self.append_rows(&mut out);
        out
    }

    pub(crate) fn append_rows(&self, out: &mut String) {
        for u in &self.units {
            let peers: Vec<&str> = u.peers.iter().map(|(p, _)| p.as_str()).collect();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&u.id),
                self.model,
                u.phi,
                u.efficiency,
                csv_field(&peers.join(";"))
            ));
        }
    }
}

/// Rows of several results under one header.
pub fn results_csv(results: &[&DeaResult]) -> String {
    let mut out = String::from("id,model,phi,efficiency,peers\n");
    for r in results {
        r.append_rows(&mut out);
    }
    out
}

/// Solves one envelopment program per DMU, in parallel. Results keep the
/// input order.
pub fn dea_output_oriented(dmus: &[Dmu], model: DeaModel) -> Result<DeaResult> {
    validate_dmus(dmus)?;
    let units = dmus
        .par_iter()
        .enumerate()
        .map(|(o, d)| {
            evaluate(dmus, o, model).map_err(|e| Error::Dea {
                id: d.id.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeaResult { model, units })
}

fn evaluate(dmus: &[Dmu], o: usize, model: DeaModel) -> Result<DmuEfficiency> {
    let n = dmus.len();
    let target = &dmus[o];
    // variables: φ, λ_1..λ_n
    let mut objective = vec![0.0; n + 1];
    objective[0] = 1.0;
    let mut constraints = Vec::new();
    for i in 0..target.inputs.len() {
        let mut row = vec![0.0; n + 1];
        for (j, d) in dmus.iter().enumerate() {
            row[j + 1] = d.inputs[i];
        }
        constraints.push(Constraint::new(row, Relation::Le, target.inputs[i]));
    }
    for r in 0..target.outputs.len() {
        let mut row = vec![0.0; n + 1];
        row[0] = target.outputs[r];
        for (j, d) in dmus.iter().enumerate() {
            row[j + 1] = -d.outputs[r];
        }
        constraints.push(Constraint::new(row, Relation::Le, 0.0));
    }
    if model == DeaModel::Vrs {
        let mut row = vec![1.0; n + 1];
        row[0] = 0.0;
        constraints.push(Constraint::new(row, Relation::Eq, 1.0));
    }
    let sol = solve_lp(&LinearProgram {
        objective,
        constraints,
    })?;
    let phi = sol.x[0];
    if !(phi.is_finite() && phi > 0.0) {
        return Err(Error::Unbounded);
    }
    let lambda = &sol.x[1..];
    let peers = dmus
        .iter()
        .zip(lambda)
        .filter(|(_, l)| **l > PEER_THRESHOLD)
        .map(|(d, l)| (d.id.clone(), *l))
        .collect();
    let input_slacks = (0..target.inputs.len())
        .map(|i| {
            let used: f64 = dmus.iter().zip(lambda).map(|(d, l)| l * d.inputs[i]).sum();
            (target.inputs[i] - used).max(0.0)
        })
        .collect();
    let output_slacks = (0..target.outputs.len())
        .map(|r| {
            let made: f64 = dmus.iter().zip(lambda).map(|(d, l)| l * d.outputs[r]).sum();
            (made - phi * target.outputs[r]).max(0.0)
        })
        .collect();
    Ok(DmuEfficiency {
        id: target.id.clone(),
        phi,
        efficiency: 1.0 / phi,
        peers,
        input_slacks,
        output_slacks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEfficiency {
    pub id: String,
    pub te_crs: f64,
    pub te_vrs: f64,
    pub se: f64,
}

/// `SE = TE_CRS / TE_VRS` per DMU, in the order of `crs`.
pub fn scale_efficiency(crs: &DeaResult, vrs: &DeaResult) -> Result<Vec<ScaleEfficiency>> {
    if crs.model != DeaModel::Crs || vrs.model != DeaModel::Vrs {
        return Err(Error::InvalidParameter(
            "scale efficiency needs a CRS and a VRS result".into(),
        ));
    }
    let a: BTreeSet<&str> = crs.units.iter().map(|u| u.id.as_str()).collect();
    let b: BTreeMap<&str, f64> = vrs.units.iter().map(|u| (u.id.as_str(), u.efficiency)).collect();
    let bk: BTreeSet<&str> = b.keys().copied().collect();
    if a != bk {
        return Err(Error::UnitMismatch {
            only_a: a.difference(&bk).map(|s| (*s).to_owned()).collect(),
            only_b: bk.difference(&a).map(|s| (*s).to_owned()).collect(),
        });
    }
    Ok(crs
        .units
        .iter()
        .map(|u| {
            let te_vrs = b[u.id.as_str()];
            ScaleEfficiency {
                id: u.id.clone(),
                te_crs: u.efficiency,
                te_vrs,
                se: u.efficiency / te_vrs,
            }
        })
        .collect())
}

pub fn scale_efficiency_csv(rows: &[ScaleEfficiency]) -> String {
    let mut out = String::from("id,te_crs,te_vrs,se\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", csv_field(&r.id), r.te_crs, r.te_vrs, r.se));
    }
    out
}

/// DMUs with named columns, as read from or written to `dmus.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmuTable {
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub dmus: Vec<Dmu>,
}

impl DmuTable {
    /// Reads `id,input_*,output_*`; columns are classified by prefix.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let table = CsvTable::open(path, &["id"])?;
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for (name, idx) in table.headers() {
            if let Some(rest) = name.strip_prefix("input_") {
                inputs.push((rest.to_owned(), idx));
            } else if let Some(rest) = name.strip_prefix("output_") {
                outputs.push((rest.to_owned(), idx));
            } else if name != "id" {
                return Err(Error::BadFile {
                    path: path.to_owned(),
                    message: format!(
                        "column `{name}` is neither `id` nor prefixed with `input_`/`output_`"
                    ),
                });
            }
        }
        if inputs.is_empty() || outputs.is_empty() {
            return Err(Error::BadFile {
                path: path.to_owned(),
                message: "need at least one `input_` and one `output_` column".into(),
            });
        }
        let mut dmus = Vec::new();
        let parse = |row: &crate::corpus::Row<'_>, name: &str, idx: usize| -> Result<f64> {
            let raw = row.at(idx).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|e| row.error(name, format!("cannot parse `{raw}`: {e}")))
        };
        table.for_each_row(|row| {
            let id = row.req("id")?.to_owned();
            let ins = inputs
                .iter()
                .map(|(n, i)| parse(row, &format!("input_{n}"), *i))
                .collect::<Result<Vec<_>>>()?;
            let outs = outputs
                .iter()
                .map(|(n, i)| parse(row, &format!("output_{n}"), *i))
                .collect::<Result<Vec<_>>>()?;
            dmus.push(Dmu::new(id, ins, outs));
            Ok(())
        })?;
        validate_dmus(&dmus)?;
        Ok(DmuTable {
            input_names: inputs.into_iter().map(|(n, _)| n).collect(),
            output_names: outputs.into_iter().map(|(n, _)| n).collect(),
            dmus,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for n in &self.input_names {
            out.push_str(&format!(",input_{n}"));
        }
        for n in &self.output_names {
            out.push_str(&format!(",output_{n}"));
        }
        out.push('\n');
        for d in &self.dmus {
            out.push_str(&csv_field(&d.id));
            for v in d.inputs.iter().chain(&d.outputs) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Institutions as DMUs: labor cost per academic rank as inputs, fractional
/// normalized impact and fractional publication count as outputs. Excluded
/// institutions are left out; institutions without output are returned
/// separately since they cannot be evaluated.
pub fn dmus_from_scorer(scorer: &Scorer<'_>) -> (DmuTable, Vec<String>) {
    let corpus = scorer.corpus();
    let ranks: Vec<AcademicRank> = {
        let set: BTreeSet<AcademicRank> =
            corpus.researchers().iter().map(|r| r.rank.clone()).collect();
        set.into_iter().collect()
    };
    let mut per_inst: BTreeMap<&str, (Vec<f64>, [f64; 2])> = BTreeMap::new();
    for (r, m) in corpus.researchers().iter().zip(scorer.all_metrics()) {
        if corpus.exclusions().excludes_institution(&r.institution) {
            continue;
        }
        let slot = per_inst
            .entry(r.institution.as_str())
            .or_insert_with(|| (vec![0.0; ranks.len()], [0.0; 2]));
        let k = ranks.iter().position(|x| *x == r.rank).expect("rank collected above");
        slot.0[k] += m.labor_cost();
        slot.1[0] += m.weighted_impact;
        slot.1[1] += m.fractional_publications;
    }
    let mut dmus = Vec::new();
    let mut skipped = Vec::new();
    for (inst, (inputs, outputs)) in per_inst {
        if outputs.iter().any(|v| *v > 0.0) {
            dmus.push(Dmu::new(inst, inputs, outputs.to_vec()));
        } else {
            skipped.push(inst.to_owned());
        }
    }
    let input_names = ranks
        .iter()
        .map(|r| format!("cost_{}", r.to_string().to_ascii_lowercase().replace([' ', ','], "_")))
        .collect();
    (
        DmuTable {
            input_names,
            output_names: vec!["impact".into(), "publications".into()],
            dmus,
        },
        skipped,
    )
}
