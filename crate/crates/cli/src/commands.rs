use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use resprod_core::corpus::{apply_exclusions, ExclusionReport};
use resprod_core::dea::{dmus_from_scorer, results_csv, scale_efficiency_csv};
use resprod_core::indicators::{Indicator, Level};
use resprod_core::rankings::{
    pooled_comparison, rank_score_set, rank_shifts, standardized_list,
};
use resprod_core::{
    compare_rankings, compute_baselines, dea_output_oriented, export_corpus,
    generate_synthetic_corpus, load_corpus, read_scores_csv, scale_efficiency, AggregationOptions,
    BaselineTable, ComparisonStats, Corpus, CorpusPaths, DeaModel, DmuTable, FieldMeans,
    LoadOptions, LoadReport, RankedList, ScoreSet, Scorer, SyntheticParams,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{BaselineSource, LoadedConfig, RunConfig, Scope};
use crate::{CorpusArgs, InputError, ModelArg};

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Debug, Serialize)]
struct InputChecksum {
    file: String,
    sha256: String,
}

struct Prepared {
    loaded: LoadedConfig,
    corpus: Corpus,
    load_report: LoadReport,
    exclusion_report: ExclusionReport,
    baselines: BaselineTable,
    inputs: Vec<InputChecksum>,
}

/// Config, corpus, exclusions and baselines shared by `validate` and `score`.
fn prepare(args: &CorpusArgs) -> Result<Prepared> {
    let mut loaded = LoadedConfig::load(args.config.as_deref())?;
    if let Some(b) = &args.baselines {
        loaded.config.baselines = BaselineSource::File(b.clone());
        loaded.defaults_used.retain(|d| !d.starts_with("baselines"));
    }
    let config = &loaded.config;
    config.validate()?;
    for d in &loaded.defaults_used {
        eprintln!("default: {d}");
    }

    if !args.corpus.is_dir() {
        return Err(InputError(format!(
            "corpus directory {} does not exist",
            args.corpus.display()
        ))
        .into());
    }
    let paths = CorpusPaths::in_dir(&args.corpus);
    let options = LoadOptions {
        window: config.window_range()?,
        citation_cutoff: config.citation_cutoff,
    };
    let (corpus, load_report) = load_corpus(&paths, &options)?;
    for w in &load_report.warnings {
        log::warn!("{w}");
    }
    let mut inputs = Vec::new();
    if let Some((path, bytes)) = &loaded.source {
        inputs.push(InputChecksum {
            file: file_name(path),
            sha256: sha256_hex(bytes),
        });
    }
    for p in paths.iter() {
        inputs.push(InputChecksum {
            file: file_name(p),
            sha256: sha256_hex(&resprod_core::corpus::read_bytes(p)?),
        });
    }

    let (corpus, exclusion_report) = apply_exclusions(&corpus, &config.exclusions)?;
    let baselines = match &config.baselines {
        BaselineSource::Computed => compute_baselines(&corpus),
        BaselineSource::File(p) => {
            let table = BaselineTable::read_csv(p)?;
            inputs.push(InputChecksum {
                file: file_name(p),
                sha256: sha256_hex(&resprod_core::corpus::read_bytes(p)?),
            });
            table
        }
    };
    Ok(Prepared {
        loaded,
        corpus,
        load_report,
        exclusion_report,
        baselines,
        inputs,
    })
}

#[derive(Debug, Serialize)]
struct ExclusionSummary {
    min_years: f64,
    min_staff_uda: usize,
    min_staff_total: usize,
    researchers_removed: usize,
    uda_groups_excluded: Vec<String>,
    institutions_excluded: Vec<String>,
}

fn exclusion_summary(config: &RunConfig, r: &ExclusionReport) -> ExclusionSummary {
    ExclusionSummary {
        min_years: config.exclusions.min_years,
        min_staff_uda: config.exclusions.min_staff_uda,
        min_staff_total: config.exclusions.min_staff_total,
        researchers_removed: r.researchers_removed.len(),
        uda_groups_excluded: r
            .uda_groups_excluded
            .iter()
            .map(|(inst, uda)| format!("{uda}/{inst}"))
            .collect(),
        institutions_excluded: r.institutions_excluded.clone(),
    }
}

pub fn validate(args: &CorpusArgs) -> Result<()> {
    let p = prepare(args)?;
    let scorer = Scorer::new(&p.corpus, &p.baselines, &p.loaded.config.credit)?;
    let means = scorer.field_means()?;
    let summary = serde_json::json!({
        "load": p.load_report,
        "exclusions": exclusion_summary(&p.loaded.config, &p.exclusion_report),
        "baseline_entries": p.baselines.len(),
        "sds_with_field_means": means.fss_r.len(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn in_scope(level: Level, scope: &[Scope]) -> bool {
    match level {
        Level::Researcher => true,
        Level::Sds => scope.contains(&Scope::Sds),
        Level::Department => scope.contains(&Scope::Department),
        Level::UniversityUda | Level::UniversityTotal => scope.contains(&Scope::University),
        Level::Region => scope.contains(&Scope::Region),
        Level::Country => scope.contains(&Scope::Country),
    }
}

/// `rankings/<level>/<indicator>/<group>.csv`; ungrouped levels write
/// `_all.csv`, per-SDS levels also `_standardized.csv`.
fn write_rankings(dir: &Path, sets: &[ScoreSet], means: Option<&FieldMeans>) -> Result<usize> {
    let mut files = 0;
    for set in sets {
        let base = dir.join(set.level.as_str()).join(set.indicator.as_str());
        for (group, list) in rank_score_set(set)? {
            let name = group.as_deref().unwrap_or("_all");
            write(&base.join(format!("{name}.csv")), list.to_csv())?;
            files += 1;
        }
        let standardizable = matches!(
            (set.level, set.indicator),
            (Level::Researcher, Indicator::FssR | Indicator::Q | Indicator::Fq)
                | (Level::Sds, Indicator::FssS)
        );
        if let (Some(means), true, false) = (means, standardizable, set.is_empty()) {
            let list = standardized_list(set, means)?;
            write(&base.join("_standardized.csv"), list.to_csv())?;
            files += 1;
        }
    }
    Ok(files)
}

#[derive(Debug, Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Debug, Serialize)]
struct SetSummary {
    level: Level,
    indicator: Indicator,
    units: usize,
}

#[derive(Debug, Serialize)]
struct DeaSummary {
    dmus: usize,
    inputs: Vec<String>,
    outputs: Vec<String>,
    skipped_without_output: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ScoreReport<'a> {
    tool: Tool,
    config_sha256: String,
    config: &'a RunConfig,
    defaults_used: &'a [String],
    inputs: &'a [InputChecksum],
    load: &'a LoadReport,
    exclusions: ExclusionSummary,
    baselines: BaselineSummary,
    score_sets: Vec<SetSummary>,
    ranking_files: usize,
    dea: DeaSummary,
}

#[derive(Debug, Serialize)]
struct BaselineSummary {
    source: &'static str,
    entries: usize,
}

pub fn score(args: &CorpusArgs, out: Option<&Path>) -> Result<()> {
    let p = prepare(args)?;
    let config = &p.loaded.config;
    let out: PathBuf = out.map_or_else(|| config.output_dir.clone(), Path::to_path_buf);

    let scorer = Scorer::new(&p.corpus, &p.baselines, &config.credit)?;
    let options = AggregationOptions {
        regions: if config.scope.contains(&Scope::Region) {
            config.regions.clone()
        } else {
            BTreeMap::new()
        },
        country: config.scope.contains(&Scope::Country),
    };
    let mut scores = scorer.score_all(&options)?;
    scores.sets.retain(|s| in_scope(s.level, &config.scope));

    write(&out.join("scores.csv"), scores.to_csv())?;
    write(&out.join("field_means.csv"), scores.field_means.to_csv())?;
    write(&out.join("baselines.csv"), p.baselines.to_csv())?;
    let ranking_files = write_rankings(&out.join("rankings"), &scores.sets, Some(&scores.field_means))?;

    let (dmus, skipped) = dmus_from_scorer(&scorer);
    if !dmus.dmus.is_empty() {
        write(&out.join("dmus.csv"), dmus.to_csv())?;
    }

    let report = ScoreReport {
        tool: Tool {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        config_sha256: config.sha256()?,
        config,
        defaults_used: &p.loaded.defaults_used,
        inputs: &p.inputs,
        load: &p.load_report,
        exclusions: exclusion_summary(config, &p.exclusion_report),
        baselines: BaselineSummary {
            source: match config.baselines {
                BaselineSource::Computed => "computed",
                BaselineSource::File(_) => "file",
            },
            entries: p.baselines.len(),
        },
        score_sets: scores
            .sets
            .iter()
            .map(|s| SetSummary {
                level: s.level,
                indicator: s.indicator,
                units: s.entries.len(),
            })
            .collect(),
        ranking_files,
        dea: DeaSummary {
            dmus: dmus.dmus.len(),
            inputs: dmus.input_names,
            outputs: dmus.output_names,
            skipped_without_output: skipped,
        },
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write(&out.join("report.json"), json)?;
    eprintln!(
        "scored {} researchers, {} publications into {}",
        p.corpus.researchers().len(),
        p.corpus.publications().len(),
        out.display()
    );
    Ok(())
}

pub fn rank(
    scores: &Path,
    level: Option<&str>,
    indicator: Option<&str>,
    field_means: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let level: Option<Level> = level
        .map(str::parse)
        .transpose()
        .map_err(|e| InputError(format!("--level: {e}")))?;
    let indicator: Option<Indicator> = indicator
        .map(str::parse)
        .transpose()
        .map_err(|e| InputError(format!("--indicator: {e}")))?;
    let mut sets = read_scores_csv(scores)?;
    sets.retain(|s| level.map_or(true, |l| s.level == l) && indicator.map_or(true, |i| s.indicator == i));
    if sets.is_empty() {
        return Err(InputError(format!("{}: no scores match the selection", scores.display())).into());
    }
    let means = field_means.map(FieldMeans::read_csv).transpose()?;
    let files = write_rankings(out, &sets, means.as_ref())?;
    eprintln!("wrote {files} ranking file(s) under {}", out.display());
    Ok(())
}

fn ranking_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            files.insert(stem, path);
        }
    }
    Ok(files)
}

#[derive(Debug, Serialize)]
struct ComparisonReport {
    a: String,
    b: String,
    groups: BTreeMap<String, ComparisonStats>,
    overall: ComparisonStats,
}

pub fn compare(a: &Path, b: &Path, out: &Path) -> Result<()> {
    let pairs: Vec<(String, PathBuf, PathBuf)> = match (a.is_dir(), b.is_dir()) {
        (true, true) => {
            let fa = ranking_files(a)?;
            let fb = ranking_files(b)?;
            if fa.keys().ne(fb.keys()) {
                let only_a: Vec<&String> = fa.keys().filter(|k| !fb.contains_key(*k)).collect();
                let only_b: Vec<&String> = fb.keys().filter(|k| !fa.contains_key(*k)).collect();
                return Err(InputError(format!(
                    "ranking directories differ: only in A {only_a:?}, only in B {only_b:?}"
                ))
                .into());
            }
            if fa.is_empty() {
                return Err(InputError(format!("{} holds no ranking CSVs", a.display())).into());
            }
            fa.into_iter()
                .map(|(k, pa)| {
                    let pb = fb[&k].clone();
                    (k, pa, pb)
                })
                .collect()
        }
        (false, false) => {
            let stem = a
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "ranking".into());
            vec![(stem, a.to_path_buf(), b.to_path_buf())]
        }
        _ => {
            return Err(InputError("compare needs two files or two directories".into()).into());
        }
    };

    let mut lists = Vec::with_capacity(pairs.len());
    for (g, pa, pb) in &pairs {
        let la = RankedList::read_csv(pa)?;
        let lb = RankedList::read_csv(pb)?;
        lists.push((g.clone(), la, lb));
    }
    let mut groups = BTreeMap::new();
    let mut histogram = String::from("group,shift,count\n");
    for (g, la, lb) in &lists {
        let stats = compare_rankings(la, lb).with_context(|| format!("group `{g}`"))?;
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for s in rank_shifts(la, lb)?.into_values() {
            *counts.entry(s).or_default() += 1;
        }
        for (s, c) in counts {
            histogram.push_str(&format!("{g},{s},{c}\n"));
        }
        groups.insert(g.clone(), stats);
    }
    let refs: Vec<(&RankedList, &RankedList)> = lists.iter().map(|(_, a, b)| (a, b)).collect();
    let report = ComparisonReport {
        a: file_name(a),
        b: file_name(b),
        groups,
        overall: pooled_comparison(&refs)?,
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write(&out.join("comparison.json"), &json)?;
    write(&out.join("shift_histogram.csv"), histogram)?;
    print!("{json}");
    Ok(())
}

pub fn dea(dmus: &Path, model: ModelArg, out: &Path) -> Result<()> {
    let table = DmuTable::read_csv(dmus)?;
    let run = |m| dea_output_oriented(&table.dmus, m);
    match model {
        ModelArg::Crs | ModelArg::Vrs => {
            let m = if model == ModelArg::Crs { DeaModel::Crs } else { DeaModel::Vrs };
            let r = run(m)?;
            write(&out.join("dea_results.csv"), r.to_csv())?;
        }
        ModelArg::Both => {
            let crs = run(DeaModel::Crs)?;
            let vrs = run(DeaModel::Vrs)?;
            let se = scale_efficiency(&crs, &vrs)?;
            write(&out.join("dea_results.csv"), results_csv(&[&crs, &vrs]))?;
            write(&out.join("scale_efficiency.csv"), scale_efficiency_csv(&se))?;
        }
    }
    eprintln!("evaluated {} DMUs into {}", table.dmus.len(), out.display());
    Ok(())
}

pub fn synth(seed: u64, out: &Path, researchers: Option<usize>, params: Option<&Path>) -> Result<()> {
    let mut p = match params {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<SyntheticParams>(&text)
                .map_err(|e| InputError(format!("{}: {e}", path.display())))?
        }
        None => SyntheticParams::default(),
    };
    if let Some(n) = researchers {
        p.researchers = n;
    }
    let corpus = generate_synthetic_corpus(seed, &p)?;
    export_corpus(&corpus, out)?;
    eprintln!(
        "wrote {} researchers and {} publications to {}",
        corpus.researchers().len(),
        corpus.publications().len(),
        out.display()
    );
    Ok(())
}
