//! Research productivity measurement.
//!
//! * [`corpus`]: researchers, publications, bylines, taxonomy and salaries;
//!   CSV ingestion, exclusion filters and a synthetic corpus generator.
//! * [`normalize`]: citation baselines and field-normalized impact.
//! * [`credit`]: fractional byline credit.
//! * [`indicators`]: FSS at researcher, SDS, department and institution
//!   level, plus the P and FP baselines.
//! * [`rankings`]: percentile ranks and ranking comparison statistics.
//! * [`dea`]: output-oriented DEA under CRS and VRS.

pub mod corpus;
pub mod credit;
pub mod dea;
pub mod error;
pub mod indicators;
pub mod normalize;
pub mod rankings;

pub use corpus::{
    apply_exclusions, export_corpus, generate_synthetic_corpus, load_corpus, AcademicRank,
    Authorship, Convention, Corpus, CorpusPaths, ExclusionReport, ExclusionThresholds,
    FieldTaxonomy, LoadOptions, LoadReport, Publication, Researcher, SalarySchedule,
    SyntheticParams, Window,
};
pub use credit::{credit_shares, fractional_contribution, CreditPolicy, PositionWeights, WeightingScheme};
pub use dea::{dea_output_oriented, scale_efficiency, DeaModel, DeaResult, Dmu, DmuTable};
pub use error::{Error, Result};
pub use indicators::{read_scores_csv, 
    AggregationOptions, FieldMeans, Indicator, Level, ResearcherMetrics, ScoreEntry, ScoreSet,
    Scorer, Scores,
};
pub use normalize::{compute_baselines, normalized_impact, BaselineEntry, BaselineTable};
pub use rankings::{compare_rankings, percentile_rank, ComparisonStats, RankedEntry, RankedList};
