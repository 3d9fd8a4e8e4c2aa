//! Percentile rankings and the statistics used to compare two ranking lists.
//!
//! Ranks use competition ("1224") ranking: tied scores share the best rank
//! of their block. Percentile of a unit is the share of units with a strictly
//! lower score, on a 0–100 scale, so the best of ten units sits at 90 and the
//! worst at 0.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CsvTable;
use crate::error::{Error, Result};
use crate::indicators::{csv_field, FieldMeans, Indicator, Level, ScoreSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Ties share the minimum rank of their block.
    Competition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub unit_id: String,
    pub score: f64,
    /// 1 is best.
    pub rank: usize,
    pub percentile: f64,
}

/// Entries ordered best first; ties ordered by unit id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
    pub tie_policy: TiePolicy,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, unit_id: &str) -> Option<&RankedEntry> {
        self.entries.iter().find(|e| e.unit_id == unit_id)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("unit_id,score,rank,percentile\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                csv_field(&e.unit_id),
                e.score,
                e.rank,
                e.percentile
            ));
        }
        out
    }

    /// Reads `unit_id,score,rank,percentile`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        CsvTable::open(path, &["unit_id", "score", "rank", "percentile"])?.for_each_row(|row| {
            let unit_id = row.req("unit_id")?.to_owned();
            if !seen.insert(unit_id.clone()) {
                return Err(row.error("unit_id", format!("duplicate unit `{unit_id}`")));
            }
            let rank: usize = row.parse("rank")?;
            if rank == 0 {
                return Err(row.error("rank", "ranks start at 1"));
            }
            let percentile: f64 = row.parse("percentile")?;
            if !(0.0..=100.0).contains(&percentile) {
                return Err(row.error("percentile", "percentile outside [0, 100]"));
            }
            entries.push(RankedEntry {
                unit_id,
                score: row.parse("score")?,
                rank,
                percentile,
            });
            Ok(())
        })?;
        if entries.is_empty() {
            return Err(Error::BadFile {
                path: path.to_owned(),
                message: "ranking has no entries".into(),
            });
        }
        entries.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.unit_id.cmp(&b.unit_id)));
        if entries.windows(2).any(|w| w[1].score > w[0].score) {
            return Err(Error::BadFile {
                path: path.to_owned(),
                message: "scores must not increase with rank".into(),
            });
        }
        Ok(RankedList {
            entries,
            tie_policy: TiePolicy::Competition,
        })
    }
}

/// Ranks units by score, higher is better.
pub fn percentile_rank<I, S>(scores: I) -> Result<RankedList>
where
    I: IntoIterator<Item = (S, f64)>,
    S: Into<String>,
{
    let mut items: Vec<(String, f64)> = scores.into_iter().map(|(u, s)| (u.into(), s)).collect();
    if items.is_empty() {
        return Err(Error::EmptyRanking);
    }
    if let Some((u, s)) = items.iter().find(|(_, s)| s.is_nan()) {
        return Err(Error::InvalidParameter(format!("score of `{u}` is {s}")));
    }
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let n = items.len();
    let mut entries = Vec::with_capacity(n);
    let mut block_start = 0;
    for i in 0..n {
        if i > 0 && items[i].1.total_cmp(&items[i - 1].1) != Ordering::Equal {
            block_start = i;
        }
        let mut block_end = i + 1;
        while block_end < n && items[block_end].1.total_cmp(&items[i].1) == Ordering::Equal {
            block_end += 1;
        }
        let below = n - block_end;
        entries.push(RankedEntry {
            unit_id: std::mem::take(&mut items[i].0),
            score: items[i].1,
            rank: block_start + 1,
            percentile: 100.0 * below as f64 / n as f64,
        });
    }
    Ok(RankedList {
        entries,
        tie_policy: TiePolicy::Competition,
    })
}

/// One ranking per group of a score set (a single `None` group for
/// ungrouped levels). Unit ids within a group are the bare unit names.
pub fn rank_score_set(set: &ScoreSet) -> Result<BTreeMap<Option<String>, RankedList>> {
    set.by_group()
        .into_iter()
        .map(|(g, entries)| {
            let list = percentile_rank(entries.iter().map(|e| (e.unit.clone(), e.value)))?;
            Ok((g.map(str::to_owned), list))
        })
        .collect()
}

/// Divides each score by the national mean of its SDS and ranks all units
/// together. Only researcher (`FSS_R`, `Q`, `FQ`) and SDS (`FSS_S`) scores
/// carry a per-SDS mean.
pub fn standardized_list(scores: &ScoreSet, means: &FieldMeans) -> Result<RankedList> {
    let supported = matches!(
        (scores.level, scores.indicator),
        (Level::Researcher, Indicator::FssR | Indicator::Q | Indicator::Fq)
            | (Level::Sds, Indicator::FssS)
    );
    if !supported {
        return Err(Error::InvalidParameter(format!(
            "`{}` scores at level `{}` have no field mean to standardize by",
            scores.indicator, scores.level
        )));
    }
    let mut items = Vec::with_capacity(scores.entries.len());
    for e in &scores.entries {
        let sds = e.group.as_deref().ok_or_else(|| {
            Error::InvalidParameter(format!("entry `{}` has no SDS group", e.unit))
        })?;
        items.push((e.unit_id(), e.value / means.mean(scores.indicator, sds)?));
    }
    percentile_rank(items)
}

/// Averages within-group percentiles per aggregate unit. Percentiles are not
/// an interval scale; this is provided for reproducing legacy reports and
/// logs a warning on every call.
pub fn average_percentiles<F>(set: &ScoreSet, unit_of: F) -> Result<BTreeMap<String, f64>>
where
    F: Fn(Option<&str>, &str) -> Option<String>,
{
    log::warn!(
        "averaging percentile ranks across fields: percentile ranks are not equal-interval \
         and should not be added or averaged; prefer standardized aggregation"
    );
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (group, list) in rank_score_set(set)? {
        for e in &list.entries {
            if let Some(unit) = unit_of(group.as_deref(), &e.unit_id) {
                let slot = acc.entry(unit).or_default();
                slot.0 += e.percentile;
                slot.1 += 1;
            }
        }
    }
    Ok(acc
        .into_iter()
        .map(|(u, (sum, n))| (u, sum / n as f64))
        .collect())
}

/// Number of units in the top quartile of `n`: `ceil(n / 4)`.
pub fn top_quartile_size(n: usize) -> usize {
    n.div_ceil(4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonStats {
    pub n_units: usize,
    pub pct_shifting: f64,
    pub avg_shift: f64,
    pub median_shift: f64,
    pub max_shift: usize,
    pub spearman: f64,
    /// Share of `a`'s top quartile that is outside `b`'s top quartile.
    pub top_quartile_exit: f64,
}

/// Absolute rank shift of every unit, keyed by unit id.
pub fn rank_shifts(a: &RankedList, b: &RankedList) -> Result<BTreeMap<String, usize>> {
    let rb: HashMap<&str, usize> = b.entries.iter().map(|e| (e.unit_id.as_str(), e.rank)).collect();
    let ua: BTreeSet<&str> = a.entries.iter().map(|e| e.unit_id.as_str()).collect();
    let ub: BTreeSet<&str> = rb.keys().copied().collect();
    if ua != ub {
        return Err(Error::UnitMismatch {
            only_a: ua.difference(&ub).map(|s| (*s).to_owned()).collect(),
            only_b: ub.difference(&ua).map(|s| (*s).to_owned()).collect(),
        });
    }
    Ok(a.entries
        .iter()
        .map(|e| (e.unit_id.clone(), e.rank.abs_diff(rb[e.unit_id.as_str()])))
        .collect())
}

pub fn compare_rankings(a: &RankedList, b: &RankedList) -> Result<ComparisonStats> {
    let shifts = rank_shifts(a, b)?;
    let n = shifts.len();
    if n == 0 {
        return Err(Error::EmptyRanking);
    }
    let mut sorted: Vec<usize> = shifts.values().copied().collect();
    sorted.sort_unstable();
    let moved = sorted.iter().filter(|&&s| s > 0).count();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };

    let avg_a = average_ranks(a);
    let avg_b = average_ranks(b);
    let xs: Vec<f64> = a.entries.iter().map(|e| avg_a[e.unit_id.as_str()]).collect();
    let ys: Vec<f64> = a.entries.iter().map(|e| avg_b[e.unit_id.as_str()]).collect();
    let spearman = pearson(&xs, &ys).unwrap_or(if moved == 0 { 1.0 } else { 0.0 });

    let q = top_quartile_size(n);
    let top_b: BTreeSet<&str> = b.entries[..q].iter().map(|e| e.unit_id.as_str()).collect();
    let exits = a.entries[..q]
        .iter()
        .filter(|e| !top_b.contains(e.unit_id.as_str()))
        .count();

    Ok(ComparisonStats {
        n_units: n,
        pct_shifting: 100.0 * moved as f64 / n as f64,
        avg_shift: sorted.iter().sum::<usize>() as f64 / n as f64,
        median_shift: median,
        max_shift: *sorted.last().expect("nonempty"),
        spearman,
        top_quartile_exit: 100.0 * exits as f64 / q as f64,
    })
}

/// Statistics over several group-wise comparisons taken together: shift
/// statistics over the pooled units, Spearman as the unit-weighted mean of
/// the group coefficients, and top-quartile exit over the pooled quartiles.
pub fn pooled_comparison(pairs: &[(&RankedList, &RankedList)]) -> Result<ComparisonStats> {
    if pairs.is_empty() {
        return Err(Error::EmptyRanking);
    }
    let mut shifts = Vec::new();
    let (mut rho_sum, mut exits, mut quartiles) = (0.0, 0.0, 0usize);
    for (a, b) in pairs {
        let stats = compare_rankings(a, b)?;
        shifts.extend(rank_shifts(a, b)?.into_values());
        rho_sum += stats.spearman * stats.n_units as f64;
        let q = top_quartile_size(stats.n_units);
        exits += (stats.top_quartile_exit * q as f64 / 100.0).round();
        quartiles += q;
    }
    shifts.sort_unstable();
    let n = shifts.len();
    let moved = shifts.iter().filter(|&&s| s > 0).count();
    let median = if n % 2 == 1 {
        shifts[n / 2] as f64
    } else {
        (shifts[n / 2 - 1] + shifts[n / 2]) as f64 / 2.0
    };
    Ok(ComparisonStats {
        n_units: n,
        pct_shifting: 100.0 * moved as f64 / n as f64,
        avg_shift: shifts.iter().sum::<usize>() as f64 / n as f64,
        median_shift: median,
        max_shift: *shifts.last().expect("nonempty"),
        spearman: rho_sum / n as f64,
        top_quartile_exit: 100.0 * exits / quartiles as f64,
    })
}

/// Histogram of rank shifts, `shift → number of units`.
pub fn shift_histogram(a: &RankedList, b: &RankedList) -> Result<BTreeMap<usize, usize>> {
    let mut h = BTreeMap::new();
    for s in rank_shifts(a, b)?.into_values() {
        *h.entry(s).or_default() += 1;
    }
    Ok(h)
}

/// Fractional ("average") ranks recovered from competition ranks: a tie
/// block of size `m` starting at rank `r` gets `r + (m - 1) / 2`.
fn average_ranks(list: &RankedList) -> HashMap<&str, f64> {
    let mut block: HashMap<usize, usize> = HashMap::new();
    for e in &list.entries {
        *block.entry(e.rank).or_default() += 1;
    }
    list.entries
        .iter()
        .map(|e| {
            let m = block[&e.rank];
            (e.unit_id.as_str(), e.rank as f64 + (m as f64 - 1.0) / 2.0)
        })
        .collect()
}

/// Pearson correlation; `None` when either side has zero variance.
fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation of two score vectors with ties given average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::InvalidParameter(
            "spearman needs two nonempty vectors of equal length".into(),
        ));
    }
    let rank = |v: &[f64]| -> Result<Vec<f64>> {
        let list = percentile_rank(v.iter().enumerate().map(|(i, s)| (format!("{i:010}"), *s)))?;
        let avg = average_ranks(&list);
        Ok((0..v.len()).map(|i| avg[format!("{i:010}").as_str()]).collect())
    };
    let (rx, ry) = (rank(xs)?, rank(ys)?);
    pearson(&rx, &ry).ok_or_else(|| {
        Error::InvalidParameter("spearman is undefined for a constant vector".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(scores: &[(&str, f64)]) -> RankedList {
        percentile_rank(scores.iter().map(|(u, s)| (*u, *s))).unwrap()
    }

    #[test]
    fn worked_percentile_anchors() {
        let ten: Vec<(String, f64)> = (0..10).map(|i| (format!("u{i}"), 100.0 - i as f64)).collect();
        let l = percentile_rank(ten).unwrap();
        assert_eq!(l.entries[2].percentile, 70.0);
        assert_eq!(l.entries[2].rank, 3);
        let hundred: Vec<(String, f64)> = (0..100).map(|i| (format!("u{i:03}"), 1000.0 - i as f64)).collect();
        let l = percentile_rank(hundred).unwrap();
        assert_eq!(l.entries[2].percentile, 97.0);
        assert_eq!(l.entries[99].percentile, 0.0);
    }

    #[test]
    fn ties_share_rank_and_percentile() {
        let l = list(&[("a", 3.0), ("b", 5.0), ("c", 3.0), ("d", 1.0)]);
        let ranks: Vec<(String, usize, f64)> = l
            .entries
            .iter()
            .map(|e| (e.unit_id.clone(), e.rank, e.percentile))
            .collect();
        assert_eq!(
            ranks,
            vec![
                ("b".into(), 1, 75.0),
                ("a".into(), 2, 25.0),
                ("c".into(), 2, 25.0),
                ("d".into(), 4, 0.0),
            ]
        );
    }

    #[test]
    fn empty_ranking_errors() {
        assert!(matches!(
            percentile_rank(Vec::<(String, f64)>::new()),
            Err(Error::EmptyRanking)
        ));
    }

    #[test]
    fn identical_lists() {
        let a = list(&[("a", 4.0), ("b", 3.0), ("c", 2.0), ("d", 1.0)]);
        let s = compare_rankings(&a, &a).unwrap();
        assert_eq!(s.pct_shifting, 0.0);
        assert_eq!(s.avg_shift, 0.0);
        assert_eq!(s.max_shift, 0);
        assert_eq!(s.spearman, 1.0);
        assert_eq!(s.top_quartile_exit, 0.0);
    }

    #[test]
    fn reversal_of_five() {
        let a = list(&[("a", 5.0), ("b", 4.0), ("c", 3.0), ("d", 2.0), ("e", 1.0)]);
        let b = list(&[("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 4.0), ("e", 5.0)]);
        let s = compare_rankings(&a, &b).unwrap();
        assert!((s.spearman + 1.0).abs() < 1e-12);
        assert_eq!(s.max_shift, 4);
        assert_eq!(s.top_quartile_exit, 100.0);
    }

    #[test]
    fn single_swap_of_four() {
        let a = list(&[("a", 4.0), ("b", 3.0), ("c", 2.0), ("d", 1.0)]);
        let b = list(&[("a", 3.0), ("b", 4.0), ("c", 2.0), ("d", 1.0)]);
        let s = compare_rankings(&a, &b).unwrap();
        assert_eq!(s.pct_shifting, 50.0);
        assert_eq!(s.avg_shift, 0.5);
        assert_eq!(s.median_shift, 0.5);
        assert_eq!(s.max_shift, 1);
        // d² = 1 + 1 → 1 - 6·2/(4·15) = 0.8
        assert!((s.spearman - 0.8).abs() < 1e-12);
        assert_eq!(s.top_quartile_exit, 100.0);
    }

    #[test]
    fn mismatched_units_list_the_difference() {
        let a = list(&[("a", 1.0), ("b", 2.0)]);
        let b = list(&[("a", 1.0), ("c", 2.0)]);
        match compare_rankings(&a, &b) {
            Err(Error::UnitMismatch { only_a, only_b }) => {
                assert_eq!(only_a, vec!["b".to_owned()]);
                assert_eq!(only_b, vec!["c".to_owned()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shift_stats_are_symmetric() {
        let a = list(&[("a", 5.0), ("b", 4.0), ("c", 3.0), ("d", 2.0), ("e", 1.0)]);
        let b = list(&[("a", 2.0), ("b", 5.0), ("c", 1.0), ("d", 4.0), ("e", 3.0)]);
        let ab = compare_rankings(&a, &b).unwrap();
        let ba = compare_rankings(&b, &a).unwrap();
        assert_eq!(ab.pct_shifting, ba.pct_shifting);
        assert_eq!(ab.avg_shift, ba.avg_shift);
        assert_eq!(ab.median_shift, ba.median_shift);
        assert_eq!(ab.max_shift, ba.max_shift);
        assert!((ab.spearman - ba.spearman).abs() < 1e-15);
    }

    #[test]
    fn quartile_sizes() {
        for (n, q) in [(42, 11), (43, 11), (50, 13), (61, 16), (1, 1), (4, 1), (5, 2)] {
            assert_eq!(top_quartile_size(n), q);
        }
    }

    #[test]
    fn sixty_one_units_fifty_two_moving() {
        // keep 9 units in place and rotate the remaining 52 by one position
        let n = 61;
        let a: Vec<(String, f64)> = (0..n).map(|i| (format!("u{i:02}"), (n - i) as f64)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        let moving: Vec<usize> = (9..n).collect();
        for (k, &i) in moving.iter().enumerate() {
            order[i] = moving[(k + 1) % moving.len()];
        }
        let b: Vec<(String, f64)> = (0..n).map(|i| (format!("u{:02}", order[i]), (n - i) as f64)).collect();
        let s = compare_rankings(&percentile_rank(a).unwrap(), &percentile_rank(b).unwrap()).unwrap();
        assert_eq!(s.n_units, 61);
        assert!((s.pct_shifting - 85.2).abs() < 0.05);
    }

    #[test]
    fn spearman_with_ties_uses_average_ranks() {
        // x ranks: 1, 2.5, 2.5, 4 ; y ranks: 1, 2, 3, 4
        let r = spearman(&[4.0, 2.0, 2.0, 1.0], &[4.0, 3.0, 2.0, 1.0]).unwrap();
        let expected = {
            let x = [1.0, 2.5, 2.5, 4.0];
            let y = [1.0, 2.0, 3.0, 4.0];
            pearson(&x, &y).unwrap()
        };
        assert!((r - expected).abs() < 1e-15);
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pooled_over_two_groups() {
        let a1 = list(&[("a", 4.0), ("b", 3.0), ("c", 2.0), ("d", 1.0)]);
        let b1 = list(&[("a", 3.0), ("b", 4.0), ("c", 2.0), ("d", 1.0)]);
        let a2 = list(&[("x", 2.0), ("y", 1.0)]);
        let s = pooled_comparison(&[(&a1, &b1), (&a2, &a2)]).unwrap();
        assert_eq!(s.n_units, 6);
        assert!((s.pct_shifting - 100.0 / 3.0).abs() < 1e-12);
        assert!((s.avg_shift - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(s.median_shift, 0.0);
        assert_eq!(s.max_shift, 1);
        assert!((s.spearman - (0.8 * 4.0 + 2.0) / 6.0).abs() < 1e-12);
        assert_eq!(s.top_quartile_exit, 50.0);
    }

    #[test]
    fn csv_round_trip() {
        let l = list(&[("a", 0.5), ("b", 2.25), ("c", 0.5)]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, l.to_csv()).unwrap();
        assert_eq!(RankedList::read_csv(&p).unwrap(), l);
    }

    #[test]
    fn standardized_divides_by_sds_mean() {
        let mut means = FieldMeans::default();
        means.fss_r.insert("S1".into(), 2.0);
        means.fss_r.insert("S2".into(), 4.0);
        let set = ScoreSet::new(
            Level::Researcher,
            Indicator::FssR,
            vec![
                crate::ScoreEntry { group: Some("S1".into()), unit: "a".into(), value: 5.0 },
                crate::ScoreEntry { group: Some("S2".into()), unit: "b".into(), value: 4.0 },
            ],
        );
        let l = standardized_list(&set, &means).unwrap();
        assert_eq!(l.get("S1/a").unwrap().score, 2.5);
        assert_eq!(l.get("S2/b").unwrap().score, 1.0);
        means.fss_r.remove("S2");
        assert!(standardized_list(&set, &means).is_err());
    }
}
