use proptest::prelude::*;
use resprod_core::corpus::SyntheticParams;
use resprod_core::dea::DeaModel;
use resprod_core::indicators::{Indicator, Level};
use resprod_core::rankings::{rank_score_set, top_quartile_size};
use resprod_core::{
    compare_rankings, compute_baselines, dea_output_oriented, generate_synthetic_corpus,
    percentile_rank, AggregationOptions, CreditPolicy, Dmu, Scorer,
};

fn scores() -> impl Strategy<Value = Vec<(String, f64)>> {
    proptest::collection::vec(0u8..20, 1..60).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, s)| (format!("u{i:03}"), f64::from(s) / 4.0))
            .collect()
    })
}

fn dmus() -> impl Strategy<Value = Vec<Dmu>> {
    proptest::collection::vec(
        (
            proptest::collection::vec(0.5f64..10.0, 2),
            proptest::collection::vec(0.5f64..10.0, 2),
        ),
        1..7,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (x, y))| Dmu::new(format!("d{i}"), x, y))
            .collect()
    })
}

proptest! {
    #[test]
    fn percentiles_are_consistent(items in scores()) {
        let list = percentile_rank(items.clone()).unwrap();
        let n = items.len();
        prop_assert_eq!(list.len(), n);
        for w in list.entries.windows(2) {
            prop_assert!(w[0].score >= w[1].score);
            prop_assert!(w[0].rank <= w[1].rank);
            prop_assert!(w[0].percentile >= w[1].percentile);
            if w[0].score == w[1].score {
                prop_assert_eq!(w[0].rank, w[1].rank);
                prop_assert_eq!(w[0].percentile, w[1].percentile);
            }
        }
        for e in &list.entries {
            let above = items.iter().filter(|(_, s)| *s > e.score).count();
            let below = items.iter().filter(|(_, s)| *s < e.score).count();
            prop_assert_eq!(e.rank, above + 1);
            prop_assert_eq!(e.percentile, 100.0 * below as f64 / n as f64);
        }
    }

    #[test]
    fn comparison_is_symmetric_and_bounded(a in scores(), seed in any::<u64>()) {
        // b: same units, shuffled scores
        let mut vals: Vec<f64> = a.iter().map(|(_, s)| *s).collect();
        let k = (seed as usize) % vals.len();
        vals.rotate_left(k);
        let b: Vec<(String, f64)> = a.iter().zip(vals).map(|((u, _), s)| (u.clone(), s)).collect();
        let la = percentile_rank(a).unwrap();
        let lb = percentile_rank(b).unwrap();
        let ab = compare_rankings(&la, &lb).unwrap();
        let ba = compare_rankings(&lb, &la).unwrap();
        prop_assert_eq!(ab.max_shift, ba.max_shift);
        prop_assert_eq!(ab.avg_shift, ba.avg_shift);
        prop_assert!((ab.spearman - ba.spearman).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab.spearman));
        prop_assert!((0.0..=100.0).contains(&ab.pct_shifting));
        prop_assert!((0.0..=100.0).contains(&ab.top_quartile_exit));
        prop_assert!(ab.median_shift <= ab.max_shift as f64);
        prop_assert_eq!(top_quartile_size(ab.n_units), ab.n_units.div_ceil(4));
    }

    #[test]
    fn dea_model_relations(set in dmus()) {
        let crs = dea_output_oriented(&set, DeaModel::Crs).unwrap();
        let vrs = dea_output_oriented(&set, DeaModel::Vrs).unwrap();
        for (c, v) in crs.units.iter().zip(&vrs.units) {
            prop_assert!(c.phi >= 1.0 - 1e-6);
            prop_assert!(v.phi >= 1.0 - 1e-6);
            prop_assert!(v.efficiency + 1e-6 >= c.efficiency);
            if c.is_frontier() {
                prop_assert!(v.is_frontier());
            }
            prop_assert!(c.efficiency > 0.0 && c.efficiency <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn dominating_dmu_never_lowers_phi(set in dmus()) {
        let before = dea_output_oriented(&set, DeaModel::Vrs).unwrap();
        let max_out = |r: usize| set.iter().map(|d| d.outputs[r]).fold(0.0, f64::max);
        let min_in = |i: usize| set.iter().map(|d| d.inputs[i]).fold(f64::INFINITY, f64::min);
        let mut grown = set.clone();
        grown.push(Dmu::new("star", vec![min_in(0), min_in(1)], vec![max_out(0) * 1.5, max_out(1) * 1.5]));
        let after = dea_output_oriented(&grown, DeaModel::Vrs).unwrap();
        for (b, a) in before.units.iter().zip(&after.units) {
            prop_assert!(a.phi + 1e-7 >= b.phi);
        }
        prop_assert!(after.units.last().unwrap().is_frontier());
    }
}

#[test]
fn salary_scaling_keeps_every_ranking() {
    let params = SyntheticParams {
        researchers: 150,
        ..Default::default()
    };
    let corpus = generate_synthetic_corpus(3, &params).unwrap();
    let baselines = compute_baselines(&corpus);
    let policy = CreditPolicy::default();
    let opts = AggregationOptions::default();
    let base = Scorer::new(&corpus, &baselines, &policy).unwrap().score_all(&opts).unwrap();
    for k in [0.5, 3.0] {
        let scaled_corpus = corpus.with_scaled_salaries(k).unwrap();
        let scaled = Scorer::new(&scaled_corpus, &baselines, &policy)
            .unwrap()
            .score_all(&opts)
            .unwrap();
        for (a, b) in base.sets.iter().zip(&scaled.sets) {
            assert_eq!((a.level, a.indicator), (b.level, b.indicator));
            let ra = rank_score_set(a).unwrap();
            let rb = rank_score_set(b).unwrap();
            for (g, la) in &ra {
                let lb = &rb[g];
                let ua: Vec<&str> = la.entries.iter().map(|e| e.unit_id.as_str()).collect();
                let ub: Vec<&str> = lb.entries.iter().map(|e| e.unit_id.as_str()).collect();
                assert_eq!(ua, ub, "{} {}", a.level, a.indicator);
            }
            if matches!((a.level, a.indicator), (Level::Researcher, Indicator::FssR) | (Level::Sds, Indicator::FssS)) {
                for (x, y) in a.entries.iter().zip(&b.entries) {
                    assert!((y.value - x.value / k).abs() <= 1e-12 * x.value.abs().max(1e-300));
                }
            }
        }
    }
}
