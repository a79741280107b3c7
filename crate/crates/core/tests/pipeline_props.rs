//! Feature-pipeline invariants.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use ehrdrift_core::pipeline::{
    bucket_hourly, impute_simple, include_cohort, ColumnKey, FeaturePlan, FillStats, HourlyGrid, Keying,
    Representation, HOURS,
};
use ehrdrift_core::synthdata::{default_config, generate_cohort, ChartEvent, Cohort, IcuStay, ItemId, StayId, SynthConfig};
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Four years, changeover in the third, and three post-era itemids per
/// concept so relabelings have somewhere to go.
fn small_config() -> SynthConfig {
    let mut cfg = SynthConfig {
        year_start: 2001,
        year_end: 2004,
        changeover_year: 2003,
        patients_per_year: 40,
        ..default_config()
    };
    for (k, c) in cfg.concepts.iter_mut().enumerate() {
        let base = 300_000 + 10 * k as u32;
        c.post_era_itemids.extend([ItemId(base), ItemId(base + 1)]);
    }
    cfg
}

fn fixture() -> &'static (SynthConfig, Cohort) {
    static FIXTURE: OnceLock<(SynthConfig, Cohort)> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let cfg = small_config();
        let cohort = include_cohort(&generate_cohort(&cfg).unwrap());
        (cfg, cohort)
    })
}

fn stays_of(cohort: &Cohort, keep: impl Fn(&IcuStay) -> bool) -> Vec<&IcuStay> {
    cohort.stays().iter().filter(|s| keep(s)).collect()
}

/// Sends every post-era event to a random post-era itemid of the same
/// concept.
fn relabel(cfg: &SynthConfig, cohort: &Cohort, seed: u64) -> Cohort {
    let map = cfg.aggregation_map();
    let post: std::collections::BTreeSet<StayId> = cohort
        .stays()
        .iter()
        .filter(|s| cfg.is_post_era(s.admit_year))
        .map(|s| s.stay_id)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = cohort
        .events()
        .iter()
        .map(|e| {
            let mut e = *e;
            if post.contains(&e.stay_id) {
                let concept = cfg.concept(map.concept_of(e.itemid).unwrap()).unwrap();
                e.itemid = *concept.post_era_itemids.choose(&mut rng).unwrap();
            }
            e
        })
        .collect();
    Cohort::new(cohort.stays().to_vec(), events)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregated_matrix_survives_relabeling(seed in any::<u64>()) {
        let (cfg, cohort) = fixture();
        let map = cfg.aggregation_map();
        let relabeled = relabel(cfg, cohort, seed);
        let train = stays_of(cohort, |s| s.admit_year < 2003);
        let all = stays_of(cohort, |_| true);
        let plan = FeaturePlan::fit(cohort, &train, Representation::Aggregated, &map, None, true).unwrap();
        let plan2 = FeaturePlan::fit(&relabeled, &train, Representation::Aggregated, &map, None, true).unwrap();
        prop_assert_eq!(&plan, &plan2);
        let a = plan.build(cohort, &all, &map).unwrap();
        let b = plan.build(&relabeled, &all, &map).unwrap();
        let bits = |m: &[f64]| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.values), bits(&b.values));
    }

    #[test]
    fn pre_era_universe_never_observes_post_era_rows(seed in any::<u64>()) {
        let (cfg, cohort) = fixture();
        let map = cfg.aggregation_map();
        let relabeled = relabel(cfg, cohort, seed);
        let train = stays_of(&relabeled, |s| s.admit_year < 2003);
        let test = stays_of(&relabeled, |s| s.admit_year >= 2003);
        let plan = FeaturePlan::fit(&relabeled, &train, Representation::ItemId, &map, None, true).unwrap();
        let m = plan.build(&relabeled, &test, &map).unwrap();
        for i in 0..m.n_rows() {
            for c in 0..m.grid_columns.len() {
                for h in 0..HOURS {
                    prop_assert_eq!(m.row(i)[m.slot(c, h, 1)], 0.0);
                }
            }
        }
    }

    #[test]
    fn event_order_within_a_stay_is_irrelevant(seed in any::<u64>(), idx in 0usize..100) {
        let (cfg, cohort) = fixture();
        let map = cfg.aggregation_map();
        let stay = &cohort.stays()[idx % cohort.stays().len()];
        let mut events: Vec<ChartEvent> = cohort.events_for(stay.stay_id).to_vec();
        // Duplicate some cells so hours hold several values.
        let extra: Vec<ChartEvent> = events.iter().step_by(3).map(|e| ChartEvent { value: e.value * 1.7 + 0.1, ..*e }).collect();
        events.extend(extra);
        let mut shuffled = events.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for keying in [Keying::ItemId, Keying::Aggregated(&map)] {
            prop_assert_eq!(bucket_hourly(&events, stay, keying), bucket_hourly(&shuffled, stay, keying));
        }
    }

    #[test]
    fn imputed_channels_agree(cells in prop::collection::vec(prop::option::weighted(0.3, -50.0f64..50.0), HOURS * 2), fill in -5.0f64..5.0) {
        let columns = vec![ColumnKey::Item(ItemId(1)), ColumnKey::Item(ItemId(2))];
        let mut grid = HourlyGrid::empty(StayId(1), columns.clone());
        for (i, v) in cells.iter().enumerate() {
            grid.set(i % HOURS, i / HOURS, *v);
        }
        let stats = FillStats { defaults: columns.iter().map(|k| (k.clone(), fill)).collect::<BTreeMap<_, _>>() };
        let imputed = impute_simple(&grid, &stats).unwrap();
        for c in 0..2 {
            let mut last: Option<(usize, f64)> = None;
            for h in 0..HOURS {
                let cell = grid.cell(h, c);
                if let Some(v) = cell {
                    last = Some((h, v));
                }
                prop_assert_eq!(imputed.mask(h, c), if cell.is_some() { 1.0 } else { 0.0 });
                match last {
                    Some((at, v)) => {
                        prop_assert_eq!(imputed.value(h, c), v);
                        prop_assert_eq!(imputed.delta(h, c), (h - at) as f64);
                    }
                    None => {
                        prop_assert_eq!(imputed.value(h, c), fill);
                        prop_assert_eq!(imputed.delta(h, c), (h + 1) as f64);
                    }
                }
            }
        }
    }
}

#[test]
fn plan_ignores_everything_outside_the_training_stays() {
    let (cfg, cohort) = fixture();
    let map = cfg.aggregation_map();
    let train: Vec<&IcuStay> = stays_of(cohort, |s| s.admit_year == 2001);
    // Scramble every non-training event.
    let train_ids: std::collections::BTreeSet<StayId> = train.iter().map(|s| s.stay_id).collect();
    let events = cohort
        .events()
        .iter()
        .map(|e| if train_ids.contains(&e.stay_id) { *e } else { ChartEvent { value: e.value * -3.0 + 100.0, itemid: ItemId(999_999), ..*e } })
        .collect();
    let altered = Cohort::new(cohort.stays().to_vec(), events);
    for repr in [Representation::ItemId, Representation::Aggregated] {
        let a = FeaturePlan::fit(cohort, &train, repr, &map, None, true).unwrap();
        let b = FeaturePlan::fit(&altered, &train, repr, &map, None, true).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn concept_subset_keeps_only_member_columns() {
    let (cfg, cohort) = fixture();
    let map = cfg.aggregation_map();
    let train = stays_of(cohort, |s| s.admit_year < 2003);
    let subset = vec!["gcs_total".to_string()];
    let plan = FeaturePlan::fit(cohort, &train, Representation::ItemId, &map, Some(&subset), false).unwrap();
    let members = map.itemids_of("gcs_total").unwrap();
    assert!(!plan.columns.is_empty());
    assert!(plan.columns.iter().all(|k| matches!(k, ColumnKey::Item(i) if members.contains(i))));
    assert_eq!(plan.width(), plan.columns.len() * 72);
}
