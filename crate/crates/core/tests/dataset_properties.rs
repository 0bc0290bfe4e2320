use proptest::prelude::*;
use voe_core::dataset::{assign_splits, generate_dataset, generate_trial, load_dataset, DatasetConfig, Split};
use voe_core::experiment::{evaluate_run, train_models, Reality, RunConfig};
use voe_core::features::FEATURES;
use voe_core::perception::{perceive, PerceptionConfig};
use voe_core::rng::stream;
use voe_core::scenario::{EventCategory, TrialPair};

fn category() -> impl Strategy<Value = EventCategory> {
    prop::sample::select(EventCategory::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn splits_partition_every_index(seed in any::<u64>(), c in category(), n in 10usize..400, frac in 0.0f64..1.0) {
        let train = (n as f64 * frac) as usize;
        let val = (n - train) / 2;
        let s = assign_splits(seed, c, n, Some((train, val)));
        prop_assert_eq!(s.len(), n);
        let count = |x: Split| s.iter().filter(|&&y| y == x).count();
        prop_assert_eq!((count(Split::Train), count(Split::Val), count(Split::Test)), (train, val, n - train - val));
        let d = assign_splits(seed, c, n, None);
        prop_assert_eq!(d.iter().filter(|&&y| y == Split::Train).count(), n * 75 / 100);
        prop_assert_eq!(d.iter().filter(|&&y| y == Split::Val).count(), n * 15 / 100);
    }

    #[test]
    fn trial_content_depends_only_on_its_own_index(seed in any::<u64>(), c in category(), i in 0usize..500, j in 0usize..500) {
        let a = generate_trial(seed, c, i).unwrap();
        let _ = generate_trial(seed, c, j).unwrap();
        prop_assert_eq!(a, generate_trial(seed, c, i).unwrap());
    }

    #[test]
    fn perceived_scalars_stay_in_protocol(seed in any::<u64>(), c in category(), sigma in 0.0f64..1.0, p in 0.0f64..1.0) {
        let t = generate_trial(seed, c, 0).unwrap();
        let cfg = PerceptionConfig { sigma_scalar: sigma, p_flip: p, p_irrelevance_error: p / 2.0, seed };
        let f = perceive(&t.features, &cfg, &mut stream(&[seed]));
        for (v, d) in f.0.iter().zip(&FEATURES) {
            prop_assert!(*v == -1.0 || *v >= 0.0, "{} = {}", d.name, v);
            if d.kind == voe_core::features::SlotKind::Categorical && *v != -1.0 {
                prop_assert!((*v as usize) < d.labels.len() && v.fract() == 0.0);
            }
        }
    }

    #[test]
    fn trial_json_roundtrips(seed in any::<u64>(), c in category(), i in 0usize..100) {
        let t = generate_trial(seed, c, i).unwrap();
        let back: TrialPair = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }
}

#[test]
fn reloaded_dataset_trains_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = DatasetConfig::uniform(21, 40, &[EventCategory::Barrier]);
    generate_dataset(&cfg, dir.path()).unwrap();
    let d = load_dataset(dir.path(), None).unwrap();
    let fresh: Vec<TrialPair> = (0..40).map(|i| generate_trial(21, EventCategory::Barrier, i).unwrap()).collect();
    assert_eq!(d.trials, fresh);
    let train = d.select(EventCategory::Barrier, Split::Train);
    let test = d.select(EventCategory::Barrier, Split::Test);
    for reality in [Reality::Normal, Reality::Flipped] {
        let rc = RunConfig { perception: PerceptionConfig::with_sigma(0.1), reality, ..Default::default() };
        let a = train_models(&train, &rc, 3).unwrap();
        let b = train_models(&train, &rc, 3).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(evaluate_run(&a, &test, &rc, 3).unwrap(), evaluate_run(&b, &test, &rc, 3).unwrap());
    }
}
