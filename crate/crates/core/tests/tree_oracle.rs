mod common;

use common::cart_oracle::{fit, OracleData};
use common::{fit_single, small_problem};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use voe_core::features::{SlotKind, Verdict};
use voe_core::reasoning::{fit_tree, Dataset, Node, TrainConfig};

fn agrees_with_oracle(seed: u64, cfg: &TrainConfig) -> Result<(), String> {
    let p = small_problem(&mut ChaCha8Rng::seed_from_u64(seed));
    let tree = fit_single(&p, cfg);
    let data = OracleData { x: &p.x, y: &p.y, categorical: &p.categorical, classes: p.classes };
    let oracle = fit(&data, cfg.max_depth, cfg.min_samples_leaf);
    for (i, row) in p.x.iter().enumerate() {
        let got = tree.predict(row)[0].class();
        let want = oracle.predict(row);
        if got != want {
            return Err(format!("seed {seed} row {i}: tree {got} oracle {want}"));
        }
    }
    if tree.leaf_count() != oracle.leaves() {
        return Err(format!("seed {seed}: {} leaves vs oracle {}", tree.leaf_count(), oracle.leaves()));
    }
    Ok(())
}

#[test]
fn single_target_matches_exhaustive_cart_on_50_datasets() {
    for seed in 0..50 {
        agrees_with_oracle(seed, &TrainConfig::default()).unwrap();
    }
}

#[test]
fn matches_oracle_under_tight_limits() {
    for seed in 100..150 {
        agrees_with_oracle(seed, &TrainConfig { max_depth: 2, min_samples_leaf: 1 }).unwrap();
        agrees_with_oracle(seed, &TrainConfig { max_depth: 64, min_samples_leaf: 5 }).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_agreement_holds_for_any_seed(seed in any::<u64>(), depth in 1usize..8, leaf in 1usize..4) {
        let cfg = TrainConfig { max_depth: depth, min_samples_leaf: leaf };
        let outcome = agrees_with_oracle(seed, &cfg);
        prop_assert!(outcome.is_ok(), "{:?}", outcome);
    }

    #[test]
    fn unlimited_tree_fits_conflict_free_data(seed in any::<u64>()) {
        let mut p = small_problem(&mut ChaCha8Rng::seed_from_u64(seed));
        // Make labels a function of the row so the data is conflict-free.
        for i in 0..p.x.len() {
            p.y[i] = p.x.iter().position(|r| *r == p.x[i]).map(|j| p.y[j]).unwrap();
        }
        let tree = fit_single(&p, &TrainConfig { max_depth: 64, min_samples_leaf: 1 });
        for (row, &y) in p.x.iter().zip(&p.y) {
            prop_assert_eq!(tree.predict(row)[0].class(), y);
        }
    }
}

#[test]
fn two_correlated_targets_share_the_mean_gain_argmax_root() {
    // Slot 1 decides both targets; slot 0 decides only the second one partly.
    let x: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 5) as f64, (i / 10) as f64]).collect();
    let y: Vec<Vec<Verdict>> = x
        .iter()
        .map(|r| vec![Verdict::from_bool(r[1] > 0.5), Verdict::from_bool(r[1] > 0.5 && r[0] > 0.5)])
        .collect();
    let tree = fit_tree(
        &Dataset {
            x: &x,
            y: &y,
            input_names: vec!["a".into(), "b".into()],
            input_kinds: vec![SlotKind::Scalar; 2],
            target_names: vec!["t0".into(), "t1".into()],
        },
        &TrainConfig::default(),
    )
    .unwrap();
    let Node::Internal { slot, .. } = &tree.nodes[0] else { panic!("root is a leaf") };
    assert_eq!(*slot, 1);
}
