#![allow(dead_code)]

pub mod cart_oracle;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use voe_core::features::{SlotKind, Verdict};
use voe_core::reasoning::{fit_tree, Dataset, MultiTargetTree, TrainConfig};

/// A small random classification problem on a coarse grid, so duplicate
/// values and tied splits are common.
pub struct SmallProblem {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub categorical: Vec<bool>,
    pub classes: usize,
}

pub fn small_problem(rng: &mut ChaCha8Rng) -> SmallProblem {
    let n = rng.random_range(2..=50);
    let d = rng.random_range(1..=4);
    let classes = rng.random_range(2..=3);
    let categorical: Vec<bool> = (0..d).map(|_| rng.random_bool(0.3)).collect();
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            categorical
                .iter()
                .map(|&c| {
                    if c {
                        rng.random_range(0..3) as f64
                    } else if rng.random_bool(0.1) {
                        -1.0
                    } else {
                        rng.random_range(0..12) as f64 * 0.25
                    }
                })
                .collect()
        })
        .collect();
    let y = x
        .iter()
        .map(|row| {
            if rng.random_bool(0.2) {
                rng.random_range(0..classes)
            } else {
                (((row[0] * 3.0) as i64).rem_euclid(classes as i64)) as usize
            }
        })
        .collect();
    SmallProblem { x, y, categorical, classes }
}

pub fn fit_single(p: &SmallProblem, cfg: &TrainConfig) -> MultiTargetTree {
    let y: Vec<Vec<Verdict>> = p.y.iter().map(|&k| vec![Verdict::from_class(k)]).collect();
    let kinds = p.categorical.iter().map(|&c| if c { SlotKind::Categorical } else { SlotKind::Scalar }).collect();
    let data = Dataset {
        x: &p.x,
        y: &y,
        input_names: (0..p.categorical.len()).map(|i| format!("x{i}")).collect(),
        input_kinds: kinds,
        target_names: vec!["y".into()],
    };
    fit_tree(&data, cfg).unwrap()
}
