//! Hit rate, human combination estimator, Z-scores, Cohen's κ and AUC-ROC.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no scored pairs")]
    Empty,
    #[error("score is not finite")]
    NonFinite,
    #[error("ratings have zero variance")]
    ZeroVariance,
    #[error("need at least two ratings")]
    TooFewRatings,
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("AUC needs both classes")]
    SingleClass,
}

/// Per-trial term of the hit rate: 1 if `e < s`, 0.5 on ties, 0 otherwise.
pub fn hit(e: f64, s: f64) -> f64 {
    if e < s {
        1.0
    } else if e == s {
        0.5
    } else {
        0.0
    }
}

/// Mean of [`hit`] over `(E, S)` pairs.
pub fn hit_rate(pairs: &[(f64, f64)]) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    if pairs.iter().any(|(e, s)| !e.is_finite() || !s.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(pairs.iter().map(|&(e, s)| hit(e, s)).sum::<f64>() / pairs.len() as f64)
}

pub fn flipped_hit_rate(pairs: &[(f64, f64)]) -> Result<f64, EvalError> {
    hit_rate(pairs).map(|h| 1.0 - h)
}

/// Independent ratings of the two versions of one trial.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HumanTrial {
    pub trial_id: String,
    pub expected: Vec<f64>,
    pub surprising: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HumanHitRate {
    pub value: f64,
    pub trials_used: usize,
    /// Trials skipped because one version had no ratings.
    pub trials_excluded: usize,
}

/// Twice the number of hits over every (expected, surprising) combination of
/// a trial, and twice the number of combinations.
fn doubled_hit_counts(t: &HumanTrial) -> Option<(u64, u64)> {
    if t.expected.is_empty() || t.surprising.is_empty() {
        return None;
    }
    let mut twice = 0u64;
    for &e in &t.expected {
        for &s in &t.surprising {
            twice += (2.0 * hit(e, s)) as u64;
        }
    }
    Some((twice, 2 * (t.expected.len() * t.surprising.len()) as u64))
}

/// Average of [`hit`] over every (expected, surprising) rating combination of
/// a trial.
pub fn trial_combination_rate(t: &HumanTrial) -> Option<f64> {
    doubled_hit_counts(t).map(|(h, n)| h as f64 / n as f64)
}

/// Mean over trials of the all-combinations hit rate. Accumulated as an
/// exact fraction and rounded to `f64` once.
pub fn human_hit_rate(trials: &[HumanTrial]) -> Result<HumanHitRate, EvalError> {
    let mut sum = BigRational::from_integer(0u64.into());
    let mut used = 0usize;
    for (h, n) in trials.iter().filter_map(doubled_hit_counts) {
        sum += BigRational::new(h.into(), n.into());
        used += 1;
    }
    if used == 0 {
        return Err(EvalError::Empty);
    }
    let mean = sum / BigRational::from_integer(used.into());
    Ok(HumanHitRate {
        value: mean.to_f64().expect("a fraction in [0, 1] converts"),
        trials_used: used,
        trials_excluded: trials.len() - used,
    })
}

/// Standardizes with the population standard deviation.
pub fn z_normalize(ratings: &[f64]) -> Result<Vec<f64>, EvalError> {
    if ratings.len() < 2 {
        return Err(EvalError::TooFewRatings);
    }
    let n = ratings.len() as f64;
    let mean = ratings.iter().sum::<f64>() / n;
    let var = ratings.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 || ratings.iter().all(|&x| x == ratings[0]) {
        return Err(EvalError::ZeroVariance);
    }
    let sd = var.sqrt();
    Ok(ratings.iter().map(|x| (x - mean) / sd).collect())
}

/// Z ≥ 0 is read as "surprising".
pub fn z_label(z: f64) -> bool {
    z >= 0.0
}

/// κ from a 2×2 table: `both_yes, a_yes_b_no, a_no_b_yes, both_no`.
/// When chance agreement is 1, κ is 1 for perfect agreement and 0 otherwise.
pub fn kappa_from_counts(both_yes: u64, a_only: u64, b_only: u64, both_no: u64) -> Result<f64, EvalError> {
    let n = (both_yes + a_only + b_only + both_no) as f64;
    if n == 0.0 {
        return Err(EvalError::Empty);
    }
    let p_o = (both_yes + both_no) as f64 / n;
    let a_yes = (both_yes + a_only) as f64 / n;
    let b_yes = (both_yes + b_only) as f64 / n;
    let p_e = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
    if p_e >= 1.0 {
        return Ok(if p_o >= 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

pub fn cohens_kappa(a: &[bool], b: &[bool]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let mut c = [0u64; 4];
    for (&x, &y) in a.iter().zip(b) {
        c[match (x, y) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        }] += 1;
    }
    kappa_from_counts(c[0], c[1], c[2], c[3])
}

/// Binary labels of one rater keyed by item; keys must be sorted and unique.
#[derive(Clone, Debug, PartialEq)]
pub struct RaterLabels {
    pub rater_id: String,
    pub items: Vec<(String, bool)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KappaSummary {
    pub raters: usize,
    pub pairs_total: usize,
    pub pairs_with_overlap: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub values: Vec<f64>,
}

/// κ for every rater pair over the items both rated; pairs without common
/// items are skipped.
pub fn pairwise_kappa(raters: &[RaterLabels]) -> KappaSummary {
    let mut values = Vec::new();
    let mut total = 0;
    for i in 0..raters.len() {
        for j in i + 1..raters.len() {
            total += 1;
            let (mut a, mut b) = (Vec::new(), Vec::new());
            let (x, y) = (&raters[i].items, &raters[j].items);
            let (mut p, mut q) = (0, 0);
            while p < x.len() && q < y.len() {
                match x[p].0.cmp(&y[q].0) {
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                    std::cmp::Ordering::Equal => {
                        a.push(x[p].1);
                        b.push(y[q].1);
                        p += 1;
                        q += 1;
                    }
                }
            }
            if let Ok(k) = cohens_kappa(&a, &b) {
                values.push(k);
            }
        }
    }
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = match sorted.len() {
        0 => None,
        n if n % 2 == 1 => Some(sorted[n / 2]),
        n => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    };
    KappaSummary {
        raters: raters.len(),
        pairs_total: total,
        pairs_with_overlap: values.len(),
        mean: (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64),
        median,
        min: sorted.first().copied(),
        max: sorted.last().copied(),
        values,
    }
}

/// Mann–Whitney AUC with midranks for ties.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        rank_sum += midrank * order[i..j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSpread {
    pub mean: f64,
    /// Population standard deviation across runs.
    pub std: f64,
    pub runs: usize,
}

pub fn mean_spread(xs: &[f64]) -> Option<MeanSpread> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some(MeanSpread { mean, std: var.sqrt(), runs: xs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn eq1_cases() {
        assert_eq!(hit_rate(&[(0.2, 0.8)]).unwrap(), 1.0);
        assert_eq!(hit_rate(&[(0.5, 0.5)]).unwrap(), 0.5);
        assert_eq!(hit_rate(&[(0.9, 0.1)]).unwrap(), 0.0);
        assert_eq!(hit_rate(&vec![(0.0, 0.0); 37]).unwrap(), 0.5);
        assert_eq!(hit_rate(&[]), Err(EvalError::Empty));
    }

    #[test]
    fn flipped_is_complement() {
        let pairs = [(1.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 1.0), (1.0, 0.0), (1.0, 0.0), (1.0, 0.0)];
        assert!((hit_rate(&pairs).unwrap() - 0.3).abs() < 1e-12);
        assert!((flipped_hit_rate(&pairs).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(flipped_hit_rate(&[(0.3, 0.3)]).unwrap(), 0.5);
    }

    #[test]
    fn human_combinations() {
        let t = HumanTrial { trial_id: "t".into(), expected: vec![0.1], surprising: vec![0.1] };
        assert_eq!(human_hit_rate(&[t]).unwrap().value, 0.5);
        let dominated = HumanTrial {
            trial_id: "u".into(),
            expected: (0..25).map(|i| -3.0 + i as f64 * 0.01).collect(),
            surprising: (0..25).map(|i| 1.0 + i as f64 * 0.01).collect(),
        };
        assert_eq!(trial_combination_rate(&dominated), Some(1.0));
        let missing = HumanTrial { trial_id: "v".into(), expected: vec![], surprising: vec![1.0] };
        let r = human_hit_rate(&[dominated, missing]).unwrap();
        assert_eq!((r.trials_used, r.trials_excluded), (1, 1));
    }

    #[test]
    fn z_scores_of_three_ratings() {
        let z = z_normalize(&[0.0, 50.0, 100.0]).unwrap();
        // population sd = sqrt(5000/3) = 40.8248...
        let sd = (5000.0f64 / 3.0).sqrt();
        assert!((sd - 40.8248).abs() < 1e-4);
        for (got, want) in z.iter().zip([-50.0 / sd, 0.0, 50.0 / sd]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((z[2] - 1.2247).abs() < 1e-4);
        assert_eq!(z_normalize(&[40.0, 40.0, 40.0]), Err(EvalError::ZeroVariance));
        assert_eq!(z_normalize(&[40.0]), Err(EvalError::TooFewRatings));
    }

    #[test]
    fn kappa_hand_worked() {
        assert!((kappa_from_counts(20, 5, 10, 15).unwrap() - 0.4).abs() < 1e-9);
        let a = [true, false, true, false];
        assert_eq!(cohens_kappa(&a, &a).unwrap(), 1.0);
        assert_eq!(cohens_kappa(&[true; 3], &[true; 3]).unwrap(), 1.0);
        assert_eq!(cohens_kappa(&[true, true], &[true, false]).unwrap(), 0.0);
    }

    #[test]
    fn kappa_of_independent_labels_is_near_zero() {
        let mut rng = stream(&[11]);
        let a: Vec<bool> = (0..20_000).map(|_| rng.random_bool(0.5)).collect();
        let b: Vec<bool> = (0..20_000).map(|_| rng.random_bool(0.5)).collect();
        assert!(cohens_kappa(&a, &b).unwrap().abs() < 0.05);
    }

    #[test]
    fn auc_examples() {
        assert!((auc_roc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap() - 0.75).abs() < 1e-9);
        assert_eq!(auc_roc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.5, 0.5], &[false, true]).unwrap(), 0.5);
        assert_eq!(auc_roc(&[0.1, 0.2], &[true, true]), Err(EvalError::SingleClass));
        let mut rng = stream(&[12]);
        let labels: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();
        let scores: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..1.0)).collect();
        assert!((auc_roc(&scores, &labels).unwrap() - 0.5).abs() < 0.03);
    }

    #[test]
    fn kappa_pairs() {
        let raters: Vec<RaterLabels> = (0..50)
            .map(|i| RaterLabels { rater_id: format!("r{i}"), items: vec![("a".into(), true), ("b".into(), false)] })
            .collect();
        let s = pairwise_kappa(&raters);
        assert_eq!(s.pairs_total, 1225);
        assert_eq!(s.mean, Some(1.0));
        let disjoint = vec![
            RaterLabels { rater_id: "x".into(), items: vec![("a".into(), true)] },
            RaterLabels { rater_id: "y".into(), items: vec![("b".into(), true)] },
        ];
        let s = pairwise_kappa(&disjoint);
        assert_eq!((s.pairs_total, s.pairs_with_overlap, s.mean), (1, 0, None));
    }

    proptest! {
        #[test]
        fn hit_rate_order_invariant(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..50)) {
            let f = |x: f64| (3.0 * x).exp() + 2.0;
            let mapped: Vec<_> = pairs.iter().map(|&(e, s)| (f(e), f(s))).collect();
            prop_assert_eq!(hit_rate(&pairs).unwrap(), hit_rate(&mapped).unwrap());
        }

        #[test]
        fn z_affine_invariant(xs in prop::collection::vec(0u8..=100, 3..30), a in 0.1f64..10.0, b in -50.0f64..50.0) {
            let raw: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
            prop_assume!(raw.iter().any(|&x| x != raw[0]));
            let z1 = z_normalize(&raw).unwrap();
            let z2 = z_normalize(&raw.iter().map(|x| a * x + b).collect::<Vec<_>>()).unwrap();
            for (p, q) in z1.iter().zip(&z2) {
                prop_assert!((p - q).abs() < 1e-9);
            }
            prop_assert!((z1.iter().sum::<f64>() / z1.len() as f64).abs() < 1e-12);
        }

        #[test]
        fn kappa_symmetric(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
            let (a, b): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            prop_assert_eq!(cohens_kappa(&a, &b).unwrap(), cohens_kappa(&b, &a).unwrap());
            let k = cohens_kappa(&a, &b).unwrap();
            prop_assert!((-1.0..=1.0).contains(&k));
        }

        #[test]
        fn auc_complement(rows in prop::collection::vec((0u8..10, any::<bool>()), 2..60)) {
            let scores: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
            let labels: Vec<bool> = rows.iter().map(|r| r.1).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
            let total = auc_roc(&scores, &labels).unwrap() + auc_roc(&scores, &flipped).unwrap();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
