//! Training and scoring runs shared by the command line and the tests.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::{flipped_hit_rate, hit_rate, mean_spread, EvalError, MeanSpread};
use crate::perception::{perceive, PerceptionConfig};
use crate::reasoning::{
    baseline_score, random_score, train_of, train_ofpr, Example, OfModel, OfprModel, PriorInputs, ReasoningError,
    SurpriseScorer, TrainConfig,
};
use crate::rng::{hash_str, stream};
use crate::scenario::{EventCategory, TrialPair, Version};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reality {
    #[default]
    Normal,
    /// Train on surprising scenes only and report `1 - H_r`.
    Flipped,
}

impl Reality {
    pub fn training_version(self) -> Version {
        match self {
            Reality::Normal => Version::Expected,
            Reality::Flipped => Version::Surprising,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ofpr,
    Of,
    Baseline,
    Random,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Ofpr, ModelKind::Of, ModelKind::Baseline, ModelKind::Random];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ofpr => "ofpr",
            ModelKind::Of => "of",
            ModelKind::Baseline => "baseline",
            ModelKind::Random => "random",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub perception: PerceptionConfig,
    pub train: TrainConfig,
    pub prior_inputs: PriorInputs,
    pub reality: Reality,
}

const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;
const RANDOM_STREAM: u64 = 3;

fn version_code(v: Version) -> u64 {
    match v {
        Version::Expected => 0,
        Version::Surprising => 1,
    }
}

/// Perception noise stream for one shown scene.
pub fn perception_stream(cfg: &PerceptionConfig, run_seed: u64, phase: u64, trial_id: &str, v: Version) -> ChaCha8Rng {
    stream(&[cfg.seed, run_seed, phase, hash_str(trial_id), version_code(v)])
}

/// Supervision from the reality's training version only; the other version's
/// trajectory and labels are never read.
pub fn training_examples(trials: &[&TrialPair], cfg: &RunConfig, run_seed: u64) -> Vec<Example> {
    let v = cfg.reality.training_version();
    trials
        .iter()
        .map(|t| {
            let mut rng = perception_stream(&cfg.perception, run_seed, TRAIN_STREAM, &t.trial_id, v);
            Example { features: perceive(&t.features, &cfg.perception, &mut rng), prior: t.prior, posterior: *t.posterior(v) }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModels {
    pub ofpr: OfprModel,
    pub of: OfModel,
}

pub fn train_models(trials: &[&TrialPair], cfg: &RunConfig, run_seed: u64) -> Result<TrainedModels, ReasoningError> {
    let examples = training_examples(trials, cfg, run_seed);
    Ok(TrainedModels {
        ofpr: train_ofpr(&examples, &cfg.train, cfg.prior_inputs)?,
        of: train_of(&examples, &cfg.train)?,
    })
}

/// `(E, S)` scores of a model: each version is perceived independently and
/// compared against the outcome observed in that version's trajectory.
pub fn score_pairs(scorer: &dyn SurpriseScorer, test: &[&TrialPair], cfg: &RunConfig, run_seed: u64) -> Vec<(f64, f64)> {
    let score = |t: &TrialPair, v: Version| {
        let mut rng = perception_stream(&cfg.perception, run_seed, TEST_STREAM, &t.trial_id, v);
        let f = perceive(&t.features, &cfg.perception, &mut rng);
        scorer.score(&f, t.posterior(v))
    };
    test.iter().map(|t| (score(t, Version::Expected), score(t, Version::Surprising))).collect()
}

pub fn baseline_pairs(test: &[&TrialPair]) -> Vec<(f64, f64)> {
    test.iter().map(|_| (baseline_score(), baseline_score())).collect()
}

pub fn random_pairs(test: &[&TrialPair], run_seed: u64) -> Vec<(f64, f64)> {
    test.iter()
        .map(|t| {
            let mut rng = stream(&[run_seed, RANDOM_STREAM, hash_str(&t.trial_id)]);
            (random_score(&mut rng), random_score(&mut rng))
        })
        .collect()
}

/// Hit rate, complemented in flipped reality.
pub fn reported_rate(pairs: &[(f64, f64)], reality: Reality) -> Result<f64, EvalError> {
    match reality {
        Reality::Normal => hit_rate(pairs),
        Reality::Flipped => flipped_hit_rate(pairs),
    }
}

/// Reported rates of all four scorers for one (category, seed) run.
pub fn evaluate_run(
    models: &TrainedModels,
    test: &[&TrialPair],
    cfg: &RunConfig,
    run_seed: u64,
) -> Result<BTreeMap<ModelKind, f64>, EvalError> {
    let mut out = BTreeMap::new();
    out.insert(ModelKind::Ofpr, reported_rate(&score_pairs(&models.ofpr, test, cfg, run_seed), cfg.reality)?);
    out.insert(ModelKind::Of, reported_rate(&score_pairs(&models.of, test, cfg, run_seed), cfg.reality)?);
    out.insert(ModelKind::Baseline, reported_rate(&baseline_pairs(test), cfg.reality)?);
    out.insert(ModelKind::Random, reported_rate(&random_pairs(test, run_seed), cfg.reality)?);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub category: EventCategory,
    pub seed: u64,
    pub rates: BTreeMap<ModelKind, f64>,
}

/// Per-model, per-category mean ± spread over seeds plus the category average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub reality: Reality,
    pub seeds: Vec<u64>,
    pub table: BTreeMap<ModelKind, BTreeMap<EventCategory, MeanSpread>>,
    pub average: BTreeMap<ModelKind, f64>,
    pub runs: Vec<RunRecord>,
}

pub fn summarize(reality: Reality, seeds: &[u64], runs: Vec<RunRecord>) -> EvalReport {
    let mut table: BTreeMap<ModelKind, BTreeMap<EventCategory, MeanSpread>> = BTreeMap::new();
    let mut average = BTreeMap::new();
    for kind in ModelKind::ALL {
        let mut per_cat: BTreeMap<EventCategory, Vec<f64>> = BTreeMap::new();
        for r in &runs {
            if let Some(v) = r.rates.get(&kind) {
                per_cat.entry(r.category).or_default().push(*v);
            }
        }
        let row: BTreeMap<EventCategory, MeanSpread> =
            per_cat.iter().filter_map(|(c, xs)| mean_spread(xs).map(|m| (*c, m))).collect();
        if !row.is_empty() {
            average.insert(kind, row.values().map(|m| m.mean).sum::<f64>() / row.len() as f64);
        }
        table.insert(kind, row);
    }
    EvalReport { reality, seeds: seeds.to_vec(), table, average, runs }
}

impl EvalReport {
    /// Plain-text table with one row per model and one column per category.
    pub fn render(&self) -> String {
        let cats: Vec<EventCategory> =
            self.table.values().flat_map(|r| r.keys().copied()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let metric = match self.reality {
            Reality::Normal => "H_r",
            Reality::Flipped => "1 - H_r",
        };
        let mut s = format!("{metric} over {} seed(s)\n{:<10}", self.seeds.len(), "model");
        for c in &cats {
            s += &format!(" {:>15}", format!("{} {}", c.letter(), c.name()));
        }
        s += &format!(" {:>8}\n", "avg");
        for (kind, row) in &self.table {
            s += &format!("{:<10}", kind.name());
            for c in &cats {
                match row.get(c) {
                    Some(m) => s += &format!(" {:>15}", format!("{:.3} ± {:.3}", m.mean, m.std)),
                    None => s += &format!(" {:>15}", "-"),
                }
            }
            s += &format!(" {:>8}\n", self.average.get(kind).map_or("-".into(), |a| format!("{a:.3}")));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_trial;

    fn trials(category: EventCategory, range: std::ops::Range<usize>) -> Vec<TrialPair> {
        range.map(|i| generate_trial(7, category, i).unwrap()).collect()
    }

    #[test]
    fn flipped_training_reads_surprising_labels_only() {
        let ts = trials(EventCategory::Barrier, 0..6);
        let refs: Vec<&TrialPair> = ts.iter().collect();
        let cfg = RunConfig { reality: Reality::Flipped, ..Default::default() };
        for (e, t) in training_examples(&refs, &cfg, 0).iter().zip(&ts) {
            assert_eq!(e.posterior, t.posterior_surprising);
        }
        let cfg = RunConfig::default();
        for (e, t) in training_examples(&refs, &cfg, 0).iter().zip(&ts) {
            assert_eq!(e.posterior, t.posterior_expected);
        }
    }

    #[test]
    fn baseline_is_exactly_half() {
        let ts = trials(EventCategory::Support, 0..10);
        let refs: Vec<&TrialPair> = ts.iter().collect();
        assert_eq!(hit_rate(&baseline_pairs(&refs)).unwrap(), 0.5);
    }

    #[test]
    fn noise_free_ofpr_detects_violations() {
        let train = trials(EventCategory::Containment, 0..120);
        let test = trials(EventCategory::Containment, 120..170);
        let cfg = RunConfig::default();
        let models = train_models(&train.iter().collect::<Vec<_>>(), &cfg, 0).unwrap();
        let rates = evaluate_run(&models, &test.iter().collect::<Vec<_>>(), &cfg, 0).unwrap();
        assert!(rates[&ModelKind::Ofpr] >= 0.9, "{rates:?}");
        assert!(rates[&ModelKind::Of] >= 0.9, "{rates:?}");
        assert_eq!(rates[&ModelKind::Baseline], 0.5);
    }

    #[test]
    fn report_renders_every_model() {
        let mut rates = BTreeMap::new();
        for k in ModelKind::ALL {
            rates.insert(k, 0.5);
        }
        let rep = summarize(Reality::Normal, &[0], vec![RunRecord { category: EventCategory::Support, seed: 0, rates }]);
        let text = rep.render();
        for k in ModelKind::ALL {
            assert!(text.contains(k.name()));
        }
        assert_eq!(rep.average[&ModelKind::Random], 0.5);
    }
}
