//! Two-stage (features → priors → posteriors) and direct reasoning models,
//! plus the constant and random reference scorers.

pub mod tree;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tree::{fit_tree, Dataset, MultiTargetTree, Node, Split, TrainConfig, TreeError};

use crate::features::{
    FeatureVector, PosteriorAssignment, PosteriorRule, PriorAssignment, PriorRule, SlotKind, Verdict, FEATURES,
    FEATURE_COUNT, POSTERIOR_COUNT, PRIOR_COUNT,
};

#[derive(Debug, Error, PartialEq)]
pub enum ReasoningError {
    #[error("no training examples")]
    EmptyTrainingSet,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// What the second-stage tree sees as prior inputs during training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorInputs {
    /// Ground-truth priors.
    #[default]
    TeacherForcing,
    /// Priors predicted by the already-fitted first stage.
    Predicted,
}

/// One supervised sample: (possibly perceived) features with rule labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub prior: PriorAssignment,
    pub posterior: PosteriorAssignment,
}

fn feature_inputs() -> (Vec<String>, Vec<SlotKind>) {
    FEATURES.iter().map(|d| (d.name.to_string(), d.kind)).unzip()
}

fn post_inputs() -> (Vec<String>, Vec<SlotKind>) {
    let (mut names, mut kinds) = feature_inputs();
    for r in PriorRule::ALL {
        names.push(format!("prior.{}", r.name()));
        kinds.push(SlotKind::Categorical);
    }
    (names, kinds)
}

fn post_row(f: &FeatureVector, p: &PriorAssignment) -> Vec<f64> {
    let mut row = f.0.to_vec();
    row.extend(p.0.iter().map(|v| v.code()));
    row
}

fn posterior_names() -> Vec<String> {
    PosteriorRule::ALL.iter().map(|r| r.name().to_string()).collect()
}

fn to_posterior(v: &[Verdict]) -> PosteriorAssignment {
    let mut a = PosteriorAssignment::default();
    a.0.copy_from_slice(&v[..POSTERIOR_COUNT]);
    a
}

/// 1 iff the prediction disagrees with the observation on any rule. Rules
/// Irrelevant in both assignments are equal and never count.
pub fn surprise(predicted: &PosteriorAssignment, observed: &PosteriorAssignment) -> u8 {
    u8::from(predicted != observed)
}

/// Anything that assigns a surprise score to a perceived scene given the
/// outcome observed in the shown trajectory.
pub trait SurpriseScorer {
    fn score(&self, perceived: &FeatureVector, observed: &PosteriorAssignment) -> f64;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfprModel {
    pub tree_prior: MultiTargetTree,
    pub tree_post: MultiTargetTree,
    pub prior_inputs: PriorInputs,
}

impl OfprModel {
    pub fn predict_prior(&self, f: &FeatureVector) -> PriorAssignment {
        let mut p = PriorAssignment::default();
        p.0.copy_from_slice(&self.tree_prior.predict(&f.0)[..PRIOR_COUNT]);
        p
    }

    pub fn predict_posterior(&self, f: &FeatureVector) -> PosteriorAssignment {
        let p = self.predict_prior(f);
        to_posterior(self.tree_post.predict(&post_row(f, &p)))
    }
}

impl SurpriseScorer for OfprModel {
    fn score(&self, perceived: &FeatureVector, observed: &PosteriorAssignment) -> f64 {
        surprise(&self.predict_posterior(perceived), observed) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfModel {
    pub tree_direct: MultiTargetTree,
}

impl OfModel {
    pub fn predict_posterior(&self, f: &FeatureVector) -> PosteriorAssignment {
        to_posterior(self.tree_direct.predict(&f.0))
    }
}

impl SurpriseScorer for OfModel {
    fn score(&self, perceived: &FeatureVector, observed: &PosteriorAssignment) -> f64 {
        surprise(&self.predict_posterior(perceived), observed) as f64
    }
}

pub fn train_ofpr(examples: &[Example], cfg: &TrainConfig, mode: PriorInputs) -> Result<OfprModel, ReasoningError> {
    if examples.is_empty() {
        return Err(ReasoningError::EmptyTrainingSet);
    }
    let x: Vec<Vec<f64>> = examples.iter().map(|e| e.features.0.to_vec()).collect();
    let y_prior: Vec<Vec<Verdict>> = examples.iter().map(|e| e.prior.0.to_vec()).collect();
    let (names, kinds) = feature_inputs();
    let tree_prior = fit_tree(
        &Dataset {
            x: &x,
            y: &y_prior,
            input_names: names,
            input_kinds: kinds,
            target_names: PriorRule::ALL.iter().map(|r| r.name().to_string()).collect(),
        },
        cfg,
    )?;
    let mut model = OfprModel { tree_post: tree_prior.clone(), tree_prior, prior_inputs: mode };
    let x_post: Vec<Vec<f64>> = examples
        .iter()
        .map(|e| match mode {
            PriorInputs::TeacherForcing => post_row(&e.features, &e.prior),
            PriorInputs::Predicted => post_row(&e.features, &model.predict_prior(&e.features)),
        })
        .collect();
    let y_post: Vec<Vec<Verdict>> = examples.iter().map(|e| e.posterior.0.to_vec()).collect();
    let (names, kinds) = post_inputs();
    model.tree_post = fit_tree(
        &Dataset { x: &x_post, y: &y_post, input_names: names, input_kinds: kinds, target_names: posterior_names() },
        cfg,
    )?;
    Ok(model)
}

pub fn train_of(examples: &[Example], cfg: &TrainConfig) -> Result<OfModel, ReasoningError> {
    if examples.is_empty() {
        return Err(ReasoningError::EmptyTrainingSet);
    }
    let x: Vec<Vec<f64>> = examples.iter().map(|e| e.features.0.to_vec()).collect();
    let y: Vec<Vec<Verdict>> = examples.iter().map(|e| e.posterior.0.to_vec()).collect();
    let (names, kinds) = feature_inputs();
    let tree_direct = fit_tree(
        &Dataset { x: &x, y: &y, input_names: names, input_kinds: kinds, target_names: posterior_names() },
        cfg,
    )?;
    Ok(OfModel { tree_direct })
}

/// Predicts every scene as expected.
pub fn baseline_score() -> f64 {
    0.0
}

pub fn random_score(rng: &mut impl Rng) -> f64 {
    rng.random_range(0.0..=1.0)
}

const _: () = assert!(FEATURE_COUNT + PRIOR_COUNT == 37);
