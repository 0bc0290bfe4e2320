//! Expected/surprising trial pairs with their ground-truth labels.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EventCategory, ScenarioSpec, SubType};
use crate::features::{
    eval_posterior, eval_prior, extract_features, FeatureVector, PosteriorAssignment, PosteriorRule,
    PriorAssignment,
};
use crate::physics::{extract_outcome, simulate_expected, simulate_surprising, SimError, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Version {
    Expected,
    Surprising,
}

impl Version {
    pub const BOTH: [Version; 2] = [Version::Expected, Version::Surprising];

    pub fn other(self) -> Version {
        match self {
            Version::Expected => Version::Surprising,
            Version::Surprising => Version::Expected,
        }
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Version::Expected => "expected",
            Version::Surprising => "surprising",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialPair {
    pub trial_id: String,
    pub spec: ScenarioSpec,
    pub expected: Trajectory,
    pub surprising: Trajectory,
    pub violated_rules: Vec<PosteriorRule>,
    pub features: FeatureVector,
    pub prior: PriorAssignment,
    pub posterior_expected: PosteriorAssignment,
    pub posterior_surprising: PosteriorAssignment,
}

impl TrialPair {
    pub fn trajectory(&self, v: Version) -> &Trajectory {
        match v {
            Version::Expected => &self.expected,
            Version::Surprising => &self.surprising,
        }
    }

    /// Ground-truth posterior of the shown version.
    pub fn posterior(&self, v: Version) -> &PosteriorAssignment {
        match v {
            Version::Expected => &self.posterior_expected,
            Version::Surprising => &self.posterior_surprising,
        }
    }

    pub fn category(&self) -> EventCategory {
        self.spec.category
    }
}

/// The sub-type's signature outcome rule.
pub fn choose_violation(spec: &ScenarioSpec) -> PosteriorRule {
    use PosteriorRule::*;
    match spec.subtype {
        SubType::A1 | SubType::A2 => FallsToGround,
        SubType::B1 | SubType::B2 => VisibleAboveMiddle,
        SubType::C1 => FullyContained,
        SubType::C2 => ProtrudesAboveRim,
        SubType::D1 | SubType::D2 | SubType::D3 => Obj1Reverses,
        SubType::E1 | SubType::E2 | SubType::E3 => PassesBeyondBarrier,
    }
}

pub fn build_trial(trial_id: impl Into<String>, spec: ScenarioSpec) -> Result<TrialPair, SimError> {
    let violation = choose_violation(&spec);
    let expected = simulate_expected(&spec)?;
    let surprising = simulate_surprising(&spec, violation)?;
    let features = extract_features(&spec);
    let prior = eval_prior(&features);
    let posterior_expected = eval_posterior(&features, &prior);
    let posterior_surprising = extract_outcome(&surprising, &spec);
    let violated_rules = posterior_surprising.differing(&posterior_expected);
    Ok(TrialPair {
        trial_id: trial_id.into(),
        spec,
        expected,
        surprising,
        violated_rules,
        features,
        prior,
        posterior_expected,
        posterior_surprising,
    })
}
