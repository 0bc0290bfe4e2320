//! Trial payloads served to the rating client.
//!
//! Testing payloads carry one trajectory and no version field; the two
//! versions of a trial produce payloads with identical structure. Only
//! familiarization payloads are labeled.

use serde::{Deserialize, Serialize};
use voe_core::physics::{scene, Body, Scene, Trajectory};
use voe_core::scenario::{EventCategory, SubType, TrialPair, Version};

/// Static scene description sufficient for schematic rendering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSchema {
    pub category: EventCategory,
    pub frame_count: usize,
    pub duration_s: f64,
    /// Initial bodies in body-id order; frame poses index into this list.
    pub bodies: Vec<Body>,
}

impl SceneSchema {
    pub fn of(trial: &TrialPair) -> Self {
        Self {
            category: trial.category(),
            frame_count: scene::FRAME_COUNT,
            duration_s: scene::DURATION_S,
            bodies: Scene::build(&trial.spec).bodies,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledTrajectory {
    pub label: Version,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum TrialPayload {
    Familiarization {
        session_id: String,
        index: usize,
        count: usize,
        trial_id: String,
        subtype: SubType,
        scene: SceneSchema,
        versions: Vec<LabeledTrajectory>,
    },
    Testing {
        session_id: String,
        index: usize,
        count: usize,
        trial_id: String,
        scene: SceneSchema,
        trajectory: Trajectory,
    },
}

impl TrialPayload {
    pub fn familiarization(session_id: &str, index: usize, count: usize, subtype: SubType, trial: &TrialPair) -> Self {
        TrialPayload::Familiarization {
            session_id: session_id.to_string(),
            index,
            count,
            trial_id: trial.trial_id.clone(),
            subtype,
            scene: SceneSchema::of(trial),
            versions: Version::BOTH
                .iter()
                .map(|&v| LabeledTrajectory { label: v, trajectory: trial.trajectory(v).clone() })
                .collect(),
        }
    }

    pub fn testing(session_id: &str, index: usize, count: usize, trial: &TrialPair, version: Version) -> Self {
        TrialPayload::Testing {
            session_id: session_id.to_string(),
            index,
            count,
            trial_id: trial.trial_id.clone(),
            scene: SceneSchema::of(trial),
            trajectory: trial.trajectory(version).clone(),
        }
    }
}
