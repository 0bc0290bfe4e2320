//! Scripted raters that drive a [`TrialService`] the same way a client does.

use std::collections::HashMap;

use rand::Rng;
use voe_core::rng::stream;
use voe_core::scenario::{TrialPair, Version};

use crate::payload::TrialPayload;
use crate::service::{ServiceError, TrialService};
use crate::study::{ResponseRequest, Stage};

/// Rating behaviour of one simulated participant.
#[derive(Clone, Debug, PartialEq)]
pub struct RaterProfile {
    pub alias: String,
    pub seed: u64,
    /// Probability of rating a trial on the correct side of 50.
    pub accuracy: f64,
    pub response_ms: u64,
}

impl RaterProfile {
    pub fn new(alias: impl Into<String>, seed: u64, accuracy: f64) -> Self {
        Self { alias: alias.into(), seed, accuracy, response_ms: 2500 }
    }
}

/// Which version a testing payload shows, recovered by comparing it with
/// the dataset.
pub fn shown_version(payload: &TrialPayload, trials: &HashMap<String, TrialPair>) -> Option<Version> {
    let TrialPayload::Testing { trial_id, trajectory, .. } = payload else { return None };
    let t = trials.get(trial_id)?;
    Version::BOTH.into_iter().find(|&v| t.trajectory(v) == trajectory)
}

/// Runs a full session (familiarization then every test item) and returns
/// its id.
pub fn run_session(
    svc: &TrialService,
    trials: &HashMap<String, TrialPair>,
    profile: &RaterProfile,
) -> Result<String, ServiceError> {
    let mut rng = stream(&[profile.seed, 0x7a7e]);
    let d = svc.create_session(&profile.alias)?;
    for i in 0..d.familiarization_count {
        svc.get_trial(&d.session_id, i)?;
    }
    let d = svc.complete_familiarization(&d.session_id)?;
    let mut clock = 0u64;
    for index in 0..d.trial_count {
        let payload = svc.get_trial(&d.session_id, index)?;
        let TrialPayload::Testing { ref trial_id, .. } = payload else {
            unreachable!("testing stage serves testing payloads")
        };
        let surprising = shown_version(&payload, trials) == Some(Version::Surprising);
        let correct = rng.random_bool(profile.accuracy.clamp(0.0, 1.0));
        let high = surprising == correct;
        let rating = if high { rng.random_range(70..=100) } else { rng.random_range(0..=30) };
        let elapsed_ms = profile.response_ms + rng.random_range(0..500);
        clock += elapsed_ms;
        let ack = svc.submit_response(&ResponseRequest {
            session_id: d.session_id.clone(),
            index,
            trial_id: trial_id.clone(),
            rating,
            elapsed_ms,
            client_timestamp_ms: clock,
        })?;
        debug_assert_eq!(ack.stage == Stage::Done, index + 1 == d.trial_count);
    }
    Ok(d.session_id)
}
