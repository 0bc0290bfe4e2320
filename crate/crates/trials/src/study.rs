//! Study state: configuration, sessions, counterbalanced assignment and the
//! events that mutate it.
//!
//! Every mutation is first planned against the current state, then recorded
//! as an [`Event`], then applied. Replaying the same events through
//! [`StudyState::apply`] rebuilds the state exactly.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use voe_core::dataset::{Dataset, Split};
use voe_core::rng::{derive_seed, stream};
use voe_core::scenario::{EventCategory, SubType, Version};

pub const FAMILIARIZATION_COUNT: usize = 12;
/// A surprising catch trial must be rated at least this high.
pub const CATCH_SURPRISING_MIN: u8 = 70;
/// An expected catch trial must be rated at most this high.
pub const CATCH_EXPECTED_MAX: u8 = 30;
pub const MAX_RATING: i64 = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StudyError {
    #[error("study is not initialized")]
    NotInitialized,
    #[error("invalid study config: {0}")]
    InvalidConfig(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("index {index} out of range (session has {len} items in this stage)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("session {session_id} already rated item {index}")]
    Duplicate { session_id: String, index: usize },
    #[error("rating {0} outside [0, 100]")]
    RatingOutOfRange(i64),
    #[error("session {session_id} is in stage {actual}, expected {expected}")]
    WrongStage { session_id: String, expected: Stage, actual: Stage },
    #[error("item {index} is not pending (next is {pending})")]
    NotPending { index: usize, pending: usize },
    #[error("item {index} is trial {assigned}, not {given}")]
    TrialMismatch { index: usize, assigned: String, given: String },
    #[error("no completed sessions")]
    NoData,
    #[error("log replay: {0}")]
    Corrupt(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyItem {
    pub trial_id: String,
    pub category: EventCategory,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamiliarizationItem {
    pub trial_id: String,
    pub subtype: SubType,
}

/// A scripted trial with an unambiguous answer, used to screen raters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatchItem {
    pub trial_id: String,
    pub category: EventCategory,
    pub version: Version,
}

impl CatchItem {
    pub fn passed(&self, rating: u8) -> bool {
        match self.version {
            Version::Surprising => rating >= CATCH_SURPRISING_MIN,
            Version::Expected => rating <= CATCH_EXPECTED_MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub seed: u64,
    pub test_trials: Vec<StudyItem>,
    pub familiarization: Vec<FamiliarizationItem>,
    pub catch_trials: Vec<CatchItem>,
}

impl StudyConfig {
    /// Test trials from the test split (the first `per_category` of each
    /// category when given), one familiarization trial per sub-type from the
    /// train split, and two catch trials (a surprising C2 and an expected E2)
    /// from the validation split.
    pub fn from_dataset(dataset: &Dataset, seed: u64, per_category: Option<usize>) -> Result<Self, StudyError> {
        let mut test_trials = Vec::new();
        for c in EventCategory::ALL {
            let mut items: Vec<_> = dataset.select(c, Split::Test);
            items.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));
            let take = per_category.unwrap_or(items.len());
            test_trials.extend(items.into_iter().take(take).map(|t| StudyItem { trial_id: t.trial_id.clone(), category: c }));
        }
        let first = |split: Split, subtype: SubType| {
            let mut ts: Vec<_> =
                dataset.select(subtype.category(), split).into_iter().filter(|t| t.spec.subtype == subtype).collect();
            ts.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));
            ts.first().map(|t| t.trial_id.clone())
        };
        let mut familiarization = Vec::new();
        for st in SubType::ALL {
            let id = first(Split::Train, st)
                .ok_or_else(|| StudyError::InvalidConfig(format!("no training trial of sub-type {st} for familiarization")))?;
            familiarization.push(FamiliarizationItem { trial_id: id, subtype: st });
        }
        let catch = |st: SubType, version: Version| {
            first(Split::Val, st)
                .map(|trial_id| CatchItem { trial_id, category: st.category(), version })
                .ok_or_else(|| StudyError::InvalidConfig(format!("no validation trial of sub-type {st} for a catch trial")))
        };
        let catch_trials = vec![catch(SubType::C2, Version::Surprising)?, catch(SubType::E2, Version::Expected)?];
        let cfg = Self { seed, test_trials, familiarization, catch_trials };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: String| Err(StudyError::InvalidConfig(m));
        if self.test_trials.is_empty() {
            return bad("no test trials".into());
        }
        let ids: BTreeSet<&str> = self.test_trials.iter().map(|t| t.trial_id.as_str()).collect();
        if ids.len() != self.test_trials.len() {
            return bad("duplicate test trial ids".into());
        }
        if self.familiarization.len() != FAMILIARIZATION_COUNT {
            return bad(format!("{} familiarization trials, expected {FAMILIARIZATION_COUNT}", self.familiarization.len()));
        }
        let subtypes: BTreeSet<SubType> = self.familiarization.iter().map(|f| f.subtype).collect();
        if subtypes.len() != FAMILIARIZATION_COUNT {
            return bad("familiarization must cover every sub-type once".into());
        }
        for c in &self.catch_trials {
            if ids.contains(c.trial_id.as_str()) {
                return bad(format!("catch trial {} is also a test trial", c.trial_id));
            }
        }
        Ok(())
    }

    pub fn category_of(&self, trial_id: &str) -> Option<EventCategory> {
        self.test_trials.iter().find(|t| t.trial_id == trial_id).map(|t| t.category)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Familiarization,
    Testing,
    Done,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Familiarization => "familiarization",
            Stage::Testing => "testing",
            Stage::Done => "done",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub trial_id: String,
    pub version: Version,
    #[serde(default)]
    pub catch: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub session_id: String,
    pub index: usize,
    pub trial_id: String,
    pub version: Version,
    pub rating: u8,
    pub elapsed_ms: u64,
    pub client_timestamp_ms: u64,
}

/// A rating as sent by the client. The version is filled in by the service;
/// the client never learns it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRequest {
    pub session_id: String,
    pub index: usize,
    pub trial_id: String,
    pub rating: i64,
    pub elapsed_ms: u64,
    #[serde(default)]
    pub client_timestamp_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub alias: String,
    pub seed: u64,
    pub created_at_ms: u64,
    pub stage: Stage,
    /// Testing-stage items in presentation order (catch trials included).
    pub assignment: Vec<Assignment>,
    #[serde(default)]
    pub responses: Vec<ResponseRecord>,
}

impl Session {
    pub fn next_index(&self) -> usize {
        self.responses.len()
    }

    pub fn is_complete(&self) -> bool {
        self.stage == Stage::Done
    }

    /// `(expected, surprising)` counts over non-catch items.
    pub fn version_split(&self) -> (usize, usize) {
        let test = self.assignment.iter().filter(|a| !a.catch);
        let e = test.clone().filter(|a| a.version == Version::Expected).count();
        (e, test.count() - e)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    StudyInitialized { config: StudyConfig },
    SessionCreated { session: Session },
    FamiliarizationCompleted { session_id: String, at_ms: u64 },
    ResponseRecorded { record: ResponseRecord },
}

fn version_slot(v: Version) -> usize {
    match v {
        Version::Expected => 0,
        Version::Surprising => 1,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StudyState {
    pub config: Option<StudyConfig>,
    pub sessions: BTreeMap<String, Session>,
    /// Per test trial, how often each version has been assigned.
    pub version_counts: BTreeMap<String, [u32; 2]>,
}

impl StudyState {
    pub fn config(&self) -> Result<&StudyConfig, StudyError> {
        self.config.as_ref().ok_or(StudyError::NotInitialized)
    }

    pub fn session(&self, id: &str) -> Result<&Session, StudyError> {
        self.sessions.get(id).ok_or_else(|| StudyError::UnknownSession(id.to_string()))
    }

    pub fn response_count(&self) -> usize {
        self.sessions.values().map(|s| s.responses.len()).sum()
    }

    /// Builds the next session. Each test trial gets the version assigned
    /// fewer times so far; ties go to whichever version this session holds
    /// fewer of, then alternate by position in the session's shuffled order.
    pub fn plan_session(&self, alias: &str, created_at_ms: u64) -> Result<Session, StudyError> {
        let cfg = self.config()?;
        let ordinal = self.sessions.len() as u64 + 1;
        let seed = derive_seed(&[cfg.seed, ordinal]);
        let mut rng = stream(&[seed, 0x5e55]);
        let mut order: Vec<&StudyItem> = cfg.test_trials.iter().collect();
        order.shuffle(&mut rng);
        let mut chosen: Vec<Option<Version>> = vec![None; order.len()];
        let mut held = [0usize; 2];
        for (slot, item) in chosen.iter_mut().zip(&order) {
            let [e, s] = self.version_counts.get(&item.trial_id).copied().unwrap_or([0, 0]);
            if e != s {
                let v = if e < s { Version::Expected } else { Version::Surprising };
                held[version_slot(v)] += 1;
                *slot = Some(v);
            }
        }
        let mut rank = 0;
        for slot in chosen.iter_mut().filter(|s| s.is_none()) {
            let v = match held[0].cmp(&held[1]) {
                std::cmp::Ordering::Less => Version::Expected,
                std::cmp::Ordering::Greater => Version::Surprising,
                std::cmp::Ordering::Equal if rank % 2 == 0 => Version::Expected,
                std::cmp::Ordering::Equal => Version::Surprising,
            };
            held[version_slot(v)] += 1;
            *slot = Some(v);
            rank += 1;
        }
        let mut assignment: Vec<Assignment> = order
            .iter()
            .zip(chosen)
            .map(|(item, v)| Assignment { trial_id: item.trial_id.clone(), version: v.expect("assigned"), catch: false })
            .collect();
        for c in &cfg.catch_trials {
            let at = rng.random_range(0..=assignment.len());
            assignment.insert(at, Assignment { trial_id: c.trial_id.clone(), version: c.version, catch: true });
        }
        Ok(Session {
            session_id: format!("S{ordinal:05}"),
            alias: alias.to_string(),
            seed,
            created_at_ms,
            stage: Stage::Familiarization,
            assignment,
            responses: Vec::new(),
        })
    }

    pub fn plan_complete_familiarization(&self, session_id: &str) -> Result<(), StudyError> {
        let s = self.session(session_id)?;
        if s.stage != Stage::Familiarization {
            return Err(StudyError::WrongStage {
                session_id: session_id.into(),
                expected: Stage::Familiarization,
                actual: s.stage,
            });
        }
        Ok(())
    }

    pub fn plan_response(&self, req: &ResponseRequest) -> Result<ResponseRecord, StudyError> {
        let s = self.session(&req.session_id)?;
        if req.index >= s.assignment.len() {
            return Err(StudyError::IndexOutOfRange { index: req.index, len: s.assignment.len() });
        }
        if req.index < s.next_index() {
            return Err(StudyError::Duplicate { session_id: s.session_id.clone(), index: req.index });
        }
        if s.stage != Stage::Testing {
            return Err(StudyError::WrongStage { session_id: s.session_id.clone(), expected: Stage::Testing, actual: s.stage });
        }
        if !(0..=MAX_RATING).contains(&req.rating) {
            return Err(StudyError::RatingOutOfRange(req.rating));
        }
        if req.index != s.next_index() {
            return Err(StudyError::NotPending { index: req.index, pending: s.next_index() });
        }
        let a = &s.assignment[req.index];
        if a.trial_id != req.trial_id {
            return Err(StudyError::TrialMismatch {
                index: req.index,
                assigned: a.trial_id.clone(),
                given: req.trial_id.clone(),
            });
        }
        Ok(ResponseRecord {
            session_id: s.session_id.clone(),
            index: req.index,
            trial_id: a.trial_id.clone(),
            version: a.version,
            rating: req.rating as u8,
            elapsed_ms: req.elapsed_ms,
            client_timestamp_ms: req.client_timestamp_ms,
        })
    }

    /// Applies one recorded event. Events that could not have been produced
    /// by the planning functions are rejected as corruption.
    pub fn apply(&mut self, event: &Event) -> Result<(), StudyError> {
        let corrupt = |m: String| Err(StudyError::Corrupt(m));
        match event {
            Event::StudyInitialized { config } => {
                if self.config.is_some() {
                    return corrupt("study initialized twice".into());
                }
                config.validate()?;
                self.config = Some(config.clone());
            }
            Event::SessionCreated { session } => {
                self.config()?;
                if self.sessions.contains_key(&session.session_id) {
                    return corrupt(format!("session {} created twice", session.session_id));
                }
                for a in session.assignment.iter().filter(|a| !a.catch) {
                    self.version_counts.entry(a.trial_id.clone()).or_default()[version_slot(a.version)] += 1;
                }
                self.sessions.insert(session.session_id.clone(), session.clone());
            }
            Event::FamiliarizationCompleted { session_id, .. } => {
                self.plan_complete_familiarization(session_id).or_else(|e| corrupt(e.to_string()))?;
                self.sessions.get_mut(session_id).expect("checked").stage = Stage::Testing;
            }
            Event::ResponseRecorded { record } => {
                let s = self.session(&record.session_id).map_err(|e| StudyError::Corrupt(e.to_string()))?;
                let a = s.assignment.get(record.index);
                let consistent = s.stage == Stage::Testing
                    && record.index == s.next_index()
                    && a.is_some_and(|a| a.trial_id == record.trial_id && a.version == record.version)
                    && i64::from(record.rating) <= MAX_RATING;
                if !consistent {
                    return corrupt(format!("response {} #{} does not fit the session", record.session_id, record.index));
                }
                let s = self.sessions.get_mut(&record.session_id).expect("checked");
                s.responses.push(record.clone());
                if s.responses.len() == s.assignment.len() {
                    s.stage = Stage::Done;
                }
            }
        }
        Ok(())
    }
}


#[cfg(test)]
mod tests {
    use super::tests_support::config;
    use super::*;

    fn state(n: usize) -> StudyState {
        let mut st = StudyState::default();
        st.apply(&Event::StudyInitialized { config: config(n) }).unwrap();
        st
    }

    fn add_session(st: &mut StudyState) -> Session {
        let s = st.plan_session("p", 0).unwrap();
        st.apply(&Event::SessionCreated { session: s.clone() }).unwrap();
        s
    }

    #[test]
    fn two_sessions_show_each_expected_version_once() {
        let mut st = state(10);
        let a = add_session(&mut st);
        let b = add_session(&mut st);
        for i in 0..10 {
            let id = format!("A-{i:05}");
            assert_eq!(st.version_counts[&id], [1, 1]);
            let va = a.assignment.iter().find(|x| x.trial_id == id).unwrap().version;
            let vb = b.assignment.iter().find(|x| x.trial_id == id).unwrap().version;
            assert_ne!(va, vb);
        }
    }

    #[test]
    fn sessions_are_half_expected_and_never_repeat_a_trial() {
        let mut st = state(11);
        for _ in 0..7 {
            let s = add_session(&mut st);
            let (e, v) = s.version_split();
            assert!(e.abs_diff(v) <= 1, "{e} vs {v}");
            let ids: BTreeSet<_> = s.assignment.iter().map(|a| &a.trial_id).collect();
            assert_eq!(ids.len(), s.assignment.len());
            assert_eq!(s.assignment.iter().filter(|a| a.catch).count(), 2);
        }
    }

    #[test]
    fn orders_differ_between_sessions() {
        let mut st = state(30);
        let a = add_session(&mut st);
        let b = add_session(&mut st);
        let ids = |s: &Session| s.assignment.iter().map(|a| a.trial_id.clone()).collect::<Vec<_>>();
        assert_ne!(ids(&a), ids(&b));
    }

    fn request(s: &Session, index: usize, rating: i64) -> ResponseRequest {
        ResponseRequest {
            session_id: s.session_id.clone(),
            index,
            trial_id: s.assignment[index].trial_id.clone(),
            rating,
            elapsed_ms: 1500,
            client_timestamp_ms: 0,
        }
    }

    #[test]
    fn response_rules() {
        let mut st = state(3);
        let s = add_session(&mut st);
        assert!(matches!(st.plan_response(&request(&s, 0, 50)), Err(StudyError::WrongStage { .. })));
        st.apply(&Event::FamiliarizationCompleted { session_id: s.session_id.clone(), at_ms: 1 }).unwrap();
        assert_eq!(st.plan_response(&request(&s, 0, 101)), Err(StudyError::RatingOutOfRange(101)));
        assert_eq!(st.plan_response(&request(&s, 0, -1)), Err(StudyError::RatingOutOfRange(-1)));
        assert!(matches!(st.plan_response(&request(&s, 1, 50)), Err(StudyError::NotPending { .. })));
        let r = st.plan_response(&request(&s, 0, 100)).unwrap();
        assert_eq!(r.version, s.assignment[0].version);
        st.apply(&Event::ResponseRecorded { record: r.clone() }).unwrap();
        assert!(matches!(st.plan_response(&request(&s, 0, 10)), Err(StudyError::Duplicate { .. })));
        assert_eq!(st.session(&s.session_id).unwrap().responses, vec![r]);
        let mut wrong = request(&s, 1, 10);
        wrong.trial_id = "nope".into();
        assert!(matches!(st.plan_response(&wrong), Err(StudyError::TrialMismatch { .. })));
        let mut far = request(&s, 0, 10);
        far.index = 99;
        assert!(matches!(st.plan_response(&far), Err(StudyError::IndexOutOfRange { .. })));
    }

    #[test]
    fn last_response_finishes_the_session() {
        let mut st = state(2);
        let s = add_session(&mut st);
        st.apply(&Event::FamiliarizationCompleted { session_id: s.session_id.clone(), at_ms: 1 }).unwrap();
        for i in 0..s.assignment.len() {
            let r = st.plan_response(&request(&s, i, 40)).unwrap();
            st.apply(&Event::ResponseRecorded { record: r }).unwrap();
        }
        assert!(st.session(&s.session_id).unwrap().is_complete());
        assert!(matches!(st.plan_response(&request(&s, 0, 40)), Err(StudyError::Duplicate { .. })));
    }

    #[test]
    fn inconsistent_events_are_corruption() {
        let mut st = state(2);
        let s = add_session(&mut st);
        let bogus = ResponseRecord {
            session_id: s.session_id.clone(),
            index: 0,
            trial_id: s.assignment[0].trial_id.clone(),
            version: s.assignment[0].version,
            rating: 5,
            elapsed_ms: 0,
            client_timestamp_ms: 0,
        };
        assert!(matches!(st.apply(&Event::ResponseRecorded { record: bogus }), Err(StudyError::Corrupt(_))));
        assert!(matches!(st.apply(&Event::SessionCreated { session: s }), Err(StudyError::Corrupt(_))));
        assert!(matches!(StudyState::default().plan_session("x", 0), Err(StudyError::NotInitialized)));
    }

    #[test]
    fn catch_rules() {
        let c = &config(1).catch_trials;
        assert!(c[0].passed(70) && !c[0].passed(69));
        assert!(c[1].passed(30) && !c[1].passed(31));
    }
}
