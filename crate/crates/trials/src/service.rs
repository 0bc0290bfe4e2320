//! Durable trial service: every mutation is planned, appended to the log,
//! synced, applied, and only then acknowledged.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use voe_core::scenario::TrialPair;

use crate::log::{restore, write_snapshot, EventLog, LogError, Snapshot};
use crate::payload::TrialPayload;
use crate::report::{compute_report, ReportFilters, StudyReport};
use crate::study::{Event, ResponseRequest, Stage, StudyConfig, StudyError, StudyState};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("trial {0} is referenced by the study but missing from the dataset")]
    MissingTrial(String),
}

pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64))
}

#[derive(Clone)]
pub struct ServiceOptions {
    /// Write a snapshot after this many appended events (0 disables).
    pub snapshot_every: u64,
    pub clock: Clock,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self { snapshot_every: 200, clock: system_clock() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub session_id: String,
    pub alias: String,
    pub stage: Stage,
    pub created_at_ms: u64,
    pub familiarization_count: usize,
    pub trial_count: usize,
    pub next_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub session_id: String,
    pub index: usize,
    pub seq: u64,
    pub stage: Stage,
    pub next_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub sessions: usize,
    pub responses: usize,
    pub log_seq: u64,
}

pub struct TrialService {
    dir: PathBuf,
    trials: HashMap<String, TrialPair>,
    state: RwLock<StudyState>,
    writer: Mutex<EventLog>,
    options: ServiceOptions,
}

impl TrialService {
    /// Opens the study stored in `dir`. A fresh directory is initialized
    /// with `config`; an existing one must belong to the same study.
    pub fn open(
        dir: &Path,
        trials: Vec<TrialPair>,
        config: Option<StudyConfig>,
        options: ServiceOptions,
    ) -> Result<Self, ServiceError> {
        let (mut log, entries) = EventLog::open(dir)?;
        let mut state = restore(dir, &entries)?;
        let trials: HashMap<String, TrialPair> = trials.into_iter().map(|t| (t.trial_id.clone(), t)).collect();
        let fresh = match (&state.config, config) {
            (None, Some(cfg)) => {
                cfg.validate()?;
                Some(cfg)
            }
            (None, None) => return Err(StudyError::NotInitialized.into()),
            (Some(have), Some(want)) if *have != want => {
                return Err(StudyError::InvalidConfig("the log in this directory belongs to a different study".into()).into())
            }
            _ => None,
        };
        let cfg = fresh.as_ref().map_or_else(|| state.config(), Ok)?;
        let referenced = cfg
            .test_trials
            .iter()
            .map(|t| &t.trial_id)
            .chain(cfg.familiarization.iter().map(|f| &f.trial_id))
            .chain(cfg.catch_trials.iter().map(|c| &c.trial_id));
        for id in referenced {
            if !trials.contains_key(id) {
                return Err(ServiceError::MissingTrial(id.clone()));
            }
        }
        if let Some(config) = fresh {
            let ev = Event::StudyInitialized { config };
            log.append(&ev)?;
            state.apply(&ev)?;
        }
        Ok(Self { dir: dir.to_path_buf(), trials, state: RwLock::new(state), writer: Mutex::new(log), options })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// A copy of the current state.
    pub fn state(&self) -> StudyState {
        self.state.read().expect("state lock").clone()
    }

    fn read<T>(&self, f: impl FnOnce(&StudyState) -> T) -> T {
        f(&self.state.read().expect("state lock"))
    }

    /// Single-writer path: plan under the writer lock, append and sync,
    /// then apply.
    fn commit<T>(&self, plan: impl FnOnce(&StudyState) -> Result<(Event, T), StudyError>) -> Result<(u64, T), ServiceError> {
        let mut log = self.writer.lock().expect("writer lock");
        let (event, out) = plan(&self.state.read().expect("state lock"))?;
        let seq = log.append(&event)?;
        let mut st = self.state.write().expect("state lock");
        st.apply(&event)?;
        let every = self.options.snapshot_every;
        if every > 0 && seq % every == 0 {
            write_snapshot(&self.dir, &Snapshot { seq, state: st.clone() })?;
        }
        Ok((seq, out))
    }

    fn describe(st: &StudyState, id: &str) -> Result<SessionDescriptor, StudyError> {
        let s = st.session(id)?;
        Ok(SessionDescriptor {
            session_id: s.session_id.clone(),
            alias: s.alias.clone(),
            stage: s.stage,
            created_at_ms: s.created_at_ms,
            familiarization_count: st.config()?.familiarization.len(),
            trial_count: s.assignment.len(),
            next_index: s.next_index(),
        })
    }

    pub fn create_session(&self, alias: &str) -> Result<SessionDescriptor, ServiceError> {
        let now = (self.options.clock)();
        let (_, id) = self.commit(|st| {
            let s = st.plan_session(alias, now)?;
            let id = s.session_id.clone();
            Ok((Event::SessionCreated { session: s }, id))
        })?;
        Ok(self.read(|st| Self::describe(st, &id))?)
    }

    pub fn session(&self, id: &str) -> Result<SessionDescriptor, ServiceError> {
        Ok(self.read(|st| Self::describe(st, id))?)
    }

    pub fn complete_familiarization(&self, id: &str) -> Result<SessionDescriptor, ServiceError> {
        let now = (self.options.clock)();
        self.commit(|st| {
            st.plan_complete_familiarization(id)?;
            Ok((Event::FamiliarizationCompleted { session_id: id.to_string(), at_ms: now }, ()))
        })?;
        self.session(id)
    }

    /// Payload for item `index` of the session's current stage.
    pub fn get_trial(&self, id: &str, index: usize) -> Result<TrialPayload, ServiceError> {
        self.read(|st| {
            let s = st.session(id)?;
            let cfg = st.config()?;
            let trial = |tid: &str| self.trials.get(tid).ok_or_else(|| ServiceError::MissingTrial(tid.to_string()));
            if s.stage == Stage::Familiarization {
                let count = cfg.familiarization.len();
                let item = cfg.familiarization.get(index).ok_or(StudyError::IndexOutOfRange { index, len: count })?;
                return Ok(TrialPayload::familiarization(id, index, count, item.subtype, trial(&item.trial_id)?));
            }
            let count = s.assignment.len();
            let a = s.assignment.get(index).ok_or(StudyError::IndexOutOfRange { index, len: count })?;
            Ok(TrialPayload::testing(id, index, count, trial(&a.trial_id)?, a.version))
        })
    }

    pub fn submit_response(&self, req: &ResponseRequest) -> Result<Ack, ServiceError> {
        let (seq, record) = self.commit(|st| {
            let r = st.plan_response(req)?;
            Ok((Event::ResponseRecorded { record: r.clone() }, r))
        })?;
        let d = self.session(&record.session_id)?;
        Ok(Ack { session_id: record.session_id, index: record.index, seq, stage: d.stage, next_index: d.next_index })
    }

    pub fn report(&self, filters: &ReportFilters) -> Result<StudyReport, ServiceError> {
        Ok(self.read(|st| compute_report(st, filters))?)
    }

    pub fn health(&self) -> Health {
        let log_seq = self.writer.lock().expect("writer lock").next_seq() - 1;
        self.read(|st| Health {
            status: "ok".into(),
            sessions: st.sessions.len(),
            responses: st.response_count(),
            log_seq,
        })
    }

    pub fn snapshot(&self) -> Result<(), ServiceError> {
        let log = self.writer.lock().expect("writer lock");
        let st = self.state.read().expect("state lock");
        write_snapshot(&self.dir, &Snapshot { seq: log.next_seq() - 1, state: st.clone() })?;
        Ok(())
    }
}
