//! Append-only response log and snapshots.
//!
//! `events.jsonl` holds one JSON object per line:
//!
//! | field   | type   | meaning                                      |
//! |---------|--------|----------------------------------------------|
//! | `seq`   | u64    | 1-based, consecutive position in the log      |
//! | `event` | object | an [`Event`], tagged by its `type` field      |
//!
//! Event payloads:
//!
//! - `study_initialized`: `config` (seed, test trials with categories,
//!   familiarization trials with sub-types, catch trials with versions)
//! - `session_created`: `session` (id, alias, seed, `created_at_ms`, stage,
//!   the full ordered assignment of `{trial_id, version, catch}`)
//! - `familiarization_completed`: `session_id`, `at_ms`
//! - `response_recorded`: `record` (`session_id`, `index`, `trial_id`,
//!   `version`, `rating` 0..=100, `elapsed_ms`, `client_timestamp_ms`)
//!
//! Each append is flushed with `fsync` before it is acknowledged. A
//! trailing line without a newline is a torn write that was never
//! acknowledged; it is dropped on open. `snapshot.json` stores
//! `{seq, state}` and only shortens replay.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::study::{Event, StudyError, StudyState};

pub const LOG_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path} line {line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Replay(#[from] StudyError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> LogError + '_ {
    move |source| LogError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub event: Event,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub seq: u64,
    pub state: StudyState,
}

/// Parses complete lines; returns the entries and the byte length they span.
fn parse(path: &Path, bytes: &[u8]) -> Result<(Vec<LogEntry>, usize), LogError> {
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let mut out = Vec::new();
    for (i, line) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let malformed = |message: String| LogError::Malformed { path: path.to_path_buf(), line: i + 1, message };
        let entry: LogEntry = serde_json::from_slice(line).map_err(|e| malformed(e.to_string()))?;
        let want = out.len() as u64 + 1;
        if entry.seq != want {
            return Err(malformed(format!("seq {} where {want} was expected", entry.seq)));
        }
        out.push(entry);
    }
    Ok((out, complete))
}

/// Reads a log without modifying it; a torn trailing line is ignored.
pub fn read_log(path: &Path) -> Result<Vec<LogEntry>, LogError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(parse(path, &bytes)?.0)
}

/// Rebuilds the state from the start of the log.
pub fn replay(entries: &[LogEntry]) -> Result<StudyState, StudyError> {
    let mut st = StudyState::default();
    for e in entries {
        st.apply(&e.event)?;
    }
    Ok(st)
}

pub struct EventLog {
    path: PathBuf,
    file: File,
    next_seq: u64,
}

impl EventLog {
    /// Opens (creating if needed) the log in `dir`, drops a torn tail and
    /// returns every complete entry.
    pub fn open(dir: &Path) -> Result<(EventLog, Vec<LogEntry>), LogError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(LOG_FILE);
        let mut file =
            OpenOptions::new().read(true).append(true).create(true).open(&path).map_err(io_err(&path))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io_err(&path))?;
        let (entries, complete) = parse(&path, &bytes)?;
        if complete < bytes.len() {
            file.set_len(complete as u64).map_err(io_err(&path))?;
            file.sync_all().map_err(io_err(&path))?;
        }
        file.seek(SeekFrom::End(0)).map_err(io_err(&path))?;
        let next_seq = entries.len() as u64 + 1;
        Ok((EventLog { path, file, next_seq }, entries))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Sequence number the next append will get.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Writes and syncs one entry; returns its sequence number.
    pub fn append(&mut self, event: &Event) -> Result<u64, LogError> {
        let entry = LogEntry { seq: self.next_seq, event: event.clone() };
        let mut line = serde_json::to_vec(&entry).expect("events serialize");
        line.push(b'\n');
        self.file.write_all(&line).map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))?;
        self.next_seq += 1;
        Ok(entry.seq)
    }
}

pub fn write_snapshot(dir: &Path, snap: &Snapshot) -> Result<(), LogError> {
    let path = dir.join(SNAPSHOT_FILE);
    let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
    let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
    serde_json::to_writer(&mut f, snap).expect("snapshot serializes");
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, &path).map_err(io_err(&path))
}

pub fn read_snapshot(dir: &Path) -> Result<Option<Snapshot>, LogError> {
    let path = dir.join(SNAPSHOT_FILE);
    match File::open(&path) {
        Ok(f) => serde_json::from_reader(BufReader::new(f))
            .map(Some)
            .map_err(|e| LogError::Malformed { path, line: 1, message: e.to_string() }),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(&path)(e)),
    }
}

/// State from the snapshot (when it is consistent with the log) plus the
/// entries after it.
pub fn restore(dir: &Path, entries: &[LogEntry]) -> Result<StudyState, LogError> {
    let (mut st, from) = match read_snapshot(dir)? {
        Some(s) if s.seq as usize <= entries.len() => (s.state, s.seq as usize),
        _ => (StudyState::default(), 0),
    };
    for e in &entries[from..] {
        st.apply(&e.event)?;
    }
    Ok(st)
}
