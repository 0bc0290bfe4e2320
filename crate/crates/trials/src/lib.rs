//! Human rating study service.
//!
//! Sessions are counterbalanced so that every test trial is shown in its
//! expected and surprising versions equally often across participants.
//! All state changes are events in an append-only log; the in-memory
//! [`StudyState`] is a fold over that log.

pub mod http;
pub mod log;
pub mod payload;
pub mod report;
pub mod scripted;
pub mod service;
pub mod study;

pub use payload::TrialPayload;
pub use report::{compute_report, ReportFilters, StudyReport};
pub use service::{Ack, ServiceError, ServiceOptions, SessionDescriptor, TrialService};
pub use study::{Event, ResponseRequest, Stage, StudyConfig, StudyError, StudyState};
