//! Violation-of-expectation physical-reasoning benchmark engine.
//!
//! Procedurally generates expected/surprising trial pairs in five event
//! categories, labels them with features and rules, trains two-stage
//! decision-tree reasoners and scores surprise detection.

pub mod dataset;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod perception;
pub mod physics;
pub mod reasoning;
pub mod rng;
pub mod scenario;
