//! Deterministic kinematics of the five event categories and outcome readout.

pub mod geometry;
mod outcome;
pub mod scene;
mod simulate;

pub use geometry::{Aabb, Pose, Quat, Vec3};
pub use outcome::extract_outcome;
pub use scene::{Body, BodyKind, Scene, Shape};
pub use simulate::{interaction_onset, simulate_expected, simulate_surprising, Frame, SimError, Trajectory};
