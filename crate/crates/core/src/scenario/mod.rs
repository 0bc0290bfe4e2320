//! Scenario specs (category, sub-type, sampled parameters) and their seeded procedural sampling.
//!
//! A [`ScenarioSpec`] carries only the stimulus parameters that apply to its
//! sub-type; everything else is `None`. Every sampled value is drawn uniformly
//! from its legal interval and then filtered by the sub-type's constraint.

mod trial;

pub use trial::{build_trial, choose_violation, TrialPair, Version};

use std::fmt;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::scene;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventCategory {
    #[serde(rename = "A")]
    Support,
    #[serde(rename = "B")]
    Occlusion,
    #[serde(rename = "C")]
    Containment,
    #[serde(rename = "D")]
    Collision,
    #[serde(rename = "E")]
    Barrier,
}

impl EventCategory {
    pub const ALL: [EventCategory; 5] = [
        EventCategory::Support,
        EventCategory::Occlusion,
        EventCategory::Containment,
        EventCategory::Collision,
        EventCategory::Barrier,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(Self::Support),
            'B' => Some(Self::Occlusion),
            'C' => Some(Self::Containment),
            'D' => Some(Self::Collision),
            'E' => Some(Self::Barrier),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Support => "support",
            Self::Occlusion => "occlusion",
            Self::Containment => "containment",
            Self::Collision => "collision",
            Self::Barrier => "barrier",
        }
    }

    pub fn subtypes(self) -> &'static [SubType] {
        use SubType::*;
        match self {
            Self::Support => &[A1, A2],
            Self::Occlusion => &[B1, B2],
            Self::Containment => &[C1, C2],
            Self::Collision => &[D1, D2, D3],
            Self::Barrier => &[E1, E2, E3],
        }
    }
}

impl fmt::Display for EventCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubType {
    /// Centre of mass over the edge.
    A1,
    /// Centre of mass within the edge.
    A2,
    /// Object shorter than the occluder's middle segment.
    B1,
    /// Object taller than the occluder's middle segment.
    B2,
    /// Object fits fully inside the container.
    C1,
    /// Object protrudes above the container rim.
    C2,
    /// Same speed, different size.
    D1,
    /// Same speed, same size.
    D2,
    /// Different speed, same size.
    D3,
    /// Soft barrier.
    E1,
    /// Solid barrier.
    E2,
    /// Barrier with an opening.
    E3,
}

impl SubType {
    pub const ALL: [SubType; 12] = [
        SubType::A1,
        SubType::A2,
        SubType::B1,
        SubType::B2,
        SubType::C1,
        SubType::C2,
        SubType::D1,
        SubType::D2,
        SubType::D3,
        SubType::E1,
        SubType::E2,
        SubType::E3,
    ];

    pub fn category(self) -> EventCategory {
        use SubType::*;
        match self {
            A1 | A2 => EventCategory::Support,
            B1 | B2 => EventCategory::Occlusion,
            C1 | C2 => EventCategory::Containment,
            D1 | D2 | D3 => EventCategory::Collision,
            E1 | E2 | E3 => EventCategory::Barrier,
        }
    }

    pub fn barrier_kind(self) -> Option<BarrierKind> {
        match self {
            SubType::E1 => Some(BarrierKind::Soft),
            SubType::E2 => Some(BarrierKind::Solid),
            SubType::E3 => Some(BarrierKind::Opening),
            _ => None,
        }
    }
}

impl fmt::Display for SubType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectShape {
    Cube,
    Cylinder,
    Torus,
    Sphere,
    Cone,
    SideCylinder,
    InvertedCone,
}

impl ObjectShape {
    pub const ALL: [ObjectShape; 7] = [
        ObjectShape::Cube,
        ObjectShape::Cylinder,
        ObjectShape::Torus,
        ObjectShape::Sphere,
        ObjectShape::Cone,
        ObjectShape::SideCylinder,
        ObjectShape::InvertedCone,
    ];

    /// Height of the uniform-density centroid above the base, as a fraction
    /// of the body height.
    pub fn centroid_height_fraction(self) -> f64 {
        match self {
            ObjectShape::Cone => 0.25,
            ObjectShape::InvertedCone => 0.75,
            _ => 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerShape {
    Mug,
    Box,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    Soft,
    Solid,
    Opening,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainerParams {
    pub shape: ContainerShape,
    pub height: f64,
    pub width: f64,
}

impl ContainerParams {
    pub fn interior_depth(&self) -> f64 {
        self.height - scene::CONTAINER_WALL
    }

    pub fn interior_width(&self) -> f64 {
        self.width - 2.0 * scene::CONTAINER_WALL
    }
}

/// Head-on collision stimuli. The focal object moves in `+x` at `speed`,
/// the second object in `-x` at `second_speed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionParams {
    pub speed: f64,
    pub second_height: f64,
    pub second_speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpeningParams {
    pub height: f64,
    pub width: f64,
}

/// One sampled physical configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub category: EventCategory,
    pub subtype: SubType,
    pub seed: u64,
    pub object_shape: ObjectShape,
    pub object_height: f64,
    pub object_width: f64,
    /// Fraction of the object's width past the support edge (`C_Obj`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overhang: Option<f64>,
    /// Occluder middle-segment height as a fraction of the occluder (`H_Occ`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occluder_middle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<ContainerParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision: Option<CollisionParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opening: Option<OpeningParams>,
}

pub const OBJECT_SIZE: RangeInclusive<f64> = 0.4..=1.6;
pub const OVERHANG: RangeInclusive<f64> = 0.2..=0.8;
pub const OCCLUDER_MIDDLE: RangeInclusive<f64> = 0.1..=0.9;
pub const CONTAINER_SIZE: RangeInclusive<f64> = 0.5..=1.5;
pub const COLLISION_HEIGHT: RangeInclusive<f64> = 0.5..=1.5;
pub const COLLISION_SPEED: RangeInclusive<f64> = 0.5..=2.5;
pub const OPENING_SIZE: RangeInclusive<f64> = 0.4..=1.4;

/// Minimum gap between "different" collision sizes or speeds.
pub const COLLISION_MIN_GAP: f64 = 0.2;
/// Minimum distance from the deciding threshold for height and width
/// comparisons that define a sub-type (occluder, container, opening).
pub const SEPARATION_MARGIN: f64 = 0.1;
/// Minimum distance of a collision's post-contact readouts from their
/// decision thresholds (obj1 displacement from 0, obj2 displacement from
/// the displaced threshold), in scene units.
pub const COLLISION_OUTCOME_MARGIN: f64 = 0.1;

const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("sub-type {subtype} does not belong to category {category}")]
    SubtypeMismatch { category: EventCategory, subtype: SubType },
    #[error("could not satisfy the constraints of sub-type {0} within {MAX_ATTEMPTS} draws")]
    Unsatisfiable(SubType),
    #[error("invalid spec: {0}")]
    Invalid(String),
}

fn check_range(name: &str, v: f64, r: &RangeInclusive<f64>) -> Result<(), ScenarioError> {
    if v.is_finite() && r.contains(&v) {
        Ok(())
    } else {
        Err(ScenarioError::Invalid(format!(
            "{name} = {v} outside [{}, {}]",
            r.start(),
            r.end()
        )))
    }
}

fn require<T: Copy>(name: &str, v: Option<T>) -> Result<T, ScenarioError> {
    v.ok_or_else(|| ScenarioError::Invalid(format!("{name} missing")))
}

fn forbid<T>(name: &str, v: &Option<T>) -> Result<(), ScenarioError> {
    match v {
        Some(_) => Err(ScenarioError::Invalid(format!("{name} not applicable"))),
        None => Ok(()),
    }
}

impl ScenarioSpec {
    pub fn barrier_kind(&self) -> Option<BarrierKind> {
        self.subtype.barrier_kind()
    }

    /// Checks ranges, parameter applicability and basic scene geometry.
    /// Sub-type constraints (e.g. A1's overhang side) are not part of validity:
    /// the physics is defined for any in-range configuration.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.subtype.category() != self.category {
            return Err(ScenarioError::SubtypeMismatch {
                category: self.category,
                subtype: self.subtype,
            });
        }
        let h_range = if self.category == EventCategory::Collision {
            COLLISION_HEIGHT
        } else {
            OBJECT_SIZE
        };
        check_range("object_height", self.object_height, &h_range)?;
        check_range("object_width", self.object_width, &OBJECT_SIZE)?;
        if self.object_width >= 2.0 * scene::SCENE_HALF_WIDTH {
            return Err(ScenarioError::Invalid("object wider than the scene".into()));
        }
        use EventCategory::*;
        let cat = self.category;
        if cat == Support {
            check_range("overhang", require("overhang", self.overhang)?, &OVERHANG)?;
        } else {
            forbid("overhang", &self.overhang)?;
        }
        if cat == Occlusion {
            let m = require("occluder_middle", self.occluder_middle)?;
            check_range("occluder_middle", m, &OCCLUDER_MIDDLE)?;
        } else {
            forbid("occluder_middle", &self.occluder_middle)?;
        }
        if cat == Containment {
            let c = require("container", self.container)?;
            check_range("container.height", c.height, &CONTAINER_SIZE)?;
            check_range("container.width", c.width, &CONTAINER_SIZE)?;
        } else {
            forbid("container", &self.container)?;
        }
        if cat == Collision {
            let c = require("collision", self.collision)?;
            check_range("collision.speed", c.speed, &COLLISION_SPEED)?;
            check_range("collision.second_speed", c.second_speed, &COLLISION_SPEED)?;
            check_range("collision.second_height", c.second_height, &COLLISION_HEIGHT)?;
        } else {
            forbid("collision", &self.collision)?;
        }
        if self.subtype == SubType::E3 {
            let o = require("opening", self.opening)?;
            check_range("opening.height", o.height, &OPENING_SIZE)?;
            check_range("opening.width", o.width, &OPENING_SIZE)?;
        } else {
            forbid("opening", &self.opening)?;
        }
        Ok(())
    }

    /// Whether the sampled values satisfy the sub-type's defining constraint.
    pub fn satisfies_subtype(&self) -> bool {
        use SubType::*;
        let m = SEPARATION_MARGIN;
        let h = self.object_height;
        match self.subtype {
            A1 => self.overhang.is_some_and(|c| c > 0.5),
            A2 => self.overhang.is_some_and(|c| c < 0.5),
            B1 | B2 => {
                let Some(frac) = self.occluder_middle else { return false };
                let mid = frac * scene::OCCLUDER_HEIGHT;
                if self.subtype == B1 {
                    h <= mid - m
                } else {
                    h >= mid + m
                }
            }
            C1 | C2 => {
                let Some(c) = self.container else { return false };
                if self.object_width > c.interior_width() - m {
                    return false;
                }
                if self.subtype == C1 {
                    h <= c.interior_depth() - m
                } else {
                    h >= c.interior_depth() + m
                }
            }
            D1 | D2 | D3 => {
                let Some(c) = self.collision else { return false };
                let same_size = c.second_height == h;
                let same_speed = c.second_speed == c.speed;
                let kind_ok = match self.subtype {
                    D1 => same_speed && (h - c.second_height).abs() >= COLLISION_MIN_GAP,
                    D2 => same_size && same_speed,
                    _ => same_size && (c.speed - c.second_speed).abs() >= COLLISION_MIN_GAP,
                };
                kind_ok && collision_outcomes_unambiguous(h, &c)
            }
            E1 | E2 => self.opening.is_none(),
            E3 => self.opening.is_some_and(|o| {
                (h - o.height).abs() >= m && (self.object_width - o.width).abs() >= m
            }),
        }
    }
}

fn collision_outcomes_unambiguous(height: f64, c: &CollisionParams) -> bool {
    let (d1, d2) = scene::collision_post_contact_displacements(
        height.powi(3),
        c.speed,
        c.second_height.powi(3),
        -c.second_speed,
    );
    d1.abs() >= COLLISION_OUTCOME_MARGIN
        && (d2 - scene::DISPLACED_THRESHOLD).abs() >= COLLISION_OUTCOME_MARGIN
}

fn uniform(rng: &mut impl Rng, r: &RangeInclusive<f64>) -> f64 {
    rng.random_range(r.clone())
}

fn draw(category: EventCategory, subtype: SubType, seed: u64, rng: &mut impl Rng) -> ScenarioSpec {
    let object_shape = ObjectShape::ALL[rng.random_range(0..ObjectShape::ALL.len())];
    let h_range = if category == EventCategory::Collision {
        COLLISION_HEIGHT
    } else {
        OBJECT_SIZE
    };
    let object_height = uniform(rng, &h_range);
    let object_width = uniform(rng, &OBJECT_SIZE);
    let mut spec = ScenarioSpec {
        category,
        subtype,
        seed,
        object_shape,
        object_height,
        object_width,
        overhang: None,
        occluder_middle: None,
        container: None,
        collision: None,
        opening: None,
    };
    match category {
        EventCategory::Support => spec.overhang = Some(uniform(rng, &OVERHANG)),
        EventCategory::Occlusion => spec.occluder_middle = Some(uniform(rng, &OCCLUDER_MIDDLE)),
        EventCategory::Containment => {
            let shape = if rng.random_bool(0.5) {
                ContainerShape::Mug
            } else {
                ContainerShape::Box
            };
            spec.container = Some(ContainerParams {
                shape,
                height: uniform(rng, &CONTAINER_SIZE),
                width: uniform(rng, &CONTAINER_SIZE),
            });
        }
        EventCategory::Collision => {
            let speed = uniform(rng, &COLLISION_SPEED);
            let (second_height, second_speed) = match subtype {
                SubType::D1 => (uniform(rng, &COLLISION_HEIGHT), speed),
                SubType::D2 => (object_height, speed),
                _ => (object_height, uniform(rng, &COLLISION_SPEED)),
            };
            spec.collision = Some(CollisionParams { speed, second_height, second_speed });
        }
        EventCategory::Barrier => {
            if subtype == SubType::E3 {
                spec.opening = Some(OpeningParams {
                    height: uniform(rng, &OPENING_SIZE),
                    width: uniform(rng, &OPENING_SIZE),
                });
            }
        }
    }
    spec
}

/// Samples a spec for `subtype` from the stream seeded by `seed`.
///
/// Draws are repeated until the sub-type constraint holds; after
/// `MAX_ATTEMPTS` failures `Unsatisfiable` is returned.
pub fn sample_spec(
    category: EventCategory,
    subtype: SubType,
    seed: u64,
) -> Result<ScenarioSpec, ScenarioError> {
    if subtype.category() != category {
        return Err(ScenarioError::SubtypeMismatch { category, subtype });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let spec = draw(category, subtype, seed, &mut rng);
        if spec.satisfies_subtype() {
            return Ok(spec);
        }
    }
    Err(ScenarioError::Unsatisfiable(subtype))
}
