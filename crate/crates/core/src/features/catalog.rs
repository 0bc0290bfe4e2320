//! Feature slot descriptors for the raw (20) and engineered (24) catalogs.

use serde::{Deserialize, Serialize};

use crate::scenario::EventCategory::{self, *};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Scalar,
    Categorical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlotDescriptor {
    pub name: &'static str,
    pub kind: SlotKind,
    /// Label names of a categorical slot; codes are their indices.
    pub labels: &'static [&'static str],
    /// Categories in which the slot is relevant.
    pub categories: &'static [EventCategory],
    /// Plausible value range of a scalar slot, used when perception
    /// hallucinates a value for an irrelevant slot.
    pub range: (f64, f64),
    /// Index of the raw feature this slot is derived from.
    pub source: usize,
}

const ALL: &[EventCategory] = &[Support, Occlusion, Containment, Collision, Barrier];
const MOVING: &[EventCategory] = &[Occlusion, Collision, Barrier];

pub const SHAPE_LABELS: &[&str] =
    &["cube", "cylinder", "torus", "sphere", "cone", "side_cylinder", "inverted_cone"];
pub const MOTION_LABELS: &[&str] = &["falling", "sliding"];
pub const DIRECTION_LABELS: &[&str] = &["left", "right"];
pub const OFFSET_DIRECTION_LABELS: &[&str] = &["inward", "outward"];
pub const CONTAINER_LABELS: &[&str] = &["mug", "box"];
pub const BARRIER_LABELS: &[&str] = &["soft", "solid", "opening"];

const fn scalar(name: &'static str, categories: &'static [EventCategory], range: (f64, f64), source: usize) -> SlotDescriptor {
    SlotDescriptor { name, kind: SlotKind::Scalar, labels: &[], categories, range, source }
}

const fn categorical(
    name: &'static str,
    labels: &'static [&'static str],
    categories: &'static [EventCategory],
    source: usize,
) -> SlotDescriptor {
    SlotDescriptor { name, kind: SlotKind::Categorical, labels, categories, range: (0.0, 0.0), source }
}

pub const RAW_COUNT: usize = 20;
pub const FEATURE_COUNT: usize = 24;

/// Raw catalog. Signed slots (`object_velocity`, `com_lateral_offset`,
/// `second_velocity`) use `range` for their absolute value.
pub const RAW_FEATURES: [SlotDescriptor; RAW_COUNT] = [
    categorical("object_shape", SHAPE_LABELS, ALL, 0),
    scalar("object_height", ALL, (0.4, 1.6), 1),
    scalar("object_width", ALL, (0.4, 1.6), 2),
    scalar("object_velocity", MOVING, (0.5, 3.5), 3),
    categorical("motion_kind", MOTION_LABELS, ALL, 4),
    scalar("overhang_fraction", &[Support], (0.2, 0.8), 5),
    scalar("com_height", &[Support], (0.1, 1.2), 6),
    scalar("com_lateral_offset", &[Support], (0.0, 0.48), 7),
    scalar("occluder_middle_fraction", &[Occlusion], (0.1, 0.9), 8),
    scalar("occluder_width", &[Occlusion], (4.8, 4.8), 9),
    categorical("container_shape", CONTAINER_LABELS, &[Containment], 10),
    scalar("container_height", &[Containment], (0.5, 1.5), 11),
    scalar("container_width", &[Containment], (0.5, 1.5), 12),
    scalar("container_interior_depth", &[Containment], (0.4, 1.4), 13),
    categorical("barrier_kind", BARRIER_LABELS, &[Barrier], 14),
    scalar("opening_height", &[Barrier], (0.4, 1.4), 15),
    scalar("opening_width", &[Barrier], (0.4, 1.4), 16),
    scalar("second_height", &[Collision], (0.5, 1.5), 17),
    scalar("second_width", &[Collision], (0.4, 1.6), 18),
    scalar("second_velocity", &[Collision], (0.5, 2.5), 19),
];

pub mod slot {
    pub const OBJECT_SHAPE: usize = 0;
    pub const OBJECT_HEIGHT: usize = 1;
    pub const OBJECT_WIDTH: usize = 2;
    pub const OBJECT_SPEED: usize = 3;
    pub const OBJECT_DIRECTION: usize = 4;
    pub const MOTION_KIND: usize = 5;
    pub const OVERHANG: usize = 6;
    pub const COM_HEIGHT: usize = 7;
    pub const COM_OFFSET: usize = 8;
    pub const COM_DIRECTION: usize = 9;
    pub const OCCLUDER_MIDDLE: usize = 10;
    pub const OCCLUDER_WIDTH: usize = 11;
    pub const CONTAINER_SHAPE: usize = 12;
    pub const CONTAINER_HEIGHT: usize = 13;
    pub const CONTAINER_WIDTH: usize = 14;
    pub const CONTAINER_DEPTH: usize = 15;
    pub const BARRIER_KIND: usize = 16;
    pub const OPENING_HEIGHT: usize = 17;
    pub const OPENING_WIDTH: usize = 18;
    pub const SECOND_HEIGHT: usize = 19;
    pub const SECOND_WIDTH: usize = 20;
    pub const SECOND_SPEED: usize = 21;
    pub const SECOND_DIRECTION: usize = 22;
    pub const OBJECT_MOMENTUM: usize = 23;
}

pub const FEATURES: [SlotDescriptor; FEATURE_COUNT] = [
    categorical("object_shape", SHAPE_LABELS, ALL, 0),
    scalar("object_height", ALL, (0.4, 1.6), 1),
    scalar("object_width", ALL, (0.4, 1.6), 2),
    scalar("object_speed", MOVING, (0.5, 3.5), 3),
    categorical("object_direction", DIRECTION_LABELS, MOVING, 3),
    categorical("motion_kind", MOTION_LABELS, ALL, 4),
    scalar("overhang_fraction", &[Support], (0.2, 0.8), 5),
    scalar("com_height", &[Support], (0.1, 1.2), 6),
    scalar("com_offset_magnitude", &[Support], (0.0, 0.48), 7),
    categorical("com_offset_direction", OFFSET_DIRECTION_LABELS, &[Support], 7),
    scalar("occluder_middle_fraction", &[Occlusion], (0.1, 0.9), 8),
    scalar("occluder_width", &[Occlusion], (4.8, 4.8), 9),
    categorical("container_shape", CONTAINER_LABELS, &[Containment], 10),
    scalar("container_height", &[Containment], (0.5, 1.5), 11),
    scalar("container_width", &[Containment], (0.5, 1.5), 12),
    scalar("container_interior_depth", &[Containment], (0.4, 1.4), 13),
    categorical("barrier_kind", BARRIER_LABELS, &[Barrier], 14),
    scalar("opening_height", &[Barrier], (0.4, 1.4), 15),
    scalar("opening_width", &[Barrier], (0.4, 1.4), 16),
    scalar("second_height", &[Collision], (0.5, 1.5), 17),
    scalar("second_width", &[Collision], (0.4, 1.6), 18),
    scalar("second_speed", &[Collision], (0.5, 2.5), 19),
    categorical("second_direction", DIRECTION_LABELS, &[Collision], 19),
    scalar("object_momentum", MOVING, (0.0, 14.4), 3),
];

/// Slots that only ever carry information about one category; their
/// relevance pattern identifies the event.
pub fn category_slots(category: EventCategory) -> &'static [usize] {
    use slot::*;
    match category {
        Support => &[OVERHANG, COM_HEIGHT, COM_OFFSET, COM_DIRECTION],
        Occlusion => &[OCCLUDER_MIDDLE, OCCLUDER_WIDTH],
        Containment => &[CONTAINER_SHAPE, CONTAINER_HEIGHT, CONTAINER_WIDTH, CONTAINER_DEPTH],
        Collision => &[SECOND_HEIGHT, SECOND_WIDTH, SECOND_SPEED, SECOND_DIRECTION],
        Barrier => &[BARRIER_KIND, OPENING_HEIGHT, OPENING_WIDTH],
    }
}
