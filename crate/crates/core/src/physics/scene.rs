//! Scene layout: fixed staging constants and the bodies present per category.

use serde::{Deserialize, Serialize};

use super::geometry::{Pose, Vec3};
use crate::scenario::{
    BarrierKind, ContainerShape, EventCategory, ObjectShape, ScenarioSpec,
};

pub const FRAME_COUNT: usize = 50;
pub const DURATION_S: f64 = 2.0;
pub const DT: f64 = DURATION_S / FRAME_COUNT as f64;
pub const METERS_PER_UNIT: f64 = 2.0;
pub const GRAVITY: f64 = 9.81 / METERS_PER_UNIT;
/// Tolerance for geometric comparisons in outcome predicates and rules.
pub const GEOM_TOL: f64 = 1e-9;

pub const SCENE_HALF_WIDTH: f64 = 5.0;
pub const GROUND_THICKNESS: f64 = 0.1;

// Support: a block occupying x <= 0 with its edge at x = 0.
pub const SUPPORT_HEIGHT: f64 = 1.5;
pub const SUPPORT_WIDTH: f64 = 2.0;
pub const DROP_HEIGHT: f64 = 0.2;
pub const TIP_DURATION: f64 = 0.4;

// Occluder with two full-height screens around a lowered middle segment.
pub const OCCLUDER_HEIGHT: f64 = 2.0;
pub const OCCLUDER_MIDDLE_WIDTH: f64 = 0.8;
pub const OCCLUDER_SCREEN_WIDTH: f64 = 2.0;
pub const OCCLUDER_Y: f64 = -1.5;
pub const OCCLUSION_SPEED: f64 = 3.5;
pub const OCCLUSION_START_X: f64 = -3.3;
pub const HOP_CLEARANCE: f64 = 0.1;

pub const CONTAINER_WALL: f64 = 0.1;
pub const CONTAINED_CLEARANCE: f64 = 0.02;

pub const COLLISION_CONTACT_FRAME: usize = 20;
/// Post-contact displacement of the second object beyond which it counts
/// as displaced.
pub const DISPLACED_THRESHOLD: f64 = 0.25;
pub const SURPRISE_RECOIL_SPEED: f64 = 0.5;

pub const BARRIER_X: f64 = 0.0;
pub const BARRIER_THICKNESS: f64 = 0.1;
pub const BARRIER_HEIGHT: f64 = 2.0;
pub const BARRIER_DEPTH: f64 = 1.8;
pub const BARRIER_SPEED: f64 = 3.0;
pub const BARRIER_CONTACT_FRAME: usize = 15;
pub const BARRIER_OCCLUDER_MIN_X: f64 = -1.0;
pub const BARRIER_OCCLUDER_MAX_X: f64 = 1.1;
pub const BARRIER_OCCLUDER_HEIGHT: f64 = 2.2;

pub fn occluder_half_width() -> f64 {
    0.5 * OCCLUDER_MIDDLE_WIDTH + OCCLUDER_SCREEN_WIDTH
}

pub fn frame_time(k: usize) -> f64 {
    k as f64 * DT
}

/// Seconds between the collision contact frame and the last frame.
pub fn collision_post_contact_time() -> f64 {
    (FRAME_COUNT - 1 - COLLISION_CONTACT_FRAME) as f64 * DT
}

/// 1-D perfectly elastic exchange of signed velocities.
pub fn elastic_velocities(m1: f64, u1: f64, m2: f64, u2: f64) -> (f64, f64) {
    let total = m1 + m2;
    let v1 = ((m1 - m2) * u1 + 2.0 * m2 * u2) / total;
    let v2 = ((m2 - m1) * u2 + 2.0 * m1 * u1) / total;
    (v1, v2)
}

/// Displacements of both bodies between the contact frame and the last frame.
pub fn collision_post_contact_displacements(m1: f64, u1: f64, m2: f64, u2: f64) -> (f64, f64) {
    let (v1, v2) = elastic_velocities(m1, u1, m2, u2);
    let t = collision_post_contact_time();
    (v1 * t, v2 * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    FocalObject,
    SecondObject,
    Support,
    Occluder,
    Container,
    Barrier,
    Ground,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", content = "variant", rename_all = "snake_case")]
pub enum Shape {
    Object(ObjectShape),
    Container(ContainerShape),
    Barrier(BarrierKind),
    Block,
}

/// A rectangular cut-out. For an occluder it is the lowered middle segment
/// (`height` is that segment's height); for a barrier it is a ground-level
/// doorway through the barrier (`width` runs along `y`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aperture {
    pub width: f64,
    pub height: f64,
}

/// A scene entity. Its local frame is a box `[-w/2, w/2] × [-d/2, d/2] × [0, h]`
/// with the origin at the centre of the base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub id: usize,
    pub kind: BodyKind,
    pub shape: Shape,
    pub height: f64,
    pub width: f64,
    pub depth: f64,
    pub mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aperture: Option<Aperture>,
    /// Initial pose; static bodies keep it for the whole trajectory.
    pub pose: Pose,
}

impl Body {
    fn new(id: usize, kind: BodyKind, shape: Shape, height: f64, width: f64, depth: f64) -> Self {
        Self {
            id,
            kind,
            shape,
            height,
            width,
            depth,
            mass: height.powi(3),
            aperture: None,
            pose: Pose::default(),
        }
    }

    fn placed(mut self, position: Vec3) -> Self {
        self.pose = Pose::at(position);
        self
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self.kind, BodyKind::FocalObject | BodyKind::SecondObject)
    }

    /// Front-facing rectangles `(x_min, x_max, height)` this body paints over
    /// anything behind it, as seen by the camera. Only occluders and the
    /// container's front wall hide other bodies.
    pub fn cover_rects(&self) -> Vec<(f64, f64, f64)> {
        let cx = self.pose.position.x;
        let half = 0.5 * self.width;
        match self.kind {
            BodyKind::Occluder => match self.aperture {
                Some(mid) => {
                    let m = 0.5 * mid.width;
                    vec![
                        (cx - half, cx - m, self.height),
                        (cx - m, cx + m, mid.height),
                        (cx + m, cx + half, self.height),
                    ]
                }
                None => vec![(cx - half, cx + half, self.height)],
            },
            BodyKind::Container => vec![(cx - half, cx + half, self.height)],
            _ => Vec::new(),
        }
    }
}

/// Bodies of a spec's scene plus the indices of the moving ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub bodies: Vec<Body>,
    pub object: usize,
    pub second: Option<usize>,
}

impl Scene {
    pub fn build(spec: &ScenarioSpec) -> Scene {
        let mut bodies = vec![Body::new(
            0,
            BodyKind::Ground,
            Shape::Block,
            GROUND_THICKNESS,
            2.0 * SCENE_HALF_WIDTH,
            4.0,
        )
        .placed(Vec3::new(0.0, 0.0, -GROUND_THICKNESS))];
        let object_shape = Shape::Object(spec.object_shape);
        let w = spec.object_width;
        let h = spec.object_height;
        let mut second = None;
        match spec.category {
            EventCategory::Support => {
                let id = bodies.len();
                bodies.push(
                    Body::new(id, BodyKind::Support, Shape::Block, SUPPORT_HEIGHT, SUPPORT_WIDTH, 1.8)
                        .placed(Vec3::new(-0.5 * SUPPORT_WIDTH, 0.0, 0.0)),
                );
            }
            EventCategory::Occlusion => {
                let id = bodies.len();
                let frac = spec.occluder_middle.unwrap_or(0.5);
                let mut occ = Body::new(
                    id,
                    BodyKind::Occluder,
                    Shape::Block,
                    OCCLUDER_HEIGHT,
                    2.0 * occluder_half_width(),
                    0.1,
                )
                .placed(Vec3::new(0.0, OCCLUDER_Y, 0.0));
                occ.aperture = Some(Aperture {
                    width: OCCLUDER_MIDDLE_WIDTH,
                    height: frac * OCCLUDER_HEIGHT,
                });
                bodies.push(occ);
            }
            EventCategory::Containment => {
                let id = bodies.len();
                let c = spec.container.expect("validated containment spec");
                bodies.push(
                    Body::new(id, BodyKind::Container, Shape::Container(c.shape), c.height, c.width, c.width)
                        .placed(Vec3::ZERO),
                );
            }
            EventCategory::Collision => {}
            EventCategory::Barrier => {
                let id = bodies.len();
                let kind = spec.barrier_kind().expect("barrier sub-type");
                let mut barrier = Body::new(
                    id,
                    BodyKind::Barrier,
                    Shape::Barrier(kind),
                    BARRIER_HEIGHT,
                    BARRIER_THICKNESS,
                    BARRIER_DEPTH,
                )
                .placed(Vec3::new(BARRIER_X + 0.5 * BARRIER_THICKNESS, 0.0, 0.0));
                barrier.aperture = spec.opening.map(|o| Aperture { width: o.width, height: o.height });
                bodies.push(barrier);
                let id = bodies.len();
                let occ_w = BARRIER_OCCLUDER_MAX_X - BARRIER_OCCLUDER_MIN_X;
                bodies.push(
                    Body::new(id, BodyKind::Occluder, Shape::Block, BARRIER_OCCLUDER_HEIGHT, occ_w, 0.1)
                        .placed(Vec3::new(BARRIER_OCCLUDER_MIN_X + 0.5 * occ_w, OCCLUDER_Y, 0.0)),
                );
            }
        }
        let object = bodies.len();
        bodies.push(Body::new(object, BodyKind::FocalObject, object_shape, h, w, w));
        if let Some(c) = spec.collision {
            let id = bodies.len();
            bodies.push(Body::new(id, BodyKind::SecondObject, object_shape, c.second_height, w, w));
            second = Some(id);
        }
        Scene { bodies, object, second }
    }
}
