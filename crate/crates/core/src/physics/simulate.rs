//! Closed-form kinematics for the five event categories.
//!
//! Every trajectory is sampled on a fixed 50-frame grid. Expected scenes follow
//! the physics model (free fall, uniform sliding, elastic head-on exchange,
//! hard stops); surprising scenes replay the expected motion up to the
//! interaction onset and then stage the flipped outcome.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::{Aabb, Pose, Quat, Vec3};
use super::scene::{self, Body, Scene, DT, FRAME_COUNT, GEOM_TOL, GRAVITY};
use crate::features::PosteriorRule;
use crate::scenario::{BarrierKind, EventCategory, ScenarioError, ScenarioSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: usize,
    /// One pose per scene body, in body-id order.
    pub poses: Vec<Pose>,
    /// `false` when the body is fully hidden from the camera.
    pub visible: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub duration_s: f64,
    pub frames: Vec<Frame>,
}

impl Trajectory {
    pub fn last(&self) -> &Frame {
        self.frames.last().expect("trajectory has frames")
    }

    /// Checks the frame-count, ordering and unit-quaternion invariants.
    pub fn check_invariants(&self, body_count: usize) -> Result<(), String> {
        if self.frames.len() != FRAME_COUNT {
            return Err(format!("expected {FRAME_COUNT} frames, got {}", self.frames.len()));
        }
        for (k, f) in self.frames.iter().enumerate() {
            if f.index != k {
                return Err(format!("frame {k} carries index {}", f.index));
            }
            if f.poses.len() != body_count || f.visible.len() != body_count {
                return Err(format!("frame {k} does not cover every body"));
            }
            for p in &f.poses {
                if !p.position.is_finite() || (p.orientation.norm() - 1.0).abs() > 1e-9 {
                    return Err(format!("frame {k} has a non-finite position or non-unit quaternion"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    InvalidSpec(#[from] ScenarioError),
    #[error("posterior rule {rule:?} is irrelevant to category {category}")]
    InvalidViolation { rule: PosteriorRule, category: EventCategory },
}

pub fn simulate_expected(spec: &ScenarioSpec) -> Result<Trajectory, SimError> {
    spec.validate()?;
    Ok(simulate(spec, None))
}

pub fn simulate_surprising(
    spec: &ScenarioSpec,
    violation: PosteriorRule,
) -> Result<Trajectory, SimError> {
    spec.validate()?;
    if violation.category() != spec.category {
        return Err(SimError::InvalidViolation { rule: violation, category: spec.category });
    }
    Ok(simulate(spec, Some(violation)))
}

/// Number of leading frames shared by the expected and every surprising
/// trajectory of `spec`: the frames before the causal interaction begins.
pub fn interaction_onset(spec: &ScenarioSpec) -> usize {
    let first = |pred: &dyn Fn(f64) -> bool| (0..FRAME_COUNT).find(|&k| pred(scene::frame_time(k))).unwrap_or(FRAME_COUNT);
    match spec.category {
        EventCategory::Support => {
            let t_land = (2.0 * scene::DROP_HEIGHT / GRAVITY).sqrt();
            first(&|t| t > t_land)
        }
        EventCategory::Occlusion => {
            let reach = -0.5 * scene::OCCLUDER_MIDDLE_WIDTH - 0.5 * spec.object_width;
            first(&|t| scene::OCCLUSION_START_X + scene::OCCLUSION_SPEED * t > reach)
        }
        EventCategory::Containment => {
            let c = spec.container.expect("containment spec");
            let z0 = c.height + scene::DROP_HEIGHT;
            first(&|t| z0 - 0.5 * GRAVITY * t * t <= c.height)
        }
        EventCategory::Collision => scene::COLLISION_CONTACT_FRAME + 1,
        EventCategory::Barrier => scene::BARRIER_CONTACT_FRAME + 1,
    }
}

fn simulate(spec: &ScenarioSpec, flip: Option<PosteriorRule>) -> Trajectory {
    let scene = Scene::build(spec);
    let (track, second_track) = match spec.category {
        EventCategory::Support => (support_track(spec, flip), None),
        EventCategory::Occlusion => (occlusion_track(spec, flip), None),
        EventCategory::Containment => (containment_track(spec, flip), None),
        EventCategory::Collision => {
            let (a, b) = collision_track(spec, flip);
            (a, Some(b))
        }
        EventCategory::Barrier => (barrier_track(spec, flip), None),
    };
    let cover: Vec<_> = scene.bodies.iter().flat_map(Body::cover_rects).collect();
    let frames = (0..FRAME_COUNT)
        .map(|k| {
            let mut poses: Vec<Pose> = scene.bodies.iter().map(|b| b.pose).collect();
            poses[scene.object] = track[k];
            if let (Some(i), Some(t)) = (scene.second, second_track.as_ref()) {
                poses[i] = t[k];
            }
            let visible = scene
                .bodies
                .iter()
                .zip(&poses)
                .map(|(b, p)| !b.is_dynamic() || exposed(&body_aabb(b, p), &cover))
                .collect();
            Frame { index: k, poses, visible }
        })
        .collect();
    Trajectory { duration_s: scene::DURATION_S, frames }
}

pub(crate) fn body_aabb(body: &Body, pose: &Pose) -> Aabb {
    Aabb::of_box(pose, body.width, body.depth, body.height)
}

/// Whether any part of the body's silhouette rises above the covering
/// rectangles in front of it. All covers stand on the ground plane.
fn exposed(b: &Aabb, cover: &[(f64, f64, f64)]) -> bool {
    let (x0, x1, top) = (b.min.x, b.max.x, b.max.z);
    let mut cuts = vec![x0, x1];
    for &(a, c, _) in cover {
        for e in [a, c] {
            if e > x0 && e < x1 {
                cuts.push(e);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).filter(|w| w[1] > w[0]).any(|w| {
        let mid = 0.5 * (w[0] + w[1]);
        let h = cover
            .iter()
            .filter(|r| r.0 <= mid && mid <= r.1)
            .map(|r| r.2)
            .fold(0.0, f64::max);
        top > h
    })
}

fn relative_time(k: usize, onset: usize) -> f64 {
    (k as f64 - onset as f64) * DT
}

fn support_track(spec: &ScenarioSpec, flip: Option<PosteriorRule>) -> Vec<Pose> {
    let (h, w) = (spec.object_height, spec.object_width);
    let overhang = spec.overhang.expect("support spec");
    let x_c = (overhang - 0.5) * w;
    let falls = x_c > 0.0;
    let tip = falls != flip.is_some();
    let z0 = scene::SUPPORT_HEIGHT + scene::DROP_HEIGHT;
    let t_land = (2.0 * scene::DROP_HEIGHT / GRAVITY).sqrt();
    let pivot = Vec3::new(0.0, 0.0, scene::SUPPORT_HEIGHT);
    let offset = Vec3::new(x_c, 0.0, 0.0);
    let tipped_q = Quat::about_y(FRAC_PI_2);
    let tipped = Pose { position: pivot.add(tipped_q.rotate(offset)), orientation: tipped_q };
    let rest_drop = Aabb::of_box(&tipped, w, w, h).min.z;
    (0..FRAME_COUNT)
        .map(|k| {
            let t = scene::frame_time(k);
            if !tip || t <= t_land {
                let z = (z0 - 0.5 * GRAVITY * t * t).max(scene::SUPPORT_HEIGHT);
                Pose::at(Vec3::new(x_c, 0.0, z))
            } else if t <= t_land + scene::TIP_DURATION {
                let u = (t - t_land) / scene::TIP_DURATION;
                let q = Quat::about_y(FRAC_PI_2 * u * u);
                Pose { position: pivot.add(q.rotate(offset)), orientation: q }
            } else {
                let s = t - t_land - scene::TIP_DURATION;
                let drop = (0.5 * GRAVITY * s * s).min(rest_drop);
                let mut p = tipped;
                p.position.z -= drop;
                p
            }
        })
        .collect()
}

fn occlusion_track(spec: &ScenarioSpec, flip: Option<PosteriorRule>) -> Vec<Pose> {
    let (h, w) = (spec.object_height, spec.object_width);
    let mid_top = spec.occluder_middle.expect("occlusion spec") * scene::OCCLUDER_HEIGHT;
    let m = 0.5 * scene::OCCLUDER_MIDDLE_WIDTH;
    let taller = h > mid_top + GEOM_TOL;
    let overlaps = |xc: f64| xc + 0.5 * w > -m && xc - 0.5 * w < m;
    let mut shift = 0.0;
    (0..FRAME_COUNT)
        .map(|k| {
            let mut xc = scene::OCCLUSION_START_X + scene::OCCLUSION_SPEED * scene::frame_time(k) + shift;
            let mut z = 0.0;
            match flip {
                Some(PosteriorRule::VisibleAboveMiddle) if taller => {
                    // Skip the middle segment entirely: vanish behind the left
                    // screen and reappear behind the right one.
                    if shift == 0.0 && xc + 0.5 * w > -m {
                        shift = scene::OCCLUDER_MIDDLE_WIDTH + w;
                        xc += shift;
                    }
                }
                Some(PosteriorRule::VisibleAboveMiddle) => {
                    if overlaps(xc) {
                        z = mid_top - h + scene::HOP_CLEARANCE;
                    }
                }
                Some(PosteriorRule::ReappearsBeyondOccluder) => {
                    xc = xc.min(scene::occluder_half_width() - 0.5 * w);
                }
                _ => {}
            }
            Pose::at(Vec3::new(xc, 0.0, z))
        })
        .collect()
}

fn containment_track(spec: &ScenarioSpec, flip: Option<PosteriorRule>) -> Vec<Pose> {
    let h = spec.object_height;
    let c = spec.container.expect("containment spec");
    let fits = spec.object_width <= c.interior_width() + GEOM_TOL;
    let rest_expected = if fits { scene::CONTAINER_WALL } else { c.height };
    let contained = fits && h <= c.interior_depth() + GEOM_TOL;
    let rest = match flip {
        None => rest_expected,
        Some(_) if contained => c.height - 0.5 * h,
        Some(_) => c.height - scene::CONTAINED_CLEARANCE - h,
    };
    let z0 = c.height + scene::DROP_HEIGHT;
    (0..FRAME_COUNT)
        .map(|k| {
            let t = scene::frame_time(k);
            Pose::at(Vec3::new(0.0, 0.0, (z0 - 0.5 * GRAVITY * t * t).max(rest)))
        })
        .collect()
}

fn collision_track(spec: &ScenarioSpec, flip: Option<PosteriorRule>) -> (Vec<Pose>, Vec<Pose>) {
    let w = spec.object_width;
    let c = spec.collision.expect("collision spec");
    let (m1, m2) = (spec.object_height.powi(3), c.second_height.powi(3));
    let (u1, u2) = (c.speed, -c.second_speed);
    let (v1, v2) = scene::elastic_velocities(m1, u1, m2, u2);
    let t_post = scene::collision_post_contact_time();
    let (v1, v2) = match flip {
        Some(PosteriorRule::Obj1Reverses) => {
            if v1 * t_post < -GEOM_TOL {
                // Obj1 refuses to recoil: it rides along with obj2 or both halt.
                if v2 > 0.0 {
                    (v2, v2)
                } else {
                    (0.0, 0.0)
                }
            } else {
                (-scene::SURPRISE_RECOIL_SPEED, v2)
            }
        }
        Some(PosteriorRule::Obj2Displaced) => {
            if v2 * t_post > scene::DISPLACED_THRESHOLD + GEOM_TOL {
                (if v1 < 0.0 { v1 } else { 0.0 }, 0.0)
            } else {
                (v1, (scene::DISPLACED_THRESHOLD + 0.5) / t_post)
            }
        }
        _ => (v1, v2),
    };
    let onset = scene::COLLISION_CONTACT_FRAME;
    let (c1, c2) = (-0.5 * w, 0.5 * w);
    let mut a = Vec::with_capacity(FRAME_COUNT);
    let mut b = Vec::with_capacity(FRAME_COUNT);
    for k in 0..FRAME_COUNT {
        let t = relative_time(k, onset);
        let (s1, s2) = if k <= onset { (u1, u2) } else { (v1, v2) };
        a.push(Pose::at(Vec3::new(c1 + s1 * t, 0.0, 0.0)));
        b.push(Pose::at(Vec3::new(c2 + s2 * t, 0.0, 0.0)));
    }
    (a, b)
}

fn barrier_track(spec: &ScenarioSpec, flip: Option<PosteriorRule>) -> Vec<Pose> {
    let (h, w) = (spec.object_height, spec.object_width);
    let passes = match spec.barrier_kind().expect("barrier spec") {
        BarrierKind::Soft => true,
        BarrierKind::Solid => false,
        BarrierKind::Opening => {
            let o = spec.opening.expect("opening spec");
            h <= o.height + GEOM_TOL && w <= o.width + GEOM_TOL
        }
    };
    let passes = passes != flip.is_some();
    let stop_at = scene::BARRIER_X - 0.5 * w;
    (0..FRAME_COUNT)
        .map(|k| {
            let free = stop_at + scene::BARRIER_SPEED * relative_time(k, scene::BARRIER_CONTACT_FRAME);
            let xc = if passes { free } else { free.min(stop_at) };
            Pose::at(Vec3::new(xc, 0.0, 0.0))
        })
        .collect()
}
