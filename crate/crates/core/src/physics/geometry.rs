//! Small fixed-size vector, quaternion and pose types.
//!
//! Scene units throughout: one unit is two metres. `z` points up, `x` is the
//! horizontal direction of motion, and the camera looks along `+y`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Unit quaternion stored as `(w, x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Rotation by `angle` radians about the world `+y` axis. Positive angles
    /// tip the body's local `+z` toward world `+x`.
    pub fn about_y(angle: f64) -> Quat {
        let (s, c) = (angle * 0.5).sin_cos();
        Quat { w: c, x: 0.0, y: s, z: 0.0 }
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        // v' = v + 2w (q × v) + 2 q × (q × v)
        let q = Vec3::new(self.x, self.y, self.z);
        let t = q.cross(v).scale(2.0);
        v.add(t.scale(self.w)).add(q.cross(t))
    }
}

/// World pose of a body. `position` is the centre of the body's base.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
}

impl Pose {
    pub fn at(position: Vec3) -> Self {
        Self { position, orientation: Quat::IDENTITY }
    }

    pub fn transform(&self, local: Vec3) -> Vec3 {
        self.orientation.rotate(local).add(self.position)
    }
}

// Poses are written as a flat `[x, y, z, qw, qx, qy, qz]` array.
impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let p = self.position;
        let q = self.orientation;
        [p.x, p.y, p.z, q.w, q.x, q.y, q.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, z, w, qx, qy, qz] = <[f64; 7]>::deserialize(d)?;
        Ok(Pose {
            position: Vec3::new(x, y, z),
            orientation: Quat { w, x: qx, y: qy, z: qz },
        })
    }
}

/// Axis-aligned bounds in world coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    /// Bounds of a local box `[-w/2, w/2] × [-d/2, d/2] × [0, h]` placed at `pose`.
    pub fn of_box(pose: &Pose, width: f64, depth: f64, height: f64) -> Aabb {
        let mut min = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &x in &[-0.5 * width, 0.5 * width] {
            for &y in &[-0.5 * depth, 0.5 * depth] {
                for &z in &[0.0, height] {
                    let p = pose.transform(Vec3::new(x, y, z));
                    min = Vec3::new(min.x.min(p.x), min.y.min(p.y), min.z.min(p.z));
                    max = Vec3::new(max.x.max(p.x), max.y.max(p.y), max.z.max(p.z));
                }
            }
        }
        Aabb { min, max }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn quarter_turn_about_y_maps_up_to_plus_x() {
        let v = Quat::about_y(FRAC_PI_2).rotate(Vec3::new(0.0, 0.0, 1.0));
        assert!((v.x - 1.0).abs() < 1e-12);
        assert!(v.z.abs() < 1e-12);
    }

    #[test]
    fn pose_roundtrips_through_flat_array() {
        let pose = Pose {
            position: Vec3::new(0.1, -2.0, 1.0 / 3.0),
            orientation: Quat::about_y(0.3),
        };
        let text = serde_json::to_string(&pose).unwrap();
        assert!(text.starts_with('['));
        let back: Pose = serde_json::from_str(&text).unwrap();
        assert_eq!(back, pose);
    }

    #[test]
    fn aabb_of_tipped_box() {
        let pose = Pose {
            position: Vec3::ZERO,
            orientation: Quat::about_y(FRAC_PI_2),
        };
        let b = Aabb::of_box(&pose, 0.4, 0.4, 1.0);
        assert!((b.max.x - 1.0).abs() < 1e-12);
        assert!((b.min.z + 0.2).abs() < 1e-12);
    }
}
