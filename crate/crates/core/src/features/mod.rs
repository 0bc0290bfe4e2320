//! Ground-truth features, 20 → 24 engineering, and the rule engine.
//!
//! Engineered vectors store every slot as `f64`: scalars are non-negative
//! values, categoricals are label codes, and `-1` marks an irrelevant slot.

pub mod catalog;
pub mod rules;

pub use catalog::{slot, SlotDescriptor, SlotKind, FEATURES, FEATURE_COUNT, RAW_COUNT, RAW_FEATURES};
pub use rules::{
    eval_posterior, eval_prior, infer_category, PosteriorAssignment, PosteriorRule, PriorAssignment,
    PriorRule, Verdict, POSTERIOR_COUNT, PRIOR_COUNT,
};

use serde::{Deserialize, Serialize};

use crate::physics::scene;
use crate::scenario::{BarrierKind, ContainerShape, EventCategory, ObjectShape, ScenarioSpec};

pub const IRRELEVANT: f64 = -1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn irrelevant() -> Self {
        FeatureVector([IRRELEVANT; FEATURE_COUNT])
    }

    pub fn is_relevant(&self, slot: usize) -> bool {
        self.0[slot] != IRRELEVANT
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawValue {
    Irrelevant,
    Scalar(f64),
    Label(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawFeatures(pub [RawValue; RAW_COUNT]);

fn shape_code(s: ObjectShape) -> u8 {
    ObjectShape::ALL.iter().position(|x| *x == s).expect("listed shape") as u8
}

/// The 20 raw features of a spec. Signed quantities keep their sign here.
pub fn raw_features(spec: &ScenarioSpec) -> RawFeatures {
    use EventCategory::*;
    use RawValue::{Label, Scalar};
    let mut r = [RawValue::Irrelevant; RAW_COUNT];
    let (h, w) = (spec.object_height, spec.object_width);
    r[0] = Label(shape_code(spec.object_shape));
    r[1] = Scalar(h);
    r[2] = Scalar(w);
    r[4] = Label(match spec.category {
        Support | Containment => 0,
        _ => 1,
    });
    match spec.category {
        Support => {
            let c = spec.overhang.expect("support spec");
            r[5] = Scalar(c);
            r[6] = Scalar(spec.object_shape.centroid_height_fraction() * h);
            r[7] = Scalar((c - 0.5) * w);
        }
        Occlusion => {
            r[3] = Scalar(scene::OCCLUSION_SPEED);
            r[8] = Scalar(spec.occluder_middle.expect("occlusion spec"));
            r[9] = Scalar(2.0 * scene::occluder_half_width());
        }
        Containment => {
            let c = spec.container.expect("containment spec");
            r[10] = Label(match c.shape {
                ContainerShape::Mug => 0,
                ContainerShape::Box => 1,
            });
            r[11] = Scalar(c.height);
            r[12] = Scalar(c.width);
            r[13] = Scalar(c.interior_depth());
        }
        Collision => {
            let c = spec.collision.expect("collision spec");
            r[3] = Scalar(c.speed);
            r[17] = Scalar(c.second_height);
            r[18] = Scalar(w);
            r[19] = Scalar(-c.second_speed);
        }
        Barrier => {
            r[3] = Scalar(scene::BARRIER_SPEED);
            let kind = spec.barrier_kind().expect("barrier spec");
            r[14] = Label(match kind {
                BarrierKind::Soft => 0,
                BarrierKind::Solid => 1,
                BarrierKind::Opening => 2,
            });
            if let Some(o) = spec.opening {
                r[15] = Scalar(o.height);
                r[16] = Scalar(o.width);
            }
        }
    }
    RawFeatures(r)
}

fn value(v: RawValue) -> f64 {
    match v {
        RawValue::Irrelevant => IRRELEVANT,
        RawValue::Scalar(x) => x,
        RawValue::Label(l) => l as f64,
    }
}

/// Splits a signed quantity into `(magnitude, direction code)`; direction
/// code 1 for non-negative values.
fn split(v: RawValue) -> (f64, f64) {
    match v {
        RawValue::Scalar(x) => (x.abs(), if x >= 0.0 { 1.0 } else { 0.0 }),
        _ => (IRRELEVANT, IRRELEVANT),
    }
}

/// Maps the 20 raw features to the 24-slot engineered vector.
pub fn engineer(raw: &RawFeatures) -> FeatureVector {
    use slot::*;
    let r = &raw.0;
    let mut f = [IRRELEVANT; FEATURE_COUNT];
    f[OBJECT_SHAPE] = value(r[0]);
    f[OBJECT_HEIGHT] = value(r[1]);
    f[OBJECT_WIDTH] = value(r[2]);
    (f[OBJECT_SPEED], f[OBJECT_DIRECTION]) = split(r[3]);
    f[MOTION_KIND] = value(r[4]);
    f[OVERHANG] = value(r[5]);
    f[COM_HEIGHT] = value(r[6]);
    // A positive lateral offset points past the support edge: outward.
    (f[COM_OFFSET], f[COM_DIRECTION]) = split(r[7]);
    f[OCCLUDER_MIDDLE] = value(r[8]);
    f[OCCLUDER_WIDTH] = value(r[9]);
    f[CONTAINER_SHAPE] = value(r[10]);
    f[CONTAINER_HEIGHT] = value(r[11]);
    f[CONTAINER_WIDTH] = value(r[12]);
    f[CONTAINER_DEPTH] = value(r[13]);
    f[BARRIER_KIND] = value(r[14]);
    f[OPENING_HEIGHT] = value(r[15]);
    f[OPENING_WIDTH] = value(r[16]);
    f[SECOND_HEIGHT] = value(r[17]);
    f[SECOND_WIDTH] = value(r[18]);
    (f[SECOND_SPEED], f[SECOND_DIRECTION]) = split(r[19]);
    if let (RawValue::Scalar(_), RawValue::Scalar(h)) = (r[3], r[1]) {
        f[OBJECT_MOMENTUM] = h.powi(3) * f[OBJECT_SPEED];
    }
    FeatureVector(f)
}

pub fn extract_features(spec: &ScenarioSpec) -> FeatureVector {
    engineer(&raw_features(spec))
}

#[derive(Clone, Debug, Serialize)]
pub struct RuleDescriptor {
    pub name: &'static str,
    pub category: EventCategory,
    pub definition: &'static str,
}

/// Machine-readable catalog embedded in dataset manifests and model files.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogSchema {
    pub raw_features: Vec<SlotDescriptor>,
    pub features: Vec<SlotDescriptor>,
    pub prior_rules: Vec<RuleDescriptor>,
    pub posterior_rules: Vec<RuleDescriptor>,
    pub verdict_classes: [Verdict; 3],
}

pub fn catalog_schema() -> CatalogSchema {
    CatalogSchema {
        raw_features: RAW_FEATURES.to_vec(),
        features: FEATURES.to_vec(),
        prior_rules: PriorRule::ALL
            .iter()
            .map(|r| RuleDescriptor { name: r.name(), category: r.category(), definition: r.definition() })
            .collect(),
        posterior_rules: PosteriorRule::ALL
            .iter()
            .map(|r| RuleDescriptor { name: r.name(), category: r.category(), definition: r.definition() })
            .collect(),
        verdict_classes: Verdict::CLASSES,
    }
}
