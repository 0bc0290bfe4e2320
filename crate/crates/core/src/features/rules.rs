//! Prior and posterior rule catalogs and the deterministic rule engine.
//!
//! Verdicts combine under Kleene's three-valued logic with `Irrelevant` as
//! the unknown value, so `No ∧ Irrelevant = No` and `Yes ∨ Irrelevant = Yes`.

use serde::{Deserialize, Serialize};

use super::catalog::{category_slots, slot, FEATURES};
use super::FeatureVector;
use crate::physics::scene::{self, GEOM_TOL};
use crate::scenario::EventCategory::{self, *};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    #[default]
    Irrelevant,
}

impl Verdict {
    pub const CLASSES: [Verdict; 3] = [Verdict::Yes, Verdict::No, Verdict::Irrelevant];

    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    pub fn is_relevant(self) -> bool {
        self != Verdict::Irrelevant
    }

    /// Class index used by the trees: Yes 0, No 1, Irrelevant 2.
    pub fn class(self) -> usize {
        self as usize
    }

    pub fn from_class(i: usize) -> Self {
        Self::CLASSES[i]
    }

    /// Numeric input encoding for the second-stage tree.
    pub fn code(self) -> f64 {
        match self {
            Verdict::Yes => 1.0,
            Verdict::No => 0.0,
            Verdict::Irrelevant => -1.0,
        }
    }

    pub fn not(self) -> Self {
        match self {
            Verdict::Yes => Verdict::No,
            Verdict::No => Verdict::Yes,
            Verdict::Irrelevant => Verdict::Irrelevant,
        }
    }

    pub fn and(self, o: Verdict) -> Self {
        match (self, o) {
            (Verdict::No, _) | (_, Verdict::No) => Verdict::No,
            (Verdict::Yes, Verdict::Yes) => Verdict::Yes,
            _ => Verdict::Irrelevant,
        }
    }

    pub fn or(self, o: Verdict) -> Self {
        self.not().and(o.not()).not()
    }
}

macro_rules! rule_enum {
    ($name:ident, $count:expr, { $($variant:ident => ($text:literal, $cat:expr)),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: [$name; $count] = [$($name::$variant),+];

            pub fn index(self) -> usize {
                self as usize
            }

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn category(self) -> EventCategory {
                match self {
                    $($name::$variant => $cat),+
                }
            }

            pub fn for_category(c: EventCategory) -> &'static [$name] {
                let all = &Self::ALL;
                let start = all.iter().position(|r| r.category() == c).unwrap_or(all.len());
                let end = all.iter().rposition(|r| r.category() == c).map_or(start, |e| e + 1);
                &all[start..end]
            }
        }
    };
}

pub const PRIOR_COUNT: usize = 13;
pub const POSTERIOR_COUNT: usize = 9;

rule_enum!(PriorRule, PRIOR_COUNT, {
    ComBeyondEdge => ("com_beyond_edge", Support),
    RestingOnSupport => ("resting_on_support", Support),
    TallerThanMiddle => ("taller_than_middle", Occlusion),
    PathPassesBehind => ("path_passes_behind", Occlusion),
    TallerThanInterior => ("taller_than_interior", Containment),
    WiderThanOpening => ("wider_than_opening", Containment),
    Obj1Heavier => ("obj1_heavier", Collision),
    Obj1Faster => ("obj1_faster", Collision),
    Obj1MomentumGreater => ("obj1_momentum_greater", Collision),
    BarrierSoft => ("barrier_soft", Barrier),
    OpeningPresent => ("opening_present", Barrier),
    FitsOpeningHeight => ("fits_opening_height", Barrier),
    FitsOpeningWidth => ("fits_opening_width", Barrier),
});

rule_enum!(PosteriorRule, POSTERIOR_COUNT, {
    FallsToGround => ("falls_to_ground", Support),
    VisibleAboveMiddle => ("visible_above_middle", Occlusion),
    ReappearsBeyondOccluder => ("reappears_beyond_occluder", Occlusion),
    FullyContained => ("fully_contained", Containment),
    ProtrudesAboveRim => ("protrudes_above_rim", Containment),
    Obj1Reverses => ("obj1_reverses", Collision),
    Obj2Displaced => ("obj2_displaced", Collision),
    PassesBeyondBarrier => ("passes_beyond_barrier", Barrier),
    StopsAtBarrier => ("stops_at_barrier", Barrier),
});

impl PriorRule {
    pub fn definition(self) -> &'static str {
        use PriorRule::*;
        match self {
            ComBeyondEdge => "com_offset_direction == outward and com_offset_magnitude > 0",
            RestingOnSupport => "overhang_fraction < 1",
            TallerThanMiddle => "object_height > occluder_middle_fraction * occluder height",
            PathPassesBehind => "object_speed > 0 and object_direction == right",
            TallerThanInterior => "object_height > container_interior_depth",
            WiderThanOpening => "object_width > container_width - 2 * wall",
            Obj1Heavier => "object_height^3 > second_height^3",
            Obj1Faster => "object_speed > second_speed",
            Obj1MomentumGreater => "object_momentum > second_height^3 * second_speed",
            BarrierSoft => "barrier_kind == soft",
            OpeningPresent => "barrier_kind == opening",
            FitsOpeningHeight => "object_height <= opening_height",
            FitsOpeningWidth => "object_width <= opening_width",
        }
    }
}

impl PosteriorRule {
    pub fn definition(self) -> &'static str {
        use PosteriorRule::*;
        match self {
            FallsToGround => "com_beyond_edge or not resting_on_support",
            VisibleAboveMiddle => "taller_than_middle and path_passes_behind",
            ReappearsBeyondOccluder => "path_passes_behind",
            FullyContained => "not taller_than_interior and not wider_than_opening",
            ProtrudesAboveRim => "taller_than_interior or wider_than_opening",
            Obj1Reverses => "elastic head-on exchange gives obj1 a negative post-contact displacement",
            Obj2Displaced => "elastic head-on exchange displaces obj2 beyond the threshold",
            PassesBeyondBarrier => "barrier_soft or (opening_present and fits_opening_height and fits_opening_width)",
            StopsAtBarrier => "not passes_beyond_barrier",
        }
    }

    /// Rules that necessarily flip together with this one.
    pub fn coupled(self) -> &'static [PosteriorRule] {
        use PosteriorRule::*;
        match self {
            FullyContained | ProtrudesAboveRim => &[FullyContained, ProtrudesAboveRim],
            PassesBeyondBarrier | StopsAtBarrier => &[PassesBeyondBarrier, StopsAtBarrier],
            FallsToGround => &[FallsToGround],
            VisibleAboveMiddle => &[VisibleAboveMiddle],
            ReappearsBeyondOccluder => &[ReappearsBeyondOccluder],
            Obj1Reverses => &[Obj1Reverses],
            Obj2Displaced => &[Obj2Displaced],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PriorAssignment(pub [Verdict; PRIOR_COUNT]);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PosteriorAssignment(pub [Verdict; POSTERIOR_COUNT]);

impl PriorAssignment {
    pub fn get(&self, r: PriorRule) -> Verdict {
        self.0[r.index()]
    }

    pub fn set(&mut self, r: PriorRule, v: Verdict) {
        self.0[r.index()] = v;
    }
}

impl PosteriorAssignment {
    pub fn get(&self, r: PosteriorRule) -> Verdict {
        self.0[r.index()]
    }

    pub fn set(&mut self, r: PosteriorRule, v: Verdict) {
        self.0[r.index()] = v;
    }

    /// Rules on which the two assignments disagree, ignoring rules that are
    /// Irrelevant in both.
    pub fn differing(&self, other: &PosteriorAssignment) -> Vec<PosteriorRule> {
        PosteriorRule::ALL
            .into_iter()
            .filter(|r| self.get(*r) != other.get(*r))
            .collect()
    }
}

fn relevant(f: &FeatureVector, s: usize) -> bool {
    f.is_relevant(s)
}

/// Category whose identifying slots are most often relevant; ties go to the
/// lowest category index. `None` when no identifying slot is relevant.
pub fn infer_category(f: &FeatureVector) -> Option<EventCategory> {
    let mut best: Option<(usize, EventCategory)> = None;
    for c in EventCategory::ALL {
        let n = category_slots(c).iter().filter(|&&s| relevant(f, s)).count();
        if n > 0 && best.is_none_or(|(m, _)| n > m) {
            best = Some((n, c));
        }
    }
    best.map(|(_, c)| c)
}

/// Evaluates `rule` only if every slot it reads is relevant.
fn guarded(f: &FeatureVector, slots: &[usize], rule: impl FnOnce(&[f64; 24]) -> bool) -> Verdict {
    if slots.iter().all(|&s| relevant(f, s)) {
        Verdict::from_bool(rule(&f.0))
    } else {
        Verdict::Irrelevant
    }
}

fn label(f: &[f64; 24], s: usize, name: &str) -> bool {
    let labels = FEATURES[s].labels;
    labels.get(f[s] as usize).is_some_and(|l| *l == name) && f[s] >= 0.0
}

pub fn eval_prior(f: &FeatureVector) -> PriorAssignment {
    use slot::*;
    use PriorRule::*;
    let mut p = PriorAssignment::default();
    let Some(category) = infer_category(f) else { return p };
    let m = |h: f64| h.powi(3);
    for &rule in PriorRule::for_category(category) {
        let v = match rule {
            ComBeyondEdge => guarded(f, &[COM_OFFSET, COM_DIRECTION], |x| {
                label(x, COM_DIRECTION, "outward") && x[COM_OFFSET] > 0.0
            }),
            RestingOnSupport => guarded(f, &[OVERHANG], |x| x[OVERHANG] < 1.0),
            TallerThanMiddle => guarded(f, &[OBJECT_HEIGHT, OCCLUDER_MIDDLE], |x| {
                x[OBJECT_HEIGHT] > x[OCCLUDER_MIDDLE] * scene::OCCLUDER_HEIGHT + GEOM_TOL
            }),
            PathPassesBehind => guarded(f, &[OBJECT_SPEED, OBJECT_DIRECTION], |x| {
                x[OBJECT_SPEED] > 0.0 && label(x, OBJECT_DIRECTION, "right")
            }),
            TallerThanInterior => guarded(f, &[OBJECT_HEIGHT, CONTAINER_DEPTH], |x| {
                x[OBJECT_HEIGHT] > x[CONTAINER_DEPTH] + GEOM_TOL
            }),
            WiderThanOpening => guarded(f, &[OBJECT_WIDTH, CONTAINER_WIDTH], |x| {
                x[OBJECT_WIDTH] > x[CONTAINER_WIDTH] - 2.0 * scene::CONTAINER_WALL + GEOM_TOL
            }),
            Obj1Heavier => guarded(f, &[OBJECT_HEIGHT, SECOND_HEIGHT], |x| {
                m(x[OBJECT_HEIGHT]) > m(x[SECOND_HEIGHT])
            }),
            Obj1Faster => guarded(f, &[OBJECT_SPEED, SECOND_SPEED], |x| x[OBJECT_SPEED] > x[SECOND_SPEED]),
            Obj1MomentumGreater => guarded(f, &[OBJECT_MOMENTUM, SECOND_HEIGHT, SECOND_SPEED], |x| {
                x[OBJECT_MOMENTUM] > m(x[SECOND_HEIGHT]) * x[SECOND_SPEED]
            }),
            BarrierSoft => guarded(f, &[BARRIER_KIND], |x| label(x, BARRIER_KIND, "soft")),
            OpeningPresent => guarded(f, &[BARRIER_KIND], |x| label(x, BARRIER_KIND, "opening")),
            FitsOpeningHeight => guarded(f, &[OBJECT_HEIGHT, OPENING_HEIGHT], |x| {
                x[OBJECT_HEIGHT] <= x[OPENING_HEIGHT] + GEOM_TOL
            }),
            FitsOpeningWidth => guarded(f, &[OBJECT_WIDTH, OPENING_WIDTH], |x| {
                x[OBJECT_WIDTH] <= x[OPENING_WIDTH] + GEOM_TOL
            }),
        };
        p.set(rule, v);
    }
    p
}

/// Post-contact collision readouts `(obj1_reverses, obj2_displaced)` from
/// the features, under the elastic head-on model.
fn collision_outcome(f: &FeatureVector) -> (Verdict, Verdict) {
    use slot::*;
    let slots = [OBJECT_HEIGHT, OBJECT_SPEED, OBJECT_DIRECTION, SECOND_HEIGHT, SECOND_SPEED, SECOND_DIRECTION];
    if !slots.iter().all(|&s| relevant(f, s)) {
        return (Verdict::Irrelevant, Verdict::Irrelevant);
    }
    let x = &f.0;
    if !(label(x, OBJECT_DIRECTION, "right") && label(x, SECOND_DIRECTION, "left")) {
        // Bodies moving apart or chasing each other never meet head-on.
        return (Verdict::No, Verdict::No);
    }
    let (d1, d2) = scene::collision_post_contact_displacements(
        x[OBJECT_HEIGHT].powi(3),
        x[OBJECT_SPEED],
        x[SECOND_HEIGHT].powi(3),
        -x[SECOND_SPEED],
    );
    (
        Verdict::from_bool(d1 < -GEOM_TOL),
        Verdict::from_bool(d2 > scene::DISPLACED_THRESHOLD + GEOM_TOL),
    )
}

pub fn eval_posterior(f: &FeatureVector, p: &PriorAssignment) -> PosteriorAssignment {
    use PosteriorRule::*;
    use PriorRule as P;
    let mut q = PosteriorAssignment::default();
    let Some(category) = infer_category(f) else { return q };
    match category {
        Support => q.set(FallsToGround, p.get(P::ComBeyondEdge).or(p.get(P::RestingOnSupport).not())),
        Occlusion => {
            q.set(VisibleAboveMiddle, p.get(P::TallerThanMiddle).and(p.get(P::PathPassesBehind)));
            q.set(ReappearsBeyondOccluder, p.get(P::PathPassesBehind));
        }
        Containment => {
            let taller = p.get(P::TallerThanInterior);
            let wider = p.get(P::WiderThanOpening);
            q.set(FullyContained, taller.not().and(wider.not()));
            q.set(ProtrudesAboveRim, taller.or(wider));
        }
        Collision => {
            let (rev, disp) = collision_outcome(f);
            q.set(Obj1Reverses, rev);
            q.set(Obj2Displaced, disp);
        }
        Barrier => {
            let through = p
                .get(P::OpeningPresent)
                .and(p.get(P::FitsOpeningHeight))
                .and(p.get(P::FitsOpeningWidth));
            let passes = p.get(P::BarrierSoft).or(through);
            q.set(PassesBeyondBarrier, passes);
            q.set(StopsAtBarrier, passes.not());
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_features;
    use crate::scenario::{sample_spec, SubType};
    use proptest::prelude::*;

    fn any_verdict() -> impl Strategy<Value = Verdict> {
        prop_oneof![Just(Verdict::Yes), Just(Verdict::No), Just(Verdict::Irrelevant)]
    }

    #[test]
    fn counts() {
        assert_eq!(PriorRule::ALL.len(), 13);
        assert_eq!(PosteriorRule::ALL.len(), 9);
        let total: usize = EventCategory::ALL.iter().map(|c| PosteriorRule::for_category(*c).len()).sum();
        assert_eq!(total, 9);
    }

    #[test]
    fn kleene_tables() {
        use Verdict::*;
        assert_eq!(No.and(Irrelevant), No);
        assert_eq!(Yes.and(Irrelevant), Irrelevant);
        assert_eq!(Yes.or(Irrelevant), Yes);
        assert_eq!(No.or(Irrelevant), Irrelevant);
        assert_eq!(Irrelevant.not(), Irrelevant);
    }

    #[test]
    fn taller_object_in_containment() {
        let mut spec = sample_spec(EventCategory::Containment, SubType::C2, 1).unwrap();
        spec.object_height = 1.2;
        let mut c = spec.container.unwrap();
        c.height = 0.9;
        c.width = 1.5;
        spec.container = Some(c);
        spec.object_width = 0.5;
        let f = extract_features(&spec);
        let p = eval_prior(&f);
        assert_eq!(p.get(PriorRule::TallerThanInterior), Verdict::Yes);
        let q = eval_posterior(&f, &p);
        assert_eq!(q.get(PosteriorRule::ProtrudesAboveRim), Verdict::Yes);
        assert_eq!(q.get(PosteriorRule::FullyContained), Verdict::No);
    }

    #[test]
    fn equal_masses_are_not_heavier() {
        let spec = sample_spec(EventCategory::Collision, SubType::D2, 3).unwrap();
        let p = eval_prior(&extract_features(&spec));
        assert_eq!(p.get(PriorRule::Obj1Heavier), Verdict::No);
    }

    #[test]
    fn com_over_edge_falls() {
        let mut spec = sample_spec(EventCategory::Support, SubType::A1, 3).unwrap();
        spec.overhang = Some(0.8);
        let f = extract_features(&spec);
        let p = eval_prior(&f);
        assert_eq!(p.get(PriorRule::ComBeyondEdge), Verdict::Yes);
        assert_eq!(eval_posterior(&f, &p).get(PosteriorRule::FallsToGround), Verdict::Yes);
    }

    #[test]
    fn solid_barrier_blocks() {
        let spec = sample_spec(EventCategory::Barrier, SubType::E2, 3).unwrap();
        let f = extract_features(&spec);
        let p = eval_prior(&f);
        assert_eq!(p.get(PriorRule::FitsOpeningHeight), Verdict::Irrelevant);
        let q = eval_posterior(&f, &p);
        assert_eq!(q.get(PosteriorRule::PassesBeyondBarrier), Verdict::No);
        assert_eq!(q.get(PosteriorRule::StopsAtBarrier), Verdict::Yes);
    }

    #[test]
    fn rules_outside_category_are_irrelevant() {
        for st in SubType::ALL {
            let spec = sample_spec(st.category(), st, 9).unwrap();
            let f = extract_features(&spec);
            assert_eq!(infer_category(&f), Some(spec.category));
            let p = eval_prior(&f);
            let q = eval_posterior(&f, &p);
            for r in PriorRule::ALL.iter().filter(|r| r.category() != spec.category) {
                assert_eq!(p.get(*r), Verdict::Irrelevant);
            }
            for r in PosteriorRule::ALL {
                assert_eq!(q.get(r).is_relevant(), r.category() == spec.category, "{st} {r:?}");
            }
        }
    }

    #[test]
    fn all_irrelevant_vector_gives_all_irrelevant_rules() {
        let f = FeatureVector::irrelevant();
        assert_eq!(eval_prior(&f), PriorAssignment::default());
        assert_eq!(eval_posterior(&f, &eval_prior(&f)), PosteriorAssignment::default());
    }

    #[test]
    fn relevance_tie_goes_to_lowest_category() {
        let mut f = FeatureVector::irrelevant();
        f.0[slot::OCCLUDER_MIDDLE] = 0.5;
        f.0[slot::OVERHANG] = 0.5;
        assert_eq!(infer_category(&f), Some(Support));
    }

    proptest! {
        #[test]
        fn de_morgan(a in any_verdict(), b in any_verdict()) {
            prop_assert_eq!(a.and(b).not(), a.not().or(b.not()));
            prop_assert_eq!(a.and(b), b.and(a));
            prop_assert_eq!(a.not().not(), a);
        }

        #[test]
        fn taller_than_interior_flips_at_most_once(seed in 0u64..500, steps in 5usize..40) {
            let mut spec = sample_spec(EventCategory::Containment, SubType::C1, seed).unwrap();
            let mut last = Verdict::No;
            let mut flips = 0;
            for i in 0..=steps {
                spec.object_height = 0.4 + 1.2 * i as f64 / steps as f64;
                let v = eval_prior(&extract_features(&spec)).get(PriorRule::TallerThanInterior);
                if v != last {
                    flips += 1;
                    prop_assert_eq!(v, Verdict::Yes);
                }
                last = v;
            }
            prop_assert!(flips <= 1);
        }
    }
}
