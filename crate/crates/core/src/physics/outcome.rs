//! Observed outcomes read off trajectory frames with geometric predicates.

use super::geometry::Aabb;
use super::scene::{self, Scene, GEOM_TOL};
use super::simulate::{body_aabb, Trajectory};
use crate::features::{PosteriorAssignment, PosteriorRule, Verdict};
use crate::scenario::{EventCategory, ScenarioSpec};

pub fn extract_outcome(traj: &Trajectory, spec: &ScenarioSpec) -> PosteriorAssignment {
    use PosteriorRule::*;
    let scene = Scene::build(spec);
    let bounds = |k: usize, i: usize| -> Aabb { body_aabb(&scene.bodies[i], &traj.frames[k].poses[i]) };
    let last = traj.frames.len() - 1;
    let o = scene.object;
    let mut out = PosteriorAssignment::default();
    let mut put = |r: PosteriorRule, b: bool| out.set(r, Verdict::from_bool(b));
    match spec.category {
        EventCategory::Support => {
            put(FallsToGround, bounds(last, o).min.z < scene::SUPPORT_HEIGHT - GEOM_TOL);
        }
        EventCategory::Occlusion => {
            let mid_top = spec.occluder_middle.unwrap_or(0.0) * scene::OCCLUDER_HEIGHT;
            let m = 0.5 * scene::OCCLUDER_MIDDLE_WIDTH;
            let seen = (0..=last).any(|k| {
                let b = bounds(k, o);
                b.max.x > -m && b.min.x < m && b.max.z > mid_top + GEOM_TOL
            });
            put(VisibleAboveMiddle, seen);
            let b = bounds(last, o);
            put(
                ReappearsBeyondOccluder,
                b.max.x > scene::occluder_half_width() + GEOM_TOL && traj.frames[last].visible[o],
            );
        }
        EventCategory::Containment => {
            let rim = spec.container.map_or(0.0, |c| c.height);
            let inside = bounds(last, o).max.z <= rim + GEOM_TOL;
            put(FullyContained, inside);
            put(ProtrudesAboveRim, !inside);
        }
        EventCategory::Collision => {
            let s = scene.second.expect("collision scene has two objects");
            let contact = (0..=last)
                .find(|&k| bounds(k, o).max.x >= bounds(k, s).min.x - GEOM_TOL)
                .unwrap_or(scene::COLLISION_CONTACT_FRAME);
            let x = |k: usize, i: usize| traj.frames[k].poses[i].position.x;
            let d1 = x(last, o) - x(contact, o);
            let d2 = x(last, s) - x(contact, s);
            put(Obj1Reverses, d1 < -GEOM_TOL);
            put(Obj2Displaced, d2 > scene::DISPLACED_THRESHOLD + GEOM_TOL);
        }
        EventCategory::Barrier => {
            let b = bounds(last, o);
            put(PassesBeyondBarrier, b.min.x > scene::BARRIER_X + scene::BARRIER_THICKNESS + GEOM_TOL);
            put(StopsAtBarrier, b.max.x <= scene::BARRIER_X + GEOM_TOL);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{eval_posterior, eval_prior, extract_features};
    use crate::physics::{simulate_expected, simulate_surprising};
    use crate::scenario::{sample_spec, SubType};
    use proptest::prelude::*;

    #[test]
    fn contained_c1() {
        let spec = sample_spec(EventCategory::Containment, SubType::C1, 8).unwrap();
        let q = extract_outcome(&simulate_expected(&spec).unwrap(), &spec);
        assert_eq!(q.get(PosteriorRule::FullyContained), Verdict::Yes);
        assert_eq!(q.get(PosteriorRule::ProtrudesAboveRim), Verdict::No);
        for r in PosteriorRule::ALL.iter().filter(|r| r.category() != EventCategory::Containment) {
            assert_eq!(q.get(*r), Verdict::Irrelevant);
        }
    }

    #[test]
    fn surprising_solid_barrier_is_passed() {
        let spec = sample_spec(EventCategory::Barrier, SubType::E2, 8).unwrap();
        let t = simulate_surprising(&spec, PosteriorRule::PassesBeyondBarrier).unwrap();
        let q = extract_outcome(&t, &spec);
        assert_eq!(q.get(PosteriorRule::PassesBeyondBarrier), Verdict::Yes);
        assert_eq!(q.get(PosteriorRule::StopsAtBarrier), Verdict::No);
    }

    #[test]
    fn balanced_support_does_not_fall() {
        let spec = sample_spec(EventCategory::Support, SubType::A2, 8).unwrap();
        let q = extract_outcome(&simulate_expected(&spec).unwrap(), &spec);
        assert_eq!(q.get(PosteriorRule::FallsToGround), Verdict::No);
    }

    #[test]
    fn balanced_support_falls_when_surprising() {
        let spec = sample_spec(EventCategory::Support, SubType::A2, 8).unwrap();
        let t = simulate_surprising(&spec, PosteriorRule::FallsToGround).unwrap();
        assert_eq!(extract_outcome(&t, &spec).get(PosteriorRule::FallsToGround), Verdict::Yes);
    }

    #[test]
    fn taller_object_fully_hidden_in_shorter_container() {
        let spec = sample_spec(EventCategory::Containment, SubType::C2, 8).unwrap();
        let t = simulate_surprising(&spec, PosteriorRule::ProtrudesAboveRim).unwrap();
        assert_eq!(extract_outcome(&t, &spec).get(PosteriorRule::FullyContained), Verdict::Yes);
        let obj = Scene::build(&spec).object;
        assert!(!t.last().visible[obj]);
    }

    fn check_closure_and_soundness(st: SubType, seed: u64) -> Result<(), TestCaseError> {
        let spec = sample_spec(st.category(), st, seed).unwrap();
        let f = extract_features(&spec);
        let expected = eval_posterior(&f, &eval_prior(&f));
        let observed = extract_outcome(&simulate_expected(&spec).unwrap(), &spec);
        prop_assert_eq!(observed, expected, "closure failed for {} seed {}", st, seed);
        for &v in PosteriorRule::for_category(spec.category) {
            let t = simulate_surprising(&spec, v).unwrap();
            let flipped = extract_outcome(&t, &spec);
            let mut diff = flipped.differing(&expected);
            diff.sort();
            prop_assert_eq!(&diff[..], v.coupled(), "{} seed {} violation {:?}", st, seed, v);
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn oracle_closure_and_violation_soundness(idx in 0usize..12, seed in any::<u64>()) {
            check_closure_and_soundness(SubType::ALL[idx], seed)?;
        }
    }
}
