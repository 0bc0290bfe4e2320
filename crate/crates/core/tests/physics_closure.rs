use approx::assert_relative_eq;
use voe_core::features::{eval_posterior, eval_prior, extract_features, PosteriorRule};
use voe_core::physics::{extract_outcome, simulate_expected, simulate_surprising, Scene};
use voe_core::physics::scene::{COLLISION_CONTACT_FRAME, DT};
use voe_core::scenario::{build_trial, sample_spec, EventCategory, SubType};

fn specs(category: EventCategory, n: u64) -> impl Iterator<Item = voe_core::scenario::ScenarioSpec> {
    let subtypes = category.subtypes();
    (0..n).map(move |seed| sample_spec(category, subtypes[seed as usize % subtypes.len()], seed).unwrap())
}

#[test]
fn expected_outcomes_equal_rule_engine() {
    for c in EventCategory::ALL {
        for spec in specs(c, 300) {
            let f = extract_features(&spec);
            let want = eval_posterior(&f, &eval_prior(&f));
            let got = extract_outcome(&simulate_expected(&spec).unwrap(), &spec);
            assert_eq!(got, want, "{spec:?}");
        }
    }
}

#[test]
fn every_posterior_rule_is_violable_with_its_coupled_set() {
    for c in EventCategory::ALL {
        for spec in specs(c, 40) {
            let f = extract_features(&spec);
            let expected = eval_posterior(&f, &eval_prior(&f));
            for &rule in PosteriorRule::for_category(c) {
                let got = extract_outcome(&simulate_surprising(&spec, rule).unwrap(), &spec);
                let mut differing = expected.differing(&got);
                differing.sort_by_key(|r| r.index());
                let mut coupled = rule.coupled().to_vec();
                coupled.sort_by_key(|r| r.index());
                assert_eq!(differing, coupled, "{spec:?} {rule:?}");
            }
        }
    }
}

fn x_velocity(traj: &voe_core::physics::Trajectory, body: usize, k: usize) -> f64 {
    (traj.frames[k + 1].poses[body].position.x - traj.frames[k].poses[body].position.x) / DT
}

#[test]
fn collisions_conserve_momentum_and_energy() {
    for st in [SubType::D1, SubType::D2, SubType::D3] {
        for seed in 0..30 {
            let spec = sample_spec(EventCategory::Collision, st, seed).unwrap();
            let scene = Scene::build(&spec);
            let (a, b) = (scene.object, scene.second.unwrap());
            let traj = simulate_expected(&spec).unwrap();
            let m1 = spec.object_height.powi(3);
            let m2 = spec.collision.unwrap().second_height.powi(3);
            let (u1, u2) = (x_velocity(&traj, a, 0), x_velocity(&traj, b, 0));
            let k = COLLISION_CONTACT_FRAME + 2;
            let (v1, v2) = (x_velocity(&traj, a, k), x_velocity(&traj, b, k));
            assert_relative_eq!(m1 * u1 + m2 * u2, m1 * v1 + m2 * v2, epsilon = 1e-9, max_relative = 1e-9);
            assert_relative_eq!(m1 * u1 * u1 + m2 * u2 * u2, m1 * v1 * v1 + m2 * v2 * v2, epsilon = 1e-9, max_relative = 1e-9);
            assert!(u1 > 0.0 && u2 < 0.0);
        }
    }
}

#[test]
fn equal_collisions_exchange_velocities() {
    for seed in 0..10 {
        let spec = sample_spec(EventCategory::Collision, SubType::D2, seed).unwrap();
        let scene = Scene::build(&spec);
        let traj = simulate_expected(&spec).unwrap();
        let k = COLLISION_CONTACT_FRAME + 2;
        assert_relative_eq!(x_velocity(&traj, scene.object, k), x_velocity(&traj, scene.second.unwrap(), 0), epsilon = 1e-9);
    }
}

#[test]
fn trial_pairs_share_the_pre_interaction_prefix() {
    for c in EventCategory::ALL {
        for spec in specs(c, 12) {
            let onset = voe_core::physics::interaction_onset(&spec);
            let t = build_trial("T", spec).unwrap();
            assert_eq!(t.expected.frames[..onset], t.surprising.frames[..onset]);
            assert_ne!(t.expected, t.surprising);
        }
    }
}
