use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stroke_pomdp::belief::{exact_update, particle_update, update_or_predict, ExactBelief, ParticleBelief};
use stroke_pomdp::model::{Action, Conditions, Model, Observation, PatientState};
use stroke_pomdp::ConfigFile;

fn model() -> Model {
    Model::new(ConfigFile::defaults().model).unwrap()
}

fn random_belief(rng: &mut impl Rng) -> ExactBelief {
    let mut w = [0.0; 8];
    for x in &mut w {
        *x = rng.random::<f64>().powi(4);
    }
    ExactBelief::normalized(rng.random_range(0..20), w).unwrap()
}

fn random_observation(a: Action, rng: &mut impl Rng) -> Observation {
    let all: Vec<Observation> = Observation::alphabet_for(a).collect();
    all[rng.random_range(0..all.len())]
}

#[test]
fn updates_stay_normalised() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..10_000 {
        let b = random_belief(&mut rng);
        let a = Action::ALL[rng.random_range(0..Action::COUNT)];
        let o = random_observation(a, &mut rng);
        let (next, _) = update_or_predict(&m, &b, a, &o).unwrap();
        let total: f64 = next.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(next.weights.iter().all(|w| *w >= 0.0));
        assert_eq!(next.t, b.t + 1);
    }
}

#[test]
fn particle_error_shrinks_with_more_particles() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sizes = [10, 100, 1000, 10_000];
    let mut tv_sum = [0.0; 4];
    for _ in 0..1000 {
        let prior = ExactBelief::prior(&m);
        let mut truth = m.sample_initial_state(&mut rng);
        let mut exact = prior;
        let mut filters: Vec<ParticleBelief> =
            sizes.iter().map(|&n| ParticleBelief::sample_from_exact(&prior, n, &mut rng)).collect();
        for _ in 0..10 {
            let a = Action::ALL[rng.random_range(0..Action::COUNT)];
            truth = m.transition(&truth, a, &mut rng);
            let o = m.sample_observation(&truth, a, &mut rng);
            exact = exact_update(&m, &exact, a, &o).unwrap();
            for (k, f) in filters.iter_mut().enumerate() {
                *f = particle_update(&m, f, a, &o, &mut rng).unwrap().belief;
                let w = f.to_exact().weights;
                tv_sum[k] += 0.5 * w.iter().zip(&exact.weights).map(|(x, y)| (x - y).abs()).sum::<f64>();
            }
        }
    }
    assert!(tv_sum.windows(2).all(|w| w[1] < w[0]), "{tv_sum:?}");
}

#[test]
fn recovery_when_every_particle_is_ruled_out() {
    let mut p = ConfigFile::defaults().model;
    p.dsa_accuracy = 1.0;
    let m = Model::new(p).unwrap();
    let healthy = ParticleBelief::uniform(vec![PatientState::new(false, false, false, 0); 100]).unwrap();
    let report = Observation::DsaReport { pred_ane: true, pred_avm: true, pred_occ: true };
    let out = particle_update(&m, &healthy, Action::Dsa, &report, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(out.recovered);
    assert_eq!(out.belief.len(), 100);
    assert_eq!(out.belief.t, 1);
}

proptest! {
    #[test]
    fn particle_order_does_not_change_marginals(seed in any::<u64>(), n in 1usize..200) {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = ParticleBelief::sample_from_exact(&random_belief(&mut rng), n, &mut rng);
        let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let weighted = ParticleBelief::new(b.particles.clone(), weights).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let shuffled = ParticleBelief::new(
            order.iter().map(|&i| weighted.particles[i]).collect(),
            order.iter().map(|&i| weighted.weights[i]).collect(),
        )
        .unwrap();
        prop_assert_eq!(weighted.marginals(), shuffled.marginals());
        let _ = m;
    }

    #[test]
    fn exact_update_is_bayes_rule(seed in any::<u64>()) {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_belief(&mut rng);
        let a = Action::ALL[rng.random_range(0..Action::COUNT)];
        let o = random_observation(a, &mut rng);
        if let Ok(post) = exact_update(&m, &b, a, &o) {
            let mut joint = [0.0; 8];
            for to in Conditions::all() {
                let next = PatientState::from_conditions(to, b.t + 1);
                let pred: f64 = Conditions::all()
                    .map(|from| b.weight(from) * m.transition_probability(&PatientState::from_conditions(from, b.t), a, &next))
                    .sum();
                joint[to.index()] = pred * m.observation_likelihood(&o, &next, a).unwrap();
            }
            let z: f64 = joint.iter().sum();
            for k in 0..8 {
                prop_assert!((post.weights[k] - joint[k] / z).abs() < 1e-12);
            }
        }
    }
}
