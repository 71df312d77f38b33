//! Follow one simulated patient with the exact filter and with particle
//! filters of several sizes, printing the marginals side by side.
//!
//!     cargo run --release --example belief_tracking

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stroke_pomdp::belief::{exact_update, particle_update, ExactBelief, Marginals, ParticleBelief};
use stroke_pomdp::model::{Action, Model, PatientState};
use stroke_pomdp::ConfigFile;

fn show(label: &str, m: &Marginals) {
    println!(
        "    {label:<8} ane {:.3}  avm {:.3}  occ {:.3}  stroke-free {:.3}",
        m.p_ane, m.p_avm, m.p_occ, m.p_stroke_free
    );
}

fn main() {
    let model = Model::new(ConfigFile::defaults().model).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let prior = ExactBelief::prior(&model);
    let mut exact = prior;
    let mut filters: Vec<(usize, ParticleBelief)> =
        [100, 10_000].iter().map(|&n| (n, ParticleBelief::sample_from_exact(&prior, n, &mut rng))).collect();

    let mut truth = PatientState::new(false, true, false, 0);
    for a in [Action::Wait, Action::Hosp, Action::Hosp, Action::Dsa, Action::Embo, Action::Hosp] {
        truth = model.transition(&truth, a, &mut rng);
        let o = model.sample_observation(&truth, a, &mut rng);
        println!("t={} {a} observed {o} (truth {})", truth.t, truth.conditions());
        exact = exact_update(&model, &exact, a, &o).unwrap();
        show("exact", &exact.marginals());
        for (n, f) in &mut filters {
            let step = particle_update(&model, f, a, &o, &mut rng).unwrap();
            *f = step.belief;
            show(&format!("n={n}"), &f.marginals());
        }
    }
}
