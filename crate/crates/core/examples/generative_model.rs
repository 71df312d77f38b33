//! Sample a few patients and step them through a fixed action sequence,
//! printing the hidden state, observation and reward at each epoch.
//!
//!     cargo run --example generative_model

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stroke_pomdp::model::{Action, Model};
use stroke_pomdp::ConfigFile;

fn main() {
    let model = Model::new(ConfigFile::defaults().model).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let plan = [Action::Wait, Action::Hosp, Action::Dsa, Action::Coil, Action::Disc];

    for patient in 0..4 {
        let mut s = model.sample_initial_state(&mut rng);
        println!("patient {patient}: arrives with {}", s.conditions());
        for &a in &plan {
            let step = model.step(&s, a, &mut rng);
            println!(
                "  t={:<2} {:5} -> {:<14} obs {:<36} reward {:>9.1}",
                s.t,
                a.as_str(),
                step.next.conditions().to_string(),
                step.observation.to_string(),
                step.reward
            );
            if step.terminal {
                break;
            }
            s = step.next;
        }
    }

    println!("\nT(. | ane, COIL) and T(. | stroke-free, WAIT):");
    for (from, a) in [(0b100, Action::Coil), (0, Action::Wait)] {
        let row = model.transition_matrix(a)[from];
        let cells: Vec<String> = row.iter().map(|p| format!("{p:.6}")).collect();
        println!("  {a}: [{}]", cells.join(", "));
    }
}
