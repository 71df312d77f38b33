//! Plan one decision from the prior and from a suspicious belief, printing
//! the root bounds per action.
//!
//!     cargo run --release --example despot_planning [-- <max_trials>]

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stroke_pomdp::belief::{ExactBelief, ParticleBelief};
use stroke_pomdp::despot::Planner;
use stroke_pomdp::model::Model;
use stroke_pomdp::ConfigFile;

fn main() {
    let cfg = ConfigFile::defaults();
    let model = Arc::new(Model::new(cfg.model).unwrap());
    let mut solver = cfg.solver;
    if let Some(n) = std::env::args().nth(1) {
        solver.max_trials = Some(n.parse().expect("max_trials must be a number"));
    }
    let planner = Planner::new(model.clone(), solver).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let suspicious = ExactBelief::normalized(0, [0.2, 0.05, 0.05, 0.0, 0.6, 0.05, 0.0, 0.05]).unwrap();
    for (label, b) in [("prior", ExactBelief::prior(&model)), ("suspected aneurysm", suspicious)] {
        let particles = ParticleBelief::sample_from_exact(&b, model.params().n_particles, &mut rng);
        let plan = planner.plan(&particles, &mut rng).unwrap();
        println!("{label}: {} (root bounds [{:.1}, {:.1}])", plan.action, plan.root_lower, plan.root_upper);
        for ab in &plan.actions {
            println!("  {:5} [{:>10.1}, {:>10.1}]", ab.action.as_str(), ab.lower, ab.upper);
        }
        let d = &plan.diagnostics;
        println!(
            "  trials {} expanded {} nodes {} depth {} in {:.0} ms",
            d.trials, d.nodes_expanded, d.tree_size, d.depth_reached, d.elapsed_ms
        );
    }
}
