//! Paired benchmark of all four policies on a small number of episodes,
//! written to a temporary directory.
//!
//!     cargo run --release --example benchmark [-- <episodes>]

use std::sync::Arc;

use stroke_pomdp::harness::{run_benchmark, write_artifacts, BenchConfig};
use stroke_pomdp::model::Model;
use stroke_pomdp::policy::PolicyKind;
use stroke_pomdp::ConfigFile;

fn main() {
    let episodes = std::env::args().nth(1).map_or(100, |n| n.parse().expect("episodes must be a number"));
    let cfg = ConfigFile::defaults();
    let model = Arc::new(Model::new(cfg.model).unwrap());
    let bench = BenchConfig {
        policies: PolicyKind::ALL.to_vec(),
        episodes,
        master_seed: 0,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let result = run_benchmark(model, &cfg.solver, &bench).unwrap();
    let out = std::env::temp_dir().join("stroke-pomdp-benchmark");
    write_artifacts(&result, &out).unwrap();

    println!("{:<12} {:>9} {:>10} {:>8} {:>12}", "policy", "recovery", "reward", "se", "ttt");
    for run in &result.runs {
        let m = run.metrics.as_ref().unwrap();
        let ttt = match (m.time_to_treatment_mean, m.time_to_treatment_se) {
            (Some(mean), Some(se)) => format!("{mean:.2} ± {se:.2}"),
            _ => "-".into(),
        };
        println!("{:<12} {:>9.3} {:>10.1} {:>8.1} {:>12}", m.policy, m.recovery_rate, m.disc_reward_mean, m.disc_reward_se, ttt);
    }
    println!("artifacts in {}", out.display());
}
