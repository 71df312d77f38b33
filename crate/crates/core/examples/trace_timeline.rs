//! Run the mild (aneurysm) and severe (AVM + occlusion) cases under each
//! expert and print the action timelines.
//!
//!     cargo run --example trace_timeline

use std::sync::Arc;

use stroke_pomdp::harness::{make_policy, mild_case, run_episode, severe_case, EpisodeSeed};
use stroke_pomdp::model::Model;
use stroke_pomdp::policy::PolicyKind;
use stroke_pomdp::ConfigFile;

fn main() {
    let cfg = ConfigFile::defaults();
    let model = Arc::new(Model::new(cfg.model).unwrap());
    for kind in [PolicyKind::ExpertHosp, PolicyKind::ExpertDsa] {
        for (label, start) in [("mild", mild_case()), ("severe", severe_case())] {
            let mut policy = make_policy(kind, &model, &cfg.solver).unwrap();
            let trace = run_episode(&model, policy.as_mut(), EpisodeSeed { master_seed: 0, index: 1 }, Some(start));
            println!("{kind:<11} {label:<6} {}  (return {:.1})", trace.timeline(), trace.disc_return);
        }
    }
}
