//! Show which branch of the expert rules fires for a handful of beliefs.
//!
//!     cargo run --example expert_policies

use stroke_pomdp::belief::ExactBelief;
use stroke_pomdp::model::{Action, Model};
use stroke_pomdp::policy::{expert_policy, ExpertConfig};
use stroke_pomdp::ConfigFile;

fn main() {
    let model = Model::new(ConfigFile::defaults().model).unwrap();
    let beliefs = [
        ("prior", ExactBelief::prior(&model)),
        ("nearly healthy", ExactBelief::normalized(3, [0.95, 0.01, 0.01, 0.0, 0.03, 0.0, 0.0, 0.0]).unwrap()),
        ("likely aneurysm", ExactBelief::normalized(2, [0.2, 0.02, 0.03, 0.0, 0.7, 0.03, 0.02, 0.0]).unwrap()),
        ("occlusion vs AVM", ExactBelief::normalized(2, [0.1, 0.45, 0.4, 0.05, 0.0, 0.0, 0.0, 0.0]).unwrap()),
    ];
    for default in [Action::Hosp, Action::Dsa] {
        let cfg = ExpertConfig::new(default, model.params()).unwrap();
        println!("expert with default diagnostic {default}:");
        for (label, b) in &beliefs {
            let m = b.marginals();
            let (action, branch) = expert_policy(&cfg, &m);
            println!(
                "  {label:<17} ane {:.2} avm {:.2} occ {:.2} free {:.2} -> {action} ({branch})",
                m.p_ane, m.p_avm, m.p_occ, m.p_stroke_free
            );
        }
    }
}
