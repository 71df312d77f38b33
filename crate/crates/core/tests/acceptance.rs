//! Acceptance suite. Prints one PASS/FAIL line per criterion. Exits non-zero
//! on any failure when `ACCEPTANCE_STRICT=1`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stroke_pomdp::belief::{exact_update, particle_update, ExactBelief, ParticleBelief};
use stroke_pomdp::despot::{Planner, SolverConfig};
use stroke_pomdp::harness::{run_benchmark, write_artifacts, BenchConfig, BenchmarkResult, PolicyMetrics};
use stroke_pomdp::model::{Action, Conditions, Model, ModelParams, PatientState};
use stroke_pomdp::policy::PolicyKind;
use stroke_pomdp::ConfigFile;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn main() {
    let started = Instant::now();
    let mut outcomes = vec![particle_filter(), model_tables()];
    let bench = shipped_bench(1000, 0);
    outcomes.push(policy_ordering(&bench));
    outcomes.push(solver_floor(&bench));
    outcomes.push(depth_two_oracle());
    outcomes.push(trace_patterns(&bench));
    outcomes.push(reproducibility());
    outcomes.sort_by_key(|o| o.id);

    println!();
    for o in &outcomes {
        println!("criterion {} [{}] {}: {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria pass, finished in {:.0} s", outcomes.len(), started.elapsed().as_secs_f64());
    // failures are reported above; set ACCEPTANCE_STRICT=1 to also fail the run
    if passed < outcomes.len() && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}

fn shipped_model() -> Model {
    Model::new(ConfigFile::defaults().model).unwrap()
}

fn shipped_bench(episodes: usize, seed: u64) -> BenchmarkResult {
    let cfg = ConfigFile::defaults();
    let model = Arc::new(Model::new(cfg.model).unwrap());
    let bench = BenchConfig { policies: PolicyKind::ALL.to_vec(), episodes, master_seed: seed, workers: 1 };
    run_benchmark(model, &cfg.solver, &bench).unwrap()
}

fn metrics<'a>(bench: &'a BenchmarkResult, kind: PolicyKind) -> &'a PolicyMetrics {
    bench.runs.iter().find(|r| r.policy == kind).unwrap().metrics.as_ref().unwrap()
}

// ---------------------------------------------------------------- 1

fn tv(a: &[f64; 8], b: &[f64; 8]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn particle_filter() -> Outcome {
    let model = shipped_model();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let prior = ExactBelief::prior(&model);
    let mut worst_tv: f64 = 0.0;
    let (mut tv_misses, mut traces_missed) = (0usize, 0usize);
    let (mut covered, mut steps) = (0usize, 0usize);
    for _ in 0..1000 {
        let mut truth = model.sample_initial_state(&mut rng);
        let mut exact = prior;
        let mut big = ParticleBelief::sample_from_exact(&prior, 10_000, &mut rng);
        let mut small = ParticleBelief::sample_from_exact(&prior, 100, &mut rng);
        let mut missed_here = false;
        for _ in 0..10 {
            let a = Action::ALL[rng.random_range(0..Action::COUNT)];
            truth = model.transition(&truth, a, &mut rng);
            let o = model.sample_observation(&truth, a, &mut rng);
            exact = exact_update(&model, &exact, a, &o).unwrap();
            big = particle_update(&model, &big, a, &o, &mut rng).unwrap().belief;
            small = particle_update(&model, &small, a, &o, &mut rng).unwrap().belief;
            let d = tv(&big.to_exact().weights, &exact.weights);
            worst_tv = worst_tv.max(d);
            tv_misses += (d >= 0.05) as usize;
            missed_here |= d >= 0.05;
            let (e, s) = (exact.marginals(), small.marginals());
            let within = [(e.p_ane, s.p_ane), (e.p_avm, s.p_avm), (e.p_occ, s.p_occ), (e.p_stroke_free, s.p_stroke_free)]
                .iter()
                .all(|(x, y)| (x - y).abs() <= 0.1);
            covered += within as usize;
            steps += 1;
        }
        traces_missed += missed_here as usize;
    }
    let coverage = covered as f64 / steps as f64;
    Outcome {
        id: 1,
        name: "particle filter vs exact filter",
        pass: worst_tv < 0.05 && coverage >= 0.95,
        detail: format!("n=10000 TV >= 0.05 on {tv_misses} of {steps} steps in {traces_missed} traces, max {worst_tv:.4}; n=100 all marginals within 0.1 on {:.2}% of {steps} steps (>= 95%)", coverage * 100.0),
    }
}

// ---------------------------------------------------------------- 2

/// Reward for one (conditions, action) pair, composed longhand from the
/// reward table constants.
fn oracle_reward(ane: bool, avm: bool, occ: bool, a: Action) -> f64 {
    let sick = ane || avm || occ;
    match a {
        Action::Coil => -200.0 + if ane { 5000.0 } else { -5000.0 },
        Action::Embo => -200.0 + if avm { 5000.0 } else { -5000.0 },
        Action::Revc => -200.0 + if occ { 5000.0 } else { -5000.0 },
        Action::Dsa => -150.0 + if sick { 250.0 } else { -750.0 },
        Action::Hosp => -100.0 + if sick { 150.0 } else { -400.0 },
        Action::Wait => {
            if sick {
                -1000.0
            } else {
                0.0
            }
        }
        Action::Disc => {
            if sick {
                -50_000.0
            } else {
                5000.0
            }
        }
    }
}

/// Probability of one successor flag vector, written flag by flag from the
/// transition table.
fn oracle_transition(from: [bool; 3], a: Action, to: [bool; 3]) -> f64 {
    let onset = [0.0005, 0.0002, 0.0002];
    let treats = [Action::Coil, Action::Embo, Action::Revc];
    let mut p = 1.0;
    for k in 0..3 {
        let p_true = if from[k] {
            if a == treats[k] {
                0.0
            } else {
                1.0
            }
        } else {
            onset[k]
        };
        p *= if to[k] { p_true } else { 1.0 - p_true };
    }
    p
}

fn flags(c: Conditions) -> [bool; 3] {
    let s = PatientState::from_conditions(c, 0);
    [s.is_ane, s.is_avm, s.is_occ]
}

fn model_tables() -> Outcome {
    let model = shipped_model();
    let mut reward_mismatch = Vec::new();
    let mut analytic_mismatch = 0;
    let mut empirical_miss = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    const SAMPLES: usize = 100_000;
    for from in Conditions::all() {
        let f = flags(from);
        let s = PatientState::from_conditions(from, 3);
        for a in Action::ALL {
            let r = model.reward(&s, a);
            if r != oracle_reward(f[0], f[1], f[2], a) {
                reward_mismatch.push(format!("{from}/{a}"));
            }
            let mut counts = [0usize; 8];
            for _ in 0..SAMPLES {
                counts[model.transition(&s, a, &mut rng).conditions().index()] += 1;
            }
            for to in Conditions::all() {
                let p = oracle_transition(f, a, flags(to));
                let got = model.transition_probability(&s, a, &PatientState::from_conditions(to, 4));
                if (got - p).abs() > 1e-15 {
                    analytic_mismatch += 1;
                }
                let ok = frequency_consistent(counts[to.index()], SAMPLES, p);
                let freq = counts[to.index()] as f64 / SAMPLES as f64;
                if !ok {
                    empirical_miss.push(format!("{from}-{a}->{to}: {freq} vs {p}"));
                }
            }
        }
    }
    Outcome {
        id: 2,
        name: "reward and transition tables",
        pass: reward_mismatch.is_empty() && analytic_mismatch == 0 && empirical_miss.is_empty(),
        detail: format!(
            "56 reward cases, {} mismatched {:?}; 448 transition cells, {} analytic mismatches, {} inconsistent with 1e5-sample frequencies {:?}",
            reward_mismatch.len(),
            reward_mismatch,
            analytic_mismatch,
            empirical_miss.len(),
            empirical_miss
        ),
    }
}

/// Observed count against probability `p`: within three standard errors, or,
/// when fewer than about nine events are expected on the rarer side, not in
/// either Poisson tail beyond the same one-sided level (0.00135).
fn frequency_consistent(count: usize, n: usize, p: f64) -> bool {
    let nf = n as f64;
    if p == 0.0 || p == 1.0 {
        return count as f64 == p * nf;
    }
    let var = nf * p * (1.0 - p);
    if var >= 9.0 {
        return (count as f64 - nf * p).abs() <= 3.0 * var.sqrt();
    }
    let (lambda, k) = if p <= 0.5 { (nf * p, count) } else { (nf * (1.0 - p), n - count) };
    let mut pmf = (-lambda).exp();
    let mut below = 0.0;
    for i in 0..k {
        below += pmf;
        pmf *= lambda / (i + 1) as f64;
    }
    let at_least = 1.0 - below;
    let at_most = below + pmf;
    at_least.min(at_most) >= 0.00135
}

// ---------------------------------------------------------------- 3

fn pooled(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// `x` before `y`, or tied within two pooled standard errors.
fn ordered_or_tied(x: (f64, f64), y: (f64, f64), strict: bool) -> bool {
    let in_order = if strict { x.0 < y.0 } else { x.0 <= y.0 };
    in_order || (x.0 - y.0).abs() <= 2.0 * pooled(x.1, y.1)
}

fn policy_ordering(bench: &BenchmarkResult) -> Outcome {
    let r = metrics(bench, PolicyKind::Random);
    let h = metrics(bench, PolicyKind::ExpertHosp);
    let d = metrics(bench, PolicyKind::ExpertDsa);
    let p = metrics(bench, PolicyKind::Despot);

    let a = r.disc_reward_mean < 0.0
        && [h, d, p]
            .iter()
            .all(|m| m.disc_reward_mean - r.disc_reward_mean > 4.0 * pooled(m.disc_reward_se, r.disc_reward_se));
    let b = r.recovery_rate < h.recovery_rate
        && h.recovery_rate <= p.recovery_rate
        && h.recovery_rate <= d.recovery_rate
        && r.recovery_rate < 0.6
        && [h, d, p].iter().all(|m| m.recovery_rate > 0.8);
    let ttt = |m: &PolicyMetrics| (m.time_to_treatment_mean.unwrap(), m.time_to_treatment_se.unwrap());
    let c = ordered_or_tied(ttt(d), ttt(p), true) && ordered_or_tied(ttt(p), ttt(h), false) && ordered_or_tied(ttt(h), ttt(r), true);

    Outcome {
        id: 3,
        name: "policy ordering, K = 1000",
        pass: a && b && c,
        detail: format!(
            "(a) {} reward R/H/D/P = {:.0}/{:.0}/{:.0}/{:.0}; (b) {} recovery {:.3}/{:.3}/{:.3}/{:.3}; (c) {} ttt DSA {:.2}±{:.2} < DESPOT {:.2}±{:.2} <= HOSP {:.2}±{:.2} < Random {:.2}±{:.2}",
            ok(a),
            r.disc_reward_mean,
            h.disc_reward_mean,
            d.disc_reward_mean,
            p.disc_reward_mean,
            ok(b),
            r.recovery_rate,
            h.recovery_rate,
            d.recovery_rate,
            p.recovery_rate,
            ok(c),
            ttt(d).0,
            ttt(d).1,
            ttt(p).0,
            ttt(p).1,
            ttt(h).0,
            ttt(h).1,
            ttt(r).0,
            ttt(r).1,
        ),
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

// ---------------------------------------------------------------- 4

fn solver_floor(bench: &BenchmarkResult) -> Outcome {
    let rollout = ConfigFile::defaults().solver.rollout_policy.parse::<PolicyKind>().unwrap();
    let returns = |kind| -> Vec<f64> {
        bench.runs.iter().find(|r| r.policy == kind).unwrap().summaries.iter().map(|s| s.disc_return).collect()
    };
    let (planner, base) = (returns(PolicyKind::Despot), returns(rollout));
    let diffs: Vec<f64> = planner.iter().zip(&base).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let se = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
    let floor = mean >= -2.0 * se;

    // anytime: same seed, 100 ms then 1000 ms; the root lower bound must not drop
    let model = Arc::new(shipped_model());
    let cfg = SolverConfig { max_trials: None, ..ConfigFile::defaults().solver };
    let planner_cfg = Planner::new(model.clone(), cfg).unwrap();
    let mut belief_rng = ChaCha8Rng::seed_from_u64(4);
    let mut drops = 0;
    let mut gains = 0;
    for k in 0..100u64 {
        let mut w = [0.0; 8];
        for x in &mut w {
            *x = belief_rng.random::<f64>().powi(3);
        }
        let t = belief_rng.random_range(0..12);
        let b = ExactBelief::normalized(t, w).unwrap();
        let particles = ParticleBelief::sample_from_exact(&b, 100, &mut belief_rng);
        let plan = |ms: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + k);
            planner_cfg.plan_until(&particles, Instant::now() + Duration::from_millis(ms), &mut rng).unwrap()
        };
        let (short, long) = (plan(100), plan(1000));
        if long.root_lower < short.root_lower {
            drops += 1;
        }
        if long.root_lower > short.root_lower {
            gains += 1;
        }
    }
    Outcome {
        id: 4,
        name: "solver floor and anytime bounds",
        pass: floor && drops == 0,
        detail: format!(
            "{} DESPOT - {rollout} paired mean {mean:.1} (se {se:.1}, need >= -2 se); {} root lower bound dropped on {drops}/100 beliefs from 100 ms to 1000 ms (rose on {gains})",
            ok(floor),
            ok(drops == 0)
        ),
    }
}

// ---------------------------------------------------------------- 5

fn depth_two_oracle() -> Outcome {
    let mut params: ModelParams = ConfigFile::defaults().model;
    params.p_ane = 0.0;
    params.p_avm = 0.0;
    params.p_occ = 0.0;
    params.dsa_accuracy = 1.0;
    let model = Arc::new(Model::new(params).unwrap());
    let cfg = SolverConfig { max_depth: 2, max_trials: None, time_budget_ms: 5000.0, ..ConfigFile::defaults().solver };
    let planner = Planner::new(model, cfg).unwrap();
    let gamma = 0.95;
    let penalty = |f: [bool; 3]| if f.iter().any(|x| *x) { -100_000.0 } else { 0.0 };
    let step = |f: [bool; 3], a: Action| -> ([bool; 3], f64) {
        let mut next = f;
        match a {
            Action::Coil => next[0] = false,
            Action::Embo => next[1] = false,
            Action::Revc => next[2] = false,
            _ => {}
        }
        let mut r = oracle_reward(f[0], f[1], f[2], a);
        if a == Action::Disc {
            r += penalty(f);
        }
        (next, r)
    };

    let mut failures = Vec::new();
    for c in Conditions::all() {
        let f = flags(c);
        let mut best = f64::NEG_INFINITY;
        let mut value_of_first = [f64::NEG_INFINITY; 7];
        for (i, a1) in Action::ALL.iter().enumerate() {
            for a2 in Action::ALL {
                let (mid, r1) = step(f, *a1);
                let v = if *a1 == Action::Disc { r1 } else { r1 + gamma * step(mid, a2).1 };
                value_of_first[i] = value_of_first[i].max(v);
                best = best.max(v);
            }
        }
        let optimal: Vec<Action> =
            Action::ALL.iter().zip(value_of_first).filter(|(_, v)| (v - best).abs() < 1e-9).map(|(a, _)| *a).collect();
        let state = PatientState::from_conditions(c, 0);
        let belief = ParticleBelief::uniform(vec![state; 100]).unwrap();
        let plan = planner.plan(&belief, &mut ChaCha8Rng::seed_from_u64(c.index() as u64)).unwrap();
        if !optimal.contains(&plan.action) || plan.root_lower > best + 1e-6 {
            failures.push(format!("{c}: planned {} (lower {:.1}), optimal {:?} at {best:.1}", plan.action, plan.root_lower, optimal));
        }
    }
    Outcome {
        id: 5,
        name: "depth-2 brute-force oracle",
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "all 8 point-mass states open the brute-force optimal 2-step plan".into()
        } else {
            failures.join("; ")
        },
    }
}

// ---------------------------------------------------------------- 6

fn trace_patterns(bench: &BenchmarkResult) -> Outcome {
    let run = |k| bench.runs.iter().find(|r| r.policy == k).unwrap();
    let before_disc = |actions: &[Action], wanted: Action| -> bool {
        let disc = actions.iter().position(|a| *a == Action::Disc).unwrap_or(actions.len());
        actions[..disc].contains(&wanted) && disc < actions.len()
    };
    let dsa_mild = run(PolicyKind::ExpertDsa).mild_trace.actions();
    let hosp_mild = run(PolicyKind::ExpertHosp).mild_trace.actions();
    let mut checks = vec![
        ("ExpertDSA mild starts with DSA", dsa_mild.first() == Some(&Action::Dsa)),
        ("ExpertDSA mild has COIL before DISC", before_disc(&dsa_mild, Action::Coil)),
        ("ExpertHOSP mild starts with HOSP", hosp_mild.first() == Some(&Action::Hosp)),
    ];
    for k in [PolicyKind::ExpertDsa, PolicyKind::ExpertHosp] {
        let severe = run(k).severe_trace.actions();
        checks.push((
            if k == PolicyKind::ExpertDsa { "ExpertDSA severe has EMBO and REVC before DISC" } else { "ExpertHOSP severe has EMBO and REVC before DISC" },
            before_disc(&severe, Action::Embo) && before_disc(&severe, Action::Revc),
        ));
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let timelines: Vec<String> = [PolicyKind::ExpertDsa, PolicyKind::ExpertHosp]
        .iter()
        .flat_map(|k| [format!("{k} mild: {}", run(*k).mild_trace.timeline()), format!("{k} severe: {}", run(*k).severe_trace.timeline())])
        .collect();
    Outcome {
        id: 6,
        name: "mild and severe trace patterns",
        pass: failed.is_empty(),
        detail: format!("{} of {} patterns hold {:?}; {}", checks.len() - failed.len(), checks.len(), failed, timelines.join(" | ")),
    }
}

// ---------------------------------------------------------------- 7

fn reproducibility() -> Outcome {
    let cfg = ConfigFile::defaults();
    let model = Arc::new(Model::new(cfg.model).unwrap());
    let run = |workers: usize| {
        let dir = tempfile::tempdir().unwrap();
        let bench = BenchConfig { policies: PolicyKind::ALL.to_vec(), episodes: 60, master_seed: 11, workers };
        let result = run_benchmark(model.clone(), &cfg.solver, &bench).unwrap();
        write_artifacts(&result, dir.path()).unwrap();
        let mut files = Vec::new();
        collect(dir.path(), dir.path(), &mut files);
        files.sort();
        files
    };
    let first = run(1);
    let again = run(1);
    let parallel = run(4);
    let same = first == again && first == parallel;
    Outcome {
        id: 7,
        name: "byte-identical bench output",
        pass: same && !first.is_empty(),
        detail: format!(
            "{} artifact files; rerun identical: {}; 1 vs 4 workers identical: {}",
            first.len(),
            first == again,
            first == parallel
        ),
    }
}

fn collect(root: &std::path::Path, dir: &std::path::Path, out: &mut Vec<(String, Vec<u8>)>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect(root, &path, out);
        } else {
            out.push((path.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&path).unwrap()));
        }
    }
}
