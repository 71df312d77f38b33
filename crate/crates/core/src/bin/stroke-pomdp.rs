use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use stroke_pomdp::harness::{
    make_policy, parse_conditions, run_benchmark, run_episode, write_artifacts, write_json, BenchConfig, EpisodeSeed,
    EpisodeTrace,
};
use stroke_pomdp::model::{Conditions, Model, Observation, PatientState};
use stroke_pomdp::policy::PolicyKind;
use stroke_pomdp::ConfigFile;

#[derive(Parser)]
#[command(name = "stroke-pomdp", version, about = "Stroke diagnosis and treatment planning under uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run paired episodes for each policy and write report, CSV, histograms and traces.
    Bench {
        #[arg(long = "policy", num_args = 1.., default_values = ["random", "expert-hosp", "expert-dsa", "despot"])]
        policies: Vec<PolicyKind>,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        /// Shorthand for --episodes 10000.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Override the planner's trial cap.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run a single episode and save its trace.
    Episode {
        #[arg(long)]
        policy: PolicyKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        index: u64,
        /// Start from a fixed condition set, e.g. `ane` or `avm+occ`.
        #[arg(long)]
        initial: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Print the action timeline of a saved trace.
    Inspect {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Serve the session API over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long, default_value = "sessions")]
        data_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Idle sessions older than this are dropped.
        #[arg(long, default_value_t = 3600)]
        ttl_secs: u64,
    },
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, String> {
    match path {
        Some(p) => ConfigFile::load(p).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(ConfigFile::defaults()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Bench { policies, episodes, full, seed, config, out, workers, trials } => {
            let cfg = load_config(config.as_deref())?;
            let mut solver = cfg.solver;
            if trials.is_some() {
                solver.max_trials = trials;
            }
            let model = Arc::new(Model::new(cfg.model).map_err(|e| e.to_string())?);
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let bench = BenchConfig { policies, episodes: if full { 10_000 } else { episodes }, master_seed: seed, workers };
            let result = run_benchmark(model, &solver, &bench).map_err(|e| e.to_string())?;
            write_artifacts(&result, &out).map_err(|e| format!("{}: {e}", out.display()))?;
            println!("{:<12} {:>9} {:>12} {:>10} {:>8} {:>7}", "policy", "recovery", "reward", "std", "ttt", "failed");
            for run in &result.runs {
                match &run.metrics {
                    Ok(m) => println!(
                        "{:<12} {:>9.3} {:>12.2} {:>10.2} {:>8} {:>7}",
                        m.policy,
                        m.recovery_rate,
                        m.disc_reward_mean,
                        m.disc_reward_std,
                        m.time_to_treatment_mean.map_or("-".into(), |v| format!("{v:.2}")),
                        m.failed
                    ),
                    Err(e) => println!("{:<12} {e}", run.policy),
                }
            }
            let failed = result.failed_episodes();
            if failed > 0 {
                eprintln!("{failed} episode(s) failed");
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Episode { policy, seed, index, initial, config, trace } => {
            let cfg = load_config(config.as_deref())?;
            let model = Arc::new(Model::new(cfg.model).map_err(|e| e.to_string())?);
            let initial = initial
                .map(|text| {
                    parse_conditions(&text)
                        .map(|c| PatientState::from_conditions(c, 0))
                        .ok_or_else(|| format!("unknown condition set `{text}`"))
                })
                .transpose()?;
            let mut p = make_policy(policy, &model, &cfg.solver).map_err(|e| e.to_string())?;
            let t = run_episode(&model, p.as_mut(), EpisodeSeed { master_seed: seed, index }, initial);
            write_json(&trace, &t).map_err(|e| format!("{}: {e}", trace.display()))?;
            print_timeline(&t);
            Ok(if t.failure.is_some() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Inspect { trace } => {
            let text = std::fs::read_to_string(&trace).map_err(|e| format!("{}: {e}", trace.display()))?;
            let t: EpisodeTrace = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", trace.display()))?;
            print_timeline(&t);
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { addr, data_dir, config, ttl_secs } => {
            let cfg = load_config(config.as_deref())?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(stroke_pomdp::service::serve(&addr, cfg, data_dir, std::time::Duration::from_secs(ttl_secs)))
                .map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_timeline(t: &EpisodeTrace) {
    println!(
        "{} seed {} index {}: initial {} -> final {} ({:?}), return {:.2}",
        t.policy,
        t.master_seed,
        t.index,
        t.initial_state.conditions(),
        t.final_state.conditions(),
        t.end,
        t.disc_return
    );
    println!("{}", t.timeline());
    println!("{:>3}  {:<5} {:>6} {:>6} {:>6} {:>6}  {:<28} {:>10}  state", "t", "act", "ane", "avm", "occ", "free", "observation", "reward");
    for s in &t.steps {
        let obs = match s.observation {
            Observation::DsaReport { pred_ane, pred_avm, pred_occ } => {
                format!("dsa {}", Conditions::from_flags(pred_ane, pred_avm, pred_occ))
            }
            Observation::Clinical { ct, siriraj } => format!("{ct:?} siriraj {}", siriraj.value()),
        };
        println!(
            "{:>3}  {:<5} {:>6.3} {:>6.3} {:>6.3} {:>6.3}  {:<28} {:>10.1}  {}",
            s.t,
            s.action.as_str(),
            s.belief.p_ane,
            s.belief.p_avm,
            s.belief.p_occ,
            s.belief.p_stroke_free,
            obs,
            s.reward,
            s.state.conditions()
        );
    }
    if let Some(f) = &t.failure {
        println!("failed: {f}");
    }
}
