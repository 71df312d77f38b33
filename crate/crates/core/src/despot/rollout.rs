use rand::Rng;

use super::scenario::Scenario;
use crate::belief::{update_or_predict, ExactBelief};
use crate::error::ConfigError;
use crate::model::{Action, Model, PatientState};
use crate::policy::{expert_policy, random_policy, ExpertConfig};

/// Default policy used to build lower bounds inside the search tree.
///
/// Expert rollouts track their own exact belief along the simulated
/// observations, starting from the belief at the node they leave from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RolloutPolicy {
    Expert(ExpertConfig),
    Random,
    Fixed(Action),
}

impl RolloutPolicy {
    /// Resolve `expert-hosp`, `expert-dsa`, `random`, or an action name for a
    /// constant policy.
    pub fn from_name(name: &str, model: &Model) -> Result<RolloutPolicy, ConfigError> {
        let params = model.params();
        match name {
            "expert-hosp" => Ok(RolloutPolicy::Expert(ExpertConfig::new(Action::Hosp, params)?)),
            "expert-dsa" => Ok(RolloutPolicy::Expert(ExpertConfig::new(Action::Dsa, params)?)),
            "random" => Ok(RolloutPolicy::Random),
            other => other
                .parse::<Action>()
                .map(RolloutPolicy::Fixed)
                .map_err(|_| ConfigError::invalid("rollout_policy", format!("unknown rollout policy `{other}`"))),
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, belief: &ExactBelief, rng: &mut R) -> Action {
        match self {
            RolloutPolicy::Expert(cfg) => expert_policy(cfg, &belief.marginals()).0,
            RolloutPolicy::Random => random_policy(rng),
            RolloutPolicy::Fixed(a) => *a,
        }
    }

    fn tracks_belief(&self) -> bool {
        matches!(self, RolloutPolicy::Expert(_))
    }
}

/// Discounted return of following `policy` for up to `steps` epochs along
/// `scenario`'s noise, starting from `s` at tree depth `depth`.
///
/// Step `j` draws from the scenario stream for depth `depth + j`, the same
/// stream the tree uses at that depth, so a rollout and a tree path taking the
/// same actions see the same outcomes.
#[allow(clippy::too_many_arguments)]
pub fn rollout_value(
    model: &Model,
    s: &PatientState,
    belief: &ExactBelief,
    scenario: &Scenario,
    depth: usize,
    steps: usize,
    policy: &RolloutPolicy,
) -> f64 {
    if s.t >= model.horizon() {
        return 0.0;
    }
    let gamma = model.gamma();
    let mut state = *s;
    let mut b = *belief;
    let mut value = 0.0;
    let mut discount = 1.0;
    for j in 0..steps {
        let mut rng = scenario.stream(depth + j);
        let a = policy.act(&b, &mut rng);
        let step = model.step(&state, a, &mut rng);
        value += discount * step.reward;
        if step.terminal {
            break;
        }
        if policy.tracks_belief() {
            b = update_or_predict(model, &b, a, &step.observation).expect("sampled observation matches action").0;
        }
        state = step.next;
        discount *= gamma;
    }
    value
}

/// Upper bound on the return obtainable from `s` in at most `remaining`
/// epochs: the best immediate reward in `s` plus `r_max` for every later
/// epoch. `None` means an unbounded horizon, giving the geometric tail
/// `gamma * r_max / (1 - gamma)`.
pub fn upper_bound(model: &Model, s: &PatientState, remaining: Option<usize>) -> f64 {
    let left_in_episode = model.horizon().saturating_sub(s.t) as usize;
    if left_in_episode == 0 || remaining == Some(0) {
        return 0.0;
    }
    let best_now = Action::ALL.iter().map(|&a| model.reward(s, a)).fold(f64::NEG_INFINITY, f64::max);
    let gamma = model.gamma();
    let tail_steps = remaining.map_or(left_in_episode, |r| r.min(left_in_episode)) - 1;
    let tail = if remaining.is_none() {
        gamma * model.r_max() / (1.0 - gamma)
    } else {
        model.r_max() * gamma * (1.0 - gamma.powi(tail_steps as i32)) / (1.0 - gamma)
    };
    best_now + tail
}

/// Mean lower and upper bound over a node's scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

/// Initial bounds for a node holding `particles` (scenario, current state)
/// at tree depth `depth` with `remaining` epochs of search left.
pub fn initial_bounds(
    model: &Model,
    particles: &[(&Scenario, PatientState)],
    belief: &ExactBelief,
    depth: usize,
    remaining: usize,
    policy: &RolloutPolicy,
) -> Bounds {
    if particles.is_empty() || remaining == 0 {
        return Bounds { lower: 0.0, upper: 0.0 };
    }
    let n = particles.len() as f64;
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (scenario, s) in particles {
        lower += rollout_value(model, s, belief, scenario, depth, remaining, policy);
        upper += upper_bound(model, s, Some(remaining));
    }
    let (lower, upper) = (lower / n, upper / n);
    Bounds { lower, upper: upper.max(lower) }
}
