use serde::{Deserialize, Serialize};

use crate::belief::{particle_update, update_or_predict, Belief, ExactBelief, Marginals, ParticleBelief};
use crate::despot::PlanReport;
use crate::model::{Action, Model, Observation, PatientState};
use crate::policy::{BeliefBackend, Branch, Policy};
use crate::seed::{self, Purpose};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EndReason {
    Disc,
    Horizon,
    Failed,
}

impl EndReason {
    pub fn as_str(self) -> &'static str {
        match self {
            EndReason::Disc => "DISC",
            EndReason::Horizon => "HORIZON",
            EndReason::Failed => "FAILED",
        }
    }
}

/// One decision epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: u32,
    /// Marginals of the belief the action was chosen from.
    pub belief: Marginals,
    pub action: Action,
    pub observation: Observation,
    pub reward: f64,
    /// True state after the transition.
    pub state: PatientState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanReport>,
    /// The belief update hit an impossible observation and fell back to the
    /// predicted prior.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub filter_recovered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub schema_version: u32,
    pub policy: String,
    pub master_seed: u64,
    pub index: u64,
    pub gamma: f64,
    pub initial_state: PatientState,
    pub steps: Vec<TraceStep>,
    pub end: EndReason,
    /// Sum of gamma^t * reward over the steps.
    pub disc_return: f64,
    /// State at discharge for discharged episodes, otherwise the last state.
    pub final_state: PatientState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl EpisodeTrace {
    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }

    /// Actions joined with `" -> "`, e.g. `DSA -> COIL -> DISC`.
    pub fn timeline(&self) -> String {
        self.steps.iter().map(|s| s.action.as_str()).collect::<Vec<_>>().join(" -> ")
    }

    /// Epoch of the action after which every initially present condition is
    /// gone. `None` for patients who arrive stroke-free; the horizon when the
    /// conditions are never all cleared.
    pub fn time_to_treatment(&self, horizon: u32) -> Option<u32> {
        let initial = self.initial_state.conditions();
        if !initial.any() {
            return None;
        }
        let cleared = self.steps.iter().find(|s| initial.all_cleared_in(s.state.conditions()));
        Some(cleared.map_or(horizon, |s| s.t))
    }

    pub fn recovered(&self) -> bool {
        !self.final_state.any_stroke()
    }
}

/// Which replication an episode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeSeed {
    pub master_seed: u64,
    pub index: u64,
}

/// Initial state for replication `index`; identical for every policy.
pub fn initial_state_for(model: &Model, seed: EpisodeSeed) -> PatientState {
    model.sample_initial_state(&mut seed::stream(seed.master_seed, seed.index, Purpose::Initial))
}

/// Simulate one episode until discharge or the horizon.
///
/// `initial` overrides the seeded initial state, used for the sampled mild and
/// severe traces. A policy error ends the episode as failed.
pub fn run_episode(
    model: &Model,
    policy: &mut dyn Policy,
    seed: EpisodeSeed,
    initial: Option<PatientState>,
) -> EpisodeTrace {
    let initial_state = initial.unwrap_or_else(|| initial_state_for(model, seed));
    let mut env = seed::stream(seed.master_seed, seed.index, Purpose::Environment);
    let mut policy_rng = seed::stream(seed.master_seed, seed.index, Purpose::Policy);
    let mut filter_rng = seed::stream(seed.master_seed, seed.index, Purpose::Filter);
    let gamma = model.gamma();

    let prior = ExactBelief::prior(model);
    let mut belief = match policy.backend() {
        BeliefBackend::Exact => Belief::Exact(prior),
        BeliefBackend::Particle => {
            Belief::Particle(ParticleBelief::sample_from_exact(&prior, model.params().n_particles, &mut filter_rng))
        }
    };

    let mut state = initial_state;
    let mut steps = Vec::new();
    let mut disc_return = 0.0;
    let mut end = EndReason::Horizon;
    let mut final_state = state;
    let mut failure = None;

    while state.t < model.horizon() {
        let decision = match policy.decide(&belief, &mut policy_rng) {
            Ok(d) => d,
            Err(e) => {
                end = EndReason::Failed;
                failure = Some(e.to_string());
                final_state = state;
                break;
            }
        };
        let a = decision.action;
        let step = model.step(&state, a, &mut env);
        disc_return += gamma.powi(state.t as i32) * step.reward;
        let mut trace_step = TraceStep {
            t: state.t,
            belief: belief.marginals(),
            action: a,
            observation: step.observation,
            reward: step.reward,
            state: step.next,
            branch: decision.branch,
            plan: decision.plan,
            filter_recovered: false,
        };
        if step.terminal {
            steps.push(trace_step);
            if a == Action::Disc {
                end = EndReason::Disc;
                final_state = state;
            } else {
                final_state = step.next;
            }
            break;
        }
        let (next_belief, recovered) = update(model, belief, a, &step.observation, &mut filter_rng);
        trace_step.filter_recovered = recovered;
        steps.push(trace_step);
        belief = next_belief;
        state = step.next;
        final_state = state;
    }

    EpisodeTrace {
        schema_version: TRACE_SCHEMA_VERSION,
        policy: policy.name().to_string(),
        master_seed: seed.master_seed,
        index: seed.index,
        gamma,
        initial_state,
        steps,
        end,
        disc_return,
        final_state,
        failure,
    }
}

fn update(model: &Model, belief: Belief, a: Action, o: &Observation, rng: &mut impl rand::Rng) -> (Belief, bool) {
    match belief {
        Belief::Exact(b) => {
            let (next, recovered) = update_or_predict(model, &b, a, o).expect("observation sampled for this action");
            (Belief::Exact(next), recovered)
        }
        Belief::Particle(p) => {
            let up = particle_update(model, &p, a, o, rng).expect("observation sampled for this action");
            (Belief::Particle(up.belief), up.recovered)
        }
    }
}
