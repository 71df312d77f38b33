//! Online planning with a determinized sparse belief tree.
//!
//! The planner samples `n_scenarios` start states from the current particle
//! belief, each paired with its own random stream, and grows a tree over those
//! scenarios only. Nodes carry a lower bound from default-policy rollouts and
//! an upper bound from the best-case reward, and trials descend where the gap
//! is widest relative to the root.

mod rollout;
mod scenario;
mod tree;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rollout::{initial_bounds, rollout_value, upper_bound, Bounds, RolloutPolicy};
pub use scenario::Scenario;

use crate::belief::{Belief, ParticleBelief};
use crate::error::ConfigError;
use crate::model::{Action, Model};
use crate::policy::{BeliefBackend, Decision, Policy, PolicyError};
use tree::Search;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub n_scenarios: usize,
    pub max_depth: usize,
    /// Wall-clock budget per decision.
    pub time_budget_ms: f64,
    pub regularization_lambda: f64,
    pub rollout_policy: String,
    /// Cap on trials per decision. With a cap and a generous time budget the
    /// planner is deterministic given its seed.
    pub max_trials: Option<usize>,
    /// Fraction of the root gap a child must exceed to be explored.
    pub xi: f64,
    /// Stop once the root gap falls to this value.
    pub target_gap: f64,
    /// Belief the planner is fed during episodes: the exact filter, or a
    /// particle filter with `n_particles` particles. Scenarios are drawn from
    /// it either way.
    pub belief: BeliefBackend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_scenarios: 100,
            max_depth: 10,
            time_budget_ms: 1000.0,
            regularization_lambda: 0.0,
            rollout_policy: "expert-hosp".into(),
            max_trials: Some(2000),
            xi: 0.95,
            target_gap: 0.0,
            belief: BeliefBackend::Exact,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |path: &str, msg: &str| Err(ConfigError::invalid(format!("solver.{path}"), msg.to_string()));
        if self.n_scenarios == 0 {
            return bad("n_scenarios", "must be at least 1");
        }
        if self.max_depth == 0 {
            return bad("max_depth", "must be at least 1");
        }
        if !self.time_budget_ms.is_finite() || self.time_budget_ms < 0.0 {
            return bad("time_budget_ms", "must be a non-negative number");
        }
        if !self.regularization_lambda.is_finite() || self.regularization_lambda < 0.0 {
            return bad("regularization_lambda", "must be a non-negative number");
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return bad("xi", "must lie in (0, 1]");
        }
        if !self.target_gap.is_finite() || self.target_gap < 0.0 {
            return bad("target_gap", "must be a non-negative number");
        }
        if self.max_trials == Some(0) {
            return bad("max_trials", "must be at least 1 when set");
        }
        let known = ["expert-hosp", "expert-dsa", "random"];
        if !known.contains(&self.rollout_policy.as_str()) && self.rollout_policy.parse::<Action>().is_err() {
            return bad("rollout_policy", "expected expert-hosp, expert-dsa, random or an action name");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("belief has no particles")]
    EmptyBelief,
    #[error("belief is already at the horizon")]
    Horizon,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    pub action: Action,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    pub trials: usize,
    pub nodes_expanded: usize,
    pub tree_size: usize,
    pub depth_reached: usize,
    /// The root was never expanded and the rollout policy chose the action.
    pub fallback: bool,
    pub timed_out: bool,
    /// Nodes with lower bound above upper bound; always zero unless broken.
    pub bound_violations: usize,
    /// Wall time. Left out of serialized output so saved runs are reproducible.
    #[serde(skip)]
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub action: Action,
    pub root_lower: f64,
    pub root_upper: f64,
    /// Root action bounds, empty on fallback.
    pub actions: Vec<ActionBounds>,
    pub diagnostics: PlanDiagnostics,
}

/// Anytime planner over a fixed model and solver configuration.
#[derive(Debug, Clone)]
pub struct Planner {
    model: Arc<Model>,
    cfg: SolverConfig,
    rollout: RolloutPolicy,
}

impl Planner {
    pub fn new(model: Arc<Model>, cfg: SolverConfig) -> Result<Planner, ConfigError> {
        cfg.validate()?;
        let rollout = RolloutPolicy::from_name(&cfg.rollout_policy, &model)
            .map_err(|e| ConfigError::invalid(format!("solver.{}", e.path()), e.to_string()))?;
        Ok(Planner { model, cfg, rollout })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn plan(&self, belief: &ParticleBelief, rng: &mut dyn RngCore) -> Result<PlanReport, PlanError> {
        let budget = Duration::from_secs_f64(self.cfg.time_budget_ms / 1000.0);
        self.plan_until(belief, Instant::now() + budget, rng)
    }

    /// Plan with an explicit deadline.
    pub fn plan_until(&self, belief: &ParticleBelief, deadline: Instant, rng: &mut dyn RngCore) -> Result<PlanReport, PlanError> {
        let started = Instant::now();
        if belief.is_empty() {
            return Err(PlanError::EmptyBelief);
        }
        if belief.t >= self.model.horizon() {
            return Err(PlanError::Horizon);
        }
        let root_belief = belief.to_exact();
        let scenarios = Scenario::sample(belief, self.cfg.n_scenarios, rng);
        let mut search = Search::new(&self.model, &self.cfg, self.rollout, scenarios);
        let root = search.add_root(root_belief);

        loop {
            if self.cfg.max_trials.is_some_and(|m| search.trials >= m) {
                break;
            }
            let node = &search.vnodes[root];
            if !node.actions.is_empty() && node.upper - node.lower <= self.cfg.target_gap {
                break;
            }
            // a trial that expands nothing leaves the tree unchanged
            if !search.trial(root, deadline) {
                break;
            }
        }

        let node = &search.vnodes[root];
        let fallback = node.actions.is_empty();
        let (action, actions) = if fallback {
            (self.rollout.act(&root_belief, rng), Vec::new())
        } else {
            let mut best: Option<(Action, f64)> = None;
            let mut bounds = Vec::with_capacity(Action::COUNT);
            for &id in &node.actions {
                let an = &search.anodes[id];
                bounds.push(ActionBounds { action: an.action, lower: an.lower, upper: an.upper });
                if best.is_none_or(|(_, v)| an.reg > v) {
                    best = Some((an.action, an.reg));
                }
            }
            (best.expect("expanded root has actions").0, bounds)
        };
        Ok(PlanReport {
            action,
            root_lower: node.lower,
            root_upper: node.upper,
            actions,
            diagnostics: PlanDiagnostics {
                trials: search.trials,
                nodes_expanded: search.expansions,
                tree_size: search.vnodes.len(),
                depth_reached: search.depth_reached,
                fallback,
                timed_out: search.timed_out,
                bound_violations: search.bound_violations(),
                elapsed_ms: started.elapsed().as_secs_f64() * 1000.0,
            },
        })
    }
}

/// [`Planner`] as a [`Policy`] consuming a particle belief.
#[derive(Debug, Clone)]
pub struct DespotPolicy {
    planner: Planner,
}

impl DespotPolicy {
    pub fn new(planner: Planner) -> DespotPolicy {
        DespotPolicy { planner }
    }

    pub fn planner(&self) -> &Planner {
        &self.planner
    }
}

impl Policy for DespotPolicy {
    fn name(&self) -> &str {
        "despot"
    }

    fn backend(&self) -> BeliefBackend {
        self.planner.cfg.belief
    }

    fn decide(&mut self, belief: &Belief, rng: &mut dyn RngCore) -> Result<Decision, PolicyError> {
        let particles = match belief {
            Belief::Particle(p) => p.clone(),
            Belief::Exact(b) => ParticleBelief::sample_from_exact(b, self.planner.model.params().n_particles, rng),
        };
        let plan = self.planner.plan(&particles, rng)?;
        Ok(Decision { action: plan.action, branch: None, plan: Some(plan) })
    }
}
