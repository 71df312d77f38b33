//! Baseline decision rules and the policy interface shared with the planner.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{Belief, Marginals};
use crate::despot::PlanReport;
use crate::error::ConfigError;
use crate::model::{Action, Condition, ModelParams};

/// Settings for the belief-threshold expert rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpertConfig {
    pub default_diagnostic: Action,
    pub pdom_thres: f64,
    pub pdisc_min: f64,
    /// Order used to break exact ties between condition marginals.
    pub tie_break_order: [Condition; 3],
}

impl ExpertConfig {
    pub fn new(default_diagnostic: Action, params: &ModelParams) -> Result<ExpertConfig, ConfigError> {
        let cfg = ExpertConfig {
            default_diagnostic,
            pdom_thres: params.pdom_thres,
            pdisc_min: params.pdisc_min,
            tie_break_order: Condition::ALL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !matches!(self.default_diagnostic, Action::Hosp | Action::Dsa) {
            return Err(ConfigError::invalid("default_diagnostic", "must be HOSP or DSA"));
        }
        for (name, p) in [("pdom_thres", self.pdom_thres), ("pdisc_min", self.pdisc_min)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(ConfigError::invalid(name, format!("{p} not in (0, 1)")));
            }
        }
        let mut seen = self.tie_break_order.to_vec();
        seen.sort();
        seen.dedup();
        if seen.len() != 3 {
            return Err(ConfigError::invalid("tie_break_order", "must list each condition once"));
        }
        Ok(())
    }
}

/// Which rule of the expert decision tree fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Discharge,
    DominantCondition,
    DefaultDiagnostic,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Discharge => "discharge",
            Branch::DominantCondition => "dominant-condition",
            Branch::DefaultDiagnostic => "default-diagnostic",
        })
    }
}

/// Expert rule: discharge when the stroke-free mass exceeds `pdisc_min`, else
/// treat the most likely condition once its marginal exceeds `pdom_thres`,
/// else run the default diagnostic. Never returns WAIT.
pub fn expert_policy(cfg: &ExpertConfig, m: &Marginals) -> (Action, Branch) {
    if m.p_stroke_free > cfg.pdisc_min {
        return (Action::Disc, Branch::Discharge);
    }
    let mut best: Option<(Condition, f64)> = None;
    for c in cfg.tie_break_order {
        let p = m.get(c);
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((c, p));
        }
    }
    match best {
        Some((c, p)) if p > cfg.pdom_thres => (c.treatment(), Branch::DominantCondition),
        _ => (cfg.default_diagnostic, Branch::DefaultDiagnostic),
    }
}

/// Uniform draw over all seven actions.
pub fn random_policy<R: Rng + ?Sized>(rng: &mut R) -> Action {
    Action::ALL[rng.random_range(0..Action::COUNT)]
}

/// Policies selectable by name from the CLI and the service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Random,
    ExpertHosp,
    ExpertDsa,
    Despot,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [PolicyKind::Random, PolicyKind::ExpertHosp, PolicyKind::ExpertDsa, PolicyKind::Despot];

    pub const fn name(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::ExpertHosp => "expert-hosp",
            PolicyKind::ExpertDsa => "expert-dsa",
            PolicyKind::Despot => "despot",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown policy `{0}` (expected random, expert-hosp, expert-dsa or despot)")]
pub struct UnknownPolicy(pub String);

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}

pub use crate::belief::BeliefBackend;

/// An action plus whatever explanation the policy can give for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub action: Action,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanReport>,
}

impl Decision {
    pub fn action(action: Action) -> Decision {
        Decision { action, branch: None, plan: None }
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("planning failed: {0}")]
    Planning(#[from] crate::despot::PlanError),
}

/// A decision rule driven by a belief.
pub trait Policy: Send {
    fn name(&self) -> &str;

    fn backend(&self) -> BeliefBackend {
        BeliefBackend::Exact
    }

    fn decide(&mut self, belief: &Belief, rng: &mut dyn RngCore) -> Result<Decision, PolicyError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(&mut self, _belief: &Belief, rng: &mut dyn RngCore) -> Result<Decision, PolicyError> {
        Ok(Decision::action(random_policy(rng)))
    }
}

#[derive(Debug, Clone)]
pub struct ExpertPolicy {
    name: String,
    cfg: ExpertConfig,
    backend: BeliefBackend,
}

impl ExpertPolicy {
    /// Expert rule fed by the exact filter.
    pub fn new(name: impl Into<String>, cfg: ExpertConfig) -> ExpertPolicy {
        ExpertPolicy { name: name.into(), cfg, backend: BeliefBackend::Exact }
    }

    pub fn with_backend(mut self, backend: BeliefBackend) -> ExpertPolicy {
        self.backend = backend;
        self
    }

    pub fn config(&self) -> &ExpertConfig {
        &self.cfg
    }
}

impl Policy for ExpertPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn backend(&self) -> BeliefBackend {
        self.backend
    }

    fn decide(&mut self, belief: &Belief, _rng: &mut dyn RngCore) -> Result<Decision, PolicyError> {
        let (action, branch) = expert_policy(&self.cfg, &belief.marginals());
        Ok(Decision { action, branch: Some(branch), plan: None })
    }
}

/// Always the same action; handy for analytic checks.
#[derive(Debug, Clone, Copy)]
pub struct FixedPolicy(pub Action);

impl Policy for FixedPolicy {
    fn name(&self) -> &str {
        "fixed"
    }

    fn decide(&mut self, _belief: &Belief, _rng: &mut dyn RngCore) -> Result<Decision, PolicyError> {
        Ok(Decision::action(self.0))
    }
}
