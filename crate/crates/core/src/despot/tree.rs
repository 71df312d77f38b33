//! Determinized sparse belief tree with anytime bound-guided trials.

use std::time::Instant;

use super::rollout::{initial_bounds, RolloutPolicy};
use super::scenario::Scenario;
use super::SolverConfig;
use crate::belief::{update_or_predict, ExactBelief};
use crate::model::{Action, Model, Observation, PatientState};

const BOUND_TOLERANCE: f64 = 1e-9;

/// Belief node. Bounds are totals weighted by the node's share of scenarios.
#[derive(Debug)]
pub(crate) struct VNode {
    pub depth: usize,
    pub particles: Vec<(u32, PatientState)>,
    pub belief: ExactBelief,
    pub lower: f64,
    pub upper: f64,
    /// Regularized lower bound.
    pub reg: f64,
    pub actions: Vec<usize>,
}

#[derive(Debug)]
pub(crate) struct ANode {
    pub action: Action,
    pub reward: f64,
    pub children: Vec<usize>,
    pub lower: f64,
    pub upper: f64,
    pub reg: f64,
}

pub(crate) struct Search<'a> {
    model: &'a Model,
    cfg: &'a SolverConfig,
    rollout: RolloutPolicy,
    scenarios: Vec<Scenario>,
    weight: f64,
    pub vnodes: Vec<VNode>,
    pub anodes: Vec<ANode>,
    pub expansions: usize,
    pub trials: usize,
    pub depth_reached: usize,
    pub timed_out: bool,
}

impl<'a> Search<'a> {
    pub fn new(model: &'a Model, cfg: &'a SolverConfig, rollout: RolloutPolicy, scenarios: Vec<Scenario>) -> Self {
        let weight = 1.0 / scenarios.len() as f64;
        Search {
            model,
            cfg,
            rollout,
            scenarios,
            weight,
            vnodes: Vec::new(),
            anodes: Vec::new(),
            expansions: 0,
            trials: 0,
            depth_reached: 0,
            timed_out: false,
        }
    }

    pub fn add_root(&mut self, belief: ExactBelief) -> usize {
        let particles = self.scenarios.iter().enumerate().map(|(i, s)| (i as u32, s.start)).collect();
        self.add_vnode(0, particles, belief)
    }

    fn add_vnode(&mut self, depth: usize, particles: Vec<(u32, PatientState)>, belief: ExactBelief) -> usize {
        let remaining = self.cfg.max_depth.saturating_sub(depth);
        let refs: Vec<(&Scenario, PatientState)> =
            particles.iter().map(|(i, s)| (&self.scenarios[*i as usize], *s)).collect();
        let b = initial_bounds(self.model, &refs, &belief, depth, remaining, &self.rollout);
        let w = self.weight * particles.len() as f64;
        self.depth_reached = self.depth_reached.max(depth);
        self.vnodes.push(VNode {
            depth,
            particles,
            belief,
            lower: b.lower * w,
            upper: b.upper * w,
            reg: b.lower * w,
            actions: Vec::new(),
        });
        self.vnodes.len() - 1
    }

    fn node_weight(&self, v: usize) -> f64 {
        self.weight * self.vnodes[v].particles.len() as f64
    }

    fn expand(&mut self, v: usize) {
        let depth = self.vnodes[v].depth;
        let belief = self.vnodes[v].belief;
        let particles = std::mem::take(&mut self.vnodes[v].particles);
        let mut actions = Vec::with_capacity(Action::COUNT);
        for a in Action::ALL {
            let mut reward = 0.0;
            let mut groups: Vec<Vec<(u32, PatientState)>> = vec![Vec::new(); Observation::ALPHABET];
            for &(i, s) in &particles {
                let mut rng = self.scenarios[i as usize].stream(depth);
                let step = self.model.step(&s, a, &mut rng);
                reward += self.weight * step.reward;
                if !step.terminal {
                    groups[step.observation.key()].push((i, step.next));
                }
            }
            let mut children = Vec::new();
            for (key, group) in groups.into_iter().enumerate() {
                if group.is_empty() {
                    continue;
                }
                let (child_belief, _) = update_or_predict(self.model, &belief, a, &Observation::from_key(key))
                    .expect("grouped observation matches action");
                children.push(self.add_vnode(depth + 1, group, child_belief));
            }
            self.anodes.push(ANode { action: a, reward, children, lower: 0.0, upper: 0.0, reg: 0.0 });
            let id = self.anodes.len() - 1;
            self.refresh_anode(id);
            actions.push(id);
        }
        self.vnodes[v].particles = particles;
        self.vnodes[v].actions = actions;
        self.expansions += 1;
    }

    fn refresh_anode(&mut self, id: usize) {
        let gamma = self.model.gamma();
        let (mut l, mut u, mut r) = (0.0, 0.0, 0.0);
        for &c in &self.anodes[id].children {
            let child = &self.vnodes[c];
            l += child.lower;
            u += child.upper;
            r += child.reg;
        }
        let an = &mut self.anodes[id];
        an.lower = an.reward + gamma * l;
        an.upper = an.reward + gamma * u;
        an.reg = an.reward - self.cfg.regularization_lambda + gamma * r;
    }

    /// Recompute a belief node from its action nodes. Lower bounds only rise
    /// and upper bounds only fall.
    fn backup(&mut self, v: usize) {
        if self.vnodes[v].actions.is_empty() {
            return;
        }
        let ids = self.vnodes[v].actions.clone();
        let (mut l, mut u, mut r) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for id in ids {
            self.refresh_anode(id);
            let an = &self.anodes[id];
            l = l.max(an.lower);
            u = u.max(an.upper);
            r = r.max(an.reg);
        }
        let node = &mut self.vnodes[v];
        node.lower = node.lower.max(l);
        node.reg = node.reg.max(r);
        node.upper = node.upper.min(u).max(node.lower);
    }

    fn gap(&self, v: usize) -> f64 {
        self.vnodes[v].upper - self.vnodes[v].lower
    }

    /// One forward trial from the root, then backup along the visited path.
    /// Returns whether any node was expanded.
    pub fn trial(&mut self, root: usize, deadline: Instant) -> bool {
        let gamma = self.model.gamma();
        let xi = self.cfg.xi;
        let root_gap = self.gap(root);
        let root_weight = self.node_weight(root);
        let mut path = vec![root];
        let mut v = root;
        let mut expanded_any = false;
        loop {
            let depth = self.vnodes[v].depth;
            if depth >= self.cfg.max_depth || self.vnodes[v].particles.is_empty() {
                break;
            }
            if self.vnodes[v].actions.is_empty() {
                if Instant::now() >= deadline {
                    self.timed_out = true;
                    break;
                }
                self.expand(v);
                self.backup(v);
                expanded_any = true;
            }
            let best = self.vnodes[v]
                .actions
                .iter()
                .copied()
                .fold(None::<usize>, |best, id| match best {
                    Some(b) if self.anodes[b].upper >= self.anodes[id].upper => Some(b),
                    _ => Some(id),
                })
                .expect("expanded node has actions");
            let child_discount = gamma.powi(depth as i32 + 1);
            let next = self.anodes[best]
                .children
                .iter()
                .copied()
                .map(|c| {
                    let excess = child_discount * self.gap(c) - xi * (self.node_weight(c) / root_weight) * root_gap;
                    (c, excess)
                })
                .fold(None::<(usize, f64)>, |acc, (c, e)| match acc {
                    Some((_, be)) if be >= e => acc,
                    _ => Some((c, e)),
                });
            match next {
                Some((c, excess)) if excess > 0.0 => {
                    v = c;
                    path.push(c);
                }
                _ => break,
            }
        }
        for &node in path.iter().rev() {
            self.backup(node);
        }
        self.trials += 1;
        expanded_any
    }

    /// Number of nodes whose lower bound exceeds their upper bound.
    pub fn bound_violations(&self) -> usize {
        let v = self.vnodes.iter().filter(|n| n.lower > n.upper + BOUND_TOLERANCE).count();
        let a = self.anodes.iter().filter(|n| n.lower > n.upper + BOUND_TOLERANCE).count();
        v + a
    }
}
