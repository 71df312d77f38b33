use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BeliefError, ExactBelief, Marginals};
use crate::error::LikelihoodDomainError;
use crate::model::{Action, Conditions, Model, Observation, PatientState};

const N: usize = Conditions::COUNT;

/// Weighted set of state hypotheses sharing one epoch counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleBelief {
    pub t: u32,
    pub particles: Vec<PatientState>,
    pub weights: Vec<f64>,
}

/// Result of one particle-filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleUpdate {
    pub belief: ParticleBelief,
    /// Every particle had zero likelihood and the set was rebuilt from the
    /// predicted prior.
    pub recovered: bool,
}

impl ParticleBelief {
    pub fn new(particles: Vec<PatientState>, weights: Vec<f64>) -> Result<ParticleBelief, BeliefError> {
        let Some(first) = particles.first() else {
            return Err(BeliefError::Invalid("particle set is empty".into()));
        };
        let t = first.t;
        if particles.iter().any(|p| p.t != t) {
            return Err(BeliefError::Invalid("particles disagree on t".into()));
        }
        if weights.len() != particles.len() {
            return Err(BeliefError::Invalid("one weight per particle required".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || !(weights.iter().sum::<f64>() > 0.0) {
            return Err(BeliefError::Invalid("weights must be non-negative with positive total".into()));
        }
        Ok(ParticleBelief { t, particles, weights })
    }

    /// Equally weighted particles.
    pub fn uniform(particles: Vec<PatientState>) -> Result<ParticleBelief, BeliefError> {
        let n = particles.len();
        ParticleBelief::new(particles, vec![1.0 / n.max(1) as f64; n])
    }

    /// Draw `n` i.i.d. particles from an exact belief.
    pub fn sample_from_exact<R: Rng + ?Sized>(b: &ExactBelief, n: usize, rng: &mut R) -> ParticleBelief {
        assert!(n > 0, "particle count must be positive");
        let particles = (0..n)
            .map(|_| PatientState::from_conditions(sample_weights(&b.weights, rng.random()), b.t))
            .collect();
        ParticleBelief { t: b.t, particles, weights: vec![1.0 / n as f64; n] }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Collapse to a distribution over the eight combinations.
    ///
    /// Per-combination weights are summed in sorted order, so the result does
    /// not depend on particle order.
    pub fn to_exact(&self) -> ExactBelief {
        let mut bins: [Vec<f64>; N] = Default::default();
        for (p, w) in self.particles.iter().zip(&self.weights) {
            bins[p.conditions().index()].push(*w);
        }
        let mut mass = [0.0; N];
        for (m, bin) in mass.iter_mut().zip(bins.iter_mut()) {
            bin.sort_by(f64::total_cmp);
            *m = bin.iter().sum::<f64>() + 0.0;
        }
        let total: f64 = {
            let mut sorted = mass;
            sorted.sort_by(f64::total_cmp);
            sorted.iter().sum()
        };
        ExactBelief { t: self.t, weights: mass.map(|m| m / total) }
    }

    pub fn marginals(&self) -> Marginals {
        self.to_exact().marginals()
    }
}

/// Particle-filter step: propagate each particle through the transition model,
/// weight it by the observation likelihood, then systematically resample back
/// to the same count with uniform weights.
///
/// If every weight is zero the set is rebuilt by sampling from the one-step
/// prediction of the current particle distribution.
pub fn particle_update<R: Rng + ?Sized>(
    model: &Model,
    b: &ParticleBelief,
    a: Action,
    o: &Observation,
    rng: &mut R,
) -> Result<ParticleUpdate, LikelihoodDomainError> {
    if o.is_dsa() != (a == Action::Dsa) {
        return Err(LikelihoodDomainError { action: a, observation: *o });
    }
    let n = b.len();
    let key = o.key();
    let propagated: Vec<PatientState> = b.particles.iter().map(|s| model.transition(s, a, rng)).collect();
    let weights: Vec<f64> = propagated
        .iter()
        .zip(&b.weights)
        .map(|(s, w)| w * model.likelihood_by_key(key, s.conditions(), a))
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        let predicted = b.to_exact().predict(model, a);
        return Ok(ParticleUpdate { belief: ParticleBelief::sample_from_exact(&predicted, n, rng), recovered: true });
    }
    let picks = systematic_resample(&weights, n, rng.random());
    let particles = picks.into_iter().map(|i| propagated[i]).collect();
    Ok(ParticleUpdate { belief: ParticleBelief { t: b.t + 1, particles, weights: vec![1.0 / n as f64; n] }, recovered: false })
}

/// Systematic resampling: `n` evenly spaced pointers offset by `u / n`.
/// Returns the chosen indices in ascending order.
pub fn systematic_resample(weights: &[f64], n: usize, u: f64) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut i = 0;
    let last_positive = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
    for k in 0..n {
        let pointer = (u + k as f64) * step;
        while pointer >= cumulative && i + 1 < weights.len() {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i.min(last_positive));
    }
    out
}

fn sample_weights(weights: &[f64; N], u: f64) -> Conditions {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let target = u * total;
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if target < acc && *w > 0.0 {
            return Conditions::from_index(i);
        }
    }
    Conditions::from_index(last_positive)
}
