//! Belief tracking over the eight hidden condition combinations.
//!
//! [`ExactBelief`] is the exact discrete Bayes filter; [`ParticleBelief`] is a
//! weighted particle filter with systematic resampling. The exact filter is
//! cheap (eight states) and serves as the reference for the particle filter.

mod exact;
mod particle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exact::{exact_update, update_or_predict, ExactBelief};
pub use particle::{particle_update, systematic_resample, ParticleBelief, ParticleUpdate};

use crate::error::LikelihoodDomainError;
use crate::model::{Condition, Conditions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error(transparent)]
    Domain(#[from] LikelihoodDomainError),
    /// The observation has zero probability under every hypothesis. Carries
    /// the predicted prior for callers that fall back to it.
    #[error("observation impossible under every hypothesis")]
    Degenerate { predicted: ExactBelief },
    #[error("invalid belief: {0}")]
    Invalid(String),
}

/// Per-condition marginals plus the mass of the stroke-free combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    pub p_ane: f64,
    pub p_avm: f64,
    pub p_occ: f64,
    pub p_stroke_free: f64,
}

impl Marginals {
    pub fn from_weights(weights: &[f64; Conditions::COUNT]) -> Marginals {
        let marginal = |k: Condition| -> f64 {
            Conditions::all().filter(|c| c.has(k)).map(|c| weights[c.index()]).sum::<f64>() + 0.0
        };
        Marginals {
            p_ane: marginal(Condition::Ane),
            p_avm: marginal(Condition::Avm),
            p_occ: marginal(Condition::Occ),
            p_stroke_free: weights[Conditions::STROKE_FREE.index()],
        }
    }

    pub fn get(&self, c: Condition) -> f64 {
        match c {
            Condition::Ane => self.p_ane,
            Condition::Avm => self.p_avm,
            Condition::Occ => self.p_occ,
        }
    }
}

/// Belief representation a policy wants to be fed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefBackend {
    #[default]
    Exact,
    Particle,
}

/// A belief in whichever representation a policy consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Belief {
    Exact(ExactBelief),
    Particle(ParticleBelief),
}

impl Belief {
    pub fn t(&self) -> u32 {
        match self {
            Belief::Exact(b) => b.t,
            Belief::Particle(b) => b.t,
        }
    }

    pub fn marginals(&self) -> Marginals {
        match self {
            Belief::Exact(b) => b.marginals(),
            Belief::Particle(b) => b.marginals(),
        }
    }

    pub fn to_exact(&self) -> ExactBelief {
        match self {
            Belief::Exact(b) => *b,
            Belief::Particle(b) => b.to_exact(),
        }
    }
}
