use serde::{Deserialize, Serialize};

use super::{BeliefError, Marginals};
use crate::error::LikelihoodDomainError;
use crate::model::{Action, Conditions, Model, Observation, PatientState};

const N: usize = Conditions::COUNT;
const SUM_TOLERANCE: f64 = 1e-9;

/// Exact distribution over the eight condition combinations, indexed as in
/// [`Conditions::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactBelief {
    pub t: u32,
    pub weights: [f64; N],
}

impl ExactBelief {
    pub fn from_weights(t: u32, weights: [f64; N]) -> Result<ExactBelief, BeliefError> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BeliefError::Invalid("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(BeliefError::Invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(ExactBelief { t, weights })
    }

    /// Normalize arbitrary non-negative mass.
    pub fn normalized(t: u32, mass: [f64; N]) -> Result<ExactBelief, BeliefError> {
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(BeliefError::Invalid(format!("cannot normalize total mass {total}")));
        }
        Ok(ExactBelief { t, weights: mass.map(|m| m / total) })
    }

    /// The initial-state mixture at t = 0.
    pub fn prior(model: &Model) -> ExactBelief {
        ExactBelief { t: 0, weights: model.initial_weights() }
    }

    pub fn uniform(t: u32) -> ExactBelief {
        ExactBelief { t, weights: [1.0 / N as f64; N] }
    }

    pub fn point_mass(s: &PatientState) -> ExactBelief {
        let mut weights = [0.0; N];
        weights[s.conditions().index()] = 1.0;
        ExactBelief { t: s.t, weights }
    }

    pub fn weight(&self, c: Conditions) -> f64 {
        self.weights[c.index()]
    }

    pub fn marginals(&self) -> Marginals {
        Marginals::from_weights(&self.weights)
    }

    /// Push the belief through the transition model without conditioning.
    pub fn predict(&self, model: &Model, a: Action) -> ExactBelief {
        let m = model.transition_matrix(a);
        let mut out = [0.0; N];
        for (from, w) in self.weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for (to, p) in m[from].iter().enumerate() {
                out[to] += w * p;
            }
        }
        ExactBelief { t: self.t + 1, weights: out }
    }

    /// Bayes update with an arbitrary likelihood over successor combinations.
    pub fn update_with(
        &self,
        model: &Model,
        a: Action,
        likelihood: impl Fn(Conditions) -> f64,
    ) -> Result<ExactBelief, BeliefError> {
        let predicted = self.predict(model, a);
        let mut post = [0.0; N];
        for c in Conditions::all() {
            post[c.index()] = likelihood(c) * predicted.weights[c.index()];
        }
        let eta: f64 = post.iter().sum();
        if !(eta > 0.0) {
            return Err(BeliefError::Degenerate { predicted });
        }
        Ok(ExactBelief { t: predicted.t, weights: post.map(|p| p / eta) })
    }
}

/// Exact Bayes filter step: b'(s') = eta * Z(o | s', a) * sum_s T(s' | s, a) b(s).
pub fn exact_update(model: &Model, b: &ExactBelief, a: Action, o: &Observation) -> Result<ExactBelief, BeliefError> {
    if o.is_dsa() != (a == Action::Dsa) {
        return Err(BeliefError::Domain(LikelihoodDomainError { action: a, observation: *o }));
    }
    let key = o.key();
    b.update_with(model, a, |c| model.likelihood_by_key(key, c, a))
}

/// [`exact_update`], falling back to the predicted prior when the observation
/// has zero probability under every hypothesis. The flag reports the fallback.
pub fn update_or_predict(
    model: &Model,
    b: &ExactBelief,
    a: Action,
    o: &Observation,
) -> Result<(ExactBelief, bool), LikelihoodDomainError> {
    match exact_update(model, b, a, o) {
        Ok(next) => Ok((next, false)),
        Err(BeliefError::Degenerate { predicted }) => Ok((predicted, true)),
        Err(BeliefError::Domain(e)) => Err(e),
        Err(BeliefError::Invalid(_)) => unreachable!("update never builds invalid beliefs"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;
    use crate::model::{CtReading, ModelParams};

    fn model_with(f: impl FnOnce(&mut ModelParams)) -> Model {
        let mut p = ConfigFile::defaults().model;
        f(&mut p);
        Model::new(p).unwrap()
    }

    fn no_onset(p: &mut ModelParams) {
        p.p_ane = 0.0;
        p.p_avm = 0.0;
        p.p_occ = 0.0;
    }

    #[test]
    fn perfect_dsa_collapses_uniform_prior() {
        let m = model_with(|p| {
            no_onset(p);
            p.dsa_accuracy = 1.0;
        });
        let target = Conditions::from_flags(true, false, false);
        let b = exact_update(&m, &ExactBelief::uniform(0), Action::Dsa, &Observation::dsa(target)).unwrap();
        assert_eq!(b.weight(target), 1.0);
        assert_eq!(b.t, 1);
    }

    #[test]
    fn point_mass_survives_any_clinical_observation() {
        let m = model_with(no_onset);
        let b = ExactBelief::point_mass(&PatientState::stroke_free(0));
        for o in Observation::clinical_alphabet() {
            let post = exact_update(&m, &b, Action::Wait, &o).unwrap();
            assert_eq!(post.weight(Conditions::STROKE_FREE), 1.0);
        }
    }

    #[test]
    fn two_hypothesis_dsa_update_by_hand() {
        // prior 1/2 on stroke-free, 1/2 on aneurysm; no onset; report says aneurysm.
        let m = model_with(no_onset);
        let mut w = [0.0; N];
        w[0] = 0.5;
        w[4] = 0.5;
        let b = ExactBelief::from_weights(0, w).unwrap();
        let post = exact_update(&m, &b, Action::Dsa, &Observation::dsa(Conditions::from_index(4))).unwrap();
        // healthy: 0.02 * 0.98 * 0.98; aneurysm: 0.98^3
        let h = 0.02 * 0.98 * 0.98;
        let a = 0.98f64.powi(3);
        assert!((post.weights[4] - a / (a + h)).abs() < 1e-12);
        assert!((post.weights[0] - h / (a + h)).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_update_reports_degenerate() {
        let m = model_with(|p| {
            no_onset(p);
            p.dsa_accuracy = 1.0;
        });
        let b = ExactBelief::point_mass(&PatientState::stroke_free(0));
        let o = Observation::dsa(Conditions::from_index(7));
        match exact_update(&m, &b, Action::Dsa, &o) {
            Err(BeliefError::Degenerate { predicted }) => assert_eq!(predicted.weights[0], 1.0),
            other => panic!("expected degenerate, got {other:?}"),
        }
        let (fallback, degenerate) = update_or_predict(&m, &b, Action::Dsa, &o).unwrap();
        assert!(degenerate);
        assert_eq!(fallback.t, 1);
    }

    #[test]
    fn mismatched_observation_is_a_domain_error() {
        let m = model_with(|_| {});
        let b = ExactBelief::prior(&m);
        let o = Observation::clinical(CtReading::Positive, 3).unwrap();
        assert!(matches!(exact_update(&m, &b, Action::Dsa, &o), Err(BeliefError::Domain(_))));
    }

    #[test]
    fn constant_likelihood_reduces_to_prediction() {
        let m = model_with(|_| {});
        let b = ExactBelief::prior(&m);
        for a in Action::ALL {
            let post = b.update_with(&m, a, |_| 0.37).unwrap();
            for to in Conditions::all() {
                let direct: f64 = Conditions::all()
                    .map(|from| {
                        m.transition_probability(
                            &PatientState::from_conditions(from, 0),
                            a,
                            &PatientState::from_conditions(to, 1),
                        ) * b.weight(from)
                    })
                    .sum();
                assert!((post.weight(to) - direct).abs() < 1e-12);
            }
        }
    }
}
