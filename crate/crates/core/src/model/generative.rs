//! The generative model: initial states, transitions, observations, rewards
//! and termination.
//!
//! All sampling takes an explicit random stream. The closed-form counterparts
//! (`transition_probability`, `observation_likelihood`) are exact and are what
//! the Bayes filter consumes, so the sampler and the likelihood are built from
//! the same precomputed tables.

use rand::Rng;

use super::params::{ModelParams, NoiseLevel};
use super::state::{Action, Condition, Conditions, CtReading, Observation, PatientState, SirirajScore};
use crate::error::{ConfigError, LikelihoodDomainError};

const N: usize = Conditions::COUNT;
const CLINICAL: usize = 2 * SirirajScore::LEVELS;

/// Outcome of simulating one decision epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub next: PatientState,
    pub observation: Observation,
    /// Immediate reward, including the untreated penalty when the epoch ends the episode.
    pub reward: f64,
    pub terminal: bool,
}

/// Validated parameters plus the probability tables derived from them.
#[derive(Debug, Clone)]
pub struct Model {
    params: ModelParams,
    init_cdf: [f64; N],
    transition: [[[f64; N]; N]; Action::COUNT],
    ct_positive: [[f64; N]; 2],
    siriraj_cdf: [[[f64; SirirajScore::LEVELS]; N]; 2],
    clinical: [[[f64; CLINICAL]; N]; 2],
    dsa: [[f64; N]; N],
    r_max: f64,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Model, ConfigError> {
        params.validate()?;

        let init = params.init_mixture.weights();
        let mut init_cdf = [0.0; N];
        let mut acc = 0.0;
        for (i, w) in init.iter().enumerate() {
            acc += w;
            init_cdf[i] = acc;
        }

        let mut transition = [[[0.0; N]; N]; Action::COUNT];
        for a in Action::ALL {
            for from in Conditions::all() {
                for to in Conditions::all() {
                    transition[a.index()][from.index()][to.index()] = flag_transition(&params, from, a, to);
                }
            }
        }

        let mut ct_positive = [[0.0; N]; 2];
        let mut siriraj_cdf = [[[0.0; SirirajScore::LEVELS]; N]; 2];
        let mut clinical = [[[0.0; CLINICAL]; N]; 2];
        for level in [NoiseLevel::Wait, NoiseLevel::Hosp] {
            let l = level.index();
            for c in Conditions::all() {
                let p_pos = params.ct_positive(c, level);
                ct_positive[l][c.index()] = p_pos;
                let table = params.siriraj_tables.get(params.siriraj_class(c), level);
                let mut acc = 0.0;
                for (k, p) in table.iter().enumerate() {
                    acc += p;
                    siriraj_cdf[l][c.index()][k] = acc;
                    clinical[l][c.index()][k] = p_pos * p;
                    clinical[l][c.index()][SirirajScore::LEVELS + k] = (1.0 - p_pos) * p;
                }
            }
        }

        let mut dsa = [[0.0; N]; N];
        let acc = params.dsa_accuracy;
        for truth in Conditions::all() {
            for report in Conditions::all() {
                dsa[truth.index()][report.index()] = Condition::ALL
                    .iter()
                    .map(|&c| if truth.has(c) == report.has(c) { acc } else { 1.0 - acc })
                    .product();
            }
        }

        let r_max = Conditions::all()
            .flat_map(|c| Action::ALL.map(|a| reward_of(&params, c, a)))
            .fold(f64::NEG_INFINITY, f64::max);

        Ok(Model { params, init_cdf, transition, ct_positive, siriraj_cdf, clinical, dsa, r_max })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    pub fn horizon(&self) -> u32 {
        self.params.horizon
    }

    /// Largest immediate reward over all states and actions.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Prior over the eight condition combinations.
    pub fn initial_weights(&self) -> [f64; N] {
        self.params.init_mixture.weights()
    }

    pub fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> PatientState {
        let u: f64 = rng.random();
        PatientState::from_conditions(sample_cdf(&self.init_cdf, u, |i| Conditions::from_index(i)), 0)
    }

    /// Sample the successor state. A treatment clears its target with
    /// certainty; every condition absent in `s` may begin with its onset
    /// probability.
    pub fn transition<R: Rng + ?Sized>(&self, s: &PatientState, a: Action, rng: &mut R) -> PatientState {
        let mut next = s.conditions();
        for c in Condition::ALL {
            let u: f64 = rng.random();
            let present = if next.has(c) { a.treats() != Some(c) } else { u < self.params.onset(c) };
            next = next.with(c, present);
        }
        PatientState::from_conditions(next, s.t + 1)
    }

    /// T(s' | s, a).
    pub fn transition_probability(&self, s: &PatientState, a: Action, next: &PatientState) -> f64 {
        if next.t != s.t + 1 {
            return 0.0;
        }
        self.transition[a.index()][s.conditions().index()][next.conditions().index()]
    }

    /// Row-stochastic 8x8 matrix of flag transitions under `a`.
    pub fn transition_matrix(&self, a: Action) -> &[[f64; N]; N] {
        &self.transition[a.index()]
    }

    pub fn sample_observation<R: Rng + ?Sized>(&self, next: &PatientState, a: Action, rng: &mut R) -> Observation {
        let c = next.conditions();
        if a == Action::Dsa {
            let acc = self.params.dsa_accuracy;
            let mut report = c;
            for k in Condition::ALL {
                let u: f64 = rng.random();
                if u >= acc {
                    report = report.with(k, !c.has(k));
                }
            }
            return Observation::dsa(report);
        }
        let l = NoiseLevel::for_action(a).index();
        let u_ct: f64 = rng.random();
        let u_score: f64 = rng.random();
        let ct = if u_ct < self.ct_positive[l][c.index()] { CtReading::Positive } else { CtReading::Negative };
        let siriraj = sample_cdf(&self.siriraj_cdf[l][c.index()], u_score, SirirajScore::from_offset);
        Observation::Clinical { ct, siriraj }
    }

    /// Z(o | s', a).
    pub fn observation_likelihood(
        &self,
        o: &Observation,
        next: &PatientState,
        a: Action,
    ) -> Result<f64, LikelihoodDomainError> {
        if o.is_dsa() != (a == Action::Dsa) {
            return Err(LikelihoodDomainError { action: a, observation: *o });
        }
        Ok(self.likelihood_by_key(o.key(), next.conditions(), a))
    }

    /// Likelihood lookup by observation key; zero when the key cannot follow `a`.
    #[inline]
    pub fn likelihood_by_key(&self, key: usize, c: Conditions, a: Action) -> f64 {
        match (a == Action::Dsa, key < CLINICAL) {
            (true, false) => self.dsa[c.index()][key - CLINICAL],
            (false, true) => self.clinical[NoiseLevel::for_action(a).index()][c.index()][key],
            _ => 0.0,
        }
    }

    /// Immediate reward of taking `a` in `s`, not counting the untreated
    /// penalty charged at termination.
    pub fn reward(&self, s: &PatientState, a: Action) -> f64 {
        reward_of(&self.params, s.conditions(), a)
    }

    /// Penalty charged once when an episode ends with `s` still sick.
    pub fn terminal_penalty(&self, s: &PatientState) -> f64 {
        if s.any_stroke() {
            self.params.reward_table.untreated_terminal_penalty
        } else {
            0.0
        }
    }

    /// An episode ends on discharge or once the horizon is reached.
    pub fn is_terminal(&self, s: &PatientState, last_action: Action) -> bool {
        last_action == Action::Disc || s.t >= self.params.horizon
    }

    /// Simulate one epoch: transition, observation, reward and termination.
    ///
    /// On discharge the untreated penalty is assessed on the state the patient
    /// was discharged in; on reaching the horizon it is assessed on the
    /// successor state.
    pub fn step<R: Rng + ?Sized>(&self, s: &PatientState, a: Action, rng: &mut R) -> Step {
        let next = self.transition(s, a, rng);
        let observation = self.sample_observation(&next, a, rng);
        let terminal = self.is_terminal(&next, a);
        let mut reward = self.reward(s, a);
        if terminal {
            reward += if a == Action::Disc { self.terminal_penalty(s) } else { self.terminal_penalty(&next) };
        }
        Step { next, observation, reward, terminal }
    }
}

fn reward_of(params: &ModelParams, c: Conditions, a: Action) -> f64 {
    let r = &params.reward_table;
    let sick = c.any();
    match a {
        Action::Coil | Action::Embo | Action::Revc => {
            let target = a.treats().expect("treatment action");
            r.treatment_cost + if c.has(target) { r.correct_treatment } else { r.wrong_treatment }
        }
        Action::Dsa => r.dsa_cost + if sick { r.needed_dsa } else { r.unnecessary_dsa },
        Action::Hosp => r.hosp_cost + if sick { r.correct_hosp } else { r.unnecessary_hosp },
        Action::Wait => {
            if sick {
                r.not_hospitalizing_penalty
            } else {
                0.0
            }
        }
        Action::Disc => {
            if sick {
                r.wrong_discharge
            } else {
                r.correct_discharge
            }
        }
    }
}

fn flag_transition(params: &ModelParams, from: Conditions, a: Action, to: Conditions) -> f64 {
    Condition::ALL
        .iter()
        .map(|&c| {
            let p_true = match (from.has(c), a.treats() == Some(c)) {
                (true, true) => 0.0,
                (true, false) => 1.0,
                (false, _) => params.onset(c),
            };
            if to.has(c) {
                p_true
            } else {
                1.0 - p_true
            }
        })
        .product()
}

fn sample_cdf<T>(cdf: &[f64], u: f64, make: impl Fn(usize) -> T) -> T {
    let last = cdf.len() - 1;
    let i = cdf.iter().position(|&c| u < c).unwrap_or(last);
    make(i)
}

/// Draw an initial state from a mixture, validating it first.
pub fn sample_initial_state<R: Rng + ?Sized>(
    mixture: &super::params::InitialMixture,
    rng: &mut R,
) -> Result<PatientState, ConfigError> {
    mixture.validate()?;
    let weights = mixture.weights();
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for c in Conditions::all() {
        acc += weights[c.index()];
        if u < acc {
            return Ok(PatientState::from_conditions(c, 0));
        }
    }
    Ok(PatientState::from_conditions(Conditions::from_index(N - 1), 0))
}
