//! Model parameters and their validation.

use serde::{Deserialize, Serialize};

use super::state::{Action, Condition, Conditions, SirirajScore};
use crate::error::ConfigError;

const SUM_TOLERANCE: f64 = 1e-9;

/// Which clinical noise level an action observes under.
///
/// Only WAIT and HOSP have their own tables. Treatments happen in hospital and
/// observe at the HOSP level; DISC observes at the WAIT level. DSA produces a
/// DSA report instead and never consults these tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseLevel {
    Wait,
    Hosp,
}

impl NoiseLevel {
    pub const fn for_action(a: Action) -> NoiseLevel {
        match a {
            Action::Wait | Action::Disc => NoiseLevel::Wait,
            Action::Hosp | Action::Dsa | Action::Coil | Action::Embo | Action::Revc => NoiseLevel::Hosp,
        }
    }

    pub const fn index(self) -> usize {
        match self {
            NoiseLevel::Wait => 0,
            NoiseLevel::Hosp => 1,
        }
    }
}

/// A value keyed by noise level, serialized as `{ WAIT = .., HOSP = .. }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerNoise<T> {
    #[serde(rename = "WAIT")]
    pub wait: T,
    #[serde(rename = "HOSP")]
    pub hosp: T,
}

impl<T> PerNoise<T> {
    pub fn get(&self, level: NoiseLevel) -> &T {
        match level {
            NoiseLevel::Wait => &self.wait,
            NoiseLevel::Hosp => &self.hosp,
        }
    }
}

/// Per-condition probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionRates {
    pub ane: f64,
    pub avm: f64,
    pub occ: f64,
}

impl ConditionRates {
    pub fn get(&self, c: Condition) -> f64 {
        match c {
            Condition::Ane => self.ane,
            Condition::Avm => self.avm,
            Condition::Occ => self.occ,
        }
    }
}

/// Class of a condition combination as far as the Siriraj score is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SirirajClass {
    Hemorrhagic,
    Ischemic,
    None,
}

pub type SirirajTable = [f64; SirirajScore::LEVELS];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SirirajTables {
    pub hemorrhagic: PerNoise<SirirajTable>,
    pub ischemic: PerNoise<SirirajTable>,
    pub none: PerNoise<SirirajTable>,
}

impl SirirajTables {
    pub fn get(&self, class: SirirajClass, level: NoiseLevel) -> &SirirajTable {
        match class {
            SirirajClass::Hemorrhagic => self.hemorrhagic.get(level),
            SirirajClass::Ischemic => self.ischemic.get(level),
            SirirajClass::None => self.none.get(level),
        }
    }
}

/// The thirteen reward and cost constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardTable {
    pub untreated_terminal_penalty: f64,
    pub treatment_cost: f64,
    pub dsa_cost: f64,
    pub hosp_cost: f64,
    pub correct_treatment: f64,
    pub wrong_treatment: f64,
    pub needed_dsa: f64,
    pub unnecessary_dsa: f64,
    pub correct_hosp: f64,
    pub unnecessary_hosp: f64,
    pub not_hospitalizing_penalty: f64,
    pub correct_discharge: f64,
    pub wrong_discharge: f64,
}

/// Initial-state mixture; the probability of a combination depends only on how
/// many conditions it contains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMixture {
    pub p_stroke_free: f64,
    pub p_single: f64,
    pub p_double: f64,
    pub p_triple: f64,
}

impl InitialMixture {
    pub fn probability(&self, c: Conditions) -> f64 {
        match c.count() {
            0 => self.p_stroke_free,
            1 => self.p_single,
            2 => self.p_double,
            _ => self.p_triple,
        }
    }

    /// Mixture as a weight vector over the eight combinations.
    pub fn weights(&self) -> [f64; Conditions::COUNT] {
        let mut w = [0.0; Conditions::COUNT];
        for c in Conditions::all() {
            w[c.index()] = self.probability(c);
        }
        w
    }

    pub fn total(&self) -> f64 {
        self.p_stroke_free + 3.0 * self.p_single + 3.0 * self.p_double + self.p_triple
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, p) in [
            ("p_stroke_free", self.p_stroke_free),
            ("p_single", self.p_single),
            ("p_double", self.p_double),
            ("p_triple", self.p_triple),
        ] {
            check_probability(&format!("init_mixture.{name}"), p)?;
        }
        let total = self.total();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(ConfigError::invalid("init_mixture", format!("mixture sums to {total}, expected 1")));
        }
        Ok(())
    }
}

/// All parameters of the generative model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub p_ane: f64,
    pub p_avm: f64,
    pub p_occ: f64,
    pub pdom_thres: f64,
    pub pdisc_min: f64,
    pub gamma: f64,
    pub n_particles: usize,
    /// Belief filter feeding the expert rules during simulation.
    #[serde(default)]
    pub expert_belief: crate::belief::BeliefBackend,
    pub horizon: u32,
    pub ct_sensitivity: PerNoise<ConditionRates>,
    pub ct_specificity: PerNoise<f64>,
    pub siriraj_tables: SirirajTables,
    #[serde(default = "default_mixed_class")]
    pub siriraj_mixed_class: SirirajClass,
    pub dsa_accuracy: f64,
    pub reward_table: RewardTable,
    pub init_mixture: InitialMixture,
}

fn default_mixed_class() -> SirirajClass {
    SirirajClass::Hemorrhagic
}

impl ModelParams {
    /// Onset probability for one condition.
    pub fn onset(&self, c: Condition) -> f64 {
        match c {
            Condition::Ane => self.p_ane,
            Condition::Avm => self.p_avm,
            Condition::Occ => self.p_occ,
        }
    }

    /// Siriraj class of a condition combination.
    pub fn siriraj_class(&self, c: Conditions) -> SirirajClass {
        let hemorrhagic = c.has(Condition::Ane) || c.has(Condition::Avm);
        let ischemic = c.has(Condition::Occ);
        match (hemorrhagic, ischemic) {
            (true, true) => self.siriraj_mixed_class,
            (true, false) => SirirajClass::Hemorrhagic,
            (false, true) => SirirajClass::Ischemic,
            (false, false) => SirirajClass::None,
        }
    }

    /// P(CT_POSITIVE | conditions, noise level). Present conditions combine as
    /// a noisy-OR of their sensitivities.
    pub fn ct_positive(&self, c: Conditions, level: NoiseLevel) -> f64 {
        if !c.any() {
            return 1.0 - self.ct_specificity.get(level);
        }
        let sens = self.ct_sensitivity.get(level);
        1.0 - c.present().map(|k| 1.0 - sens.get(k)).product::<f64>()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, p) in [
            ("p_ane", self.p_ane),
            ("p_avm", self.p_avm),
            ("p_occ", self.p_occ),
            ("pdom_thres", self.pdom_thres),
            ("pdisc_min", self.pdisc_min),
            ("dsa_accuracy", self.dsa_accuracy),
            ("ct_specificity.WAIT", self.ct_specificity.wait),
            ("ct_specificity.HOSP", self.ct_specificity.hosp),
        ] {
            check_probability(name, p)?;
        }
        for (level, rates) in [("WAIT", &self.ct_sensitivity.wait), ("HOSP", &self.ct_sensitivity.hosp)] {
            for c in Condition::ALL {
                check_probability(&format!("ct_sensitivity.{level}.{c}"), rates.get(c))?;
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ConfigError::invalid("gamma", format!("{} not in (0, 1)", self.gamma)));
        }
        if self.n_particles == 0 {
            return Err(ConfigError::invalid("n_particles", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(ConfigError::invalid("horizon", "must be at least 1"));
        }
        for c in Condition::ALL {
            let (w, h) = (self.ct_sensitivity.wait.get(c), self.ct_sensitivity.hosp.get(c));
            if h <= w {
                return Err(ConfigError::invalid(
                    format!("ct_sensitivity.HOSP.{c}"),
                    format!("HOSP sensitivity {h} must exceed WAIT sensitivity {w}"),
                ));
            }
        }
        if self.ct_specificity.hosp <= self.ct_specificity.wait {
            return Err(ConfigError::invalid(
                "ct_specificity.HOSP",
                format!(
                    "HOSP specificity {} must exceed WAIT specificity {}",
                    self.ct_specificity.hosp, self.ct_specificity.wait
                ),
            ));
        }
        for (class, tables) in [
            ("hemorrhagic", &self.siriraj_tables.hemorrhagic),
            ("ischemic", &self.siriraj_tables.ischemic),
            ("none", &self.siriraj_tables.none),
        ] {
            for (level, table) in [("WAIT", &tables.wait), ("HOSP", &tables.hosp)] {
                let path = format!("siriraj_tables.{class}.{level}");
                for (i, p) in table.iter().enumerate() {
                    check_probability(&format!("{path}[{i}]"), *p)?;
                }
                let total: f64 = table.iter().sum();
                if (total - 1.0).abs() > SUM_TOLERANCE {
                    return Err(ConfigError::invalid(path, format!("table sums to {total}, expected 1")));
                }
            }
        }
        self.init_mixture.validate()
    }

    /// Apply a JSON object of overrides (same key names, nested objects merge)
    /// and validate the result.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<ModelParams, ConfigError> {
        if overrides.is_null() {
            return Ok(self.clone());
        }
        if !overrides.is_object() {
            return Err(ConfigError::invalid("", "overrides must be a JSON object"));
        }
        let mut merged = serde_json::to_value(self).expect("params serialize");
        merge_json(&mut merged, overrides);
        let params: ModelParams = serde_path_to_error::deserialize(merged).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::invalid(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })?;
        params.validate()?;
        Ok(params)
    }
}

pub(crate) fn merge_json(base: &mut serde_json::Value, patch: &serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge_json(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

fn check_probability(path: &str, p: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ConfigError::invalid(path, format!("probability {p} outside [0, 1]")))
    }
}
