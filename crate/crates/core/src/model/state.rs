//! Hidden patient state, actions and observations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the three stroke-related conditions tracked by the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    #[serde(alias = "aneurysm")]
    Ane,
    Avm,
    #[serde(alias = "occlusion")]
    Occ,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Ane, Condition::Avm, Condition::Occ];

    const fn bit(self) -> u8 {
        match self {
            Condition::Ane => 0b100,
            Condition::Avm => 0b010,
            Condition::Occ => 0b001,
        }
    }

    /// The treatment that clears this condition.
    pub const fn treatment(self) -> Action {
        match self {
            Condition::Ane => Action::Coil,
            Condition::Avm => Action::Embo,
            Condition::Occ => Action::Revc,
        }
    }

    pub const fn is_hemorrhagic(self) -> bool {
        matches!(self, Condition::Ane | Condition::Avm)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Ane => "ane",
            Condition::Avm => "avm",
            Condition::Occ => "occ",
        })
    }
}

/// The hidden part of a patient state: which of the three conditions are present.
///
/// Packed as a 3-bit index (aneurysm = bit 2, AVM = bit 1, occlusion = bit 0),
/// so index 0 is stroke-free and index 7 has all three conditions. Belief
/// weight vectors use the same ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Conditions(u8);

impl Conditions {
    pub const COUNT: usize = 8;
    pub const STROKE_FREE: Conditions = Conditions(0);

    pub fn all() -> impl Iterator<Item = Conditions> + Clone {
        (0..Self::COUNT as u8).map(Conditions)
    }

    pub const fn from_index(index: usize) -> Conditions {
        assert!(index < Self::COUNT);
        Conditions(index as u8)
    }

    pub const fn from_flags(ane: bool, avm: bool, occ: bool) -> Conditions {
        Conditions(((ane as u8) << 2) | ((avm as u8) << 1) | occ as u8)
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub const fn has(self, c: Condition) -> bool {
        self.0 & c.bit() != 0
    }

    #[must_use]
    pub const fn with(self, c: Condition, present: bool) -> Conditions {
        if present {
            Conditions(self.0 | c.bit())
        } else {
            Conditions(self.0 & !c.bit())
        }
    }

    pub const fn any(self) -> bool {
        self.0 != 0
    }

    pub const fn count(self) -> u32 {
        self.0.count_ones()
    }

    /// True when every condition present in `self` is absent from `other`.
    pub const fn all_cleared_in(self, other: Conditions) -> bool {
        self.0 & other.0 == 0
    }

    pub fn present(self) -> impl Iterator<Item = Condition> {
        Condition::ALL.into_iter().filter(move |c| self.has(*c))
    }
}

impl fmt::Display for Conditions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.any() {
            return f.write_str("stroke-free");
        }
        let names: Vec<String> = self.present().map(|c| c.to_string()).collect();
        f.write_str(&names.join("+"))
    }
}

/// Full patient state: hidden condition flags plus the visible epoch counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatientState {
    pub is_ane: bool,
    pub is_avm: bool,
    pub is_occ: bool,
    pub t: u32,
}

impl PatientState {
    pub const fn new(is_ane: bool, is_avm: bool, is_occ: bool, t: u32) -> Self {
        PatientState { is_ane, is_avm, is_occ, t }
    }

    pub const fn stroke_free(t: u32) -> Self {
        PatientState::new(false, false, false, t)
    }

    pub const fn from_conditions(c: Conditions, t: u32) -> Self {
        PatientState::new(c.has(Condition::Ane), c.has(Condition::Avm), c.has(Condition::Occ), t)
    }

    pub const fn conditions(&self) -> Conditions {
        Conditions::from_flags(self.is_ane, self.is_avm, self.is_occ)
    }

    pub const fn has(&self, c: Condition) -> bool {
        match c {
            Condition::Ane => self.is_ane,
            Condition::Avm => self.is_avm,
            Condition::Occ => self.is_occ,
        }
    }

    pub const fn any_stroke(&self) -> bool {
        self.is_ane || self.is_avm || self.is_occ
    }
}

/// Decision-epoch action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Action {
    Wait,
    Hosp,
    Dsa,
    Coil,
    Embo,
    Revc,
    Disc,
}

impl Action {
    pub const COUNT: usize = 7;
    pub const ALL: [Action; 7] = [
        Action::Wait,
        Action::Hosp,
        Action::Dsa,
        Action::Coil,
        Action::Embo,
        Action::Revc,
        Action::Disc,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Action::Wait => "WAIT",
            Action::Hosp => "HOSP",
            Action::Dsa => "DSA",
            Action::Coil => "COIL",
            Action::Embo => "EMBO",
            Action::Revc => "REVC",
            Action::Disc => "DISC",
        }
    }

    /// The condition this action treats, if it is a treatment.
    pub const fn treats(self) -> Option<Condition> {
        match self {
            Action::Coil => Some(Condition::Ane),
            Action::Embo => Some(Condition::Avm),
            Action::Revc => Some(Condition::Occ),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown action `{0}` (expected one of WAIT, HOSP, DSA, COIL, EMBO, REVC, DISC)")]
pub struct ParseActionError(pub String);

impl FromStr for Action {
    type Err = ParseActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ParseActionError(s.to_string()))
    }
}

/// Summary of a CT scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CtReading {
    #[serde(rename = "CT_POSITIVE")]
    Positive,
    #[serde(rename = "CT_NEGATIVE")]
    Negative,
}

/// A Siriraj stroke score, always in `[-5, +5]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct SirirajScore(i8);

impl SirirajScore {
    pub const MIN: i8 = -5;
    pub const MAX: i8 = 5;
    pub const LEVELS: usize = 11;

    pub fn new(score: i32) -> Result<Self, SirirajRangeError> {
        if (Self::MIN as i32..=Self::MAX as i32).contains(&score) {
            Ok(SirirajScore(score as i8))
        } else {
            Err(SirirajRangeError(score))
        }
    }

    pub const fn from_offset(offset: usize) -> Self {
        assert!(offset < Self::LEVELS);
        SirirajScore(offset as i8 + Self::MIN)
    }

    pub const fn value(self) -> i8 {
        self.0
    }

    /// Position in an 11-entry table, 0 for -5.
    pub const fn offset(self) -> usize {
        (self.0 - Self::MIN) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("siriraj score {0} outside [-5, 5]")]
pub struct SirirajRangeError(pub i32);

impl TryFrom<i32> for SirirajScore {
    type Error = SirirajRangeError;
    fn try_from(v: i32) -> Result<Self, Self::Error> {
        SirirajScore::new(v)
    }
}

impl From<SirirajScore> for i32 {
    fn from(s: SirirajScore) -> i32 {
        s.0 as i32
    }
}

/// What the care team sees after an action: a clinical bundle, or a DSA report
/// when DSA was performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observation {
    Clinical { ct: CtReading, siriraj: SirirajScore },
    DsaReport { pred_ane: bool, pred_avm: bool, pred_occ: bool },
}

impl Observation {
    /// Number of distinct observations: 2 x 11 clinical bundles plus 8 DSA reports.
    pub const ALPHABET: usize = 2 * SirirajScore::LEVELS + Conditions::COUNT;

    pub fn clinical(ct: CtReading, siriraj: i32) -> Result<Self, SirirajRangeError> {
        Ok(Observation::Clinical { ct, siriraj: SirirajScore::new(siriraj)? })
    }

    pub const fn dsa(pred: Conditions) -> Self {
        Observation::DsaReport {
            pred_ane: pred.has(Condition::Ane),
            pred_avm: pred.has(Condition::Avm),
            pred_occ: pred.has(Condition::Occ),
        }
    }

    pub const fn is_dsa(&self) -> bool {
        matches!(self, Observation::DsaReport { .. })
    }

    /// Dense index in `0..ALPHABET`; clinical bundles first.
    pub const fn key(&self) -> usize {
        match *self {
            Observation::Clinical { ct, siriraj } => {
                let ct = match ct {
                    CtReading::Positive => 0,
                    CtReading::Negative => 1,
                };
                ct * SirirajScore::LEVELS + siriraj.offset()
            }
            Observation::DsaReport { pred_ane, pred_avm, pred_occ } => {
                2 * SirirajScore::LEVELS + Conditions::from_flags(pred_ane, pred_avm, pred_occ).index()
            }
        }
    }

    pub const fn from_key(key: usize) -> Observation {
        assert!(key < Self::ALPHABET);
        if key < 2 * SirirajScore::LEVELS {
            let ct = if key < SirirajScore::LEVELS { CtReading::Positive } else { CtReading::Negative };
            Observation::Clinical { ct, siriraj: SirirajScore::from_offset(key % SirirajScore::LEVELS) }
        } else {
            Observation::dsa(Conditions::from_index(key - 2 * SirirajScore::LEVELS))
        }
    }

    /// Clinical bundles in key order.
    pub fn clinical_alphabet() -> impl Iterator<Item = Observation> {
        (0..2 * SirirajScore::LEVELS).map(Observation::from_key)
    }

    /// DSA reports in key order.
    pub fn dsa_alphabet() -> impl Iterator<Item = Observation> {
        Conditions::all().map(Observation::dsa)
    }

    /// Observations that can follow `action`.
    pub fn alphabet_for(action: Action) -> Box<dyn Iterator<Item = Observation>> {
        if action == Action::Dsa {
            Box::new(Self::dsa_alphabet())
        } else {
            Box::new(Self::clinical_alphabet())
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Clinical { ct, siriraj } => {
                let ct = match ct {
                    CtReading::Positive => "CT+",
                    CtReading::Negative => "CT-",
                };
                write!(f, "{ct} siriraj={:+}", siriraj.value())
            }
            Observation::DsaReport { pred_ane, pred_avm, pred_occ } => {
                let c = Conditions::from_flags(*pred_ane, *pred_avm, *pred_occ);
                write!(f, "DSA[{c}]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditions_round_trip_flags() {
        for c in Conditions::all() {
            let s = PatientState::from_conditions(c, 3);
            assert_eq!(s.conditions(), c);
            assert_eq!(s.t, 3);
        }
        assert_eq!(Conditions::from_flags(true, false, false).index(), 4);
        assert_eq!(Conditions::from_flags(false, false, true).index(), 1);
    }

    #[test]
    fn observation_keys_are_dense() {
        for k in 0..Observation::ALPHABET {
            assert_eq!(Observation::from_key(k).key(), k);
        }
    }

    #[test]
    fn siriraj_range_is_enforced() {
        assert!(SirirajScore::new(-5).is_ok());
        assert!(SirirajScore::new(5).is_ok());
        assert!(SirirajScore::new(6).is_err());
        assert!(SirirajScore::new(-6).is_err());
        let err = serde_json::from_str::<Observation>(r#"{"kind":"clinical","ct":"CT_NEGATIVE","siriraj":7}"#);
        assert!(err.is_err());
    }

    #[test]
    fn action_names_parse() {
        for a in Action::ALL {
            assert_eq!(a.as_str().parse::<Action>().unwrap(), a);
        }
        assert_eq!("coil".parse::<Action>().unwrap(), Action::Coil);
        assert!("SLEEP".parse::<Action>().is_err());
        assert_eq!(serde_json::to_string(&Action::Disc).unwrap(), "\"DISC\"");
    }

    #[test]
    fn observation_json_shape() {
        let o = Observation::clinical(CtReading::Positive, -2).unwrap();
        assert_eq!(serde_json::to_string(&o).unwrap(), r#"{"kind":"clinical","ct":"CT_POSITIVE","siriraj":-2}"#);
        let d = Observation::dsa(Conditions::from_flags(true, false, true));
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"kind":"dsa_report","pred_ane":true,"pred_avm":false,"pred_occ":true}"#
        );
    }
}
