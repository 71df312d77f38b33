//! Domain types, parameters and the generative stroke model.

mod generative;
mod params;
mod state;

pub use generative::{sample_initial_state, Model, Step};
pub use params::{
    ConditionRates, InitialMixture, ModelParams, NoiseLevel, PerNoise, RewardTable, SirirajClass, SirirajTable,
    SirirajTables,
};
pub use state::{
    Action, Condition, Conditions, CtReading, Observation, ParseActionError, PatientState, SirirajRangeError,
    SirirajScore,
};

pub(crate) use params::merge_json;
