//! Seed derivation for reproducible runs.
//!
//! Every episode gets independent ChaCha8 streams keyed by the master seed,
//! the replication index and a purpose tag. Streams for index `k` do not
//! depend on which policy runs or on which worker picks the episode up.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Drawing the initial patient state. Shared by all policies.
    Initial = 0,
    /// Transition and observation noise.
    Environment = 1,
    /// Policy randomness, including the planner's scenario draws.
    Policy = 2,
    /// Particle-filter resampling.
    Filter = 3,
}

const PURPOSES: u64 = 4;

pub fn stream(master_seed: u64, index: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}
