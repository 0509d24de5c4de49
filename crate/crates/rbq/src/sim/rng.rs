//! Deterministic stream-split random numbers.
//!
//! Each replication owns two counter-based ChaCha streams derived from
//! `(seed, replication, role)`, one for the arrival side and one for the
//! service side, so trajectories are reproducible regardless of event
//! interleaving or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub(crate) enum StreamRole {
    Arrival = 0,
    Service = 1,
}

pub(crate) fn stream(seed: u64, replication: u32, role: StreamRole) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(replication) << 1) | role as u64);
    rng
}
