//! Deterministic seed derivation.
//!
//! Every random quantity in a run is drawn from a stream whose seed is a
//! pure function of the master seed and a tag path (trial index, phase,
//! agent, iteration). Streams are therefore independent of scheduling:
//! trials and per-agent updates can run in any order or in parallel without
//! changing a single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Phase tags for seed paths.
pub mod tag {
    pub const TRIAL: u64 = 0x01;
    pub const SCENARIO: u64 = 0x02;
    pub const POA: u64 = 0x03;
    pub const NBP: u64 = 0x04;
    pub const AGENT: u64 = 0x05;
}

/// One round of the splitmix64 output function.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `base` and a tag path, by folding each tag through
/// splitmix64.
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &t in tags {
        state = splitmix64(state ^ splitmix64(t));
    }
    state
}

/// Seeded stream for a tag path.
pub fn stream(base: u64, tags: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive(base, tags))
}
