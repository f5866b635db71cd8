//! Seeded random streams.
//!
//! Every random quantity in an experiment comes from a ChaCha8 stream whose
//! seed is derived from `(master seed, trial, purpose, index)`. Streams never
//! share state, so trials produce identical output whether they run serially
//! or on many workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for within a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    GroundTruth = 1,
    Explore = 2,
    Environment = 3,
    Evaluation = 4,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for `(master, trial, purpose, index)`.
pub fn stream(master: u64, trial: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut state = master;
    let mut mix = |x: u64| {
        state ^= x;
        splitmix64(&mut state)
    };
    mix(trial);
    mix(purpose as u64);
    mix(index);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
