//! Counter-based random streams.
//!
//! Every trial owns independent ChaCha streams addressed by
//! `(root_seed, purpose, trial_index)`, so a trial's draws never depend on
//! which worker runs it or on how many trials ran before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Keeping purposes apart lets noisy and
/// noiseless runs share the same user snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamPurpose {
    Population = 1,
    FeedbackNoise = 2,
    GroupSelection = 3,
    Validation = 4,
}

pub fn stream(root_seed: u64, purpose: StreamPurpose, index: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&root_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: [u64; 4] = stream(7, StreamPurpose::Population, 3).random();
        let b: [u64; 4] = stream(7, StreamPurpose::Population, 3).random();
        let c: [u64; 4] = stream(7, StreamPurpose::Population, 4).random();
        let d: [u64; 4] = stream(7, StreamPurpose::FeedbackNoise, 3).random();
        let e: [u64; 4] = stream(8, StreamPurpose::Population, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_ne!(a, e);
    }
}
