//! Named random streams derived from one session seed.
//!
//! Each stream is an independent ChaCha8 stream keyed by the same seed, so
//! drawing more attack randomness never shifts what the preparation or
//! insertion streams produce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Preparation = 1,
    Insertion = 2,
    Measurement = 3,
    Attack = 4,
    Secrets = 5,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// The full set of streams for one session.
#[derive(Debug, Clone)]
pub struct SessionRng {
    pub preparation: ChaCha8Rng,
    pub insertion: ChaCha8Rng,
    pub measurement: ChaCha8Rng,
    pub attack: ChaCha8Rng,
    pub secrets: ChaCha8Rng,
}

impl SessionRng {
    pub fn new(seed: u64) -> Self {
        Self {
            preparation: stream(seed, Stream::Preparation),
            insertion: stream(seed, Stream::Insertion),
            measurement: stream(seed, Stream::Measurement),
            attack: stream(seed, Stream::Attack),
            secrets: stream(seed, Stream::Secrets),
        }
    }
}
