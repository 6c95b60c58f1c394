//! Seeded random streams.
//!
//! Every random decision in a run is drawn from a named substream of one
//! 64-bit master seed, so runs are bitwise reproducible and independent parts
//! (generators, scheduler, clean-up selection, delays) never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Named substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Scheduler,
    Cleanup,
    Delay,
    Trace,
    Trial(u64),
    Generator(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Scheduler => 1,
            Stream::Cleanup => 2,
            Stream::Delay => 3,
            Stream::Trace => 4,
            Stream::Trial(i) => (1 << 40) + i,
            Stream::Generator(i) => (1 << 48) + i,
        }
    }
}

pub fn substream(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
