//! Seeded, stream-separated randomness.
//!
//! Every consumer gets its own ChaCha8 stream derived from one experiment seed.
//! ChaCha8 output is specified bit-for-bit, so draws are identical across
//! platforms for the same `(seed, stream)`.

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Named consumers of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// The server's per-round choice of pool member (and its resampling).
    ServerPool,
    /// Dataset generation, held-out split and partition shuffling.
    Data,
    /// The adversary's own search randomness.
    Attack,
    ModelInit,
    /// Construction of randomized aggregator pools.
    PoolBuild,
    /// Monte Carlo panel sampling.
    MonteCarlo,
    /// Mini-batch sampling of one worker.
    Worker(u32),
}

impl Stream {
    pub fn id(self) -> u64 {
        match self {
            Stream::ServerPool => 1,
            Stream::Data => 2,
            Stream::Attack => 3,
            Stream::ModelInit => 4,
            Stream::PoolBuild => 5,
            Stream::MonteCarlo => 6,
            Stream::Worker(i) => 1 << 32 | u64::from(i),
        }
    }
}

/// A deterministic random stream for one consumer.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: Stream,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream.id());
        SeededRng { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> Stream {
        self.stream
    }

    /// A child stream for sub-experiment `index`, e.g. one Monte Carlo trial.
    pub fn fork(&self, index: u64) -> SeededRng {
        let child_seed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03))
            .rotate_left(17);
        SeededRng::new(child_seed, self.stream)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.inner.try_fill_bytes(dest)
    }
}
