//! Deterministic, splittable random streams.
//!
//! A stream is a ChaCha12 generator keyed by the master seed with the stream
//! index written into ChaCha's 64-bit stream-id word, so distinct indices
//! address disjoint keystreams and the sequence for a given
//! `(master_seed, stream_index)` does not depend on what other streams did.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    inner: ChaCha12Rng,
}

/// Returns the stream addressed by `(master_seed, stream_index)`.
pub fn derive_stream(master_seed: u64, stream_index: u64) -> RngStream {
    let mut inner = ChaCha12Rng::seed_from_u64(master_seed);
    inner.set_stream(stream_index);
    RngStream {
        master_seed,
        stream_index,
        inner,
    }
}

impl RngStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
