use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seeded random stream. Equal seeds and call sequences give equal variates,
/// and the full generator state serializes, so a restored stream continues
/// exactly where the saved one stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream. The child seed is
    /// `splitmix64(seed + key * 0x9E3779B97F4A7C15)`; it depends only on the
    /// parent's seed and `key`, never on how far the parent has advanced.
    pub fn fork(&self, key: u64) -> RngStream {
        RngStream::new(splitmix64(self.seed.wrapping_add(key.wrapping_mul(GOLDEN))))
    }

    /// Draws a fresh seed from this stream (advancing it) and returns a
    /// stream built from it. Used to hand out per-round substreams.
    pub fn spawn(&mut self) -> RngStream {
        RngStream::new(self.inner.next_u64())
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
