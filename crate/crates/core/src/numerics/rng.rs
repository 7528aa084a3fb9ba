use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a path of labels into a single stream id.
///
/// Used to name sub-streams hierarchically, e.g. `[TRAIN, seed, condition]`,
/// so that adding a new consumer never shifts the draws of an existing one.
pub fn stream_label(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A reproducible random stream identified by `(master_seed, stream_id)`.
///
/// Backed by ChaCha8 keyed from the master seed, with the stream id selecting
/// the ChaCha stream word. Output does not depend on platform or on how many
/// other streams were derived.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

pub fn derive_stream(master_seed: u64, stream_id: u64) -> RngStream {
    let mut key = [0u8; 32];
    let mut s = master_seed;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut inner = ChaCha8Rng::from_seed(key);
    inner.set_stream(stream_id);
    RngStream {
        master_seed,
        stream_id,
        inner,
    }
}

impl RngStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derives a child stream from this stream's master seed.
    pub fn child(&self, parts: &[u64]) -> RngStream {
        let mut path = Vec::with_capacity(parts.len() + 1);
        path.push(self.stream_id);
        path.extend_from_slice(parts);
        derive_stream(self.master_seed, stream_label(&path))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform<T: Real>(&mut self, lo: T, hi: T) -> T {
        lo + (hi - lo) * T::of(self.next_f64())
    }

    pub fn normal<T: Real>(&mut self) -> T {
        T::of(self.inner.sample::<f64, _>(StandardNormal))
    }

    /// `n` independent N(0, 1) draws.
    pub fn standard_normal<T: Real>(&mut self, n: usize) -> Vec<T> {
        (0..n).map(|_| self.normal()).collect()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
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
