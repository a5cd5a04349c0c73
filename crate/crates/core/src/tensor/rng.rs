//! Counter-based random streams.
//!
//! Draws are a pure function of (seed, stream label, counter), so any stream
//! can be checkpointed as a single integer and substreams never interfere
//! with each other regardless of draw order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::{Real, TensorData};

const TWO_POW_53: f64 = 9007199254740992.0;

fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Seedable, seekable random stream with label-derived substreams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    /// Independent stream derived from this stream's seed and a label.
    pub fn substream(&self, label: &str) -> Self {
        Self::with_stream(self.seed, fnv1a64(label))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Position in the underlying word stream; draws consumed so far.
    pub fn counter(&self) -> u64 {
        u64::try_from(self.rng.get_word_pos()).expect("stream position exceeds u64")
    }

    pub fn set_counter(&mut self, counter: u64) {
        self.rng.set_word_pos(counter as u128);
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform01(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / TWO_POW_53
    }

    /// Standard normal draw (Box-Muller, one output per uniform pair).
    pub fn normal(&mut self) -> f64 {
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 / TWO_POW_53; // (0, 1]
        let u2 = (self.rng.next_u64() >> 11) as f64 / TWO_POW_53; // [0, 1)
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Tensor of i.i.d. standard normal draws.
    pub fn normal_tensor<T: Real>(&mut self, shape: Vec<usize>) -> TensorData<T> {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| T::from_f64(self.normal())).collect();
        TensorData::new(shape, data).expect("shape/product consistent")
    }

    /// Seeded Fisher-Yates permutation of `0..n`.
    pub fn shuffled_indices(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (self.rng.next_u64() % (i as u64 + 1)) as usize;
            idx.swap(i, j);
        }
        idx
    }
}
