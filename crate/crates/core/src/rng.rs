//! Counter-based random streams.
//!
//! Every random draw in the sampler comes from a stream addressed by a key
//! `(seed, iteration, block, document, pixel)`. Streams are independent of
//! the order in which they are opened, so per-document work can run on any
//! number of threads without changing a single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Sampler blocks, used as one coordinate of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Block {
    Pi = 1,
    MixingLevel = 2,
    Membership = 3,
    Mean = 4,
    Variance = 5,
    Init = 6,
    Synth = 7,
    Slic = 8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub iteration: u64,
    pub block: Block,
    pub document: u64,
    pub pixel: u64,
}

impl StreamKey {
    pub fn new(seed: u64, iteration: u64, block: Block, document: u64, pixel: u64) -> Self {
        Self {
            seed,
            iteration,
            block,
            document,
            pixel,
        }
    }

    pub fn rng(&self) -> StreamRng {
        let words = [self.seed, self.iteration, self.block as u64, self.document, self.pixel];
        let mut state = 0x243f_6a88_85a3_08d3_u64;
        let mut seed = [0u8; 32];
        for (i, w) in words.iter().enumerate() {
            state = splitmix64(state ^ w.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64));
        }
        for chunk in seed.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// Shorthand for `StreamKey::new(..).rng()`.
pub fn stream(seed: u64, iteration: u64, block: Block, document: u64, pixel: u64) -> StreamRng {
    StreamKey::new(seed, iteration, block, document, pixel).rng()
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
