//! Reproducible random substreams.
//!
//! Every random draw in the crate comes from a [`SeedStream`]: a 64-bit key
//! that can be split into labelled children. A child depends only on the
//! parent key and the label, so replications, grid cells and doubling rounds
//! receive the same randomness no matter in which order (or on which thread)
//! they are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedStream(u64);

// Labels used across the crate. Keeping them in one place guarantees that
// sibling streams never collide.
pub const TAG_DATA: u64 = 0x6461_7461;
pub const TAG_FIT: u64 = 0x0066_6974;
pub const TAG_ROUND: u64 = 0x726f_756e;
pub const TAG_CELL: u64 = 0x6365_6c6c;
pub const TAG_INIT: u64 = 0x696e_6974;

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream(splitmix64(seed ^ 0x5eed_5eed_5eed_5eed))
    }

    pub fn key(self) -> u64 {
        self.0
    }

    pub fn child(self, tag: u64) -> Self {
        SeedStream(splitmix64(self.0 ^ splitmix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15))))
    }

    pub fn child2(self, tag: u64, index: u64) -> Self {
        self.child(tag).child(index)
    }

    pub fn rng(self) -> StreamRng {
        StreamRng::seed_from_u64(self.0)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
