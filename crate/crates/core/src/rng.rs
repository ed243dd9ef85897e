//! Seed plumbing. Every random draw in the crate comes from a stream derived
//! from one root seed, a stream name, and an index, so toggling one component
//! of an experiment never perturbs the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Root of a family of named random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    root: u64,
}

impl Streams {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn seed(&self, name: &str, index: u64) -> u64 {
        let a = splitmix64(self.root ^ fnv1a(name.as_bytes()));
        splitmix64(a ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
    }

    pub fn stream(&self, name: &str, index: u64) -> Rng {
        Rng::seed_from_u64(self.seed(name, index))
    }

    /// A child family, e.g. one per learner step.
    pub fn child(&self, name: &str, index: u64) -> Streams {
        Streams::new(self.seed(name, index))
    }
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
