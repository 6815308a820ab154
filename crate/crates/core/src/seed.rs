//! Deterministic derivation of independent random streams from one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named consumers of randomness in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Split,
    ZeroSampling,
    Init,
    Partition,
    Synthetic,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Split => 0x5350_4c49,
            Stream::ZeroSampling => 0x5a45_524f,
            Stream::Init => 0x494e_4954,
            Stream::Partition => 0x5041_5254,
            Stream::Synthetic => 0x5359_4e54,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(root: u64, stream: Stream) -> u64 {
    splitmix64(root ^ splitmix64(stream.tag()))
}

/// Seed for the `index`-th factor model of an ensemble. Component 0 keeps the
/// base seed so that every method's first component is the same WMF fit.
pub fn component_seed(base: u64, index: usize) -> u64 {
    if index == 0 {
        base
    } else {
        splitmix64(base.wrapping_add((index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
