//! Fixtures shared by the benchmarks.

use pecf_core::data::{prepare, PrepareConfig};
use pecf_core::synth::{generate_synthetic, SynthConfig};
use pecf_core::{RatingDataset, SplitSpec};

/// Two-block synthetic data with five sampled zeros per positive.
pub fn synthetic_dataset(users: usize, items: usize) -> RatingDataset {
    let raw = generate_synthetic(&SynthConfig { users, items, ..SynthConfig::default() }).expect("valid synthetic config");
    let config = PrepareConfig { zero_seed: 1, split: SplitSpec::new([0.6, 0.2, 0.2], 2).unwrap(), ..PrepareConfig::default() };
    prepare(raw, &config).expect("synthetic data prepares")
}
