//! Block-structured synthetic implicit feedback.
//!
//! Users and items are split into `blocks` groups. Group `b` of users and
//! group `b` of items share their own random rank-`rank` factor pair; the
//! positives of a block are its pairs whose noisy score lies in the top
//! `density` fraction. Pairs across different groups never become positive.
//! With one block the data is globally low rank; with more blocks a single
//! rank-`rank` factorization cannot cover every block at once.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::data::RawRating;
use crate::error::{Error, Result};
use crate::seed;

/// Rating written for positives, so that the default five-star threshold
/// binarizes synthetic files the same way as MovieLens.
pub const POSITIVE_RATING: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    pub blocks: usize,
    pub rank: usize,
    /// Standard deviation of Gaussian noise added to the block scores.
    pub noise: f64,
    /// Fraction of each block's pairs that are positive.
    pub density: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { users: 400, items: 300, blocks: 2, rank: 5, noise: 0.1, density: 0.1, seed: 0 }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.rank == 0 {
            return Err(Error::Config("synth: blocks and rank must be at least 1".into()));
        }
        if self.users < self.blocks || self.items < self.blocks {
            return Err(Error::Config(format!(
                "synth: {} users x {} items cannot be split into {} blocks",
                self.users, self.items, self.blocks
            )));
        }
        if !(self.density > 0.0 && self.density < 1.0) {
            return Err(Error::Config(format!("synth: density must lie in (0, 1), got {}", self.density)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config(format!("synth: noise must be non-negative, got {}", self.noise)));
        }
        Ok(())
    }
}

fn groups(len: usize, blocks: usize, rng: &mut impl rand::Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(rng);
    let mut out = vec![Vec::new(); blocks];
    for (k, idx) in order.into_iter().enumerate() {
        out[k % blocks].push(idx);
    }
    for g in &mut out {
        g.sort_unstable();
    }
    out
}

/// Positive records, ordered by user then item.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<RawRating>> {
    config.validate()?;
    let mut rng = seed::rng(seed::derive(config.seed, seed::Stream::Synthetic));
    let user_groups = groups(config.users, config.blocks, &mut rng);
    let item_groups = groups(config.items, config.blocks, &mut rng);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let scale = 1.0 / (config.rank as f64).sqrt();

    let mut positives: Vec<(usize, usize)> = Vec::new();
    for (users, items) in user_groups.iter().zip(&item_groups) {
        let a: Vec<f64> = (0..users.len() * config.rank).map(|_| gauss()).collect();
        let b: Vec<f64> = (0..items.len() * config.rank).map(|_| gauss()).collect();
        let mut scored = Vec::with_capacity(users.len() * items.len());
        for (ui, &user) in users.iter().enumerate() {
            let av = &a[ui * config.rank..(ui + 1) * config.rank];
            for (ii, &item) in items.iter().enumerate() {
                let bv = &b[ii * config.rank..(ii + 1) * config.rank];
                let s: f64 = av.iter().zip(bv).map(|(x, y)| x * y).sum::<f64>() * scale;
                scored.push((s + config.noise * gauss(), user, item));
            }
        }
        let keep = ((scored.len() as f64) * config.density).round().max(1.0) as usize;
        scored.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        positives.extend(scored[..keep].iter().map(|&(_, u, i)| (u, i)));
    }
    positives.sort_unstable();
    Ok(positives
        .into_iter()
        .map(|(u, i)| RawRating { user: format!("u{u}"), item: format!("i{i}"), rating: POSITIVE_RATING })
        .collect())
}

/// Writes `user,item,rating` lines.
pub fn write_triplets(mut out: impl Write, records: &[RawRating]) -> Result<()> {
    for r in records {
        writeln!(out, "{},{},{}", r.user, r.item, r.rating)?;
    }
    Ok(())
}

pub fn write_synthetic(path: impl AsRef<Path>, config: &SynthConfig) -> Result<usize> {
    let records = generate_synthetic(config)?;
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_triplets(file, &records)?;
    Ok(records.len())
}
