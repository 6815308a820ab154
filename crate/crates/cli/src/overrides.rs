//! Command-line flags that override individual config keys.

use std::path::PathBuf;

use anyhow::bail;

use crate::config::{AlphaSetting, Method, RunConfig};

/// Each flag, when given, replaces the config key of the same name.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// Rating file.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// `movielens` (tab-separated) or `triplet` (comma-separated).
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub binarize: Option<bool>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub c_pos: Option<f64>,
    #[arg(long)]
    pub c_zero: Option<f64>,
    #[arg(long)]
    pub zero_ratio: Option<f64>,
    #[arg(long)]
    pub zero_rate: Option<f64>,
    /// Train,validation,test proportions, e.g. `3,1,1`.
    #[arg(long, value_delimiter = ',')]
    pub split: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_u: Option<f64>,
    #[arg(long)]
    pub lambda_v: Option<f64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub shrinkage: Option<f64>,
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long)]
    pub em_iters: Option<usize>,
    /// `dynamic` or a fixed weight in (0, 1).
    #[arg(long)]
    pub alpha: Option<AlphaSetting>,
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<usize>>,
    #[arg(long)]
    pub exclude_seen: Option<bool>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

macro_rules! set {
    ($config:ident, $overrides:ident, $($field:ident),*) => {
        $(if let Some(v) = $overrides.$field.clone() {
            $config.$field = v;
        })*
    };
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) -> anyhow::Result<()> {
        let o = self;
        set!(config, o, format, binarize, threshold, c_pos, c_zero, zero_ratio, seed, method, d, lambda, sweeps);
        set!(config, o, nu, sigma, rounds, shrinkage, components, em_iters, alpha, alpha_grid, cutoffs, exclude_seen);
        set!(config, o, output);
        if let Some(split) = &o.split {
            let Ok(split) = <[f64; 3]>::try_from(split.as_slice()) else {
                bail!("split: expected three comma-separated proportions, got {split:?}");
            };
            config.split = split;
        }
        if o.dataset.is_some() {
            config.dataset = o.dataset.clone();
        }
        for (slot, value) in [
            (&mut config.zero_rate, o.zero_rate),
            (&mut config.lambda_u, o.lambda_u),
            (&mut config.lambda_v, o.lambda_v),
            (&mut config.init_scale, o.init_scale),
        ] {
            if value.is_some() {
                *slot = value;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_replace_only_what_they_name() {
        let o = Overrides {
            nu: Some(3.0),
            split: Some(vec![3.0, 1.0, 1.0]),
            lambda_u: Some(0.5),
            method: Some(Method::Wmf),
            ..Overrides::default()
        };
        let mut cfg = RunConfig::default();
        o.apply(&mut cfg).unwrap();
        let expected = RunConfig {
            nu: 3.0,
            split: [3.0, 1.0, 1.0],
            lambda_u: Some(0.5),
            method: Method::Wmf,
            ..RunConfig::default()
        };
        assert_eq!(cfg, expected);
    }

    #[test]
    fn split_needs_three_values() {
        let o = Overrides { split: Some(vec![1.0, 1.0]), ..Overrides::default() };
        assert!(o.apply(&mut RunConfig::default()).unwrap_err().to_string().starts_with("split"));
    }
}
