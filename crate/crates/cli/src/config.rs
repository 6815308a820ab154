//! Run configuration: a TOML file, defaults for every key, and conversion
//! into the core crate's per-module configs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use pecf_core::data::{PrepareConfig, ZeroSampling};
use pecf_core::seed::{self, Stream};
use pecf_core::{AlphaStrategy, EmConfig, PecfConfig, RatingFormat, SplitSpec, WmfConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Wmf,
    Pecf,
    L2boost,
    Randem,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Wmf => "wmf",
            Method::Pecf => "pecf",
            Method::L2boost => "l2boost",
            Method::Randem => "randem",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "wmf" => Ok(Method::Wmf),
            "pecf" => Ok(Method::Pecf),
            "l2boost" => Ok(Method::L2boost),
            "randem" => Ok(Method::Randem),
            other => bail!("method: expected wmf, pecf, l2boost or randem, got {other:?}"),
        }
    }
}

/// `"dynamic"` or a fixed weight in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSetting {
    Fixed(f64),
    Named(String),
}

impl Default for AlphaSetting {
    fn default() -> Self {
        AlphaSetting::Named("dynamic".into())
    }
}

impl AlphaSetting {
    pub fn strategy(&self) -> anyhow::Result<AlphaStrategy> {
        match self {
            AlphaSetting::Fixed(a) => Ok(AlphaStrategy::Fixed(*a)),
            AlphaSetting::Named(s) if s == "dynamic" => Ok(AlphaStrategy::Dynamic),
            AlphaSetting::Named(s) => match s.parse::<f64>() {
                Ok(a) => Ok(AlphaStrategy::Fixed(a)),
                Err(_) => bail!("alpha: expected \"dynamic\" or a number in (0, 1), got {s:?}"),
            },
        }
    }
}

impl fmt::Display for AlphaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSetting::Fixed(a) => write!(f, "{a}"),
            AlphaSetting::Named(s) => f.write_str(s),
        }
    }
}

impl FromStr for AlphaSetting {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let setting = match s.parse::<f64>() {
            Ok(a) => AlphaSetting::Fixed(a),
            Err(_) => AlphaSetting::Named(s.to_string()),
        };
        setting.strategy()?;
        Ok(setting)
    }
}

/// Everything that determines a run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    /// `movielens` (tab-separated) or `triplet` (comma-separated).
    pub format: String,
    /// Ratings at or above `threshold` become 1, the rest 0.
    pub binarize: bool,
    pub threshold: f64,
    pub c_pos: f64,
    pub c_zero: f64,
    /// Expected sampled zero entries per positive; 0 disables sampling.
    pub zero_ratio: f64,
    /// Inclusion probability per unobserved pair; overrides `zero_ratio`.
    pub zero_rate: Option<f64>,
    /// Train / validation / test proportions, normalized.
    pub split: [f64; 3],
    /// Root seed; every random stream of the run derives from it.
    pub seed: u64,
    pub method: Method,
    pub d: usize,
    pub lambda: f64,
    pub lambda_u: Option<f64>,
    pub lambda_v: Option<f64>,
    pub sweeps: usize,
    pub init_scale: Option<f64>,
    pub nu: f64,
    pub sigma: f64,
    /// Rounds after the base model (pecf, l2boost).
    pub rounds: usize,
    pub shrinkage: f64,
    /// Mixture size for randem.
    pub components: usize,
    pub em_iters: usize,
    pub alpha: AlphaSetting,
    pub alpha_grid: Vec<f64>,
    pub cutoffs: Vec<usize>,
    /// Drop each user's train and validation positives from the ranking.
    pub exclude_seen: bool,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pecf = PecfConfig::default();
        let wmf = WmfConfig::default();
        RunConfig {
            dataset: None,
            format: "movielens".into(),
            binarize: true,
            threshold: 5.0,
            c_pos: 1.0,
            c_zero: 0.01,
            zero_ratio: 5.0,
            zero_rate: None,
            split: [0.6, 0.2, 0.2],
            seed: 0,
            method: Method::Pecf,
            d: wmf.dim,
            lambda: wmf.lambda_u,
            lambda_u: None,
            lambda_v: None,
            sweeps: wmf.sweeps,
            init_scale: None,
            nu: pecf.nu,
            sigma: pecf.sigma,
            rounds: pecf.max_rounds,
            shrinkage: 0.5,
            components: EmConfig::default().components,
            em_iters: EmConfig::default().iterations,
            alpha: AlphaSetting::default(),
            alpha_grid: pecf.alpha_grid,
            cutoffs: pecf_core::eval::DEFAULT_CUTOFFS.to_vec(),
            exclude_seen: true,
            output: PathBuf::from("runs/default"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn dataset_path(&self) -> anyhow::Result<&Path> {
        self.dataset.as_deref().context("dataset: no input file given (set `dataset` or pass --dataset)")
    }

    pub fn rating_format(&self) -> anyhow::Result<RatingFormat> {
        Ok(self.format.parse()?)
    }

    pub fn prepare_config(&self) -> anyhow::Result<PrepareConfig> {
        if !self.threshold.is_finite() {
            bail!("threshold: must be finite, got {}", self.threshold);
        }
        for (name, value) in [("c_pos", self.c_pos), ("c_zero", self.c_zero)] {
            if !(value > 0.0 && value.is_finite()) {
                bail!("{name}: confidence must be positive, got {value}");
            }
        }
        if !(self.zero_ratio >= 0.0 && self.zero_ratio.is_finite()) {
            bail!("zero_ratio: must be non-negative, got {}", self.zero_ratio);
        }
        let zeros = match self.zero_rate {
            Some(rate) => ZeroSampling::Rate(rate),
            None if self.zero_ratio == 0.0 => ZeroSampling::None,
            None => ZeroSampling::PerPositive(self.zero_ratio),
        };
        let split = SplitSpec::from_proportions(self.split, seed::derive(self.seed, Stream::Split))?;
        Ok(PrepareConfig {
            binarize_threshold: self.binarize.then_some(self.threshold),
            c_pos: self.c_pos,
            c_zero: self.c_zero,
            zeros,
            zero_seed: seed::derive(self.seed, Stream::ZeroSampling),
            split,
        })
    }

    pub fn wmf_config(&self) -> anyhow::Result<WmfConfig> {
        let config = WmfConfig {
            dim: self.d,
            lambda_u: self.lambda_u.unwrap_or(self.lambda),
            lambda_v: self.lambda_v.unwrap_or(self.lambda),
            sweeps: self.sweeps,
            init_scale: self.init_scale,
            seed: seed::derive(self.seed, Stream::Init),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn pecf_config(&self) -> anyhow::Result<PecfConfig> {
        let config = PecfConfig {
            nu: self.nu,
            sigma: self.sigma,
            max_rounds: self.rounds,
            alpha: self.alpha.strategy()?,
            alpha_grid: self.alpha_grid.clone(),
            wmf: self.wmf_config()?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn em_config(&self) -> anyhow::Result<EmConfig> {
        if self.components == 0 {
            bail!("components: must be at least 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            bail!("sigma: must be positive, got {}", self.sigma);
        }
        Ok(EmConfig {
            components: self.components,
            iterations: self.em_iters,
            sigma: self.sigma,
            partition_seed: seed::derive(self.seed, Stream::Partition),
            wmf: self.wmf_config()?,
        })
    }

    /// Checks every field the configured method reads.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.dataset_path()?;
        self.rating_format()?;
        self.prepare_config()?;
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            bail!("cutoffs: need at least one positive cutoff, got {:?}", self.cutoffs);
        }
        match self.method {
            Method::Wmf => {
                self.wmf_config()?;
            }
            Method::Pecf => {
                self.pecf_config()?;
            }
            Method::L2boost => {
                self.wmf_config()?;
                if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
                    bail!("shrinkage: must lie in (0, 1], got {}", self.shrinkage);
                }
            }
            Method::Randem => {
                self.em_config()?;
            }
        }
        Ok(())
    }

    /// Number of rows the metrics file will hold.
    pub fn curve_len(&self) -> usize {
        match self.method {
            Method::Wmf => 1,
            Method::Pecf | Method::L2boost => self.rounds + 1,
            Method::Randem => self.em_iters + 1,
        }
    }
}
