//! Weighted matrix factorization solved by alternating exact block updates.
//!
//! The objective over the training entries is
//!
//! ```text
//! sum c_ij * w_ij * (t_ij - u_i . v_j)^2 + lambda_u/2 * sum |u_i|^2 + lambda_v/2 * sum |v_j|^2
//! ```
//!
//! where `c` is the entry confidence, `w` an extra per-entry weight layered on
//! top of it and `t` the target (the rating, or a residual when boosting).
//! With `V` fixed each `u_i` has the closed form
//! `(sum cw v v^T + lambda_u/2 I) u_i = sum cw t v`, and symmetrically for items,
//! so every half-sweep is an exact block minimization and the objective never
//! increases.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::data::{Adjacency, Observation, RatingDataset};
use crate::error::{Error, Result};
use crate::{seed, Predictor};

#[derive(Debug, Clone, PartialEq)]
pub struct WmfConfig {
    pub dim: usize,
    pub lambda_u: f64,
    pub lambda_v: f64,
    /// Number of (user half-sweep, item half-sweep) alternations.
    pub sweeps: usize,
    /// Standard deviation of the Gaussian initialization; `None` means `0.1 / sqrt(dim)`.
    pub init_scale: Option<f64>,
    pub seed: u64,
}

impl Default for WmfConfig {
    fn default() -> Self {
        WmfConfig { dim: 20, lambda_u: 0.1, lambda_v: 0.1, sweeps: 15, init_scale: None, seed: 0 }
    }
}

impl WmfConfig {
    /// Regularizers derived from the embedding prior and rating noise scales.
    pub fn with_prior(mut self, prior: &PriorConfig) -> Result<Self> {
        let lambda = prior.regularizer()?;
        self.lambda_u = lambda;
        self.lambda_v = lambda;
        Ok(self)
    }

    pub fn init_std(&self) -> f64 {
        self.init_scale.unwrap_or(0.1 / (self.dim.max(1) as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("d: embedding dimension must be at least 1".into()));
        }
        if !(self.lambda_u >= 0.0 && self.lambda_u.is_finite()) {
            return Err(Error::Config(format!("lambda_u: must be non-negative, got {}", self.lambda_u)));
        }
        if !(self.lambda_v >= 0.0 && self.lambda_v.is_finite()) {
            return Err(Error::Config(format!("lambda_v: must be non-negative, got {}", self.lambda_v)));
        }
        if self.sweeps == 0 {
            return Err(Error::Config("sweeps: must be at least 1".into()));
        }
        let std = self.init_std();
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::Config(format!("init_scale: must be positive, got {std}")));
        }
        Ok(())
    }
}

/// Gaussian embedding prior `N(0, sigma0^2 I)` and rating noise `N(., sigma_r^2)`.
/// MAP estimation under these is WMF with `lambda = sigma_r^2 / sigma0^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    pub sigma0: f64,
    pub sigma_r: f64,
}

impl PriorConfig {
    pub fn regularizer(&self) -> Result<f64> {
        if !(self.sigma0 > 0.0 && self.sigma_r > 0.0) {
            return Err(Error::Config(format!(
                "prior scales must be positive (sigma0 = {}, sigma_r = {})",
                self.sigma0, self.sigma_r
            )));
        }
        Ok(self.sigma_r * self.sigma_r / (self.sigma0 * self.sigma0))
    }
}

/// One WMF component. Vectors are stored contiguously: `u_i` occupies
/// `user_factors[i*d .. (i+1)*d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    dim: usize,
    num_users: usize,
    num_items: usize,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
}

impl FactorModel {
    pub fn zeros(dim: usize, num_users: usize, num_items: usize) -> Self {
        FactorModel {
            dim,
            num_users,
            num_items,
            user_factors: vec![0.0; dim * num_users],
            item_factors: vec![0.0; dim * num_items],
        }
    }

    /// Zero-mean Gaussian entries with standard deviation `std`, users first.
    pub fn random(dim: usize, num_users: usize, num_items: usize, std: f64, seed: u64) -> Result<Self> {
        let normal = Normal::new(0.0, std)
            .map_err(|e| Error::Config(format!("init_scale: {e}")))?;
        let mut rng = seed::rng(seed);
        let mut model = Self::zeros(dim, num_users, num_items);
        for x in model.user_factors.iter_mut().chain(model.item_factors.iter_mut()) {
            *x = normal.sample(&mut rng);
        }
        Ok(model)
    }

    /// Builds a model from user-major vectors (`u_i` contiguous).
    pub fn from_vectors(
        dim: usize,
        num_users: usize,
        num_items: usize,
        user_factors: Vec<f64>,
        item_factors: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || user_factors.len() != dim * num_users || item_factors.len() != dim * num_items {
            return Err(Error::DimensionMismatch(format!(
                "expected {}+{} factor values for d={dim}, m={num_users}, n={num_items}, got {}+{}",
                dim * num_users,
                dim * num_items,
                user_factors.len(),
                item_factors.len()
            )));
        }
        Ok(FactorModel { dim, num_users, num_items, user_factors, item_factors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn user_vector(&self, user: usize) -> &[f64] {
        &self.user_factors[user * self.dim..(user + 1) * self.dim]
    }

    pub fn item_vector(&self, item: usize) -> &[f64] {
        &self.item_factors[item * self.dim..(item + 1) * self.dim]
    }

    pub fn user_factors(&self) -> &[f64] {
        &self.user_factors
    }

    pub fn item_factors(&self) -> &[f64] {
        &self.item_factors
    }

    pub fn user_factors_mut(&mut self) -> &mut [f64] {
        &mut self.user_factors
    }

    pub fn item_factors_mut(&mut self) -> &mut [f64] {
        &mut self.item_factors
    }

    pub fn is_finite(&self) -> bool {
        self.user_factors.iter().chain(&self.item_factors).all(|x| x.is_finite())
    }

    /// Frobenius norms of (U, V).
    pub fn norms(&self) -> (f64, f64) {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (norm(&self.user_factors), norm(&self.item_factors))
    }

    pub fn check_shape(&self, dataset: &RatingDataset) -> Result<()> {
        if self.num_users != dataset.num_users() || self.num_items != dataset.num_items() {
            return Err(Error::DimensionMismatch(format!(
                "model is {}x{}, dataset is {}x{}",
                self.num_users,
                self.num_items,
                dataset.num_users(),
                dataset.num_items()
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Predictor for FactorModel {
    fn num_users(&self) -> usize {
        self.num_users
    }

    fn num_items(&self) -> usize {
        self.num_items
    }

    fn score(&self, user: usize, item: usize) -> f64 {
        dot(self.user_vector(user), self.item_vector(item))
    }

    fn user_scores(&self, user: usize, out: &mut [f64]) {
        let u = self.user_vector(user);
        for (slot, v) in out.iter_mut().zip(self.item_factors.chunks_exact(self.dim)) {
            *slot = dot(u, v);
        }
    }
}

/// Per-entry multiplicative weights over the training split, in
/// [`RatingDataset::train`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainWeights(Vec<f64>);

impl TrainWeights {
    pub fn uniform(len: usize) -> Self {
        TrainWeights(vec![1.0; len])
    }

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("train weights must be finite and non-negative, found {w}")));
        }
        Ok(TrainWeights(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Alternating least squares over one dataset with fixed targets and weights.
#[derive(Debug)]
pub struct AlsSolver<'a> {
    dataset: &'a RatingDataset,
    targets: Vec<f64>,
    /// `c_ij * w_ij` per training entry.
    effective: Vec<f64>,
    config: WmfConfig,
}

impl<'a> AlsSolver<'a> {
    /// Solver fitting the training ratings themselves.
    pub fn new(dataset: &'a RatingDataset, weights: &TrainWeights, config: &WmfConfig) -> Result<Self> {
        let targets = dataset.train().iter().map(|e| e.rating).collect();
        Self::with_targets(dataset, targets, weights, config)
    }

    /// Solver fitting arbitrary per-entry targets (e.g. residuals).
    pub fn with_targets(
        dataset: &'a RatingDataset,
        targets: Vec<f64>,
        weights: &TrainWeights,
        config: &WmfConfig,
    ) -> Result<Self> {
        config.validate()?;
        let train = dataset.train();
        if train.is_empty() {
            return Err(Error::EmptySplit("train"));
        }
        if weights.len() != train.len() || targets.len() != train.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} training entries but {} weights and {} targets",
                train.len(),
                weights.len(),
                targets.len()
            )));
        }
        let effective = train.iter().zip(weights.as_slice()).map(|(e, w)| e.confidence * w).collect();
        Ok(AlsSolver { dataset, targets, effective, config: config.clone() })
    }

    pub fn config(&self) -> &WmfConfig {
        &self.config
    }

    pub fn initial_model(&self) -> Result<FactorModel> {
        FactorModel::random(
            self.config.dim,
            self.dataset.num_users(),
            self.dataset.num_items(),
            self.config.init_std(),
            self.config.seed,
        )
    }

    pub fn objective(&self, model: &FactorModel) -> Result<f64> {
        model.check_shape(self.dataset)?;
        if model.dim() != self.config.dim {
            return Err(Error::DimensionMismatch(format!("model d={} vs config d={}", model.dim(), self.config.dim)));
        }
        Ok(objective_value(
            model,
            self.dataset.train(),
            &self.targets,
            &self.effective,
            self.config.lambda_u,
            self.config.lambda_v,
        ))
    }

    /// Exact minimization over every user vector with items fixed.
    pub fn update_users(&self, model: &mut FactorModel) -> Result<()> {
        let FactorModel { dim, user_factors, item_factors, .. } = model;
        solve_side(
            Side::User,
            *dim,
            user_factors,
            item_factors,
            self.dataset.train_by_user(),
            self.dataset.train(),
            &self.targets,
            &self.effective,
            self.config.lambda_u,
        )
    }

    /// Exact minimization over every item vector with users fixed.
    pub fn update_items(&self, model: &mut FactorModel) -> Result<()> {
        let FactorModel { dim, user_factors, item_factors, .. } = model;
        solve_side(
            Side::Item,
            *dim,
            item_factors,
            user_factors,
            self.dataset.train_by_item(),
            self.dataset.train(),
            &self.targets,
            &self.effective,
            self.config.lambda_v,
        )
    }

    /// Runs `config.sweeps` alternations starting from `model`.
    pub fn refine(&self, model: &mut FactorModel) -> Result<()> {
        model.check_shape(self.dataset)?;
        for _ in 0..self.config.sweeps {
            self.update_users(model)?;
            self.update_items(model)?;
        }
        Ok(())
    }

    pub fn fit(&self) -> Result<FactorModel> {
        let mut model = self.initial_model()?;
        self.refine(&mut model)?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy)]
enum Side {
    User,
    Item,
}

#[allow(clippy::too_many_arguments)]
fn solve_side(
    side: Side,
    dim: usize,
    solve_for: &mut [f64],
    fixed: &[f64],
    adjacency: &Adjacency,
    train: &[Observation],
    targets: &[f64],
    effective: &[f64],
    lambda: f64,
) -> Result<()> {
    let ridge = 0.5 * lambda;
    solve_for.par_chunks_mut(dim).enumerate().try_for_each(|(row, out)| {
        let mut gram = vec![0.0; dim * dim];
        let mut rhs = vec![0.0; dim];
        for &slot in adjacency.row(row) {
            let cw = effective[slot];
            if cw == 0.0 {
                continue;
            }
            let e = &train[slot];
            let other = match side {
                Side::User => e.item,
                Side::Item => e.user,
            };
            let v = &fixed[other * dim..(other + 1) * dim];
            let t = cw * targets[slot];
            for a in 0..dim {
                let cva = cw * v[a];
                rhs[a] += t * v[a];
                for b in 0..=a {
                    gram[a * dim + b] += cva * v[b];
                }
            }
        }
        for a in 0..dim {
            gram[a * dim + a] += ridge;
            for b in 0..a {
                gram[b * dim + a] = gram[a * dim + b];
            }
        }
        let singular = || Error::Singular {
            side: match side {
                Side::User => "user",
                Side::Item => "item",
            },
            index: row,
        };
        let chol = DMatrix::from_row_slice(dim, dim, &gram).cholesky().ok_or_else(singular)?;
        let x = chol.solve(&DVector::from_vec(rhs));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(singular());
        }
        out.copy_from_slice(x.as_slice());
        Ok(())
    })
}

fn objective_value(
    model: &FactorModel,
    train: &[Observation],
    targets: &[f64],
    effective: &[f64],
    lambda_u: f64,
    lambda_v: f64,
) -> f64 {
    let data: f64 = train
        .iter()
        .zip(targets)
        .zip(effective)
        .map(|((e, t), cw)| {
            let r = t - model.score(e.user, e.item);
            cw * r * r
        })
        .sum();
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    data + 0.5 * lambda_u * sq(model.user_factors()) + 0.5 * lambda_v * sq(model.item_factors())
}

/// Weighted objective over the training split with the ratings as targets.
pub fn wmf_objective(
    model: &FactorModel,
    dataset: &RatingDataset,
    weights: &TrainWeights,
    config: &WmfConfig,
) -> Result<f64> {
    AlsSolver::new(dataset, weights, config)?.objective(model)
}

pub fn solve_wmf(dataset: &RatingDataset, weights: &TrainWeights, config: &WmfConfig) -> Result<FactorModel> {
    AlsSolver::new(dataset, weights, config)?.fit()
}
