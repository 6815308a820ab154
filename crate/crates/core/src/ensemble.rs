//! Probabilistic mixtures of WMF components.
//!
//! Each component `k` models a rating as `N(u_i^(k) . v_j^(k), sigma^2)`; the
//! mixture weights `pi` sum to one and the point prediction is the mixture
//! mean `sum_k pi_k f_ij^(k)`.
//!
//! Two ways of building the mixture live here:
//!
//! * EM from a random hard partition of the training entries
//!   ([`train_rand_em`]). The E-step computes responsibilities, the M-step
//!   re-solves every component with its responsibilities layered on the
//!   confidences.
//! * Progressive construction ([`train_pecf`]): start from one WMF fit and
//!   repeatedly add a component trained on entries re-weighted by
//!   `rho = 1 / (1 + nu * exp(-e^2 / sigma^2))`, where `e` is the current
//!   ensemble's error. `rho` is the posterior probability that an entry
//!   belongs to the new component once its embeddings are marginalized out;
//!   the marginal density is a constant that is folded into `nu`.

use rand::Rng;
use rayon::prelude::*;

use crate::data::{Observation, RatingDataset};
use crate::error::{Error, Result};
use crate::eval::{self, EvalReport, Evaluator};
use crate::wmf::{dot, AlsSolver, FactorModel, TrainWeights, WmfConfig};
use crate::{seed, Predictor};

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    components: Vec<FactorModel>,
    weights: Vec<f64>,
    noise_sigma: f64,
}

impl EnsembleModel {
    pub fn new(components: Vec<FactorModel>, weights: Vec<f64>, noise_sigma: f64) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Config("an ensemble needs at least one component".into()));
        };
        if weights.len() != components.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} components but {} mixture weights",
                components.len(),
                weights.len()
            )));
        }
        let shape = (first.dim(), first.num_users(), first.num_items());
        if components.iter().any(|c| (c.dim(), c.num_users(), c.num_items()) != shape) {
            return Err(Error::DimensionMismatch("ensemble components differ in d, m or n".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("mixture weights must be non-negative, got {weights:?}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("mixture weights must sum to 1, got {sum}")));
        }
        if !(noise_sigma > 0.0 && noise_sigma.is_finite()) {
            return Err(Error::Config(format!("sigma: must be positive, got {noise_sigma}")));
        }
        Ok(EnsembleModel { components, weights, noise_sigma })
    }

    pub fn single(component: FactorModel, noise_sigma: f64) -> Result<Self> {
        Self::new(vec![component], vec![1.0], noise_sigma)
    }

    pub fn components(&self) -> &[FactorModel] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Existing weights scaled by `1 - alpha`, `candidate` appended with weight `alpha`.
    pub fn extended(&self, candidate: FactorModel, alpha: f64) -> Result<Self> {
        let mut components = self.components.clone();
        components.push(candidate);
        let mut weights: Vec<f64> = self.weights.iter().map(|w| w * (1.0 - alpha)).collect();
        weights.push(alpha);
        Self::new(components, weights, self.noise_sigma)
    }
}

impl Predictor for EnsembleModel {
    fn num_users(&self) -> usize {
        self.components[0].num_users()
    }

    fn num_items(&self) -> usize {
        self.components[0].num_items()
    }

    fn score(&self, user: usize, item: usize) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * dot(c.user_vector(user), c.item_vector(item)))
            .sum()
    }

    fn user_scores(&self, user: usize, out: &mut [f64]) {
        out.fill(0.0);
        let mut buf = vec![0.0; out.len()];
        for (c, w) in self.components.iter().zip(&self.weights) {
            c.user_scores(user, &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
    }
}

pub fn ensemble_predict(model: &EnsembleModel, user: usize, item: usize) -> Result<f64> {
    model.predict(user, item)
}

/// Unnormalized error density `exp(-e^2 / sigma^2)`.
pub fn component_density(error: f64, sigma: f64) -> f64 {
    let z = error / sigma;
    (-z * z).exp()
}

/// Posterior weight of a prospective new component for an entry with error `e`.
pub fn rho_weight(error: f64, nu: f64, sigma: f64) -> f64 {
    1.0 / (1.0 + nu * component_density(error, sigma))
}

/// `1 - rho`, computed without cancellation: the weight kept by the existing
/// ensemble. Stays resolvable after `rho` has rounded to 1.
pub fn rho_complement(error: f64, nu: f64, sigma: f64) -> f64 {
    let p = nu * component_density(error, sigma);
    p / (1.0 + p)
}

/// Per-entry component responsibilities, entry-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    components: usize,
    values: Vec<f64>,
}

impl Responsibilities {
    pub fn num_components(&self) -> usize {
        self.components
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.components
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn entry(&self, index: usize) -> &[f64] {
        &self.values[index * self.components..(index + 1) * self.components]
    }

    pub fn component_weights(&self, k: usize) -> TrainWeights {
        TrainWeights::new(self.values.iter().skip(k).step_by(self.components).copied().collect())
            .expect("responsibilities are finite probabilities")
    }

    pub fn from_rows(components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 || !values.len().is_multiple_of(components) {
            return Err(Error::DimensionMismatch(format!(
                "{} responsibility values for {components} components",
                values.len()
            )));
        }
        if values.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::Config("responsibilities must lie in [0, 1]".into()));
        }
        Ok(Responsibilities { components, values })
    }
}

/// `q_ij^(k) ∝ pi_k exp(-e_ij^(k)^2 / sigma^2)`, normalized per entry in the
/// log domain. Entries where every component has zero density fall back to 1/K.
pub fn em_e_step(model: &EnsembleModel, dataset: &RatingDataset) -> Result<Responsibilities> {
    check_model(model, dataset)?;
    let k = model.len();
    let sigma = model.noise_sigma();
    let log_prior: Vec<f64> = model.weights().iter().map(|w| w.ln()).collect();
    let mut values = vec![0.0; dataset.train().len() * k];
    values.par_chunks_mut(k).zip(dataset.train().par_iter()).for_each(|(row, e)| {
        for ((slot, c), lp) in row.iter_mut().zip(model.components()).zip(&log_prior) {
            let z = (e.rating - c.score(e.user, e.item)) / sigma;
            *slot = lp - z * z;
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            row.fill(1.0 / k as f64);
            return;
        }
        let mut total = 0.0;
        for q in row.iter_mut() {
            *q = (*q - max).exp();
            total += *q;
        }
        for q in row.iter_mut() {
            *q /= total;
        }
    });
    Ok(Responsibilities { components: k, values })
}

/// Re-solves each component on confidences scaled by its responsibilities,
/// warm-started from the current factors, and sets `pi_k ∝ sum c q^(k)`.
pub fn em_m_step(
    model: &EnsembleModel,
    dataset: &RatingDataset,
    q: &Responsibilities,
    config: &WmfConfig,
) -> Result<EnsembleModel> {
    check_model(model, dataset)?;
    check_responsibilities(model, dataset, q)?;
    let components = (0..model.len())
        .into_par_iter()
        .map(|k| {
            let solver = AlsSolver::new(dataset, &q.component_weights(k), config)?;
            let mut component = model.components()[k].clone();
            solver.refine(&mut component)?;
            Ok(component)
        })
        .collect::<Result<Vec<_>>>()?;
    let mass: Vec<f64> = (0..model.len())
        .map(|k| dataset.train().iter().enumerate().map(|(i, e)| e.confidence * q.entry(i)[k]).sum())
        .collect();
    let total: f64 = mass.iter().sum();
    let weights = if total > 0.0 {
        mass.iter().map(|m| m / total).collect()
    } else {
        vec![1.0 / model.len() as f64; model.len()]
    };
    EnsembleModel::new(components, weights, model.noise_sigma())
}

/// Complete-data penalized objective `sum_k [sum c q^(k) e^(k)^2 + regularizers]`
/// for fixed responsibilities. Each M-step does not increase it.
pub fn em_surrogate_objective(
    model: &EnsembleModel,
    dataset: &RatingDataset,
    q: &Responsibilities,
    config: &WmfConfig,
) -> Result<f64> {
    check_responsibilities(model, dataset, q)?;
    let mut total = 0.0;
    for (k, component) in model.components().iter().enumerate() {
        let config = WmfConfig { dim: component.dim(), ..config.clone() };
        total += AlsSolver::new(dataset, &q.component_weights(k), &config)?.objective(component)?;
    }
    Ok(total)
}

fn check_model(model: &EnsembleModel, dataset: &RatingDataset) -> Result<()> {
    model.components()[0].check_shape(dataset)
}

fn check_responsibilities(model: &EnsembleModel, dataset: &RatingDataset, q: &Responsibilities) -> Result<()> {
    if q.num_components() != model.len() || q.len() != dataset.train().len() {
        return Err(Error::DimensionMismatch(format!(
            "responsibilities are {}x{}, expected {}x{}",
            q.len(),
            q.num_components(),
            dataset.train().len(),
            model.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub components: usize,
    pub iterations: usize,
    pub sigma: f64,
    pub partition_seed: u64,
    pub wmf: WmfConfig,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { components: 4, iterations: 10, sigma: 1.0, partition_seed: 0, wmf: WmfConfig::default() }
    }
}

/// Random hard partition: entry `i` goes to component `assignment[i]`.
pub fn random_partition(len: usize, components: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    (0..len).map(|_| rng.random_range(0..components)).collect()
}

/// EM from a random partition of the training entries. Report `t` describes
/// the model after `t` EM iterations (report 0 is the initial fit).
pub fn train_rand_em(
    dataset: &RatingDataset,
    config: &EmConfig,
    evaluator: Option<&Evaluator>,
) -> Result<(EnsembleModel, Vec<EvalReport>)> {
    if config.components == 0 {
        return Err(Error::Config("K: number of components must be at least 1".into()));
    }
    config.wmf.validate()?;
    let train = dataset.train();
    let assignment = random_partition(train.len(), config.components, config.partition_seed);
    let components = (0..config.components)
        .into_par_iter()
        .map(|k| {
            let weights = TrainWeights::new(assignment.iter().map(|&g| if g == k { 1.0 } else { 0.0 }).collect())?;
            let wmf = WmfConfig { seed: seed::component_seed(config.wmf.seed, k), ..config.wmf.clone() };
            AlsSolver::new(dataset, &weights, &wmf)?.fit()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mass = vec![0.0; config.components];
    for (e, &g) in train.iter().zip(&assignment) {
        mass[g] += e.confidence;
    }
    let total: f64 = mass.iter().sum();
    let weights = mass.iter().map(|m| m / total).collect();
    let mut model = EnsembleModel::new(components, weights, config.sigma)?;

    let mut reports = Vec::new();
    if let Some(ev) = evaluator {
        reports.push(ev.evaluate(&model, 0)?);
    }
    for it in 1..=config.iterations {
        let q = em_e_step(&model, dataset)?;
        model = em_m_step(&model, dataset, &q, &config.wmf)?;
        if let Some(ev) = evaluator {
            reports.push(ev.evaluate(&model, it)?);
        }
    }
    Ok((model, reports))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaStrategy {
    /// Grid search minimizing validation WMSE.
    Dynamic,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PecfConfig {
    pub nu: f64,
    pub sigma: f64,
    pub max_rounds: usize,
    pub alpha: AlphaStrategy,
    /// Candidate weights for the dynamic strategy, ascending.
    pub alpha_grid: Vec<f64>,
    pub wmf: WmfConfig,
}

impl Default for PecfConfig {
    fn default() -> Self {
        PecfConfig {
            nu: 10.0,
            sigma: 1.0,
            max_rounds: 15,
            alpha: AlphaStrategy::Dynamic,
            alpha_grid: (1..=9).map(|k| k as f64 / 10.0).collect(),
            wmf: WmfConfig::default(),
        }
    }
}

impl PecfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!("nu: must be positive, got {}", self.nu)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma: must be positive, got {}", self.sigma)));
        }
        match self.alpha {
            AlphaStrategy::Fixed(a) if !(a > 0.0 && a < 1.0) => {
                return Err(Error::Config(format!("alpha: fixed weight must lie in (0, 1), got {a}")));
            }
            AlphaStrategy::Dynamic => {
                if self.alpha_grid.is_empty() {
                    return Err(Error::Config("alpha_grid: must not be empty".into()));
                }
                if self.alpha_grid.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
                    return Err(Error::Config(format!("alpha_grid: values must lie in (0, 1], got {:?}", self.alpha_grid)));
                }
                if self.alpha_grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Config("alpha_grid: values must be strictly ascending".into()));
                }
            }
            AlphaStrategy::Fixed(_) => {}
        }
        self.wmf.validate()
    }
}

/// Current ensemble error `r - f` on every training entry.
pub fn training_errors<P: Predictor + ?Sized>(model: &P, dataset: &RatingDataset) -> Vec<f64> {
    dataset.train().par_iter().map(|e| e.rating - model.score(e.user, e.item)).collect()
}

pub fn pecf_weights<P: Predictor + ?Sized>(model: &P, dataset: &RatingDataset, nu: f64, sigma: f64) -> TrainWeights {
    let rho = training_errors(model, dataset).into_iter().map(|e| rho_weight(e, nu, sigma)).collect();
    TrainWeights::new(rho).expect("rho lies in (0, 1]")
}

/// Weight for `candidate` when mixed into `current`.
pub fn choose_alpha(
    current: &EnsembleModel,
    candidate: &FactorModel,
    dataset: &RatingDataset,
    config: &PecfConfig,
) -> Result<f64> {
    match config.alpha {
        AlphaStrategy::Fixed(a) => Ok(a),
        AlphaStrategy::Dynamic => {
            let validation = dataset.validation();
            if validation.is_empty() {
                return Err(Error::Config(
                    "alpha: dynamic line search needs a validation split; use a fixed alpha".into(),
                ));
            }
            if config.alpha_grid.is_empty() {
                return Err(Error::Config("alpha_grid: must not be empty".into()));
            }
            let old = eval::predictions(current, validation);
            let new = eval::predictions(candidate, validation);
            line_search(&old, &new, validation, &config.alpha_grid)
        }
    }
}

fn line_search(old: &[f64], new: &[f64], entries: &[Observation], grid: &[f64]) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &alpha in grid {
        let mixed: Vec<f64> = old.iter().zip(new).map(|(o, n)| (1.0 - alpha) * o + alpha * n).collect();
        let loss = eval::wmse(&mixed, entries)?;
        // ties (up to rounding) keep the smaller alpha
        match best {
            Some((_, best_loss)) if loss >= best_loss - 1e-12 * best_loss.abs().max(1e-300) => {}
            _ => best = Some((alpha, loss)),
        }
    }
    Ok(best.expect("grid is non-empty").0)
}

/// Adds one component trained on rho-reweighted entries. Existing components
/// are carried over untouched; only their weights shrink by `1 - alpha`.
pub fn pecf_round(current: &EnsembleModel, dataset: &RatingDataset, config: &PecfConfig) -> Result<EnsembleModel> {
    let candidate = fit_candidate(current, dataset, config)?;
    let alpha = choose_alpha(current, &candidate, dataset, config)?;
    current.extended(candidate, alpha)
}

/// The new component of the next round, before it is mixed in.
pub fn fit_candidate(current: &EnsembleModel, dataset: &RatingDataset, config: &PecfConfig) -> Result<FactorModel> {
    check_model(current, dataset)?;
    let weights = pecf_weights(current, dataset, config.nu, config.sigma);
    let wmf = WmfConfig { seed: seed::component_seed(config.wmf.seed, current.len()), ..config.wmf.clone() };
    AlsSolver::new(dataset, &weights, &wmf)?.fit()
}

/// Progressive construction: one unit-weight WMF fit, then up to
/// `max_rounds` complementary components. Report `r` describes the ensemble
/// after round `r` (report 0 is the plain WMF model).
pub fn train_pecf(
    dataset: &RatingDataset,
    config: &PecfConfig,
    evaluator: Option<&Evaluator>,
) -> Result<(EnsembleModel, Vec<EvalReport>)> {
    config.validate()?;
    let base = AlsSolver::new(dataset, &TrainWeights::uniform(dataset.train().len()), &config.wmf)?.fit()?;
    let mut model = EnsembleModel::single(base, config.sigma)?;
    let mut reports = Vec::new();
    if let Some(ev) = evaluator {
        reports.push(ev.evaluate(&model, 0)?);
    }
    for round in 1..=config.max_rounds {
        model = pecf_round(&model, dataset, config)?;
        if let Some(ev) = evaluator {
            reports.push(ev.evaluate(&model, round)?);
        }
    }
    Ok((model, reports))
}
