//! L2Boost over WMF components: each stage fits the residual of the current
//! additive model on the unchanged base confidences.

use crate::data::RatingDataset;
use crate::error::{Error, Result};
use crate::ensemble::training_errors;
use crate::eval::{EvalReport, Evaluator};
use crate::wmf::{dot, AlsSolver, FactorModel, TrainWeights, WmfConfig};
use crate::{seed, Predictor};

/// Additive model `f_0 + shrinkage * sum_{k>=1} f_k`. The first stage is not
/// shrunk, so a zero-round model is exactly the WMF baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostModel {
    components: Vec<FactorModel>,
    shrinkage: f64,
}

impl BoostModel {
    pub fn new(components: Vec<FactorModel>, shrinkage: f64) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Config("a boosted model needs at least one component".into()));
        };
        check_shrinkage(shrinkage)?;
        let shape = (first.dim(), first.num_users(), first.num_items());
        if components.iter().any(|c| (c.dim(), c.num_users(), c.num_items()) != shape) {
            return Err(Error::DimensionMismatch("boosting stages differ in d, m or n".into()));
        }
        Ok(BoostModel { components, shrinkage })
    }

    pub fn components(&self) -> &[FactorModel] {
        &self.components
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    fn stage_weight(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.shrinkage
        }
    }
}

fn check_shrinkage(shrinkage: f64) -> Result<()> {
    if !(shrinkage > 0.0 && shrinkage <= 1.0) {
        return Err(Error::Config(format!("shrinkage: must lie in (0, 1], got {shrinkage}")));
    }
    Ok(())
}

impl Predictor for BoostModel {
    fn num_users(&self) -> usize {
        self.components[0].num_users()
    }

    fn num_items(&self) -> usize {
        self.components[0].num_items()
    }

    fn score(&self, user: usize, item: usize) -> f64 {
        self.components
            .iter()
            .enumerate()
            .map(|(k, c)| self.stage_weight(k) * dot(c.user_vector(user), c.item_vector(item)))
            .sum()
    }

    fn user_scores(&self, user: usize, out: &mut [f64]) {
        out.fill(0.0);
        let mut buf = vec![0.0; out.len()];
        for (k, c) in self.components.iter().enumerate() {
            c.user_scores(user, &mut buf);
            let w = self.stage_weight(k);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
    }
}

pub fn boost_predict(model: &BoostModel, user: usize, item: usize) -> Result<f64> {
    model.predict(user, item)
}

/// Fits the next stage to `r - prediction` and appends it.
pub fn boost_round(model: &BoostModel, dataset: &RatingDataset, wmf: &WmfConfig) -> Result<BoostModel> {
    model.components[0].check_shape(dataset)?;
    let residuals = training_errors(model, dataset);
    let config = WmfConfig { seed: seed::component_seed(wmf.seed, model.len()), ..wmf.clone() };
    let stage =
        AlsSolver::with_targets(dataset, residuals, &TrainWeights::uniform(dataset.train().len()), &config)?.fit()?;
    let mut components = model.components.clone();
    components.push(stage);
    BoostModel::new(components, model.shrinkage)
}

pub fn train_l2boost(
    dataset: &RatingDataset,
    rounds: usize,
    shrinkage: f64,
    wmf: &WmfConfig,
    evaluator: Option<&Evaluator>,
) -> Result<(BoostModel, Vec<EvalReport>)> {
    check_shrinkage(shrinkage)?;
    let base = AlsSolver::new(dataset, &TrainWeights::uniform(dataset.train().len()), wmf)?.fit()?;
    let mut model = BoostModel::new(vec![base], shrinkage)?;
    let mut reports = Vec::new();
    if let Some(ev) = evaluator {
        reports.push(ev.evaluate(&model, 0)?);
    }
    for round in 1..=rounds {
        model = boost_round(&model, dataset, wmf)?;
        if let Some(ev) = evaluator {
            reports.push(ev.evaluate(&model, round)?);
        }
    }
    Ok((model, reports))
}
