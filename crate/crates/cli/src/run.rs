//! Experiment driver: dataset preparation, training, evaluation and the
//! artifacts each run leaves in its output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use pecf_core::data::{load_ratings, prepare};
use pecf_core::eval::{metrics_csv, summary_table};
use pecf_core::{
    solve_wmf, train_l2boost, train_pecf, train_rand_em, EvalReport, Evaluator, Predictor, RatingDataset, SavedModel,
    TrainWeights,
};

use crate::config::{Method, RunConfig};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MODEL_FILE: &str = "model.bin";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const ENTRIES_FILE: &str = "entries.csv";

#[derive(Debug)]
pub struct RunOutcome {
    /// One report per round, in the configured exclusion mode.
    pub reports: Vec<EvalReport>,
    /// Final model evaluated with the opposite exclusion mode.
    pub alternate: EvalReport,
    pub model: SavedModel,
    pub output: PathBuf,
}

impl RunOutcome {
    pub fn final_report(&self) -> &EvalReport {
        self.reports.last().expect("every run reports round 0")
    }
}

pub fn load_dataset(config: &RunConfig) -> anyhow::Result<RatingDataset> {
    let path = config.dataset_path()?;
    let raw = load_ratings(path, config.rating_format()?)?;
    Ok(prepare(raw, &config.prepare_config()?)?)
}

/// Trains the configured method, evaluating after every round.
pub fn train_model(
    config: &RunConfig,
    dataset: &RatingDataset,
    evaluator: &Evaluator,
) -> anyhow::Result<(SavedModel, Vec<EvalReport>)> {
    Ok(match config.method {
        Method::Wmf => {
            let weights = TrainWeights::uniform(dataset.train().len());
            let model = solve_wmf(dataset, &weights, &config.wmf_config()?)?;
            let report = evaluator.evaluate(&model, 0)?;
            (SavedModel::Single(model), vec![report])
        }
        Method::Pecf => {
            let (model, reports) = train_pecf(dataset, &config.pecf_config()?, Some(evaluator))?;
            (SavedModel::Mixture(model), reports)
        }
        Method::L2boost => {
            let (model, reports) =
                train_l2boost(dataset, config.rounds, config.shrinkage, &config.wmf_config()?, Some(evaluator))?;
            (SavedModel::Additive(model), reports)
        }
        Method::Randem => {
            let (model, reports) = train_rand_em(dataset, &config.em_config()?, Some(evaluator))?;
            (SavedModel::Mixture(model), reports)
        }
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn manifest_text(config: &RunConfig, dataset: &RatingDataset) -> String {
    format!("# dataset\n{}\n# config\n{}", dataset.manifest(), config.to_toml())
}

fn exclusion_label(exclude_seen: bool) -> &'static str {
    if exclude_seen {
        "train/validation positives excluded from ranking"
    } else {
        "all items ranked"
    }
}

fn summary_text(config: &RunConfig, outcome: &RunOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "method = {}", config.method);
    let _ = writeln!(s, "seed = {}", config.seed);
    let _ = writeln!(s, "d = {}", config.d);
    let _ = writeln!(s, "lambda_u = {}", config.lambda_u.unwrap_or(config.lambda));
    let _ = writeln!(s, "lambda_v = {}", config.lambda_v.unwrap_or(config.lambda));
    let _ = writeln!(s, "sweeps = {}", config.sweeps);
    match config.method {
        Method::Wmf => {}
        Method::Pecf => {
            let _ = writeln!(s, "rounds = {}", config.rounds);
            let _ = writeln!(s, "nu = {}", config.nu);
            let _ = writeln!(s, "sigma = {}", config.sigma);
            let _ = writeln!(s, "alpha = {}", config.alpha);
        }
        Method::L2boost => {
            let _ = writeln!(s, "rounds = {}", config.rounds);
            let _ = writeln!(s, "shrinkage = {}", config.shrinkage);
        }
        Method::Randem => {
            let _ = writeln!(s, "components = {}", config.components);
            let _ = writeln!(s, "em_iters = {}", config.em_iters);
            let _ = writeln!(s, "sigma = {}", config.sigma);
        }
    }
    if let SavedModel::Mixture(m) = &outcome.model {
        let weights: Vec<String> = m.weights().iter().map(|w| format!("{w:.6}")).collect();
        let _ = writeln!(s, "mixture_weights = [{}]", weights.join(", "));
    }

    let name = config.method.name().to_string();
    let _ = writeln!(s, "\nfinal test metrics ({})", exclusion_label(config.exclude_seen));
    s.push_str(&summary_table(&[(name.clone(), outcome.final_report().clone())]));
    let _ = writeln!(s, "\nfinal test metrics ({})", exclusion_label(!config.exclude_seen));
    s.push_str(&summary_table(&[(name, outcome.alternate.clone())]));

    if outcome.reports.len() > 1 {
        let _ = writeln!(s, "\nround curve");
        s.push_str(&metrics_csv(&outcome.reports));
    }
    s
}

/// Prepares the data, trains, evaluates and writes manifest, model, metrics
/// and summary into `config.output`.
pub fn run_experiment(config: &RunConfig) -> anyhow::Result<RunOutcome> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    let out = config.output.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating output directory {}", out.display()))?;
    write(&out, MANIFEST_FILE, &manifest_text(config, &dataset))?;

    let evaluator = Evaluator::new(&dataset, &config.cutoffs, config.exclude_seen)?;
    let (model, reports) = train_model(config, &dataset, &evaluator)?;
    let last_round = reports.last().map_or(0, |r| r.round);
    let alternate = Evaluator::new(&dataset, &config.cutoffs, !config.exclude_seen)?.evaluate(&model, last_round)?;

    let model_path = out.join(MODEL_FILE);
    model.save(&model_path).with_context(|| format!("writing {}", model_path.display()))?;
    write(&out, METRICS_FILE, &metrics_csv(&reports))?;
    let outcome = RunOutcome { reports, alternate, model, output: out };
    write(&outcome.output, SUMMARY_FILE, &summary_text(config, &outcome))?;
    Ok(outcome)
}

/// Writes the manifest and the prepared entries without training.
pub fn prepare_dataset(config: &RunConfig) -> anyhow::Result<RatingDataset> {
    config.dataset_path()?;
    let dataset = load_dataset(config)?;
    let out = &config.output;
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    write(out, MANIFEST_FILE, &manifest_text(config, &dataset))?;
    let mut csv = String::from("user,item,rating,confidence,split\n");
    for e in dataset.entries() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            dataset.user_index().id(e.user),
            dataset.item_index().id(e.item),
            e.rating,
            e.confidence,
            e.split.name()
        );
    }
    write(out, ENTRIES_FILE, &csv)?;
    Ok(dataset)
}

/// Scores a saved model on the configured dataset in both exclusion modes;
/// the configured mode comes first.
pub fn evaluate_saved(config: &RunConfig, model_path: &Path) -> anyhow::Result<[EvalReport; 2]> {
    if config.cutoffs.is_empty() || config.cutoffs.contains(&0) {
        anyhow::bail!("cutoffs: need at least one positive cutoff, got {:?}", config.cutoffs);
    }
    let dataset = load_dataset(config)?;
    let model = SavedModel::load(model_path).with_context(|| format!("reading model {}", model_path.display()))?;
    if (model.num_users(), model.num_items()) != (dataset.num_users(), dataset.num_items()) {
        anyhow::bail!(
            "model: {} users x {} items does not match the dataset's {} x {}",
            model.num_users(),
            model.num_items(),
            dataset.num_users(),
            dataset.num_items()
        );
    }
    let evaluate = |exclude: bool| -> anyhow::Result<EvalReport> {
        Ok(Evaluator::new(&dataset, &config.cutoffs, exclude)?.evaluate(&model, 0)?)
    };
    Ok([evaluate(config.exclude_seen)?, evaluate(!config.exclude_seen)?])
}

pub fn evaluation_summary(config: &RunConfig, reports: &[EvalReport; 2]) -> String {
    let name = config.method.name().to_string();
    let mut s = String::new();
    for (report, exclude) in reports.iter().zip([config.exclude_seen, !config.exclude_seen]) {
        let _ = writeln!(s, "test metrics ({})", exclusion_label(exclude));
        s.push_str(&summary_table(&[(name.clone(), report.clone())]));
    }
    s
}
