//! Ranking and regression metrics on held-out entries.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::{Observation, RatingDataset, Split};
use crate::error::{Error, Result};
use crate::Predictor;

pub const DEFAULT_CUTOFFS: [usize; 3] = [50, 100, 200];

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub round: usize,
    /// Mean Recall@M keyed by M.
    pub recall: BTreeMap<usize, f64>,
    pub wmse: f64,
}

impl EvalReport {
    pub fn recall_at(&self, cutoff: usize) -> Option<f64> {
        self.recall.get(&cutoff).copied()
    }

    pub fn csv_header(&self) -> String {
        let mut s = String::from("round");
        for m in self.recall.keys() {
            let _ = write!(s, ",recall@{m}");
        }
        s.push_str(",wmse");
        s
    }

    pub fn csv_row(&self) -> String {
        let mut s = self.round.to_string();
        for r in self.recall.values() {
            let _ = write!(s, ",{r:.6}");
        }
        let _ = write!(s, ",{:.6}", self.wmse);
        s
    }
}

/// Header plus one row per report.
pub fn metrics_csv(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    if let Some(first) = reports.first() {
        s.push_str(&first.csv_header());
        s.push('\n');
    }
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Method x cutoff table of final recalls, plus WMSE.
pub fn summary_table(rows: &[(String, EvalReport)]) -> String {
    let Some((_, first)) = rows.first() else {
        return String::new();
    };
    let width = rows.iter().map(|(name, _)| name.len()).max().unwrap_or(0).max(6);
    let mut s = format!("{:width$}", "method");
    for m in first.recall.keys() {
        let _ = write!(s, " | {:>10}", format!("Recall@{m}"));
    }
    let _ = writeln!(s, " | {:>10}", "WMSE");
    for (name, report) in rows {
        let _ = write!(s, "{name:width$}");
        for r in report.recall.values() {
            let _ = write!(s, " | {r:>10.4}");
        }
        let _ = writeln!(s, " | {:>10.6}", report.wmse);
    }
    s
}

fn rank_order(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Number of `positives` found in the top-M candidates, for every M in
/// `cutoffs`. Candidates are all items not in `excluded`, ranked by
/// descending score with ties going to the lower item index.
fn hits_at(
    user: usize,
    scores: &[f64],
    positives: &[usize],
    excluded: &[usize],
    cutoffs: &[usize],
) -> Result<Vec<usize>> {
    let mut is_excluded = vec![false; scores.len()];
    for &j in excluded {
        is_excluded[j] = true;
    }
    let mut candidates: Vec<usize> = (0..scores.len()).filter(|&j| !is_excluded[j]).collect();
    let deepest = cutoffs.iter().copied().max().unwrap_or(0);
    if deepest > candidates.len() {
        return Err(Error::CutoffTooLarge { cutoff: deepest, candidates: candidates.len(), user });
    }
    if deepest < candidates.len() && deepest > 0 {
        candidates.select_nth_unstable_by(deepest - 1, |&a, &b| rank_order(scores, a, b));
        candidates.truncate(deepest);
    }
    candidates.sort_unstable_by(|&a, &b| rank_order(scores, a, b));

    let mut is_positive = vec![false; scores.len()];
    for &j in positives {
        is_positive[j] = true;
    }
    let mut prefix = Vec::with_capacity(candidates.len() + 1);
    prefix.push(0usize);
    for &j in &candidates {
        prefix.push(prefix.last().unwrap() + usize::from(is_positive[j]));
    }
    Ok(cutoffs.iter().map(|&m| prefix[m]).collect())
}

/// Mean Recall@M over users with at least one positive.
pub fn recall_at_m(
    scores_by_user: &[Vec<f64>],
    positives_by_user: &[Vec<usize>],
    cutoff: usize,
    exclusions_by_user: &[Vec<usize>],
) -> Result<f64> {
    if cutoff == 0 {
        return Err(Error::Config("recall cutoff M must be at least 1".into()));
    }
    if scores_by_user.len() != positives_by_user.len() || scores_by_user.len() != exclusions_by_user.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} score rows, {} positive lists, {} exclusion lists",
            scores_by_user.len(),
            positives_by_user.len(),
            exclusions_by_user.len()
        )));
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for (user, ((scores, positives), excluded)) in
        scores_by_user.iter().zip(positives_by_user).zip(exclusions_by_user).enumerate()
    {
        if positives.is_empty() {
            continue;
        }
        let hits = hits_at(user, scores, positives, excluded, &[cutoff])?[0];
        total += hits as f64 / positives.len() as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::EmptySplit("test positives"));
    }
    Ok(total / counted as f64)
}

/// `sum c (pred - r)^2 / sum c` over `entries`.
pub fn wmse(predictions: &[f64], entries: &[Observation]) -> Result<f64> {
    if entries.is_empty() {
        return Err(Error::EmptySplit("test"));
    }
    if predictions.len() != entries.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} entries",
            predictions.len(),
            entries.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, e) in predictions.iter().zip(entries) {
        num += e.confidence * (p - e.rating) * (p - e.rating);
        den += e.confidence;
    }
    Ok(num / den)
}

pub fn predictions<P: Predictor + ?Sized>(model: &P, entries: &[Observation]) -> Vec<f64> {
    entries.iter().map(|e| model.score(e.user, e.item)).collect()
}

/// Test-split evaluation with precomputed positives and exclusion lists.
#[derive(Debug, Clone)]
pub struct Evaluator {
    cutoffs: Vec<usize>,
    exclude_seen: bool,
    num_users: usize,
    num_items: usize,
    test: Vec<Observation>,
    test_positives: Vec<Vec<usize>>,
    exclusions: Vec<Vec<usize>>,
}

impl Evaluator {
    /// With `exclude_seen`, each user's train and validation positives are
    /// removed from the ranked candidates.
    pub fn new(dataset: &RatingDataset, cutoffs: &[usize], exclude_seen: bool) -> Result<Self> {
        if cutoffs.is_empty() || cutoffs.contains(&0) {
            return Err(Error::Config(format!("recall cutoffs must be non-empty and positive, got {cutoffs:?}")));
        }
        if dataset.test().is_empty() {
            return Err(Error::EmptySplit("test"));
        }
        let mut cutoffs = cutoffs.to_vec();
        cutoffs.sort_unstable();
        cutoffs.dedup();
        let exclusions = if exclude_seen {
            let mut seen = dataset.positives_by_user(Split::Train);
            for (user, items) in dataset.positives_by_user(Split::Validation).into_iter().enumerate() {
                seen[user].extend(items);
                seen[user].sort_unstable();
                seen[user].dedup();
            }
            seen
        } else {
            vec![Vec::new(); dataset.num_users()]
        };
        Ok(Evaluator {
            cutoffs,
            exclude_seen,
            num_users: dataset.num_users(),
            num_items: dataset.num_items(),
            test: dataset.test().to_vec(),
            test_positives: dataset.positives_by_user(Split::Test),
            exclusions,
        })
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn excludes_seen(&self) -> bool {
        self.exclude_seen
    }

    pub fn evaluate<P: Predictor + ?Sized>(&self, model: &P, round: usize) -> Result<EvalReport> {
        if model.num_users() != self.num_users || model.num_items() != self.num_items {
            return Err(Error::DimensionMismatch(format!(
                "model is {}x{}, evaluation data is {}x{}",
                model.num_users(),
                model.num_items(),
                self.num_users,
                self.num_items
            )));
        }
        let users: Vec<usize> = (0..self.num_users).filter(|&u| !self.test_positives[u].is_empty()).collect();
        if users.is_empty() {
            return Err(Error::EmptySplit("test positives"));
        }
        let per_user: Vec<Result<Vec<f64>>> = users
            .par_iter()
            .map(|&u| {
                let mut scores = vec![0.0; self.num_items];
                model.user_scores(u, &mut scores);
                let positives = &self.test_positives[u];
                let hits = hits_at(u, &scores, positives, &self.exclusions[u], &self.cutoffs)?;
                Ok(hits.into_iter().map(|h| h as f64 / positives.len() as f64).collect())
            })
            .collect();
        let mut sums = vec![0.0; self.cutoffs.len()];
        for row in per_user {
            for (s, r) in sums.iter_mut().zip(row?) {
                *s += r;
            }
        }
        let recall = self
            .cutoffs
            .iter()
            .zip(sums)
            .map(|(&m, s)| (m, s / users.len() as f64))
            .collect();
        let wmse = wmse(&predictions(model, &self.test), &self.test)?;
        Ok(EvalReport { round, recall, wmse })
    }
}
