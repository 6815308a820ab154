//! Rating ingestion: parse, binarize, index, attach confidences, sample zero
//! entries and split into train / validation / test.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingFormat {
    /// `user \t item \t rating [\t timestamp]`, as in MovieLens `u.data`.
    MovielensTabular,
    /// `user,item,rating[,...]`.
    TripletCsv,
}

impl RatingFormat {
    fn separator(self) -> char {
        match self {
            RatingFormat::MovielensTabular => '\t',
            RatingFormat::TripletCsv => ',',
        }
    }
}

impl FromStr for RatingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens" | "movielens_tabular" | "tsv" => Ok(RatingFormat::MovielensTabular),
            "triplet" | "triplet_csv" | "csv" => Ok(RatingFormat::TripletCsv),
            other => Err(Error::Config(format!(
                "format: unknown rating format `{other}` (expected movielens_tabular or triplet_csv)"
            ))),
        }
    }
}

impl fmt::Display for RatingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatingFormat::MovielensTabular => "movielens_tabular",
            RatingFormat::TripletCsv => "triplet_csv",
        })
    }
}

/// A rating as it appears in the input file, with the original ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRating {
    pub user: String,
    pub item: String,
    pub rating: f64,
}

pub fn load_ratings(path: impl AsRef<Path>, format: RatingFormat) -> Result<Vec<RawRating>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_ratings(BufReader::new(file), format, path)
}

/// Parses rating records from `reader`. Blank lines are skipped, columns past
/// the third are ignored. `origin` is only used in error messages.
pub fn parse_ratings<R: BufRead>(
    reader: R,
    format: RatingFormat,
    origin: &Path,
) -> Result<Vec<RawRating>> {
    let sep = format.separator();
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let mut fields = line.split(sep).map(str::trim);
        let (Some(user), Some(item), Some(rating)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(parse_err(format!("expected at least 3 `{}`-separated fields", sep.escape_default())));
        };
        if user.is_empty() || item.is_empty() {
            return Err(parse_err("empty user or item id".into()));
        }
        let rating: f64 = rating
            .parse()
            .ok()
            .filter(|r: &f64| r.is_finite())
            .ok_or_else(|| parse_err(format!("invalid rating `{rating}`")))?;
        out.push(RawRating { user: user.to_owned(), item: item.to_owned(), rating });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput(origin.to_path_buf()));
    }
    Ok(out)
}

/// Maps every rating to 1.0 if it is at least `threshold` and to 0.0 otherwise.
pub fn binarize(records: &mut [RawRating], threshold: f64) {
    for r in records {
        r.rating = if r.rating >= threshold { 1.0 } else { 0.0 };
    }
}

/// Bijection between external ids and dense indices, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdIndex {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl IdIndex {
    /// Identity index `"0" .. "len-1"`.
    pub fn identity(len: usize) -> Self {
        let mut index = IdIndex::default();
        for i in 0..len {
            index.intern(&i.to_string());
        }
        index
    }

    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.lookup.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.lookup.insert(id.to_owned(), i);
        i
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// An indexed rating that has not been assigned to a split yet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub rating: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexedRatings {
    pub records: Vec<Rating>,
    pub user_index: IdIndex,
    pub item_index: IdIndex,
}

impl IndexedRatings {
    pub fn num_users(&self) -> usize {
        self.user_index.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_index.len()
    }
}

/// Assigns dense indices to users and items. Repeated (user, item) pairs are
/// merged into one record holding the largest rating. Confidences start at 1.
pub fn index_ratings(raw: &[RawRating]) -> IndexedRatings {
    let mut user_index = IdIndex::default();
    let mut item_index = IdIndex::default();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::with_capacity(raw.len());
    let mut records: Vec<Rating> = Vec::with_capacity(raw.len());
    for r in raw {
        let user = user_index.intern(&r.user);
        let item = item_index.intern(&r.item);
        match seen.get(&(user, item)) {
            Some(&pos) => records[pos].rating = records[pos].rating.max(r.rating),
            None => {
                seen.insert((user, item), records.len());
                records.push(Rating { user, item, rating: r.rating, confidence: 1.0 });
            }
        }
    }
    IndexedRatings { records, user_index, item_index }
}

pub fn assign_confidence(records: &mut [Rating], c_pos: f64, c_zero: f64) -> Result<()> {
    if !(c_pos > 0.0 && c_pos.is_finite()) {
        return Err(Error::Config(format!("c_pos: must be positive, got {c_pos}")));
    }
    if !(c_zero > 0.0 && c_zero.is_finite()) {
        return Err(Error::Config(format!("c_zero: must be positive, got {c_zero}")));
    }
    for r in records {
        r.confidence = if r.rating > 0.0 { c_pos } else { c_zero };
    }
    Ok(())
}

/// Sample rate that adds, in expectation, `ratio` zero entries per positive.
pub fn sample_rate_for_ratio(records: &[Rating], num_users: usize, num_items: usize, ratio: f64) -> f64 {
    let positives = records.iter().filter(|r| r.rating > 0.0).count() as f64;
    let unobserved = (num_users * num_items).saturating_sub(records.len()) as f64;
    if unobserved == 0.0 {
        return 1.0;
    }
    (ratio * positives / unobserved).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Appends rating-0 records for a Bernoulli(`sample_rate`) sample of the
/// (user, item) pairs that have no record yet. Pairs are visited in row-major
/// order, so the output depends only on the input set and the seed.
pub fn densify_zeros(
    mut records: Vec<Rating>,
    num_users: usize,
    num_items: usize,
    sample_rate: f64,
    seed: u64,
) -> Result<Vec<Rating>> {
    if !(sample_rate > 0.0 && sample_rate <= 1.0) {
        return Err(Error::Config(format!("zero_sample_rate: must lie in (0, 1], got {sample_rate}")));
    }
    let mut observed = vec![false; num_users * num_items];
    for r in &records {
        if r.user >= num_users || r.item >= num_items {
            return Err(Error::IndexOutOfRange {
                kind: if r.user >= num_users { "user" } else { "item" },
                index: if r.user >= num_users { r.user } else { r.item },
                len: if r.user >= num_users { num_users } else { num_items },
            });
        }
        observed[r.user * num_items + r.item] = true;
    }
    let mut rng = seed::rng(seed);
    for user in 0..num_users {
        for item in 0..num_items {
            if observed[user * num_items + item] {
                continue;
            }
            if sample_rate >= 1.0 || rng.random::<f64>() < sample_rate {
                records.push(Rating { user, item, rating: 0.0, confidence: 1.0 });
            }
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    ratios: [f64; 3],
    pub seed: u64,
}

impl SplitSpec {
    /// `ratios` are (train, validation, test) and must sum to 1 within 1e-9.
    pub fn new(ratios: [f64; 3], seed: u64) -> Result<Self> {
        if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Config(format!("split: ratios must be non-negative, got {ratios:?}")));
        }
        let sum: f64 = ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split: ratios must sum to 1, got {sum}")));
        }
        Ok(SplitSpec { ratios, seed })
    }

    /// Normalizes arbitrary non-negative proportions, e.g. `[3, 1, 1]`.
    pub fn from_proportions(proportions: [f64; 3], seed: u64) -> Result<Self> {
        let sum: f64 = proportions.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) || proportions.iter().any(|p| *p < 0.0) {
            return Err(Error::Config(format!("split: invalid proportions {proportions:?}")));
        }
        Self::new(proportions.map(|p| p / sum), seed)
    }

    pub fn ratios(&self) -> [f64; 3] {
        self.ratios
    }

    fn draw(&self, u: f64) -> Split {
        if u < self.ratios[0] {
            Split::Train
        } else if u < self.ratios[0] + self.ratios[1] {
            Split::Validation
        } else {
            Split::Test
        }
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { ratios: [0.6, 0.2, 0.2], seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub user: usize,
    pub item: usize,
    pub rating: f64,
    pub confidence: f64,
    pub split: Split,
}

/// Row-compressed adjacency: for each user (or item), the positions of its
/// entries in the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    slots: Vec<usize>,
}

impl Adjacency {
    fn build(rows: usize, keys: impl Iterator<Item = usize> + Clone) -> Self {
        let mut offsets = vec![0usize; rows + 1];
        for k in keys.clone() {
            offsets[k + 1] += 1;
        }
        for i in 0..rows {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut slots = vec![0usize; offsets[rows]];
        for (pos, k) in keys.enumerate() {
            slots[cursor[k]] = pos;
            cursor[k] += 1;
        }
        Adjacency { offsets, slots }
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.slots[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// Immutable split-tagged implicit-feedback dataset.
#[derive(Debug, Clone)]
pub struct RatingDataset {
    num_users: usize,
    num_items: usize,
    entries: Vec<Observation>,
    user_index: IdIndex,
    item_index: IdIndex,
    train: Vec<Observation>,
    validation: Vec<Observation>,
    test: Vec<Observation>,
    train_by_user: Adjacency,
    train_by_item: Adjacency,
}

/// Tags every record with a split drawn independently from `spec`.
pub fn split(ratings: IndexedRatings, spec: &SplitSpec) -> Result<RatingDataset> {
    let mut rng = seed::rng(spec.seed);
    let num_users = ratings.num_users();
    let num_items = ratings.num_items();
    let entries = ratings
        .records
        .into_iter()
        .map(|r| Observation {
            user: r.user,
            item: r.item,
            rating: r.rating,
            confidence: r.confidence,
            split: spec.draw(rng.random::<f64>()),
        })
        .collect();
    RatingDataset::with_indices(num_users, num_items, entries, ratings.user_index, ratings.item_index)
}

impl RatingDataset {
    /// Builds a dataset over dense indices `0..num_users`, `0..num_items`.
    pub fn from_observations(num_users: usize, num_items: usize, entries: Vec<Observation>) -> Result<Self> {
        Self::with_indices(
            num_users,
            num_items,
            entries,
            IdIndex::identity(num_users),
            IdIndex::identity(num_items),
        )
    }

    pub fn with_indices(
        num_users: usize,
        num_items: usize,
        entries: Vec<Observation>,
        user_index: IdIndex,
        item_index: IdIndex,
    ) -> Result<Self> {
        if user_index.len() != num_users || item_index.len() != num_items {
            return Err(Error::DimensionMismatch(format!(
                "index maps have {}x{} ids for a {num_users}x{num_items} dataset",
                user_index.len(),
                item_index.len()
            )));
        }
        let mut seen: HashSet<(Split, usize, usize)> = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.user >= num_users {
                return Err(Error::IndexOutOfRange { kind: "user", index: e.user, len: num_users });
            }
            if e.item >= num_items {
                return Err(Error::IndexOutOfRange { kind: "item", index: e.item, len: num_items });
            }
            if !(e.confidence > 0.0 && e.confidence.is_finite()) {
                return Err(Error::Config(format!(
                    "entry ({}, {}) has non-positive confidence {}",
                    e.user, e.item, e.confidence
                )));
            }
            if !e.rating.is_finite() {
                return Err(Error::Config(format!("entry ({}, {}) has a non-finite rating", e.user, e.item)));
            }
            if !seen.insert((e.split, e.user, e.item)) {
                return Err(Error::Config(format!(
                    "duplicate entry ({}, {}) in the {} split",
                    e.user,
                    e.item,
                    e.split.name()
                )));
            }
        }
        let of = |s: Split| entries.iter().filter(|e| e.split == s).copied().collect::<Vec<_>>();
        let train = of(Split::Train);
        let validation = of(Split::Validation);
        let test = of(Split::Test);
        let train_by_user = Adjacency::build(num_users, train.iter().map(|e| e.user));
        let train_by_item = Adjacency::build(num_items, train.iter().map(|e| e.item));
        Ok(RatingDataset {
            num_users,
            num_items,
            entries,
            user_index,
            item_index,
            train,
            validation,
            test,
            train_by_user,
            train_by_item,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// All entries in input order.
    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub fn user_index(&self) -> &IdIndex {
        &self.user_index
    }

    pub fn item_index(&self) -> &IdIndex {
        &self.item_index
    }

    /// Training entries; `TrainWeights` and per-entry target vectors follow this order.
    pub fn train(&self) -> &[Observation] {
        &self.train
    }

    pub fn validation(&self) -> &[Observation] {
        &self.validation
    }

    pub fn test(&self) -> &[Observation] {
        &self.test
    }

    pub fn split_entries(&self, split: Split) -> &[Observation] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn train_by_user(&self) -> &Adjacency {
        &self.train_by_user
    }

    pub fn train_by_item(&self) -> &Adjacency {
        &self.train_by_item
    }

    /// Items with a positive rating in `split`, per user, sorted ascending.
    pub fn positives_by_user(&self, split: Split) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_users];
        for e in self.split_entries(split) {
            if e.rating > 0.0 {
                out[e.user].push(e.item);
            }
        }
        for items in &mut out {
            items.sort_unstable();
            items.dedup();
        }
        out
    }

    /// Key-value summary for logs and the run manifest.
    pub fn manifest(&self) -> String {
        let positives = self.entries.iter().filter(|e| e.rating > 0.0).count();
        let cells = (self.num_users * self.num_items).max(1) as f64;
        let mut s = String::new();
        let _ = writeln!(s, "users = {}", self.num_users);
        let _ = writeln!(s, "items = {}", self.num_items);
        let _ = writeln!(s, "entries = {}", self.entries.len());
        let _ = writeln!(s, "positives = {positives}");
        let _ = writeln!(s, "train = {}", self.train.len());
        let _ = writeln!(s, "validation = {}", self.validation.len());
        let _ = writeln!(s, "test = {}", self.test.len());
        let _ = writeln!(s, "positive_density = {:.6}", positives as f64 / cells);
        let _ = writeln!(s, "entry_density = {:.6}", self.entries.len() as f64 / cells);
        s
    }
}

/// How many unobserved pairs become zero entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroSampling {
    None,
    /// Independent inclusion probability for every unobserved pair.
    Rate(f64),
    /// Expected number of sampled zeros per positive entry.
    PerPositive(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareConfig {
    /// `None` keeps ratings as they are.
    pub binarize_threshold: Option<f64>,
    pub c_pos: f64,
    pub c_zero: f64,
    pub zeros: ZeroSampling,
    pub zero_seed: u64,
    pub split: SplitSpec,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            binarize_threshold: Some(5.0),
            c_pos: 1.0,
            c_zero: 0.01,
            zeros: ZeroSampling::PerPositive(5.0),
            zero_seed: 0,
            split: SplitSpec::default(),
        }
    }
}

/// Binarize, index, sample zeros, attach confidences and split.
pub fn prepare(mut raw: Vec<RawRating>, config: &PrepareConfig) -> Result<RatingDataset> {
    if let Some(threshold) = config.binarize_threshold {
        binarize(&mut raw, threshold);
    }
    let mut indexed = index_ratings(&raw);
    let (m, n) = (indexed.num_users(), indexed.num_items());
    let rate = match config.zeros {
        ZeroSampling::None => None,
        ZeroSampling::Rate(rate) => Some(rate),
        ZeroSampling::PerPositive(ratio) => {
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(Error::Config(format!("zero_ratio: must be positive, got {ratio}")));
            }
            Some(sample_rate_for_ratio(&indexed.records, m, n, ratio))
        }
    };
    if let Some(rate) = rate {
        indexed.records = densify_zeros(indexed.records, m, n, rate, config.zero_seed)?;
    }
    assign_confidence(&mut indexed.records, config.c_pos, config.c_zero)?;
    split(indexed, &config.split)
}
