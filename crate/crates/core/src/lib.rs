#![warn(missing_debug_implementations, rust_2018_idioms)]
//! Collaborative filtering with weighted matrix factorization (WMF) and
//! ensembles built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`] loads implicit-feedback ratings, binarizes them, attaches
//!   confidence coefficients, samples zero entries and splits the result into
//!   train / validation / test.
//! * [`wmf`] fits a single factor model by weighted alternating least squares.
//! * [`ensemble`] holds the probabilistic mixture of factor models, trains it
//!   with EM from a random partition, or grows it progressively one
//!   complementary component at a time.
//! * [`boost`] is the L2Boost baseline: stage-wise residual fitting with
//!   shrinkage.
//! * [`eval`] computes Recall@M and weighted MSE on the test split.
//! * [`synth`] generates block-structured synthetic rating files.
//! * [`model_io`] reads and writes the binary model container.

pub mod boost;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod model_io;
pub mod seed;
pub mod synth;
pub mod wmf;

pub use boost::{train_l2boost, BoostModel};
pub use data::{
    Observation, RatingDataset, RatingFormat, RawRating, Split, SplitSpec,
};
pub use ensemble::{
    train_pecf, train_rand_em, AlphaStrategy, EmConfig, EnsembleModel, PecfConfig,
};
pub use error::{Error, Result};
pub use eval::{EvalReport, Evaluator};
pub use model_io::SavedModel;
pub use wmf::{solve_wmf, FactorModel, PriorConfig, TrainWeights, WmfConfig};

/// Anything that produces a real-valued score for a (user, item) pair.
///
/// `score` and `user_scores` index without bounds checks beyond the ones
/// slices perform; use [`Predictor::predict`] for a checked lookup.
pub trait Predictor: Sync {
    fn num_users(&self) -> usize;
    fn num_items(&self) -> usize;

    fn score(&self, user: usize, item: usize) -> f64;

    /// Writes the score of every item for `user` into `out` (length `num_items`).
    fn user_scores(&self, user: usize, out: &mut [f64]) {
        for (item, slot) in out.iter_mut().enumerate() {
            *slot = self.score(user, item);
        }
    }

    fn predict(&self, user: usize, item: usize) -> Result<f64> {
        if user >= self.num_users() {
            return Err(Error::IndexOutOfRange { kind: "user", index: user, len: self.num_users() });
        }
        if item >= self.num_items() {
            return Err(Error::IndexOutOfRange { kind: "item", index: item, len: self.num_items() });
        }
        Ok(self.score(user, item))
    }

    fn predict_scores_for_user(&self, user: usize) -> Result<Vec<f64>> {
        if user >= self.num_users() {
            return Err(Error::IndexOutOfRange { kind: "user", index: user, len: self.num_users() });
        }
        let mut out = vec![0.0; self.num_items()];
        self.user_scores(user, &mut out);
        Ok(out)
    }
}
