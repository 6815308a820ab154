//! Experiment driver for the `pecf` command: configuration, training runs,
//! evaluation of saved models and parameter sweeps.

pub mod config;
pub mod overrides;
pub mod run;
pub mod sweep;

pub use config::{AlphaSetting, Method, RunConfig};
pub use overrides::Overrides;
pub use run::{evaluate_saved, prepare_dataset, run_experiment, RunOutcome};
pub use sweep::{sweep, SweepAxis, SweepParam, SweepRow};
