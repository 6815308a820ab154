//! Grid sweeps: one run per combination of parameter values, collected into
//! a single comparison table.

use std::fmt::Write as _;
use std::fs;

use anyhow::{bail, Context};
use pecf_core::EvalReport;

use crate::config::{AlphaSetting, Method, RunConfig};
use crate::run::run_experiment;

pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    D,
    Nu,
    Sigma,
    Alpha,
    Rounds,
    /// Number of components: `components` for randem, `rounds + 1` otherwise.
    #[value(name = "K", alias = "k")]
    K,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::D => "d",
            SweepParam::Nu => "nu",
            SweepParam::Sigma => "sigma",
            SweepParam::Alpha => "alpha",
            SweepParam::Rounds => "rounds",
            SweepParam::K => "K",
        }
    }

    /// Sets this parameter in `config` from its textual value.
    pub fn apply(self, config: &mut RunConfig, value: &str) -> anyhow::Result<()> {
        let name = self.name();
        let as_usize = || value.parse::<usize>().with_context(|| format!("{name}: expected an integer, got {value:?}"));
        let as_f64 = || value.parse::<f64>().with_context(|| format!("{name}: expected a number, got {value:?}"));
        match self {
            SweepParam::D => config.d = as_usize()?,
            SweepParam::Nu => config.nu = as_f64()?,
            SweepParam::Sigma => config.sigma = as_f64()?,
            SweepParam::Alpha => config.alpha = value.parse::<AlphaSetting>()?,
            SweepParam::Rounds => config.rounds = as_usize()?,
            SweepParam::K => {
                let k = as_usize()?;
                if k == 0 {
                    bail!("K: must be at least 1");
                }
                match config.method {
                    Method::Randem => config.components = k,
                    _ => config.rounds = k - 1,
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub settings: Vec<(SweepParam, String)>,
    /// Final-round metrics of the run.
    pub report: EvalReport,
}

fn combinations(axes: &[SweepAxis]) -> Vec<Vec<(SweepParam, String)>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut row = prefix.clone();
                    row.push((axis.param, v.clone()));
                    row
                })
            })
            .collect();
    }
    out
}

fn run_dir_name(settings: &[(SweepParam, String)]) -> String {
    settings.iter().map(|(p, v)| format!("{}={v}", p.name())).collect::<Vec<_>>().join("_")
}

/// Runs every combination of the axes' values (cartesian product, first axis
/// slowest). Each run writes into its own subdirectory of `config.output`;
/// the table goes to `sweep.csv` there.
pub fn sweep(config: &RunConfig, axes: &[SweepAxis]) -> anyhow::Result<Vec<SweepRow>> {
    if axes.is_empty() {
        bail!("sweep: no parameter given");
    }
    for (i, axis) in axes.iter().enumerate() {
        if axis.values.is_empty() {
            bail!("{}: no sweep values given", axis.param.name());
        }
        if axes[..i].iter().any(|a| a.param == axis.param) {
            bail!("{}: swept twice", axis.param.name());
        }
    }
    let mut planned = Vec::new();
    for settings in combinations(axes) {
        let mut run = config.clone();
        for (param, value) in &settings {
            param.apply(&mut run, value)?;
        }
        run.output = config.output.join(run_dir_name(&settings));
        run.validate().with_context(|| format!("sweep point {}", run_dir_name(&settings)))?;
        planned.push((settings, run));
    }

    let mut rows = Vec::with_capacity(planned.len());
    for (settings, run) in planned {
        let outcome = run_experiment(&run).with_context(|| format!("sweep point {}", run_dir_name(&settings)))?;
        rows.push(SweepRow { settings, report: outcome.final_report().clone() });
    }
    fs::create_dir_all(&config.output)?;
    let path = config.output.join(SWEEP_FILE);
    fs::write(&path, sweep_table(&rows)).with_context(|| format!("writing {}", path.display()))?;
    Ok(rows)
}

/// Comma-separated table: swept parameters, then Recall@M columns and WMSE.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let mut s = String::new();
    let params: Vec<&str> = first.settings.iter().map(|(p, _)| p.name()).collect();
    let _ = writeln!(s, "{},{}", params.join(","), first.report.csv_header().trim_start_matches("round,"));
    for row in rows {
        let values: Vec<&str> = row.settings.iter().map(|(_, v)| v.as_str()).collect();
        let metrics = row.report.csv_row();
        let metrics = metrics.split_once(',').map_or("", |(_, rest)| rest);
        let _ = writeln!(s, "{},{metrics}", values.join(","));
    }
    s
}
