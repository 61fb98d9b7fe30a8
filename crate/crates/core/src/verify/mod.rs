//! Monte Carlo checks of the concentration, symmetrization and
//! generalization inequalities, plus exact checks of the spectral relations.
//!
//! Trials are seeded by `derive_seed(seed, trial)` and reduced in trial order,
//! so every report is a pure function of its config.

mod generalization;
mod spectral;
mod symmetrization;
mod tails;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::AssignmentMode;
use crate::error::{Error, Result};
use crate::kernel::KernelFamily;
use crate::learner::TrainOptions;
use crate::par::Execution;
use crate::pool::{ChainPool, PoolSpec};

pub use generalization::{verify_generalization, CoverageReport, MSweepRow, SlackSummary};
pub use spectral::{verify_spectral_relations, Relation, RelationReport};
pub use symmetrization::{verify_symmetrization, SymmetrizationReport};
pub use tails::{bernstein_bound, mcdiarmid_bound, verify_bernstein, verify_mcdiarmid, SanityGate};

/// Slack, in standard errors, allowed on every one-sided Monte Carlo check.
pub const STDERR_SLACK: f64 = 3.0;
/// Minimum number of trials a config may request.
pub const MIN_TRIALS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pool: PoolSpec,
    pub n: usize,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Per-state table g; the statistic is (1/n) Σ g(X_i).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
    /// Function class for the symmetrization check, one table per function.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<KernelFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// t grid (McDiarmid) or u grid (Bernstein).
    #[serde(default)]
    pub grid: Vec<f64>,
    /// Defaults: proportional for McDiarmid, probabilistic otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<AssignmentMode>,
    /// Pilot trials per main trial for the McDiarmid mean estimate.
    #[serde(default = "pilot_factor")]
    pub pilot_factor: usize,
    /// Bernstein: keep the pool's ν instead of starting at π of chain 0.
    #[serde(default)]
    pub use_pool_initial: bool,
    /// Generalization: report f ≡ 0 instead of training.
    #[serde(default)]
    pub force_zero_model: bool,
    /// Generalization: m values for the formula-level sweep.
    #[serde(default)]
    pub m_sweep: Vec<usize>,
    /// Generalization: Rademacher draws per run for the data-dependent bound
    /// (0 skips it).
    #[serde(default)]
    pub rademacher_trials: usize,
    #[serde(default)]
    pub train: TrainOptions,
    #[serde(default)]
    pub execution: Execution,
}

fn pilot_factor() -> usize {
    10
}

impl ExperimentConfig {
    pub fn new(pool: &ChainPool, n: usize, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            pool: pool.to_spec(),
            n,
            trials,
            seed,
            g: None,
            functions: None,
            family: None,
            delta: None,
            alpha: None,
            grid: Vec::new(),
            mode: None,
            pilot_factor: pilot_factor(),
            use_pool_initial: false,
            force_zero_model: false,
            m_sweep: Vec::new(),
            rademacher_trials: 0,
            train: TrainOptions::default(),
            execution: Execution::default(),
        }
    }

    pub(crate) fn check(&self, needs_grid: bool) -> Result<ChainPool> {
        if self.trials < MIN_TRIALS {
            return Err(Error::InvalidConfig(format!(
                "trials = {} is below the minimum {MIN_TRIALS}",
                self.trials
            )));
        }
        if self.n == 0 {
            return Err(Error::TooSmall(0));
        }
        if needs_grid && self.grid.is_empty() {
            return Err(Error::InvalidConfig("grid is empty".into()));
        }
        if let Some(t) = self.grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidConfig(format!("grid value {t} must be ≥ 0")));
        }
        ChainPool::from_spec(&self.pool)
    }

    pub(crate) fn table(&self, pool: &ChainPool) -> Result<&[f64]> {
        let g = self.g.as_deref().ok_or(Error::MissingInput("g"))?;
        if g.len() != pool.n_states() {
            return Err(Error::DimensionMismatch {
                expected: pool.n_states(),
                got: g.len(),
            });
        }
        if let Some(v) = g.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("g value {v} is not finite")));
        }
        Ok(g)
    }
}

/// Empirical tail against a bound on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub kind: String,
    pub grid: Vec<f64>,
    pub empirical_tail: Vec<f64>,
    pub stderr: Vec<f64>,
    pub bound: Vec<f64>,
    pub pass: Vec<bool>,
    pub trials: usize,
    pub passed: bool,
    /// Exact quantities entering the bound.
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<SanityGate>,
}

impl TailReport {
    fn from_counts(
        kind: &str,
        grid: &[f64],
        exceed: &[u64],
        trials: usize,
        bound: Vec<f64>,
        constants: BTreeMap<String, f64>,
    ) -> Self {
        let t = trials as f64;
        let empirical_tail: Vec<f64> = exceed.iter().map(|&c| c as f64 / t).collect();
        let stderr: Vec<f64> = empirical_tail.iter().map(|p| (p * (1.0 - p) / t).sqrt()).collect();
        let pass: Vec<bool> = empirical_tail
            .iter()
            .zip(&stderr)
            .zip(&bound)
            .map(|((e, s), b)| *e <= b + STDERR_SLACK * s)
            .collect();
        TailReport {
            kind: kind.into(),
            grid: grid.to_vec(),
            passed: pass.iter().all(|&p| p),
            empirical_tail,
            stderr,
            bound,
            pass,
            trials,
            constants,
            gate: None,
        }
    }

    /// Columns grid, empirical, bound, stderr, pass.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["grid", "empirical", "bound", "stderr", "pass"])?;
        for i in 0..self.grid.len() {
            out.write_record([
                format!("{}", self.grid[i]),
                format!("{}", self.empirical_tail[i]),
                format!("{}", self.bound[i]),
                format!("{}", self.stderr[i]),
                self.pass[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Per-state table evaluated along one path, averaged.
pub(crate) fn path_mean(table: &[f64], states: impl IntoIterator<Item = usize>, n: usize) -> f64 {
    states.into_iter().map(|x| table[x]).sum::<f64>() / n as f64
}
