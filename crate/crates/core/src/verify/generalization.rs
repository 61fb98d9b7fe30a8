use serde::{Deserialize, Serialize};

use crate::bounds::{empirical_rademacher_points, generalization_bound, BoundInputs, BoundKind, BoundReport};
use crate::data::{generate, AssignmentMode};
use crate::error::{Error, Result};
use crate::learner::{empirical_margin_error, train, true_error_exact, MklModel};
use crate::par::{map_indexed, Execution, MeanVar};
use crate::pool::{pool_summary, symmetrization_offset, PoolOptions};
use crate::rng::derive_seed;

use super::{ExperimentConfig, STDERR_SLACK};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackSummary {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

impl SlackSummary {
    fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let k = v.len();
        let median = if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) };
        SlackSummary {
            min: v[0],
            median,
            mean: MeanVar::from_slice(values).mean(),
            max: v[k - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MSweepRow {
    pub m: usize,
    pub bound: f64,
    pub m_subterm: f64,
    /// m_subterm relative to the first row.
    pub ratio: f64,
    /// √(ln(2(m+1)/α) / ln(2(m₀+1)/α)).
    pub expected_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub runs: usize,
    pub bound: BoundReport,
    /// Fraction of runs with E_δ(f) ≤ bound.
    pub coverage: f64,
    /// 1 − α − 3·√(α(1 − α)/runs).
    pub threshold: f64,
    pub passed: bool,
    pub estimation_error: SlackSummary,
    pub slack: SlackSummary,
    pub mean_true_error: f64,
    pub mean_margin_error: f64,
    /// Largest ‖f‖²_K over the runs.
    pub max_norm_squared: f64,
    /// Coverage of the bound with the per-run Rademacher estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dependent_coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub m_sweep: Vec<MSweepRow>,
}

struct Run {
    true_error: f64,
    margin_error: f64,
    norm2: f64,
    rademacher: Option<f64>,
}

/// Repeats (generate, train, evaluate) and counts how often the estimation
/// error stays below the data-independent bound with the lemma-5 complexity.
pub fn verify_generalization(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    let pool = cfg.check(false)?;
    let fam = cfg.family.as_ref().ok_or(Error::MissingInput("family"))?;
    fam.validate()?;
    let delta = cfg.delta.ok_or(Error::MissingInput("delta"))?;
    let alpha = cfg.alpha.ok_or(Error::MissingInput("alpha"))?;
    let kappa = fam.kappa()?;
    let summary = pool_summary(
        &pool,
        &PoolOptions {
            execution: cfg.execution,
            ..PoolOptions::default()
        },
    )?;
    let b_n = symmetrization_offset(&pool, cfg.n, 1.0)?.b_n;
    let mut inputs = BoundInputs::new(cfg.n, fam.m(), alpha);
    inputs.b = fam.b;
    inputs.kappa = kappa;
    inputs.delta = delta;
    inputs.tau_min = Some(summary.tau_min);
    inputs.b_n = Some(b_n);
    let bound = generalization_bound(BoundKind::Thm1, &inputs, None)?;
    let mode = cfg.mode.unwrap_or(AssignmentMode::Probabilistic);

    let runs = map_indexed(cfg.trials, cfg.execution, |r| -> Result<Run> {
        let s = derive_seed(cfg.seed, r as u64);
        let ds = generate(&pool, cfg.n, s, mode)?;
        let model = if cfg.force_zero_model {
            MklModel::zero(fam, delta, ds.features())
        } else {
            train(&ds, fam, delta, &cfg.train)?
        };
        let rademacher = match cfg.rademacher_trials {
            0 => None,
            k => Some(
                empirical_rademacher_points(&ds.features(), fam, k, derive_seed(s, 1), Execution::Sequential)?
                    .estimate,
            ),
        };
        Ok(Run {
            true_error: true_error_exact(&model, &pool)?,
            margin_error: empirical_margin_error(&model, &ds, delta)?,
            norm2: if cfg.force_zero_model { 0.0 } else { model.rkhs_norm_squared()? },
            rademacher,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let errors: Vec<f64> = runs.iter().map(|r| r.true_error - r.margin_error).collect();
    let slack: Vec<f64> = errors.iter().map(|e| bound.value - e).collect();
    let covered = errors.iter().filter(|e| **e <= bound.value).count();
    let k = cfg.trials as f64;
    let coverage = covered as f64 / k;
    let threshold = 1.0 - alpha - STDERR_SLACK * (alpha * (1.0 - alpha) / k).sqrt();

    let data_dependent_coverage = if cfg.rademacher_trials > 0 {
        let mut hits = 0usize;
        for (run, e) in runs.iter().zip(&errors) {
            let b = generalization_bound(BoundKind::Master, &inputs, run.rademacher)?;
            if *e <= b.value {
                hits += 1;
            }
        }
        Some(hits as f64 / k)
    } else {
        None
    };

    let mut m_sweep = Vec::new();
    if let Some(&m0) = cfg.m_sweep.first() {
        let ln0 = (2.0 * (m0 as f64 + 1.0) / alpha).ln();
        let mut first = None;
        for &m in &cfg.m_sweep {
            let mut inp = inputs.clone();
            inp.m = m;
            let rep = generalization_bound(BoundKind::Thm1, &inp, None)?;
            let sub = rep.m_subterm.unwrap_or(0.0);
            let base = *first.get_or_insert(sub);
            m_sweep.push(MSweepRow {
                m,
                bound: rep.value,
                m_subterm: sub,
                ratio: sub / base,
                expected_ratio: ((2.0 * (m as f64 + 1.0) / alpha).ln() / ln0).sqrt(),
            });
        }
    }

    Ok(CoverageReport {
        runs: cfg.trials,
        coverage,
        threshold,
        passed: coverage >= threshold,
        estimation_error: SlackSummary::of(&errors),
        slack: SlackSummary::of(&slack),
        mean_true_error: MeanVar::from_slice(&runs.iter().map(|r| r.true_error).collect::<Vec<_>>()).mean(),
        mean_margin_error: MeanVar::from_slice(&runs.iter().map(|r| r.margin_error).collect::<Vec<_>>()).mean(),
        max_norm_squared: runs.iter().map(|r| r.norm2).fold(0.0, f64::max),
        data_dependent_coverage,
        m_sweep,
        bound,
    })
}
