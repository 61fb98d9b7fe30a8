use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{AssignmentMode, PoolSampler};
use crate::error::Result;
use crate::par::{map_indexed, Execution, MeanVar};
use crate::pool::{pool_summary, PoolOptions};
use crate::rng::derive_seed;

use super::{path_mean, ExperimentConfig, TailReport};

/// Pilot and main means must agree within this many combined standard errors.
pub const GATE_SLACK: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SanityGate {
    pub pilot_trials: usize,
    pub pilot_mean: f64,
    pub pilot_stderr: f64,
    pub main_mean: f64,
    pub main_stderr: f64,
    pub passed: bool,
}

/// 2 exp(−2t² / (c² n τ_min)).
pub fn mcdiarmid_bound(t: f64, c: f64, n: usize, tau_min: f64) -> f64 {
    if t == 0.0 {
        return 2.0;
    }
    if c == 0.0 {
        return 0.0;
    }
    2.0 * (-2.0 * t * t / (c * c * n as f64 * tau_min)).exp()
}

/// 2η exp(−n u² γ_aps / (8 |P| V_f (1 + 1/γ_aps) + 20 u M)).
pub fn bernstein_bound(u: f64, n: usize, n_chains: usize, v_f: f64, gamma_aps: f64, eta: f64, m: f64) -> f64 {
    if u == 0.0 {
        return 2.0 * eta;
    }
    let denom = 8.0 * n_chains as f64 * v_f * (1.0 + 1.0 / gamma_aps) + 20.0 * u * m;
    if denom == 0.0 {
        return 0.0;
    }
    2.0 * eta * (-(n as f64) * u * u * gamma_aps / denom).exp()
}

/// (1/n) Σ g(X_i) for `trials` independent paths.
fn simulate(
    sampler: &PoolSampler,
    table: &[f64],
    n: usize,
    mode: AssignmentMode,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Vec<f64> {
    let fixed = (mode == AssignmentMode::Proportional).then(|| sampler.assign(n, 0, mode));
    map_indexed(trials, exec, |t| {
        let s = derive_seed(seed, t as u64);
        let owned;
        let asg = match &fixed {
            Some(a) => a,
            None => {
                owned = sampler.assign(n, s, mode);
                &owned
            }
        };
        let mut states = Vec::with_capacity(n);
        sampler.walk(asg, s, |_, _, x| states.push(x));
        path_mean(table, states, n)
    })
}

fn exceedances(values: &[f64], centre: f64, grid: &[f64]) -> Vec<u64> {
    grid.iter()
        .map(|&t| values.iter().filter(|v| (*v - centre).abs() >= t).count() as u64)
        .collect()
}

fn summary_options(cfg: &ExperimentConfig) -> PoolOptions {
    PoolOptions {
        execution: cfg.execution,
        ..PoolOptions::default()
    }
}

/// Deviation of (1/n) Σ g(X_i) from its mean against the mixed McDiarmid
/// bound with c = range(g)/n and τ_min of the pool. The mean is estimated from
/// an independent pilot run `pilot_factor` times larger.
pub fn verify_mcdiarmid(cfg: &ExperimentConfig) -> Result<TailReport> {
    let pool = cfg.check(true)?;
    let table = cfg.table(&pool)?;
    let mode = cfg.mode.unwrap_or(AssignmentMode::Proportional);
    let summary = pool_summary(&pool, &summary_options(cfg))?;
    let hi = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = table.iter().copied().fold(f64::INFINITY, f64::min);
    let c = (hi - lo) / cfg.n as f64;

    let sampler = PoolSampler::new(&pool);
    let main = simulate(&sampler, table, cfg.n, mode, cfg.trials, cfg.seed, cfg.execution);
    let pilot_trials = cfg.trials * cfg.pilot_factor.max(1);
    let pilot_seed = derive_seed(cfg.seed, u64::MAX);
    let pilot = simulate(&sampler, table, cfg.n, mode, pilot_trials, pilot_seed, cfg.execution);
    let pm = MeanVar::from_slice(&pilot);
    let mm = MeanVar::from_slice(&main);
    let combined = (pm.stderr().powi(2) + mm.stderr().powi(2)).sqrt();
    let gate = SanityGate {
        pilot_trials,
        pilot_mean: pm.mean(),
        pilot_stderr: pm.stderr(),
        main_mean: mm.mean(),
        main_stderr: mm.stderr(),
        passed: (pm.mean() - mm.mean()).abs() <= GATE_SLACK * combined,
    };

    let bound = cfg
        .grid
        .iter()
        .map(|&t| mcdiarmid_bound(t, c, cfg.n, summary.tau_min))
        .collect();
    let constants = BTreeMap::from([
        ("c".to_string(), c),
        ("tau_min".to_string(), summary.tau_min),
        ("n".to_string(), cfg.n as f64),
    ]);
    let exceed = exceedances(&main, pm.mean(), &cfg.grid);
    let mut report = TailReport::from_counts("mcdiarmid", &cfg.grid, &exceed, cfg.trials, bound, constants);
    report.passed &= gate.passed;
    report.gate = Some(gate);
    Ok(report)
}

/// Deviation of S/n from Σ_P μ_P E_{π_P}[g] against the mixed Bernstein
/// bound, with V_f, γ_aps and η computed exactly and C taken as M = ‖g‖_∞.
pub fn verify_bernstein(cfg: &ExperimentConfig) -> Result<TailReport> {
    let mut pool = cfg.check(true)?;
    if !cfg.use_pool_initial {
        let pi = pool.stationary(0).clone();
        pool = pool.with_initial(pi)?;
    }
    let table = cfg.table(&pool)?;
    let mode = cfg.mode.unwrap_or(AssignmentMode::Probabilistic);
    let summary = pool_summary(&pool, &summary_options(cfg))?;
    let target = pool.stationary_mean(table);
    let v_f = (0..pool.len())
        .map(|p| {
            let pi = pool.stationary(p).probs();
            let mean: f64 = pi.iter().zip(table).map(|(w, g)| w * g).sum();
            pi.iter().zip(table).map(|(w, g)| w * (g - mean).powi(2)).sum::<f64>()
        })
        .fold(0.0, f64::max);
    let m = table.iter().fold(0.0f64, |a, g| a.max(g.abs()));

    let sampler = PoolSampler::new(&pool);
    let values = simulate(&sampler, table, cfg.n, mode, cfg.trials, cfg.seed, cfg.execution);
    let bound = cfg
        .grid
        .iter()
        .map(|&u| bernstein_bound(u, cfg.n, pool.len(), v_f, summary.gamma_aps, summary.eta, m))
        .collect();
    let constants = BTreeMap::from([
        ("v_f".to_string(), v_f),
        ("gamma_aps".to_string(), summary.gamma_aps),
        ("eta".to_string(), summary.eta),
        ("m".to_string(), m),
        ("chains".to_string(), pool.len() as f64),
        ("target_mean".to_string(), target),
    ]);
    let exceed = exceedances(&values, target, &cfg.grid);
    Ok(TailReport::from_counts("bernstein", &cfg.grid, &exceed, cfg.trials, bound, constants))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desk;

    #[test]
    fn vacuous_points() {
        assert_eq!(mcdiarmid_bound(0.0, 0.01, 200, 4.0), 2.0);
        assert_eq!(bernstein_bound(0.0, 500, 1, 1.0, 0.75, 1.0, 1.0), 2.0);
        assert_eq!(bernstein_bound(0.1, 500, 1, 0.0, 0.75, 1.0, 0.0), 0.0);
    }

    #[test]
    fn constant_table_never_deviates() {
        let pool = desk::switching_pair().unwrap();
        let mut cfg = ExperimentConfig::new(&pool, 50, 200, 1);
        cfg.g = Some(vec![0.7, 0.7]);
        cfg.grid = vec![0.0, 0.01, 0.1];
        let r = verify_bernstein(&cfg).unwrap();
        assert_eq!(r.constants["v_f"], 0.0);
        assert_eq!(r.empirical_tail[1], 0.0);
        assert_eq!(r.empirical_tail[0], 1.0);
        assert!(r.passed);
    }

    #[test]
    fn small_mcdiarmid_run_is_reproducible() {
        let pool = desk::switching_pair().unwrap();
        let mut cfg = ExperimentConfig::new(&pool, 40, 300, 9);
        cfg.g = Some(vec![1.0, -1.0]);
        cfg.grid = vec![0.0, 0.1, 0.2];
        let a = verify_mcdiarmid(&cfg).unwrap();
        cfg.execution = Execution::Sequential;
        let b = verify_mcdiarmid(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.bound[0], 2.0);
        assert!(a.passed);
    }

    #[test]
    fn rejects_small_trial_counts() {
        let pool = desk::switching_pair().unwrap();
        let mut cfg = ExperimentConfig::new(&pool, 40, 10, 9);
        cfg.g = Some(vec![1.0, -1.0]);
        cfg.grid = vec![0.1];
        assert!(verify_mcdiarmid(&cfg).is_err());
        cfg.trials = 100;
        cfg.grid.clear();
        assert!(verify_mcdiarmid(&cfg).is_err());
    }
}
