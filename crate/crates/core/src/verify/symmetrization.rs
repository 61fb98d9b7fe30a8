use serde::{Deserialize, Serialize};

use crate::data::{AssignmentMode, PoolSampler};
use crate::error::{Error, Result};
use crate::par::{map_indexed, MeanVar};
use crate::pool::symmetrization_offset;
use crate::rng::{derive_seed, Stream, SIGN_STREAM};

use super::{ExperimentConfig, STDERR_SLACK};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationReport {
    /// Estimate of E sup_f |P_n f − P f|.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// Estimate of E sup_f |(1/n) Σ ε_i f(X_i)|.
    pub symmetrized: f64,
    pub symmetrized_stderr: f64,
    pub a_n: f64,
    /// 2·symmetrized + A_n.
    pub rhs: f64,
    /// √(lhs_stderr² + 4·symmetrized_stderr²).
    pub combined_stderr: f64,
    pub sup_norm: f64,
    pub class_size: usize,
    pub trials: usize,
    pub passed: bool,
}

pub fn verify_symmetrization(cfg: &ExperimentConfig) -> Result<SymmetrizationReport> {
    let pool = cfg.check(false)?;
    let class = cfg.functions.as_deref().ok_or(Error::MissingInput("functions"))?;
    if class.is_empty() {
        return Err(Error::InvalidConfig("function class is empty".into()));
    }
    if let Some(f) = class.iter().find(|f| f.len() != pool.n_states()) {
        return Err(Error::DimensionMismatch {
            expected: pool.n_states(),
            got: f.len(),
        });
    }
    let sup_norm = class.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if !sup_norm.is_finite() {
        return Err(Error::InvalidConfig("function values must be finite".into()));
    }
    let means: Vec<f64> = class.iter().map(|f| pool.stationary_mean(f)).collect();
    let a_n = symmetrization_offset(&pool, cfg.n, sup_norm)?.a_n;
    let mode = cfg.mode.unwrap_or(AssignmentMode::Probabilistic);
    let sampler = PoolSampler::new(&pool);
    let n = cfg.n;

    let per_trial = map_indexed(cfg.trials, cfg.execution, |t| {
        let s = derive_seed(cfg.seed, t as u64);
        let asg = sampler.assign(n, s, mode);
        let mut states = Vec::with_capacity(n);
        sampler.walk(&asg, s, |_, _, x| states.push(x));
        let mut signs = Stream::new(s, SIGN_STREAM);
        let eps: Vec<f64> = (0..n).map(|_| signs.sign()).collect();
        let mut dev = 0.0f64;
        let mut sym = 0.0f64;
        for (f, pf) in class.iter().zip(&means) {
            let mut plain = 0.0;
            let mut signed = 0.0;
            for (&x, e) in states.iter().zip(&eps) {
                plain += f[x];
                signed += e * f[x];
            }
            dev = dev.max((plain / n as f64 - pf).abs());
            sym = sym.max((signed / n as f64).abs());
        }
        (dev, sym)
    });
    let lhs = MeanVar::from_slice(&per_trial.iter().map(|p| p.0).collect::<Vec<_>>());
    let sym = MeanVar::from_slice(&per_trial.iter().map(|p| p.1).collect::<Vec<_>>());
    let rhs = 2.0 * sym.mean() + a_n;
    let combined = (lhs.stderr().powi(2) + 4.0 * sym.stderr().powi(2)).sqrt();
    Ok(SymmetrizationReport {
        lhs: lhs.mean(),
        lhs_stderr: lhs.stderr(),
        symmetrized: sym.mean(),
        symmetrized_stderr: sym.stderr(),
        a_n,
        rhs,
        combined_stderr: combined,
        sup_norm,
        class_size: class.len(),
        trials: cfg.trials,
        passed: lhs.mean() <= rhs + STDERR_SLACK * combined,
    })
}
