//! Quantities aggregated over a pool of chains: τ_min, the aggregated pseudo
//! spectral gap, aggregated mixing times, the density bound η, the
//! symmetrization offsets A_n / B_n and the block mixing matrix Γ.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::{
    self, Chain, ChainAnalysis, ChainSpec, Distribution, Tolerances, DEFAULT_K_MAX,
};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

/// ε grid on which t_amix(ε) is sampled by default.
pub const DEFAULT_EPSILON_GRID: [f64; 9] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45];

/// A weighted pool of chains on a shared state space plus the initial law ν.
#[derive(Clone, Debug)]
pub struct ChainPool {
    chains: Vec<Chain>,
    weights: Vec<f64>,
    initial: Distribution,
    stationary: Vec<Distribution>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolChainSpec {
    #[serde(flatten)]
    pub chain: ChainSpec,
    pub weight: f64,
}

/// On-disk pool description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolSpec {
    pub chains: Vec<PoolChainSpec>,
    pub initial: Vec<f64>,
}

impl ChainPool {
    pub fn new(chains: Vec<Chain>, weights: Vec<f64>, initial: Distribution) -> Result<Self> {
        Self::with_tolerances(chains, weights, initial, &Tolerances::default())
    }

    pub fn with_tolerances(
        chains: Vec<Chain>,
        weights: Vec<f64>,
        initial: Distribution,
        tol: &Tolerances,
    ) -> Result<Self> {
        if chains.is_empty() {
            return Err(Error::EmptyPool);
        }
        if weights.len() != chains.len() {
            return Err(Error::DimensionMismatch {
                expected: chains.len(),
                got: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::InvalidConfig(format!("mixture weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("mixture weights sum to {total}")));
        }
        let n = chains[0].n_states();
        for c in &chains {
            if c.n_states() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.n_states(),
                });
            }
        }
        if initial.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: initial.len(),
            });
        }
        let stationary = chains
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let pi = chain::stationary_distribution(&c.transition, tol.stationarity)
                    .map_err(Error::in_chain(i))?;
                chain::density_sup(&initial, &pi).map_err(Error::in_chain(i))?;
                Ok(pi)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainPool {
            chains,
            weights,
            initial,
            stationary,
        })
    }

    pub fn single(chain: Chain, initial: Distribution) -> Result<Self> {
        Self::new(vec![chain], vec![1.0], initial)
    }

    pub fn from_spec(spec: &PoolSpec) -> Result<Self> {
        let chains = spec
            .chains
            .iter()
            .enumerate()
            .map(|(i, c)| Chain::from_spec(&c.chain).map_err(Error::in_chain(i)))
            .collect::<Result<Vec<_>>>()?;
        let weights = spec.chains.iter().map(|c| c.weight).collect();
        Self::new(chains, weights, Distribution::new(spec.initial.clone())?)
    }

    pub fn to_spec(&self) -> PoolSpec {
        PoolSpec {
            chains: self
                .chains
                .iter()
                .zip(&self.weights)
                .map(|(c, &weight)| PoolChainSpec {
                    chain: c.to_spec(),
                    weight,
                })
                .collect(),
            initial: self.initial.probs().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn n_states(&self) -> usize {
        self.chains[0].n_states()
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn chain(&self, i: usize) -> &Chain {
        &self.chains[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn initial(&self) -> &Distribution {
        &self.initial
    }

    pub fn stationary(&self, i: usize) -> &Distribution {
        &self.stationary[i]
    }

    /// Replaces ν, re-checking absolute continuity.
    pub fn with_initial(mut self, initial: Distribution) -> Result<Self> {
        for (i, pi) in self.stationary.iter().enumerate() {
            chain::density_sup(&initial, pi).map_err(Error::in_chain(i))?;
        }
        self.initial = initial;
        Ok(self)
    }

    /// Pf = Σ_P μ_P Σ_x π_P(x) f(x) for a per-state table f.
    pub fn stationary_mean(&self, table: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.stationary)
            .map(|(w, pi)| w * pi.probs().iter().zip(table).map(|(p, f)| p * f).sum::<f64>())
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoolOptions {
    pub k_max: usize,
    pub epsilon_grid: Vec<f64>,
    /// Upper limit for the adaptive TV horizon.
    pub max_horizon: usize,
    pub tolerances: Tolerances,
    pub execution: Execution,
}

impl Default for PoolOptions {
    fn default() -> Self {
        PoolOptions {
            k_max: DEFAULT_K_MAX,
            epsilon_grid: DEFAULT_EPSILON_GRID.to_vec(),
            max_horizon: 100_000,
            tolerances: Tolerances::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub gamma_star: f64,
    pub lambda: f64,
    pub gamma_reversible: Option<f64>,
    pub is_reversible: bool,
    pub gamma_ps: f64,
    pub k_star: usize,
    pub tau_min: f64,
    pub tau_min_t: usize,
    pub t_mix: usize,
    /// d(1), the one-step TV decay.
    pub d1: f64,
    pub pi: Vec<f64>,
    pub pi_min: f64,
    /// ‖dν/dπ − 1‖₂.
    pub chi_norm: f64,
    /// ‖dν/dπ‖_∞.
    pub density_sup: f64,
    /// t_mix(ε) on the option grid.
    pub t_mix_grid: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatedMixingTime {
    pub epsilon: f64,
    pub t_amix: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub tau_min: f64,
    pub gamma_aps: f64,
    pub t_amix: Vec<AggregatedMixingTime>,
    /// t_amix(1/4).
    pub t_amix_quarter: usize,
    pub eta: f64,
    pub weights: Vec<f64>,
    pub per_chain: Vec<ChainSummary>,
}

fn summarize_chain(pool: &ChainPool, i: usize, opts: &PoolOptions) -> Result<(ChainSummary, ChainAnalysis)> {
    let c = pool.chain(i);
    if !c.transition.is_primitive() {
        return Err(Error::NotErgodic("no power of the transition matrix is positive".into()));
    }
    let min_eps = opts
        .epsilon_grid
        .iter()
        .copied()
        .fold(0.25, f64::min);
    let a = chain::analyze(
        &c.transition,
        opts.k_max,
        min_eps,
        opts.max_horizon,
        &opts.tolerances,
    )?;
    let pi = pool.stationary(i);
    let t_mix_grid = opts
        .epsilon_grid
        .iter()
        .map(|&e| chain::mixing_time(&a.profile, e))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        ChainSummary {
            gamma_star: a.spectral.gamma_star,
            lambda: a.spectral.lambda,
            gamma_reversible: a.spectral.gamma_reversible,
            is_reversible: a.spectral.is_reversible,
            gamma_ps: a.gamma_ps,
            k_star: a.k_star,
            tau_min: a.tau_min.value,
            tau_min_t: a.tau_min.t_star,
            t_mix: a.t_mix,
            d1: a.profile.at(1),
            pi: pi.probs().to_vec(),
            pi_min: pi.min(),
            chi_norm: chain::chi_divergence_norm(pool.initial(), pi)?,
            density_sup: chain::density_sup(pool.initial(), pi)?,
            t_mix_grid,
        },
        a,
    ))
}

/// Per-chain analysis plus the pool aggregates.
pub fn pool_summary(pool: &ChainPool, opts: &PoolOptions) -> Result<PoolSummary> {
    if let Some(e) = opts.epsilon_grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::InvalidConfig(format!("grid epsilon {e} outside (0,1)")));
    }
    let per_chain = map_indexed(pool.len(), opts.execution, |i| {
        summarize_chain(pool, i, opts)
            .map(|(s, _)| s)
            .map_err(Error::in_chain(i))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let tau_min = aggregate_tau_min(pool.weights(), per_chain.iter().map(|c| c.tau_min));
    let gamma_aps = per_chain
        .iter()
        .map(|c| c.gamma_ps)
        .fold(f64::INFINITY, f64::min);
    let t_amix = opts
        .epsilon_grid
        .iter()
        .enumerate()
        .map(|(g, &epsilon)| AggregatedMixingTime {
            epsilon,
            t_amix: per_chain.iter().map(|c| c.t_mix_grid[g]).max().unwrap(),
        })
        .collect();
    let t_amix_quarter = per_chain.iter().map(|c| c.t_mix).max().unwrap();
    let eta = per_chain
        .iter()
        .map(|c| c.density_sup)
        .fold(0.0, f64::max);
    Ok(PoolSummary {
        tau_min,
        gamma_aps,
        t_amix,
        t_amix_quarter,
        eta,
        weights: pool.weights().to_vec(),
        per_chain,
    })
}

/// (Σ_P √(μ_P τ_P))².
pub fn aggregate_tau_min(weights: &[f64], per_chain: impl IntoIterator<Item = f64>) -> f64 {
    weights
        .iter()
        .zip(per_chain)
        .map(|(w, t)| (w * t).sqrt())
        .sum::<f64>()
        .powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationOffset {
    pub a_n: f64,
    pub b_n: f64,
}

/// max_P √(2M/(n(1−λ_P)) + 64M²/(n²(1−λ_P)²)·‖dν/dπ_P − 1‖₂) for the given
/// per-chain (λ_P, χ_P) pairs.
pub fn offset_from_parts(lambda_chi: &[(f64, f64)], n: usize, m: f64) -> Result<f64> {
    if n == 0 || !(m >= 0.0) || !m.is_finite() {
        return Err(Error::InvalidConfig("need n ≥ 1 and M ≥ 0".into()));
    }
    let n = n as f64;
    let mut best = f64::NEG_INFINITY;
    for (i, &(lambda, chi)) in lambda_chi.iter().enumerate() {
        let gap = 1.0 - lambda;
        if !(gap > 0.0) {
            return Err(Error::DegenerateGap(i));
        }
        let v = (2.0 * m / (n * gap) + 64.0 * m * m / (n * n * gap * gap) * chi).sqrt();
        best = best.max(v);
    }
    Ok(best)
}

/// A_n at bound M and B_n (A_n at M = 1).
pub fn symmetrization_offset(pool: &ChainPool, n: usize, m: f64) -> Result<SymmetrizationOffset> {
    let parts = pool
        .chains()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let pi = pool.stationary(i);
            let s = chain::spectral_gaps(&c.transition, pi).map_err(Error::in_chain(i))?;
            let chi = chain::chi_divergence_norm(pool.initial(), pi).map_err(Error::in_chain(i))?;
            Ok((s.lambda, chi))
        })
        .collect::<Result<Vec<_>>>()?;
    symmetrization_offset_from_parts(&parts, n, m)
}

pub fn symmetrization_offset_from_summary(
    summary: &PoolSummary,
    n: usize,
    m: f64,
) -> Result<SymmetrizationOffset> {
    let parts: Vec<(f64, f64)> = summary
        .per_chain
        .iter()
        .map(|c| (c.lambda, c.chi_norm))
        .collect();
    symmetrization_offset_from_parts(&parts, n, m)
}

fn symmetrization_offset_from_parts(
    parts: &[(f64, f64)],
    n: usize,
    m: f64,
) -> Result<SymmetrizationOffset> {
    Ok(SymmetrizationOffset {
        a_n: offset_from_parts(parts, n, m)?,
        b_n: offset_from_parts(parts, n, 1.0)?,
    })
}

/// Block sizes ⌈μ_P n⌉, filled in chain order and capped so they sum to n.
pub fn block_sizes(weights: &[f64], n: usize) -> Vec<usize> {
    let mut remaining = n;
    weights
        .iter()
        .map(|w| {
            let s = ((w * n as f64) - 1e-9).ceil().max(0.0) as usize;
            let s = s.min(remaining);
            remaining -= s;
            s
        })
        .collect()
}

/// How the per-block decay ε and the coupling sub-blocks are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MartonScheme {
    /// ε_P = d_P(1), one coordinate per partition element.
    OneStep,
    /// Same ε for every block, one coordinate per partition element.
    Fixed(f64),
    /// Partition elements of t*_P consecutive coordinates with ε_P = d_P(t*_P),
    /// where t*_P attains τ_min,P.
    MixingBlocks,
}

/// One diagonal block of Γ: its partition element sizes and decay.
#[derive(Clone, Debug, PartialEq)]
pub struct MartonBlock {
    pub element_sizes: Vec<usize>,
    pub epsilon: f64,
}

pub fn marton_blocks(pool: &ChainPool, n: usize, scheme: &MartonScheme) -> Result<Vec<MartonBlock>> {
    let sizes = block_sizes(pool.weights(), n);
    sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let c = pool.chain(i);
            let pi = pool.stationary(i);
            let (epsilon, len) = match scheme {
                MartonScheme::Fixed(e) => {
                    if !(0.0..1.0).contains(e) {
                        return Err(Error::InvalidConfig(format!("epsilon {e} outside [0,1)")));
                    }
                    (*e, 1)
                }
                MartonScheme::OneStep => {
                    let prof = chain::tv_decay_profile(&c.transition, pi, 1).map_err(Error::in_chain(i))?;
                    (prof.at(1), 1)
                }
                MartonScheme::MixingBlocks => {
                    let ps = chain::pseudo_spectral_gap(&c.transition, pi, DEFAULT_K_MAX)
                        .map_err(Error::in_chain(i))?;
                    let prof = chain::adaptive_profile(&c.transition, pi, ps.gamma_ps, 0.25, 100_000)
                        .map_err(Error::in_chain(i))?;
                    let t = chain::tau_min_argmin(&prof).map_err(Error::in_chain(i))?;
                    (t.epsilon, t.t_star)
                }
            };
            let mut element_sizes = vec![len; s / len];
            if s % len != 0 {
                element_sizes.push(s % len);
            }
            Ok(MartonBlock {
                element_sizes,
                epsilon,
            })
        })
        .collect()
}

/// The block-diagonal upper-triangular Γ; row i of a block reads
/// (…, 1, 1, ε, ε², …) starting at the diagonal.
pub fn mixing_matrix(blocks: &[MartonBlock]) -> DMatrix<f64> {
    let dim: usize = blocks.iter().map(|b| b.element_sizes.len()).sum();
    let mut g = DMatrix::zeros(dim, dim);
    let mut offset = 0;
    for b in blocks {
        let k = b.element_sizes.len();
        for i in 0..k {
            for j in i..k {
                g[(offset + i, offset + j)] = if j - i <= 1 {
                    1.0
                } else {
                    b.epsilon.powi((j - i - 1) as i32)
                };
            }
        }
        offset += k;
    }
    g
}

/// ‖Γ C(c)‖₂ where C_i(c) = c · |element i|.
pub fn marton_norm_for_blocks(blocks: &[MartonBlock], c: f64) -> f64 {
    let gamma = mixing_matrix(blocks);
    let weights: Vec<f64> = blocks
        .iter()
        .flat_map(|b| b.element_sizes.iter().map(|&s| c * s as f64))
        .collect();
    (gamma * DVector::from_vec(weights)).norm()
}

/// ‖Γ C(c)‖ with the same ε in every block.
pub fn marton_matrix_norm(pool: &ChainPool, n: usize, epsilon: f64, c: f64) -> Result<f64> {
    marton_matrix_norm_with(pool, n, &MartonScheme::Fixed(epsilon), c)
}

pub fn marton_matrix_norm_with(pool: &ChainPool, n: usize, scheme: &MartonScheme, c: f64) -> Result<f64> {
    if n == 0 || !(c > 0.0) {
        return Err(Error::InvalidConfig("need n ≥ 1 and c > 0".into()));
    }
    Ok(marton_norm_for_blocks(&marton_blocks(pool, n, scheme)?, c))
}
