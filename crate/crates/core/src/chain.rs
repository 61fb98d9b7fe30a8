//! Exact spectral and mixing-time analysis of a single finite-state chain.
//!
//! Everything here is computed from the dense transition matrix: the
//! stationary law by a direct linear solve, eigenvalues by dense
//! decomposition, and the total-variation profile by repeated products.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical tolerances used throughout the chain analysis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Allowed deviation of a row sum from 1.
    pub stochastic: f64,
    /// Allowed `||pi P - pi||_1`.
    pub stationarity: f64,
    /// Allowed detailed-balance violation.
    pub reversibility: f64,
    /// Distance from 1 under which an eigenvalue counts as a unit eigenvalue.
    pub unit_eigenvalue: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stochastic: 1e-9,
            stationarity: 1e-12,
            reversibility: 1e-10,
            unit_eigenvalue: 1e-8,
        }
    }
}

/// Slack applied when comparing a computed d(t) with a threshold, so that an
/// exactly representable boundary (d(1) = 1/4 for the symmetric two-state
/// chain) is not lost to the last bit of the stationary solve.
pub const TV_ROUNDING: f64 = 1e-12;

/// Default cap on k when maximizing the pseudo spectral gap.
pub const DEFAULT_K_MAX: usize = 25;

/// A validated row-stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    m: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        Self::with_tolerance(rows, Tolerances::default().stochastic)
    }

    pub fn with_tolerance(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::NonStochastic(format!(
                "matrix is not square: row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        for (i, row) in rows.iter().enumerate() {
            if let Some((j, v)) = row
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0 + tol)
            {
                return Err(Error::NonStochastic(format!("entry ({i},{j}) = {v}")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::NonStochastic(format!("row {i} sums to {s}")));
            }
        }
        Ok(TransitionMatrix {
            m: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        })
    }

    pub fn n_states(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.m[(x, y)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        self.m.row(x).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_states()).map(|x| self.row(x)).collect()
    }

    /// True when some power of the matrix is entry-wise positive.
    ///
    /// A primitive n×n matrix has P^k > 0 for every k ≥ (n-1)² + 1, so one
    /// boolean power at that exponent decides it.
    pub fn is_primitive(&self) -> bool {
        let n = self.n_states();
        let pattern: Vec<bool> = (0..n * n).map(|k| self.m[(k / n, k % n)] > 0.0).collect();
        let exponent = (n - 1) * (n - 1) + 1;
        let mut result: Option<Vec<bool>> = None;
        let mut base = pattern;
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => bool_mul(&r, &base, n),
                });
            }
            e >>= 1;
            if e > 0 {
                base = bool_mul(&base, &base, n);
            }
        }
        result.map(|r| r.into_iter().all(|b| b)).unwrap_or(false)
    }
}

fn bool_mul(a: &[bool], b: &[bool], n: usize) -> Vec<bool> {
    let mut out = vec![false; n * n];
    for i in 0..n {
        for k in 0..n {
            if a[i * n + k] {
                for j in 0..n {
                    out[i * n + j] |= b[k * n + j];
                }
            }
        }
    }
    out
}

/// `validate_chain`: checks a raw square matrix and wraps it.
pub fn validate_chain(raw: &[Vec<f64>]) -> Result<TransitionMatrix> {
    TransitionMatrix::new(raw)
}

/// A probability vector over states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidConfig("empty distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidConfig(format!("negative probability {p}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("distribution sums to {s}")));
        }
        Ok(Distribution(probs))
    }

    pub fn uniform(n: usize) -> Self {
        Distribution(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, x: usize) -> Self {
        let mut p = vec![0.0; n];
        p[x] = 1.0;
        Distribution(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Minimum entry (π_* for a stationary law).
    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Total-variation distance.
    pub fn tv(&self, other: &Distribution) -> f64 {
        0.5 * self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// `||self P - self||_1`.
    pub fn stationarity_residual(&self, p: &TransitionMatrix) -> f64 {
        let n = p.n_states();
        (0..n)
            .map(|y| {
                let flow: f64 = (0..n).map(|x| self.0[x] * p.get(x, y)).sum();
                (flow - self.0[y]).abs()
            })
            .sum()
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Distribution::new(v)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.0
    }
}

/// Solves `pi (I - P + 11^T) = 1^T`, which has a unique solution exactly when
/// the chain has a unique stationary law, then refines once.
pub fn stationary_distribution(p: &TransitionMatrix, tol: f64) -> Result<Distribution> {
    let n = p.n_states();
    let a = (DMatrix::<f64>::identity(n, n) - p.matrix() + DMatrix::from_element(n, n, 1.0))
        .transpose();
    let lu = a.clone().lu();
    let rhs = DVector::from_element(n, 1.0);
    let mut pi = lu.solve(&rhs).ok_or_else(|| {
        Error::NotErgodic("stationary distribution is not unique (reducible chain)".into())
    })?;
    let residual = &rhs - &a * &pi;
    if let Some(delta) = lu.solve(&residual) {
        pi += delta;
    }
    if let Some(x) = pi.iter().position(|v| !v.is_finite()) {
        return Err(Error::NotErgodic(format!(
            "ill-conditioned stationary solve at state {x}"
        )));
    }
    let scale = pi.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if let Some(x) = pi.iter().position(|&v| v <= 1e-14 * scale) {
        return Err(Error::NotErgodic(format!(
            "state {x} is transient (zero stationary mass)"
        )));
    }
    let total: f64 = pi.iter().sum();
    let dist = Distribution(pi.iter().map(|v| v / total).collect());
    let r = dist.stationarity_residual(p);
    if r > tol && !p.is_primitive() {
        return Err(Error::NotErgodic(format!(
            "stationarity residual {r:.3e} exceeds {tol:.1e}"
        )));
    }
    if r > tol {
        // primitive: polish by power iteration, which converges here
        let mut v = dist.0.clone();
        for _ in 0..10_000 {
            let next: Vec<f64> = (0..n)
                .map(|y| (0..n).map(|x| v[x] * p.get(x, y)).sum())
                .collect();
            let s: f64 = next.iter().sum();
            v = next.into_iter().map(|x| x / s).collect();
            if Distribution(v.clone()).stationarity_residual(p) <= tol {
                return Ok(Distribution(v));
            }
        }
        return Err(Error::NotErgodic(format!(
            "power iteration failed to reach residual {tol:.1e}"
        )));
    }
    Ok(dist)
}

/// P*(x,y) = π(y) P(y,x) / π(x).
pub fn time_reversal(p: &TransitionMatrix, pi: &Distribution) -> Result<TransitionMatrix> {
    let n = p.n_states();
    check_len(pi, n)?;
    if let Some(x) = pi.0.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroStationaryMass(x));
    }
    let pr = pi.probs();
    let mut m = DMatrix::from_fn(n, n, |x, y| pr[y] * p.get(y, x) / pr[x]);
    // renormalize rows: the formula is exact only for an exactly stationary π
    for mut row in m.row_iter_mut() {
        let s: f64 = row.iter().sum();
        row /= s;
    }
    Ok(TransitionMatrix { m })
}

fn check_len(d: &Distribution, n: usize) -> Result<()> {
    if d.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: d.len(),
        });
    }
    Ok(())
}

/// Detailed balance within `tol`.
pub fn is_reversible(p: &TransitionMatrix, pi: &Distribution, tol: f64) -> bool {
    let n = p.n_states();
    let pr = pi.probs();
    (0..n).all(|x| (x + 1..n).all(|y| (pr[x] * p.get(x, y) - pr[y] * p.get(y, x)).abs() <= tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Absolute spectral gap γ*.
    pub gamma_star: f64,
    /// Spectral gap γ, only defined for reversible chains. Lies in [0, 2]:
    /// the second eigenvalue of a reversible chain can be negative.
    pub gamma_reversible: Option<f64>,
    /// λ = 1 − γ*.
    pub lambda: f64,
    pub is_reversible: bool,
}

/// D^{1/2} P D^{-1/2}; similar to P, symmetric when P is reversible.
fn similarity_transform(p: &TransitionMatrix, pi: &Distribution) -> Result<DMatrix<f64>> {
    let n = p.n_states();
    check_len(pi, n)?;
    if let Some(x) = pi.0.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroStationaryMass(x));
    }
    let s: Vec<f64> = pi.0.iter().map(|v| v.sqrt()).collect();
    Ok(DMatrix::from_fn(n, n, |x, y| s[x] * p.get(x, y) / s[y]))
}

fn symmetric_eigenvalues_desc(m: DMatrix<f64>) -> Vec<f64> {
    let sym = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Gap of a self-adjoint operator from its eigenvalues (any order): zero when
/// 1 is a repeated eigenvalue, else one minus the largest non-unit eigenvalue.
fn self_adjoint_gap(eigs: &[f64], unit_tol: f64) -> f64 {
    let mut ev = eigs.to_vec();
    ev.sort_by(|a, b| b.total_cmp(a));
    let units = ev.iter().filter(|v| (*v - 1.0).abs() < unit_tol).count();
    if units != 1 {
        return 0.0;
    }
    (1.0 - ev[1]).clamp(0.0, 1.0)
}

pub fn spectral_gaps(p: &TransitionMatrix, pi: &Distribution) -> Result<SpectralSummary> {
    spectral_gaps_with(p, pi, &Tolerances::default())
}

pub fn spectral_gaps_with(
    p: &TransitionMatrix,
    pi: &Distribution,
    tol: &Tolerances,
) -> Result<SpectralSummary> {
    let reversible = is_reversible(p, pi, tol.reversibility);
    let a = similarity_transform(p, pi)?;
    if reversible {
        let ev = symmetric_eigenvalues_desc(a);
        let units = ev
            .iter()
            .filter(|v| (*v - 1.0).abs() < tol.unit_eigenvalue)
            .count();
        let (gamma_star, gamma) = if units != 1 {
            (0.0, 0.0)
        } else {
            let closest = closest_to_one(ev.iter().map(|&v| (v - 1.0).abs()));
            let rest: Vec<f64> = ev
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != closest)
                .map(|(_, v)| *v)
                .collect();
            let modulus = rest.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let top = rest.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ((1.0 - modulus).clamp(0.0, 1.0), (1.0 - top).clamp(0.0, 2.0))
        };
        return Ok(SpectralSummary {
            gamma_star,
            gamma_reversible: Some(gamma),
            lambda: 1.0 - gamma_star,
            is_reversible: true,
        });
    }
    let ev = a.complex_eigenvalues();
    let dist: Vec<f64> = ev.iter().map(|z| (z - 1.0).norm()).collect();
    let units = dist.iter().filter(|d| **d < tol.unit_eigenvalue).count();
    let gamma_star = if units != 1 {
        0.0
    } else {
        let closest = closest_to_one(dist.iter().copied());
        let modulus = ev
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != closest)
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max);
        (1.0 - modulus).clamp(0.0, 1.0)
    };
    Ok(SpectralSummary {
        gamma_star,
        gamma_reversible: None,
        lambda: 1.0 - gamma_star,
        is_reversible: false,
    })
}

fn closest_to_one(dist: impl Iterator<Item = f64>) -> usize {
    dist.enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoGap {
    pub gamma_ps: f64,
    /// First k attaining the maximum.
    pub k_star: usize,
}

/// Maximizes γ((P*)^k P^k)/k over k = 1..=k_max.
///
/// With A = D^{1/2} P D^{-1/2}, the operator (P*)^k P^k is similar to
/// (A^k)^T A^k, a symmetric PSD matrix whose top eigenvalue is 1.
pub fn pseudo_spectral_gap(p: &TransitionMatrix, pi: &Distribution, k_max: usize) -> Result<PseudoGap> {
    pseudo_spectral_gap_with(p, pi, k_max, &Tolerances::default())
}

pub fn pseudo_spectral_gap_with(
    p: &TransitionMatrix,
    pi: &Distribution,
    k_max: usize,
    tol: &Tolerances,
) -> Result<PseudoGap> {
    if k_max == 0 {
        return Err(Error::InvalidConfig("k_max must be at least 1".into()));
    }
    let a = similarity_transform(p, pi)?;
    let mut power = a.clone();
    let mut best = PseudoGap {
        gamma_ps: f64::NEG_INFINITY,
        k_star: 1,
    };
    for k in 1..=k_max {
        if k > 1 {
            power = &power * &a;
        }
        let gram = power.transpose() * &power;
        let gap = self_adjoint_gap(&symmetric_eigenvalues_desc(gram), tol.unit_eigenvalue);
        let value = gap / k as f64;
        if value > best.gamma_ps {
            best = PseudoGap {
                gamma_ps: value,
                k_star: k,
            };
        }
    }
    Ok(best)
}

/// Worst-case total-variation distance to π, d(t) for t = 0..=t_max.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub d: Vec<f64>,
}

impl MixingProfile {
    pub fn t_max(&self) -> usize {
        self.d.len() - 1
    }

    pub fn at(&self, t: usize) -> f64 {
        self.d[t]
    }
}

/// Default profile horizon: 10⌈1/γ_ps⌉, or 10 n when γ_ps = 0.
pub fn default_horizon(gamma_ps: f64, n_states: usize) -> usize {
    if gamma_ps > 0.0 {
        10 * (1.0 / gamma_ps).ceil() as usize
    } else {
        10 * n_states
    }
}

pub fn tv_decay_profile(p: &TransitionMatrix, pi: &Distribution, t_max: usize) -> Result<MixingProfile> {
    let n = p.n_states();
    check_len(pi, n)?;
    if t_max == 0 {
        return Err(Error::InvalidConfig("t_max must be at least 1".into()));
    }
    let worst = |m: &DMatrix<f64>| -> f64 {
        (0..n)
            .map(|x| {
                0.5 * (0..n)
                    .map(|y| (m[(x, y)] - pi.0[y]).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
            .min(1.0)
    };
    let mut d = Vec::with_capacity(t_max + 1);
    let mut power = DMatrix::<f64>::identity(n, n);
    d.push(worst(&power));
    for _ in 1..=t_max {
        power = &power * p.matrix();
        // d is non-increasing in exact arithmetic; keep rounding noise at the
        // 1e-16 floor from breaking that
        let prev = *d.last().unwrap();
        d.push(worst(&power).min(prev));
    }
    Ok(MixingProfile { d })
}

/// Smallest t ≤ t_max with d(t) ≤ ε.
pub fn mixing_time(profile: &MixingProfile, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    profile
        .d
        .iter()
        .position(|&d| d <= epsilon + TV_ROUNDING)
        .ok_or(Error::NotMixedWithinHorizon {
            epsilon,
            t_max: profile.t_max(),
            d_last: *profile.d.last().unwrap(),
        })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauMin {
    pub value: f64,
    /// Step count t attaining the minimum.
    pub t_star: usize,
    /// The TV level d(t_star) used as ε.
    pub epsilon: f64,
}

/// τ_min of one chain: min over t ≥ 1 of t((2 − d(t))/(1 − d(t)))².
///
/// The chain must actually mix inside the profile (reach d ≤ 1/4); a
/// periodic chain whose d(t) plateaus below 1 is rejected.
pub fn tau_min_single(profile: &MixingProfile) -> Result<f64> {
    tau_min_argmin(profile).map(|t| t.value)
}

pub fn tau_min_argmin(profile: &MixingProfile) -> Result<TauMin> {
    if mixing_time(profile, 0.25).is_err() {
        return Err(Error::NeverMixes);
    }
    profile
        .d
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &d)| d < 1.0 - 1e-12)
        .map(|(t, &d)| TauMin {
            value: t as f64 * ((2.0 - d) / (1.0 - d)).powi(2),
            t_star: t,
            epsilon: d,
        })
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or(Error::NeverMixes)
}

/// ‖dν/dπ − 1‖ in L₂(π).
pub fn chi_divergence_norm(nu: &Distribution, pi: &Distribution) -> Result<f64> {
    check_len(nu, pi.len())?;
    let mut acc = 0.0;
    for (x, (&v, &p)) in nu.0.iter().zip(&pi.0).enumerate() {
        if p <= 0.0 {
            if v > 0.0 {
                return Err(Error::NotAbsolutelyContinuous(x));
            }
            continue;
        }
        acc += p * (v / p - 1.0).powi(2);
    }
    Ok(acc.sqrt())
}

/// ‖dν/dπ‖_∞.
pub fn density_sup(nu: &Distribution, pi: &Distribution) -> Result<f64> {
    check_len(nu, pi.len())?;
    let mut best: f64 = 0.0;
    for (x, (&v, &p)) in nu.0.iter().zip(&pi.0).enumerate() {
        if p <= 0.0 {
            if v > 0.0 {
                return Err(Error::NotAbsolutelyContinuous(x));
            }
            continue;
        }
        best = best.max(v / p);
    }
    Ok(best)
}

/// One element of a pool: dynamics plus the observation model.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub transition: TransitionMatrix,
    /// Feature vector per state.
    pub embedding: Vec<Vec<f64>>,
    /// Label flip probability per state.
    pub emission_flip: Option<Vec<f64>>,
    /// Noise-free label per state (±1).
    pub sign: Vec<i8>,
}

/// On-disk chain description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub states: usize,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission_flip: Option<Vec<f64>>,
    /// Per-state ±1 label; defaults to +1 on the first ⌈n/2⌉ states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Vec<i8>>,
}

impl Chain {
    /// Chain with one-hot embedding, no emission table and the default sign.
    pub fn from_transition(transition: TransitionMatrix) -> Self {
        let n = transition.n_states();
        Chain {
            embedding: one_hot(n),
            emission_flip: None,
            sign: default_sign(n),
            transition,
        }
    }

    pub fn with_flip(mut self, flip: Vec<f64>) -> Result<Self> {
        self.emission_flip = Some(check_flip(flip, self.n_states())?);
        Ok(self)
    }

    pub fn with_sign(mut self, sign: Vec<i8>) -> Result<Self> {
        self.sign = check_sign(sign, self.n_states())?;
        Ok(self)
    }

    pub fn with_embedding(mut self, embedding: Vec<Vec<f64>>) -> Result<Self> {
        self.embedding = check_embedding(embedding, self.n_states())?;
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.transition.n_states()
    }

    pub fn feature_dim(&self) -> usize {
        self.embedding.first().map_or(0, Vec::len)
    }

    pub fn from_spec(spec: &ChainSpec) -> Result<Self> {
        if spec.rows.len() != spec.states {
            return Err(Error::DimensionMismatch {
                expected: spec.states,
                got: spec.rows.len(),
            });
        }
        let mut chain = Chain::from_transition(TransitionMatrix::new(&spec.rows)?);
        if let Some(e) = &spec.embedding {
            chain = chain.with_embedding(e.clone())?;
        }
        if let Some(f) = &spec.emission_flip {
            chain = chain.with_flip(f.clone())?;
        }
        if let Some(s) = &spec.sign {
            chain = chain.with_sign(s.clone())?;
        }
        Ok(chain)
    }

    pub fn to_spec(&self) -> ChainSpec {
        ChainSpec {
            states: self.n_states(),
            rows: self.transition.rows(),
            embedding: Some(self.embedding.clone()),
            emission_flip: self.emission_flip.clone(),
            sign: Some(self.sign.clone()),
        }
    }
}

pub fn one_hot(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn default_sign(n: usize) -> Vec<i8> {
    (0..n).map(|x| if x < n.div_ceil(2) { 1 } else { -1 }).collect()
}

fn check_flip(flip: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    if flip.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: flip.len(),
        });
    }
    if let Some(f) = flip.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::InvalidConfig(format!("flip probability {f} outside [0,1]")));
    }
    Ok(flip)
}

fn check_sign(sign: Vec<i8>, n: usize) -> Result<Vec<i8>> {
    if sign.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: sign.len(),
        });
    }
    if sign.iter().any(|s| *s != 1 && *s != -1) {
        return Err(Error::InvalidConfig("signs must be +1 or -1".into()));
    }
    Ok(sign)
}

fn check_embedding(e: Vec<Vec<f64>>, n: usize) -> Result<Vec<Vec<f64>>> {
    if e.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: e.len(),
        });
    }
    let d = e[0].len();
    if let Some(row) = e.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: row.len(),
        });
    }
    Ok(e)
}

/// The full single-chain analysis used by reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainAnalysis {
    pub stationary: Vec<f64>,
    pub pi_min: f64,
    pub spectral: SpectralSummary,
    pub gamma_ps: f64,
    pub k_star: usize,
    pub t_mix: usize,
    pub tau_min: TauMin,
    pub profile: MixingProfile,
}

/// Runs every single-chain quantity; the horizon starts at the default and
/// doubles until the chain reaches `min_epsilon` (bounded by `max_horizon`).
pub fn analyze(
    p: &TransitionMatrix,
    k_max: usize,
    min_epsilon: f64,
    max_horizon: usize,
    tol: &Tolerances,
) -> Result<ChainAnalysis> {
    let pi = stationary_distribution(p, tol.stationarity)?;
    let spectral = spectral_gaps_with(p, &pi, tol)?;
    let ps = pseudo_spectral_gap_with(p, &pi, k_max, tol)?;
    let profile = adaptive_profile(p, &pi, ps.gamma_ps, min_epsilon, max_horizon)?;
    let t_mix = mixing_time(&profile, 0.25)?;
    let tau_min = tau_min_argmin(&profile)?;
    Ok(ChainAnalysis {
        pi_min: pi.min(),
        stationary: pi.0,
        spectral,
        gamma_ps: ps.gamma_ps,
        k_star: ps.k_star,
        t_mix,
        tau_min,
        profile,
    })
}

/// Profile over the default horizon, extended by doubling until
/// d(t_max) ≤ `min_epsilon` or `max_horizon` is reached.
pub fn adaptive_profile(
    p: &TransitionMatrix,
    pi: &Distribution,
    gamma_ps: f64,
    min_epsilon: f64,
    max_horizon: usize,
) -> Result<MixingProfile> {
    let mut t_max = default_horizon(gamma_ps, p.n_states()).min(max_horizon);
    loop {
        let profile = tv_decay_profile(p, pi, t_max)?;
        if *profile.d.last().unwrap() <= min_epsilon + TV_ROUNDING || t_max >= max_horizon {
            return Ok(profile);
        }
        t_max = (t_max * 2).min(max_horizon);
    }
}
