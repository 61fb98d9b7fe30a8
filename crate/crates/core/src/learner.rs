//! Margin hinge-loss training over the L_q ball of kernel combinations.
//!
//! Training runs in margin-normalized coordinates: with f̃ = f/δ the loss is
//! (1/n)Σ(1 − y f̃)₊ under ‖f̃‖_K ≤ B/δ, so (δ, B) and (cδ, cB) give the same
//! iterates up to the rounding of B/δ. Repeated feature vectors are merged into one support point with
//! label counts, which is exact for the dual form since duplicated points
//! always receive equal coefficients.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::MixedDataset;
use crate::error::{Error, Result};
use crate::kernel::{CombinationWeights, KernelFamily};
use crate::par::Execution;
use crate::pool::ChainPool;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub iterations: usize,
    pub eta_step: f64,
    pub execution: Execution,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            iterations: 500,
            eta_step: 0.1,
            execution: Execution::Sequential,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MklModel {
    pub alpha: Vec<f64>,
    pub eta: CombinationWeights,
    pub family: KernelFamily,
    pub train_points: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: f64,
    pub delta: f64,
    /// Best training objective after each iteration.
    pub history: Vec<f64>,
    pub objective: f64,
}

/// Distinct feature vectors with per-label counts, in first-seen order.
struct Support {
    points: Vec<Vec<f64>>,
    pos: Vec<f64>,
    neg: Vec<f64>,
    /// Support index of every sample.
    index: Vec<usize>,
}

impl Support {
    fn new(x: &[Vec<f64>], y: &[i8]) -> Self {
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut s = Support {
            points: Vec::new(),
            pos: Vec::new(),
            neg: Vec::new(),
            index: Vec::with_capacity(x.len()),
        };
        for (xi, &yi) in x.iter().zip(y) {
            let key: Vec<u64> = xi.iter().map(|v| v.to_bits()).collect();
            let u = *seen.entry(key).or_insert_with(|| {
                s.points.push(xi.clone());
                s.pos.push(0.0);
                s.neg.push(0.0);
                s.points.len() - 1
            });
            if yi > 0 {
                s.pos[u] += 1.0;
            } else {
                s.neg[u] += 1.0;
            }
            s.index.push(u);
        }
        s
    }

    fn count(&self, u: usize) -> f64 {
        self.pos[u] + self.neg[u]
    }
}

#[inline]
fn hinge(t: f64) -> f64 {
    (1.0 - t).max(0.0)
}

struct Problem<'a> {
    sup: &'a Support,
    grams: &'a [DMatrix<f64>],
    n: f64,
    radius: f64,
}

impl Problem<'_> {
    fn combined(&self, eta: &[f64]) -> DMatrix<f64> {
        let u = self.grams[0].nrows();
        DMatrix::from_fn(u, u, |i, j| {
            let mut acc = 0.0;
            for (g, e) in self.grams.iter().zip(eta) {
                acc += e * g[(i, j)];
            }
            acc
        })
    }

    fn objective(&self, scores: &DVector<f64>) -> f64 {
        let s: f64 = scores
            .iter()
            .enumerate()
            .map(|(u, &f)| self.sup.pos[u] * hinge(f) + self.sup.neg[u] * hinge(-f))
            .sum();
        s / self.n
    }

    /// Per-point subgradient weights of n·J with respect to the scores.
    fn slopes(&self, scores: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            scores.len(),
            scores.iter().enumerate().map(|(u, &f)| {
                let mut w = 0.0;
                if f <= 1.0 {
                    w -= self.sup.pos[u];
                }
                if f >= -1.0 {
                    w += self.sup.neg[u];
                }
                w
            }),
        )
    }

    /// Radial projection onto βᵀKβ ≤ R².
    fn project(&self, beta: &mut DVector<f64>, k: &DMatrix<f64>) {
        let norm2 = beta.dot(&(k * &*beta));
        let r2 = self.radius * self.radius;
        if norm2 > r2 {
            *beta *= self.radius / norm2.sqrt();
        }
    }
}

fn normalize_lq(eta: &mut [f64], q: f64) -> bool {
    let s: f64 = eta.iter().map(|e| e.powf(q)).sum::<f64>().powf(1.0 / q);
    if !(s > 0.0) || !s.is_finite() {
        return false;
    }
    eta.iter_mut().for_each(|e| *e /= s);
    true
}

fn check_labels(y: &[i8]) -> Result<()> {
    if y.iter().all(|&l| l > 0) || y.iter().all(|&l| l < 0) {
        return Err(Error::SingleClassData);
    }
    Ok(())
}

fn check_margin(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidMargin(delta))
    }
}

pub fn train(ds: &MixedDataset, fam: &KernelFamily, delta: f64, opts: &TrainOptions) -> Result<MklModel> {
    train_points(&ds.features(), &ds.labels()?, fam, delta, opts)
}

pub fn train_points(
    x: &[Vec<f64>],
    y: &[i8],
    fam: &KernelFamily,
    delta: f64,
    opts: &TrainOptions,
) -> Result<MklModel> {
    check_margin(delta)?;
    fam.validate()?;
    if x.is_empty() {
        return Err(Error::TooSmall(0));
    }
    if x.len() != y.len() {
        return Err(Error::SizeMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    check_labels(y)?;
    let sup = Support::new(x, y);
    let grams = fam.grams(&sup.points, opts.execution)?;
    let counts: Vec<f64> = (0..sup.points.len()).map(|u| sup.count(u)).collect();
    let prob = Problem {
        sup: &sup,
        grams: &grams,
        n: x.len() as f64,
        radius: fam.b / delta,
    };

    let m = fam.m();
    let mut eta = fam.uniform_weights().eta;
    let mut k = prob.combined(&eta);
    let mut beta = DVector::zeros(sup.points.len());
    let mut scores = &k * &beta;
    let mut obj = prob.objective(&scores);
    let mut best = (obj, beta.clone(), eta.clone());
    let mut history = Vec::with_capacity(opts.iterations);

    for t in 1..=opts.iterations {
        // functional subgradient Σ_u w_u K(x_u, ·), step of length R/√t in ‖·‖_K
        let w = prob.slopes(&scores);
        let len = w.dot(&(&k * &w)).max(0.0).sqrt();
        if len > 0.0 {
            beta -= &w * (prob.radius / (len * (t as f64).sqrt()));
            prob.project(&mut beta, &k);
            scores = &k * &beta;
            obj = prob.objective(&scores);
        }

        if m > 1 {
            let w = prob.slopes(&scores);
            let grad_eta: Vec<f64> = grams.iter().map(|g| w.dot(&(g * &beta)) / prob.n).collect();
            let mut cand_eta = eta.clone();
            let ok = if fam.q == 1.0 {
                for (e, g) in cand_eta.iter_mut().zip(&grad_eta) {
                    *e *= (-opts.eta_step * g).exp();
                }
                normalize_lq(&mut cand_eta, 1.0)
            } else {
                for (e, g) in cand_eta.iter_mut().zip(&grad_eta) {
                    *e = (*e - opts.eta_step * g).max(0.0);
                }
                normalize_lq(&mut cand_eta, fam.q)
            };
            if ok {
                let cand_k = prob.combined(&cand_eta);
                let mut cand_beta = beta.clone();
                prob.project(&mut cand_beta, &cand_k);
                let cand_scores = &cand_k * &cand_beta;
                let cand_obj = prob.objective(&cand_scores);
                if cand_obj <= obj {
                    eta = cand_eta;
                    k = cand_k;
                    beta = cand_beta;
                    scores = cand_scores;
                    obj = cand_obj;
                }
            }
        }
        if obj < best.0 {
            best = (obj, beta.clone(), eta.clone());
        }
        history.push(best.0);
    }

    let (obj, beta, eta) = best;
    let alpha = sup
        .index
        .iter()
        .map(|&u| delta * beta[u] / counts[u])
        .collect();
    Ok(MklModel {
        alpha,
        eta: CombinationWeights { eta },
        family: fam.clone(),
        train_points: x.to_vec(),
        b: fam.b,
        delta,
        history,
        objective: obj,
    })
}

impl MklModel {
    /// f ≡ 0 on the given points.
    pub fn zero(fam: &KernelFamily, delta: f64, train_points: Vec<Vec<f64>>) -> Self {
        MklModel {
            alpha: vec![0.0; train_points.len()],
            eta: fam.uniform_weights(),
            family: fam.clone(),
            train_points,
            b: fam.b,
            delta,
            history: Vec::new(),
            objective: 1.0,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if let Some(p) = self.train_points.first() {
            if p.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: p.len(),
                    got: x.len(),
                });
            }
        }
        let mut f = 0.0;
        for (a, p) in self.alpha.iter().zip(&self.train_points) {
            if *a == 0.0 {
                continue;
            }
            let mut kv = 0.0;
            for (k, e) in self.family.kernels.iter().zip(&self.eta.eta) {
                kv += e * k.eval(p, x);
            }
            f += a * kv;
        }
        Ok(f)
    }

    /// αᵀG(η)α over the training points.
    pub fn rkhs_norm_squared(&self) -> Result<f64> {
        let g = self.family.combined_gram(&self.eta, &self.train_points)?;
        let a = DVector::from_column_slice(&self.alpha);
        Ok(a.dot(&(g * &a)))
    }

    /// 1{y f(x) < δ} per sample, decided on f/δ so the answer does not depend
    /// on the scale of (δ, B).
    pub fn margin_violations(&self, x: &[Vec<f64>], y: &[i8]) -> Result<Vec<bool>> {
        x.iter()
            .zip(y)
            .map(|(xi, &yi)| Ok(f64::from(yi) * self.predict(xi)? / self.delta < 1.0))
            .collect()
    }
}

/// R̂_δ(f) = (1/n) Σ 1{Y_i f(X_i) < δ}.
pub fn empirical_margin_error(model: &MklModel, ds: &MixedDataset, delta: f64) -> Result<f64> {
    empirical_margin_error_points(model, &ds.features(), &ds.labels()?, delta)
}

pub fn empirical_margin_error_points(model: &MklModel, x: &[Vec<f64>], y: &[i8], delta: f64) -> Result<f64> {
    check_margin(delta)?;
    if x.is_empty() {
        return Err(Error::TooSmall(0));
    }
    let mut bad = 0usize;
    for (xi, &yi) in x.iter().zip(y) {
        if f64::from(yi) * model.predict(xi)? < delta {
            bad += 1;
        }
    }
    Ok(bad as f64 / x.len() as f64)
}

/// R(f) = Σ_P μ_P Σ_x π_P(x) Σ_y P_P(y|x) 1{y f(ψ_P(x)) ≤ 0}, enumerated exactly.
pub fn true_error_exact(model: &MklModel, pool: &ChainPool) -> Result<f64> {
    let mut total = 0.0;
    for (p, c) in pool.chains().iter().enumerate() {
        let flip = c.emission_flip.as_ref().ok_or(Error::MissingEmissionTable(p))?;
        let pi = pool.stationary(p).probs();
        let mut chain_err = 0.0;
        for x in 0..c.n_states() {
            let f = model.predict(&c.embedding[x])?;
            let s = f64::from(c.sign[x]);
            let mut e = 0.0;
            if s * f <= 0.0 {
                e += 1.0 - flip[x];
            }
            if -s * f <= 0.0 {
                e += flip[x];
            }
            chain_err += pi[x] * e;
        }
        total += pool.weights()[p] * chain_err;
    }
    Ok(total)
}

/// E_δ(f) = R(f) − R̂_δ(f).
pub fn estimation_error(model: &MklModel, ds: &MixedDataset, pool: &ChainPool, delta: f64) -> Result<f64> {
    Ok(true_error_exact(model, pool)? - empirical_margin_error(model, ds, delta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Chain, Distribution, TransitionMatrix};
    use crate::kernel::KernelSpec;

    fn linear(b: f64) -> KernelFamily {
        KernelFamily::new(vec![KernelSpec::Linear], 1.0, b).unwrap()
    }

    #[test]
    fn separable_one_dimensional() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![-1, 1];
        let model = train_points(&x, &y, &linear(10.0), 0.5, &TrainOptions::default()).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert!(f64::from(yi) * model.predict(xi).unwrap() >= 0.5);
        }
        assert_eq!(empirical_margin_error_points(&model, &x, &y, 0.5).unwrap(), 0.0);
        assert!(model.rkhs_norm_squared().unwrap() <= 100.0 * (1.0 + 1e-6));
    }

    #[test]
    fn flipped_labels_mirror_the_model() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos()]).collect();
        let y: Vec<i8> = (0..8).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let yf: Vec<i8> = y.iter().map(|l| -l).collect();
        let fam = KernelFamily::gaussian(&[0.5, 1.5], 1.0, 2.0).unwrap();
        let a = train_points(&x, &y, &fam, 0.5, &TrainOptions::default()).unwrap();
        let b = train_points(&x, &yf, &fam, 0.5, &TrainOptions::default()).unwrap();
        assert_eq!(a.objective, b.objective);
        for xi in &x {
            assert_eq!(a.predict(xi).unwrap(), -b.predict(xi).unwrap());
        }
    }

    #[test]
    fn single_kernel_keeps_eta() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![1, -1, 1];
        let model = train_points(&x, &y, &KernelFamily::gaussian(&[1.0], 2.0, 1.0).unwrap(), 1.0, &TrainOptions::default()).unwrap();
        assert_eq!(model.eta.eta, vec![1.0]);
    }

    #[test]
    fn objective_history_is_monotone() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 5) as f64, (i % 3) as f64]).collect();
        let y: Vec<i8> = (0..30).map(|i| if (i * 7) % 11 < 5 { 1 } else { -1 }).collect();
        let fam = KernelFamily::gaussian(&[0.5, 1.0, 2.0], 1.5, 1.0).unwrap();
        let model = train_points(&x, &y, &fam, 0.3, &TrainOptions::default()).unwrap();
        assert!(model.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(model.rkhs_norm_squared().unwrap() <= (1.0 + 1e-6));
        fam.uniform_weights().check(1.5, 3).unwrap();
        model.eta.check(1.5, 3).unwrap();
    }

    #[test]
    fn input_errors() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_points(&x, &[1, 1], &linear(1.0), 0.5, &TrainOptions::default()),
            Err(Error::SingleClassData)
        ));
        assert!(matches!(
            train_points(&x, &[1, -1], &linear(1.0), 1.5, &TrainOptions::default()),
            Err(Error::InvalidMargin(_))
        ));
        assert!(matches!(
            train_points(&x, &[1, -1], &linear(1.0), 0.0, &TrainOptions::default()),
            Err(Error::InvalidMargin(_))
        ));
    }

    #[test]
    fn prediction_examples() {
        let fam = linear(1.0);
        let z = MklModel::zero(&fam, 0.5, vec![vec![1.0, 2.0]]);
        assert_eq!(z.predict(&[3.0, 4.0]).unwrap(), 0.0);
        let mut one = z.clone();
        one.alpha = vec![1.0];
        assert_eq!(one.predict(&[3.0, 4.0]).unwrap(), 11.0);
        assert!(matches!(one.predict(&[1.0]), Err(Error::DimensionMismatch { .. })));
        let x = vec![vec![0.0, 0.0]; 4];
        assert_eq!(empirical_margin_error_points(&z, &x, &[1, -1, 1, 1], 0.5).unwrap(), 1.0);
        let pts = vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0], vec![0.1, 0.0]];
        assert_eq!(empirical_margin_error_points(&one, &pts, &[1, 1, 1, 1], 0.5).unwrap(), 0.25);
    }

    #[test]
    fn exact_true_error() {
        let t = TransitionMatrix::new(&[vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap();
        let noiseless = Chain::from_transition(t.clone()).with_flip(vec![0.0, 0.0]).unwrap();
        let pool = ChainPool::single(noiseless, Distribution::uniform(2)).unwrap();
        let fam = linear(1.0);
        let zero = MklModel::zero(&fam, 1.0, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(true_error_exact(&zero, &pool).unwrap(), 1.0);
        let mut perfect = zero.clone();
        perfect.alpha = vec![0.5, -0.5];
        assert_eq!(true_error_exact(&perfect, &pool).unwrap(), 0.0);

        let fair = Chain::from_transition(t).with_flip(vec![0.5, 0.5]).unwrap();
        let pool = ChainPool::single(fair, Distribution::uniform(2)).unwrap();
        assert!((true_error_exact(&perfect, &pool).unwrap() - 0.5).abs() < 1e-15);
        let mut other = perfect.clone();
        other.alpha = vec![0.3, 0.9];
        assert!((true_error_exact(&other, &pool).unwrap() - 0.5).abs() < 1e-15);
    }
}
