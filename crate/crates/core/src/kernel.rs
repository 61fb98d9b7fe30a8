//! Base kernels, Gram matrices and L_q-constrained combinations.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

/// Lowest eigenvalue a Gram matrix may have before it is rejected.
pub const PSD_TOLERANCE: f64 = -1e-8;
/// Allowed slack on Σ η_i^q = 1.
pub const WEIGHT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    /// exp(−‖x − y‖² / σ²)
    Gaussian { sigma: f64 },
    /// (⟨x, y⟩ + offset)^degree
    Polynomial { degree: u32, offset: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Gaussian { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            KernelSpec::Gaussian { sigma } => {
                Err(Error::InvalidConfig(format!("gaussian width {sigma} must be positive")))
            }
            KernelSpec::Polynomial { degree, offset } if degree >= 1 && offset >= 0.0 => Ok(()),
            KernelSpec::Polynomial { .. } => {
                Err(Error::InvalidConfig("polynomial kernel needs degree ≥ 1 and offset ≥ 0".into()))
            }
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Gaussian { sigma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (sigma * sigma)).exp()
            }
            KernelSpec::Polynomial { degree, offset } => (dot(x, y) + offset).powi(degree as i32),
        }
    }

    /// sup_{‖x‖ ≤ R} √K(x, x); `None` when no bound on ‖x‖ is known and the
    /// kernel is unbounded.
    pub fn kappa(&self, domain_bound: Option<f64>) -> Option<f64> {
        match (*self, domain_bound) {
            (KernelSpec::Gaussian { .. }, _) => Some(1.0),
            (KernelSpec::Linear, Some(r)) => Some(r),
            (KernelSpec::Polynomial { degree, offset }, Some(r)) => {
                Some((r * r + offset).powi(degree as i32).sqrt())
            }
            _ => None,
        }
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Which pseudo-dimension result applies to the family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyClass {
    /// Combinations of the listed fixed kernels.
    #[default]
    Finite,
    /// Gaussian kernels exp(−(x−y)ᵀA(x−y)) with a learned PSD metric A.
    GaussianMetric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFamily {
    pub kernels: Vec<KernelSpec>,
    pub q: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(default)]
    pub class: FamilyClass,
    /// User-supplied pseudo-dimension d_K.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_dimension: Option<u64>,
    /// Bound on ‖x‖ over the input domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_bound: Option<f64>,
}

impl KernelFamily {
    pub fn new(kernels: Vec<KernelSpec>, q: f64, b: f64) -> Result<Self> {
        let f = KernelFamily {
            kernels,
            q,
            b,
            class: FamilyClass::Finite,
            pseudo_dimension: None,
            domain_bound: None,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn gaussian(sigmas: &[f64], q: f64, b: f64) -> Result<Self> {
        Self::new(sigmas.iter().map(|&sigma| KernelSpec::Gaussian { sigma }).collect(), q, b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() {
            return Err(Error::InvalidConfig("kernel family is empty".into()));
        }
        if !(self.q >= 1.0) || !self.q.is_finite() {
            return Err(Error::InvalidConfig(format!("q = {} must be ≥ 1", self.q)));
        }
        if !(self.b > 0.0) {
            return Err(Error::InvalidConfig(format!("B = {} must be positive", self.b)));
        }
        self.kernels.iter().try_for_each(KernelSpec::validate)
    }

    pub fn m(&self) -> usize {
        self.kernels.len()
    }

    /// The point η_i = m^{−1/q} at the centre of the constraint set.
    pub fn uniform_weights(&self) -> CombinationWeights {
        let m = self.m() as f64;
        CombinationWeights {
            eta: vec![m.powf(-1.0 / self.q); self.m()],
        }
    }

    pub fn kappa(&self) -> Result<f64> {
        self.kappa_with(self.domain_bound)
    }

    pub fn kappa_with(&self, domain_bound: Option<f64>) -> Result<f64> {
        let mut k = 0.0f64;
        for (i, spec) in self.kernels.iter().enumerate() {
            k = k.max(spec.kappa(domain_bound).ok_or(Error::UnboundedKernel(i))?);
        }
        Ok(k)
    }

    /// d_K for this family on inputs of dimension `feature_dim`.
    pub fn pseudo_dimension_bound(&self, feature_dim: usize) -> Result<u64> {
        if let Some(d) = self.pseudo_dimension {
            return Ok(d);
        }
        match self.class {
            FamilyClass::GaussianMetric => {
                let l = feature_dim as u64;
                Ok(l * (l + 1) / 2)
            }
            FamilyClass::Finite => Err(Error::UnknownFamily),
        }
    }

    pub fn grams(&self, x: &[Vec<f64>], exec: Execution) -> Result<Vec<DMatrix<f64>>> {
        self.kernels.iter().map(|k| gram_matrix_with(k, x, exec)).collect()
    }

    /// Gram of Σ η_i K_i evaluated pointwise, summed in the same order as
    /// `combine`.
    pub fn combined_gram(&self, w: &CombinationWeights, x: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        w.check(self.q, self.m())?;
        check_dims(x)?;
        let n = x.len();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let mut acc = 0.0;
            for (k, eta) in self.kernels.iter().zip(&w.eta) {
                acc += eta * k.eval(&x[i], &x[j]);
            }
            acc
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinationWeights {
    pub eta: Vec<f64>,
}

impl CombinationWeights {
    pub fn new(eta: Vec<f64>, q: f64) -> Result<Self> {
        let w = CombinationWeights { eta };
        w.check(q, w.eta.len())?;
        Ok(w)
    }

    /// Weight on a single kernel, a vertex of the constraint set for any q.
    pub fn vertex(m: usize, i: usize) -> Self {
        let mut eta = vec![0.0; m];
        eta[i] = 1.0;
        CombinationWeights { eta }
    }

    pub fn check(&self, q: f64, m: usize) -> Result<()> {
        if self.eta.len() != m {
            return Err(Error::SizeMismatch {
                expected: m,
                got: self.eta.len(),
            });
        }
        if let Some(e) = self.eta.iter().find(|e| !(**e >= 0.0)) {
            return Err(Error::InvalidWeights(format!("negative weight {e}")));
        }
        let s: f64 = self.eta.iter().map(|e| e.powf(q)).sum();
        if (s - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidWeights(format!("Σ η^q = {s} (q = {q})")));
        }
        Ok(())
    }
}

fn check_dims(x: &[Vec<f64>]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::TooSmall(0));
    }
    let d = x[0].len();
    match x.iter().find(|v| v.len() != d) {
        Some(v) => Err(Error::DimensionMismatch {
            expected: d,
            got: v.len(),
        }),
        None => Ok(()),
    }
}

pub fn gram_matrix(k: &KernelSpec, x: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    gram_matrix_with(k, x, Execution::Sequential)
}

/// Rows are computed independently; only the upper triangle is evaluated and
/// mirrored so the result is exactly symmetric.
pub fn gram_matrix_with(k: &KernelSpec, x: &[Vec<f64>], exec: Execution) -> Result<DMatrix<f64>> {
    k.validate()?;
    check_dims(x)?;
    let n = x.len();
    let rows = map_indexed(n, exec, |i| {
        (i..n).map(|j| k.eval(&x[i], &x[j])).collect::<Vec<f64>>()
    });
    let mut g = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            g[(i, i + off)] = v;
            g[(i + off, i)] = v;
        }
    }
    Ok(g)
}

/// Σ η_i G_i.
pub fn combine(grams: &[DMatrix<f64>], w: &CombinationWeights, q: f64) -> Result<DMatrix<f64>> {
    w.check(q, grams.len())?;
    let (r, c) = grams[0].shape();
    if let Some(g) = grams.iter().find(|g| g.shape() != (r, c)) {
        return Err(Error::SizeMismatch {
            expected: r,
            got: g.nrows(),
        });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| {
        let mut acc = 0.0;
        for (g, eta) in grams.iter().zip(&w.eta) {
            acc += eta * g[(i, j)];
        }
        acc
    }))
}

pub fn min_eigenvalue(g: &DMatrix<f64>) -> f64 {
    g.clone().symmetric_eigenvalues().min()
}

/// Fails with `NotPsd` when the smallest eigenvalue is below −1e-8.
pub fn check_psd(g: &DMatrix<f64>) -> Result<f64> {
    let lo = min_eigenvalue(g);
    if lo < PSD_TOLERANCE {
        Err(Error::NotPsd(lo))
    } else {
        Ok(lo)
    }
}
