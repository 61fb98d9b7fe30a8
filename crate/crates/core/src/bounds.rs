//! Monte Carlo complexity estimators and closed-form bound evaluators.

use std::collections::HashMap;
use std::f64::consts::{E, PI};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::MixedDataset;
use crate::error::{Error, Result};
use crate::kernel::KernelFamily;
use crate::par::{map_indexed, Execution, MeanVar};
use crate::rng::{derive_seed, Stream, SIGN_STREAM};

/// Constant of the L_q-family Rademacher bound.
pub const ETA0: f64 = 23.0 / 22.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl From<&MeanVar> for McEstimate {
    fn from(mv: &MeanVar) -> Self {
        McEstimate {
            estimate: mv.mean(),
            stderr: mv.stderr(),
            trials: mv.count() as usize,
        }
    }
}

/// sup of Σ η_i a_i over η ≥ 0 with Σ η_i^q = 1.
pub fn lq_sup(a: &[f64], q: f64) -> f64 {
    let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if q == 1.0 || max <= 0.0 {
        return max;
    }
    let r = q / (q - 1.0);
    a.iter()
        .filter(|v| **v > 0.0)
        .map(|v| v.powf(r))
        .sum::<f64>()
        .powf(1.0 / r)
}

/// One Rademacher draw: εᵀG_iε for every base kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityDraw {
    pub quad: Vec<f64>,
}

impl ComplexityDraw {
    /// (B/n) √(sup_η Σ η_i εᵀG_iε)
    pub fn rademacher(&self, b: f64, n: usize, q: f64) -> f64 {
        b * lq_sup(&self.quad, q).max(0.0).sqrt() / n as f64
    }

    /// (1/n) sup_η Σ η_i Σ_{i<j} ε_iε_j G_i(x_i, x_j)
    pub fn chaos(&self, traces: &[f64], n: usize, q: f64) -> f64 {
        let a: Vec<f64> = self
            .quad
            .iter()
            .zip(traces)
            .map(|(c, t)| (c - t) / 2.0)
            .collect();
        lq_sup(&a, q) / n as f64
    }
}

/// Base-kernel Grams on the distinct feature vectors plus each sample's
/// index into them.
pub struct CompressedGrams {
    pub grams: Vec<DMatrix<f64>>,
    pub index: Vec<usize>,
    pub traces: Vec<f64>,
}

impl CompressedGrams {
    pub fn new(x: &[Vec<f64>], fam: &KernelFamily, exec: Execution) -> Result<Self> {
        fam.validate()?;
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut points = Vec::new();
        let mut index = Vec::with_capacity(x.len());
        let mut mult: Vec<f64> = Vec::new();
        for xi in x {
            let key = xi.iter().map(|v| v.to_bits()).collect();
            let u = *seen.entry(key).or_insert_with(|| {
                points.push(xi.clone());
                mult.push(0.0);
                points.len() - 1
            });
            mult[u] += 1.0;
            index.push(u);
        }
        let grams = fam.grams(&points, exec)?;
        let traces = grams
            .iter()
            .map(|g| (0..g.nrows()).map(|u| mult[u] * g[(u, u)]).sum())
            .collect();
        Ok(CompressedGrams {
            grams,
            index,
            traces,
        })
    }

    pub fn n(&self) -> usize {
        self.index.len()
    }

    /// Signs for `trial` are n draws of the sign stream under a per-trial seed.
    pub fn draw(&self, seed: u64, trial: usize) -> ComplexityDraw {
        let mut s = Stream::new(derive_seed(seed, trial as u64), SIGN_STREAM);
        let mut sums = DVector::zeros(self.grams[0].nrows());
        for &u in &self.index {
            sums[u] += s.sign();
        }
        ComplexityDraw {
            quad: self.grams.iter().map(|g| sums.dot(&(g * &sums))).collect(),
        }
    }

    pub fn draws(&self, trials: usize, seed: u64, exec: Execution) -> Vec<ComplexityDraw> {
        map_indexed(trials, exec, |t| self.draw(seed, t))
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        Err(Error::InvalidConfig("trials must be ≥ 1".into()))
    } else {
        Ok(())
    }
}

pub fn empirical_rademacher(ds: &MixedDataset, fam: &KernelFamily, trials: usize, seed: u64) -> Result<McEstimate> {
    empirical_rademacher_points(&ds.features(), fam, trials, seed, Execution::default())
}

pub fn empirical_rademacher_points(
    x: &[Vec<f64>],
    fam: &KernelFamily,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    check_trials(trials)?;
    let cg = CompressedGrams::new(x, fam, exec)?;
    let values: Vec<f64> = cg
        .draws(trials, seed, exec)
        .iter()
        .map(|d| d.rademacher(fam.b, cg.n(), fam.q))
        .collect();
    Ok((&MeanVar::from_slice(&values)).into())
}

pub fn empirical_chaos_complexity(ds: &MixedDataset, fam: &KernelFamily, trials: usize, seed: u64) -> Result<McEstimate> {
    empirical_chaos_complexity_points(&ds.features(), fam, trials, seed, Execution::default())
}

pub fn empirical_chaos_complexity_points(
    x: &[Vec<f64>],
    fam: &KernelFamily,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    check_trials(trials)?;
    let cg = CompressedGrams::new(x, fam, exec)?;
    let values: Vec<f64> = cg
        .draws(trials, seed, exec)
        .iter()
        .map(|d| d.chaos(&cg.traces, cg.n(), fam.q))
        .collect();
    Ok((&MeanVar::from_slice(&values)).into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(rename = "B", default = "one_f")]
    pub b: f64,
    #[serde(default = "one_f")]
    pub kappa: f64,
    #[serde(default = "one_f")]
    pub delta: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_k: Option<u64>,
    /// Universal constant of the chaos-complexity bound (unknown; default 1).
    #[serde(default = "one_f")]
    pub c_chaos: f64,
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl BoundInputs {
    pub fn new(n: usize, m: usize, alpha: f64) -> Self {
        BoundInputs {
            n,
            m,
            b: 1.0,
            kappa: 1.0,
            delta: 1.0,
            alpha,
            tau_min: None,
            b_n: None,
            q: None,
            r: None,
            d_k: None,
            c_chaos: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("n and m must be ≥ 1".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidMargin(self.delta));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha = {} outside (0,1)", self.alpha)));
        }
        if !(self.b > 0.0) || !(self.kappa > 0.0) {
            return Err(Error::InvalidConfig("B and kappa must be positive".into()));
        }
        Ok(())
    }

    /// The integer conjugate exponent r for the L_q bound.
    pub fn conjugate_r(&self) -> Result<f64> {
        let r = match (self.q, self.r) {
            (_, Some(r)) => r,
            (Some(q), None) if q > 1.0 => q / (q - 1.0),
            (Some(q), None) => {
                return Err(Error::InvalidConjugates(format!("q = {q} has no finite conjugate")))
            }
            (None, None) => return Err(Error::MissingInput("r (or q)")),
        };
        if let (Some(q), Some(r)) = (self.q, self.r) {
            let s = if q.is_infinite() { 0.0 } else { 1.0 / q } + 1.0 / r;
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConjugates(format!("1/{q} + 1/{r} = {s}")));
            }
        }
        if !(r >= 1.0) || (r - r.round()).abs() > 1e-9 {
            return Err(Error::InvalidConjugates(format!("r = {r} is not an integer ≥ 1")));
        }
        Ok(r.round())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RademacherKind {
    Lemma5,
    CortesQ,
    CortesL1,
    Pseudodim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Thm1,
    Thm2,
    Thm3,
    Corollary,
    Master,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

fn term(name: &str, value: f64) -> Term {
    Term {
        name: name.into(),
        value,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: String,
    pub value: f64,
    pub terms: Vec<Term>,
    /// The part of the value that depends on m, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_subterm: Option<f64>,
    /// Same bound with ⌈log₂ m⌉ in place of ⌈ln m⌉.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log2_variant: Option<f64>,
    pub inputs: BoundInputs,
}

impl BoundReport {
    fn new(kind: &str, terms: Vec<Term>, inputs: &BoundInputs) -> Self {
        BoundReport {
            kind: kind.into(),
            value: terms.iter().map(|t| t.value).sum(),
            terms,
            m_subterm: None,
            log2_variant: None,
            inputs: inputs.clone(),
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

fn ceil_ln(m: usize) -> f64 {
    (m as f64).ln().ceil()
}

fn ceil_log2(m: usize) -> f64 {
    (m as f64).log2().ceil()
}

fn cortes_l1_value(inp: &BoundInputs, log_m: f64) -> f64 {
    inp.b * inp.kappa * (ETA0 * E * log_m / inp.n as f64).sqrt()
}

pub fn rademacher_bound(kind: RademacherKind, inp: &BoundInputs) -> Result<BoundReport> {
    inp.validate()?;
    let n = inp.n as f64;
    let bk = inp.b * inp.kappa;
    Ok(match kind {
        RademacherKind::Lemma5 => {
            let dev = 8.0 * bk * ((2.0 * (inp.m as f64 + 1.0) / inp.alpha).ln() / (2.0 * n)).sqrt();
            let mut r = BoundReport::new("lemma5", vec![term("expectation", 2.0 * bk / n.sqrt()), term("deviation", dev)], inp);
            r.m_subterm = Some(dev);
            r
        }
        RademacherKind::CortesQ => {
            let rr = inp.conjugate_r()?;
            let v = bk * (ETA0 * rr * (inp.m as f64).powf(1.0 / rr) / n).sqrt();
            let mut r = BoundReport::new("cortes_q", vec![term("complexity", v)], inp);
            r.m_subterm = Some(v);
            r
        }
        RademacherKind::CortesL1 => {
            let v = cortes_l1_value(inp, ceil_ln(inp.m));
            let mut r = BoundReport::new("cortes_l1", vec![term("complexity", v)], inp);
            r.m_subterm = Some(v);
            r.log2_variant = Some(cortes_l1_value(inp, ceil_log2(inp.m)));
            r
        }
        RademacherKind::Pseudodim => {
            let dk = inp.d_k.ok_or(Error::MissingInput("d_K"))? as f64;
            let chaos = inp.b
                * (inp.c_chaos * (1.0 + inp.kappa).powi(2) * dk * (2.0 * E * n * n).ln() / n).sqrt();
            BoundReport::new("pseudodim", vec![term("chaos", chaos), term("diagonal", bk / n.sqrt())], inp)
        }
    })
}

/// ln ln(2/δ); negative for δ > 2/e.
pub fn log_log_margin(delta: f64) -> f64 {
    (2.0 / delta).ln().ln()
}

fn concentration(inp: &BoundInputs, numerator: f64) -> Result<f64> {
    let tau = inp.tau_min.ok_or(Error::MissingInput("tau_min"))?;
    Ok(((0.5 * (numerator / inp.alpha).ln()).sqrt() + log_log_margin(inp.delta)) * (tau / inp.n as f64).sqrt())
}

/// (8/δ)·R + (√(½ ln(c/α)) + ln ln(2/δ))·√(τ_min/n) + B_n, with c = 2π²/3
/// (c = π²/3 for the corollary). `rademacher_value` replaces the
/// kind-specific complexity formula when given.
pub fn generalization_bound(kind: BoundKind, inp: &BoundInputs, rademacher_value: Option<f64>) -> Result<BoundReport> {
    inp.validate()?;
    let b_n = inp.b_n.ok_or(Error::MissingInput("B_n"))?;
    let numerator = if kind == BoundKind::Corollary { PI * PI / 3.0 } else { 2.0 * PI * PI / 3.0 };
    let conc = concentration(inp, numerator)?;
    let scale = 8.0 / inp.delta;
    let (complexity, m_subterm, log2) = match (kind, rademacher_value) {
        (_, Some(v)) => (v, None, None),
        (BoundKind::Master, None) => return Err(Error::MissingInput("rademacher value")),
        (k, None) => {
            let rk = match k {
                BoundKind::Thm1 => RademacherKind::Lemma5,
                BoundKind::Thm2 => RademacherKind::Pseudodim,
                BoundKind::Thm3 => RademacherKind::CortesQ,
                _ => RademacherKind::CortesL1,
            };
            let r = rademacher_bound(rk, inp)?;
            (r.value, r.m_subterm, r.log2_variant)
        }
    };
    let mut out = BoundReport::new(
        kind_name(kind),
        vec![term("complexity", scale * complexity), term("concentration", conc), term("offset", b_n)],
        inp,
    );
    out.m_subterm = m_subterm.map(|v| scale * v);
    out.log2_variant = log2.map(|v| scale * v + conc + b_n);
    Ok(out)
}

fn kind_name(k: BoundKind) -> &'static str {
    match k {
        BoundKind::Thm1 => "thm1",
        BoundKind::Thm2 => "thm2",
        BoundKind::Thm3 => "thm3",
        BoundKind::Corollary => "corollary",
        BoundKind::Master => "master",
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    N,
    M,
}

/// Evaluates a generalization bound over a grid of n or m values.
pub fn sweep(kind: BoundKind, base: &BoundInputs, param: SweepParam, values: &[usize]) -> Result<Vec<BoundReport>> {
    values
        .iter()
        .map(|&v| {
            let mut inp = base.clone();
            match param {
                SweepParam::N => inp.n = v,
                SweepParam::M => inp.m = v,
            }
            generalization_bound(kind, &inp, None)
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(reports: &[BoundReport], param: SweepParam, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let Some(first) = reports.first() else {
        return Ok(());
    };
    let mut header = vec![
        match param {
            SweepParam::N => "n".to_string(),
            SweepParam::M => "m".to_string(),
        },
        "value".into(),
    ];
    header.extend(first.terms.iter().map(|t| t.name.clone()));
    header.push("m_subterm".into());
    out.write_record(&header)?;
    for r in reports {
        let p = match param {
            SweepParam::N => r.inputs.n,
            SweepParam::M => r.inputs.m,
        };
        let mut rec = vec![p.to_string(), format!("{}", r.value)];
        rec.extend(r.terms.iter().map(|t| format!("{}", t.value)));
        rec.push(r.m_subterm.map_or(String::new(), |v| format!("{v}")));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
