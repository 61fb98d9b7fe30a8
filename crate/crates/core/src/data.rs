//! Interleaved samples from a pool of chains with per-state label emission.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pool::{block_sizes, ChainPool};
use crate::rng::{categorical, cumulative, Stream, ASSIGNMENT_STREAM, LABEL_STREAM_BASE};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentMode {
    /// Each index picks its chain i.i.d. from μ.
    #[default]
    Probabilistic,
    /// Chain P receives ⌈μ_P n⌉ indices (capped to n in chain order), spread
    /// evenly over [n].
    Proportional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub feature: Vec<f64>,
    pub label: Option<i8>,
    pub chain_id: usize,
    pub state_id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedDataset {
    pub samples: Vec<Sample>,
    /// T_P: sample indices of chain P in increasing order.
    pub partitions: Vec<Vec<usize>>,
}

/// Chain and state sequence only; the cheap form used by the Monte Carlo loops.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePath {
    pub chain_ids: Vec<usize>,
    pub states: Vec<usize>,
    pub partitions: Vec<Vec<usize>>,
}

/// Cumulative tables for fast repeated sampling from one pool.
#[derive(Clone, Debug)]
pub struct PoolSampler {
    weights: Vec<f64>,
    weight_cdf: Vec<f64>,
    initial_cdf: Vec<f64>,
    row_cdfs: Vec<Vec<Vec<f64>>>,
}

impl PoolSampler {
    pub fn new(pool: &ChainPool) -> Self {
        PoolSampler {
            weights: pool.weights().to_vec(),
            weight_cdf: cumulative(pool.weights()),
            initial_cdf: cumulative(pool.initial().probs()),
            row_cdfs: pool
                .chains()
                .iter()
                .map(|c| c.transition.rows().iter().map(|r| cumulative(r)).collect())
                .collect(),
        }
    }

    pub fn assign(&self, n: usize, seed: u64, mode: AssignmentMode) -> Vec<usize> {
        match mode {
            AssignmentMode::Probabilistic => {
                let mut s = Stream::new(seed, ASSIGNMENT_STREAM);
                (0..n).map(|_| categorical(&self.weight_cdf, s.uniform())).collect()
            }
            AssignmentMode::Proportional => interleave(&block_sizes(&self.weights, n)),
        }
    }

    /// Path of `len` states of chain `p`; the k-th state uses draw k of the
    /// chain's stream.
    pub fn chain_path(&self, p: usize, len: usize, seed: u64) -> Vec<usize> {
        let mut s = Stream::new(seed, p as u64);
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        let mut x = categorical(&self.initial_cdf, s.uniform());
        out.push(x);
        for _ in 1..len {
            x = categorical(&self.row_cdfs[p][x], s.uniform());
            out.push(x);
        }
        out
    }

    /// Visits (index, chain, state) in sample order for a fixed assignment.
    /// Chain P's k-th visit consumes draw k of its stream, so the states
    /// agree with `chain_path` on every partition.
    pub fn walk(&self, assignment: &[usize], seed: u64, mut visit: impl FnMut(usize, usize, usize)) {
        let mut cursors: Vec<Option<(Stream, usize)>> = vec![None; self.weights.len()];
        for (i, &p) in assignment.iter().enumerate() {
            let x = match &mut cursors[p] {
                Some((s, x)) => {
                    *x = categorical(&self.row_cdfs[p][*x], s.uniform());
                    *x
                }
                slot @ None => {
                    let mut s = Stream::new(seed, p as u64);
                    let x = categorical(&self.initial_cdf, s.uniform());
                    *slot = Some((s, x));
                    x
                }
            };
            visit(i, p, x);
        }
    }

    pub fn sample_states(&self, n: usize, seed: u64, mode: AssignmentMode) -> StatePath {
        let chain_ids = self.assign(n, seed, mode);
        let mut partitions = vec![Vec::new(); self.weights.len()];
        let mut states = vec![0; n];
        self.walk(&chain_ids, seed, |i, p, x| {
            partitions[p].push(i);
            states[i] = x;
        });
        StatePath {
            chain_ids,
            states,
            partitions,
        }
    }
}

/// Spreads the given block sizes over [Σ sizes]: at each index the chain
/// furthest behind its share goes next (ties to the lower id).
fn interleave(sizes: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let mut taken = vec![0usize; sizes.len()];
    (0..n)
        .map(|i| {
            let mut best = usize::MAX;
            let mut best_deficit = f64::NEG_INFINITY;
            for (p, &s) in sizes.iter().enumerate() {
                if taken[p] < s {
                    let deficit = s as f64 * (i + 1) as f64 / n as f64 - taken[p] as f64;
                    if deficit > best_deficit {
                        best_deficit = deficit;
                        best = p;
                    }
                }
            }
            taken[best] += 1;
            best
        })
        .collect()
}

pub fn generate_features(pool: &ChainPool, n: usize, seed: u64, mode: AssignmentMode) -> Result<MixedDataset> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if n == 0 {
        return Err(Error::TooSmall(0));
    }
    let d = pool.chain(0).feature_dim();
    for c in pool.chains() {
        if c.feature_dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.feature_dim(),
            });
        }
    }
    let path = PoolSampler::new(pool).sample_states(n, seed, mode);
    let samples = path
        .chain_ids
        .iter()
        .zip(&path.states)
        .map(|(&p, &x)| Sample {
            feature: pool.chain(p).embedding[x].clone(),
            label: None,
            chain_id: p,
            state_id: x,
        })
        .collect();
    Ok(MixedDataset {
        samples,
        partitions: path.partitions,
    })
}

/// Label draw for the k-th element of T_P at state x.
#[inline]
fn emit(sign: i8, flip: f64, u: f64) -> i8 {
    if u < flip {
        -sign
    } else {
        sign
    }
}

pub fn emit_labels(mut ds: MixedDataset, pool: &ChainPool, seed: u64) -> Result<MixedDataset> {
    for (p, c) in pool.chains().iter().enumerate() {
        if c.emission_flip.is_none() && ds.partitions.get(p).is_some_and(|t| !t.is_empty()) {
            return Err(Error::MissingEmissionTable(p));
        }
    }
    for (p, idx) in ds.partitions.iter().enumerate() {
        let c = pool.chain(p);
        let Some(flip) = &c.emission_flip else { continue };
        let mut s = Stream::new(seed, LABEL_STREAM_BASE + p as u64);
        for &i in idx {
            let x = ds.samples[i].state_id;
            ds.samples[i].label = Some(emit(c.sign[x], flip[x], s.uniform()));
        }
    }
    Ok(ds)
}

/// Features then labels; the label draws use their own streams under the same seed.
pub fn generate(pool: &ChainPool, n: usize, seed: u64, mode: AssignmentMode) -> Result<MixedDataset> {
    let ds = generate_features(pool, n, seed, mode)?;
    emit_labels(ds, pool, seed)
}

/// Labels for a bare state path, matching `emit_labels` draw for draw.
pub fn labels_for_path(pool: &ChainPool, path: &StatePath, seed: u64) -> Result<Vec<i8>> {
    let mut labels = vec![0i8; path.states.len()];
    for (p, idx) in path.partitions.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let c = pool.chain(p);
        let flip = c.emission_flip.as_ref().ok_or(Error::MissingEmissionTable(p))?;
        let mut s = Stream::new(seed, LABEL_STREAM_BASE + p as u64);
        for &i in idx {
            let x = path.states[i];
            labels[i] = emit(c.sign[x], flip[x], s.uniform());
        }
    }
    Ok(labels)
}

impl MixedDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.feature.len())
    }

    pub fn labels(&self) -> Result<Vec<i8>> {
        self.samples
            .iter()
            .map(|s| s.label.ok_or(Error::MissingInput("labels")))
            .collect()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.feature.clone()).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["index".to_string(), "chain_id".into(), "state_id".into(), "label".into()];
        header.extend((1..=self.feature_dim()).map(|k| format!("f_{k}")));
        out.write_record(&header)?;
        for (i, s) in self.samples.iter().enumerate() {
            let mut rec = vec![
                i.to_string(),
                s.chain_id.to_string(),
                s.state_id.to_string(),
                s.label.map_or(String::new(), |l| l.to_string()),
            ];
            // `{}` on f64 prints the shortest string that parses back exactly
            rec.extend(s.feature.iter().map(|v| format!("{v}")));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by `write_csv`. Partitions are rebuilt from
    /// the chain ids; `n_chains` keeps trailing empty partitions.
    pub fn read_csv<R: Read>(r: R, n_chains: Option<usize>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let d = headers.len().saturating_sub(4);
        let expected = ["index", "chain_id", "state_id", "label"];
        if headers.len() < 4 || headers.iter().take(4).ne(expected) {
            return Err(Error::InvalidConfig("dataset CSV header must start with index,chain_id,state_id,label".into()));
        }
        let mut samples = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse_err = |what: &str| Error::InvalidConfig(format!("row {row}: bad {what}"));
            let index: usize = rec[0].parse().map_err(|_| parse_err("index"))?;
            if index != row {
                return Err(parse_err("index order"));
            }
            let label = match &rec[3] {
                "" => None,
                "1" | "+1" => Some(1),
                "-1" => Some(-1),
                _ => return Err(parse_err("label")),
            };
            let feature = (0..d)
                .map(|k| rec[4 + k].parse::<f64>().map_err(|_| parse_err("feature")))
                .collect::<Result<Vec<_>>>()?;
            samples.push(Sample {
                feature,
                label,
                chain_id: rec[1].parse().map_err(|_| parse_err("chain_id"))?,
                state_id: rec[2].parse().map_err(|_| parse_err("state_id"))?,
            });
        }
        let k = samples
            .iter()
            .map(|s| s.chain_id + 1)
            .max()
            .unwrap_or(0)
            .max(n_chains.unwrap_or(0));
        let mut partitions = vec![Vec::new(); k];
        for (i, s) in samples.iter().enumerate() {
            partitions[s.chain_id].push(i);
        }
        Ok(MixedDataset { samples, partitions })
    }
}
