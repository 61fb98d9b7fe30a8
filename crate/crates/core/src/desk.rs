//! Small reference pools and random ergodic chains for tests, benches and
//! the CLI defaults.

use crate::chain::{Chain, Distribution, TransitionMatrix};
use crate::error::Result;
use crate::pool::ChainPool;
use crate::rng::Stream;

/// Symmetric 2-state chain that switches with probability `p`.
pub fn two_state(p: f64) -> Result<Chain> {
    Ok(Chain::from_transition(TransitionMatrix::new(&[
        vec![1.0 - p, p],
        vec![p, 1.0 - p],
    ])?))
}

/// The 2-chain pool {p = 0.25, p = 0.4} with equal weights and uniform ν.
pub fn switching_pair() -> Result<ChainPool> {
    ChainPool::new(
        vec![
            two_state(0.25)?.with_flip(vec![0.1, 0.1])?,
            two_state(0.4)?.with_flip(vec![0.1, 0.1])?,
        ],
        vec![0.5, 0.5],
        Distribution::uniform(2),
    )
}

/// 2-state chain whose rows both equal the uniform law.
pub fn independent_pair() -> Result<ChainPool> {
    ChainPool::single(two_state(0.5)?, Distribution::uniform(2))
}

fn cycle(n: usize, stay: f64, forward: f64, back: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|x| {
            let mut row = vec![0.0; n];
            row[x] += stay;
            row[(x + 1) % n] += forward;
            row[(x + n - 1) % n] += back;
            row
        })
        .collect()
}

/// Birth-death chain on [0, n) with up-drift.
fn drift(n: usize, up: f64, down: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|x| {
            let mut row = vec![0.0; n];
            if x + 1 < n {
                row[x + 1] = up;
            }
            if x > 0 {
                row[x - 1] = down;
            }
            row[x] = 1.0 - row.iter().sum::<f64>();
            row
        })
        .collect()
}

/// Three chains on six one-hot states: a lazy reversible cycle, a
/// non-reversible rotating cycle and a drifting birth-death chain.
pub fn six_state_triple() -> Result<ChainPool> {
    let a = Chain::from_transition(TransitionMatrix::new(&cycle(6, 0.5, 0.25, 0.25))?).with_flip(vec![0.1; 6])?;
    let b = Chain::from_transition(TransitionMatrix::new(&cycle(6, 0.3, 0.6, 0.1))?).with_flip(vec![0.2; 6])?;
    let c = Chain::from_transition(TransitionMatrix::new(&drift(6, 0.4, 0.2))?)
        .with_flip(vec![0.05, 0.1, 0.15, 0.15, 0.1, 0.05])?;
    ChainPool::new(vec![a, b, c], vec![0.5, 0.3, 0.2], Distribution::uniform(6))
}

/// Random primitive chain: self-loops and the cycle x → x+1 are always
/// present, every other edge with probability 1/2. With `reversible` the
/// weights are symmetric before row normalization.
pub fn random_chain(n: usize, seed: u64, reversible: bool) -> Result<TransitionMatrix> {
    let mut s = Stream::new(seed, 0);
    let mut w = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in 0..n {
            if reversible && y < x {
                continue;
            }
            let forced = x == y || y == (x + 1) % n || (reversible && x == (y + 1) % n);
            let keep = s.uniform() < 0.5;
            let v = 0.05 + s.uniform();
            if forced || keep {
                w[x][y] = v;
                if reversible {
                    w[y][x] = v;
                }
            }
        }
    }
    let rows: Vec<Vec<f64>> = w
        .into_iter()
        .map(|r| {
            let t: f64 = r.iter().sum();
            r.into_iter().map(|v| v / t).collect()
        })
        .collect();
    TransitionMatrix::new(&rows)
}

/// 2 to 4 random chains on `n` states with random weights and uniform ν.
pub fn random_pool(n: usize, seed: u64) -> Result<ChainPool> {
    let mut s = Stream::new(seed, 1);
    let k = 2 + (s.uniform() * 3.0) as usize;
    let raw: Vec<f64> = (0..k).map(|_| 0.2 + s.uniform()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[..k - 1].iter().sum();
    weights[k - 1] = 1.0 - head;
    let chains = (0..k)
        .map(|i| {
            random_chain(n, crate::rng::derive_seed(seed, i as u64), i % 2 == 0).map(Chain::from_transition)
        })
        .collect::<Result<Vec<_>>>()?;
    ChainPool::new(chains, weights, Distribution::uniform(n))
}
