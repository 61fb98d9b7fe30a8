use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pool::{pool_summary, ChainPool, PoolOptions};

/// Rounding allowance on the exact relations, relative to the larger side.
const REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// The relation reads lhs ≤ rhs.
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relations: Vec<Relation>,
    pub passed: bool,
}

fn relation(name: &str, chain: Option<usize>, epsilon: Option<f64>, lhs: f64, rhs: f64) -> Relation {
    let slack = REL_TOL * lhs.abs().max(rhs.abs()).max(1.0);
    Relation {
        name: name.into(),
        chain,
        epsilon,
        lhs,
        rhs,
        margin: rhs - lhs,
        holds: lhs <= rhs + slack,
    }
}

/// Mixing-time sandwiches per chain and the aggregated pseudo-gap lower bound
/// for the pool, all from exactly computed quantities.
pub fn verify_spectral_relations(pool: &ChainPool, opts: &PoolOptions) -> Result<RelationReport> {
    let s = pool_summary(pool, opts)?;
    let mut rel = Vec::new();
    for (i, c) in s.per_chain.iter().enumerate() {
        let t = c.t_mix as f64;
        let id = Some(i);
        if c.is_reversible {
            rel.push(relation("relaxation_lower", id, None, (1.0 / c.gamma_star - 1.0) * LN_2, t));
            rel.push(relation("relaxation_upper", id, None, t, (4.0 / c.pi_min).ln() / c.gamma_star));
            if let Some(g) = c.gamma_reversible {
                rel.push(relation("gap_dominates_absolute_gap", id, None, c.gamma_star, g));
            }
        }
        rel.push(relation("pseudo_gap_lower", id, None, 1.0 / (2.0 * c.gamma_ps), t));
        rel.push(relation(
            "pseudo_gap_upper",
            id,
            None,
            t,
            ((1.0 / c.pi_min).ln() + 2.0 * LN_2 + 1.0) / c.gamma_ps,
        ));
    }
    for a in s.t_amix.iter().filter(|a| a.epsilon < 0.5) {
        rel.push(relation(
            "aggregated_gap",
            None,
            Some(a.epsilon),
            (1.0 - 2.0 * a.epsilon) / a.t_amix as f64,
            s.gamma_aps,
        ));
    }
    rel.push(relation(
        "aggregated_gap_quarter",
        None,
        Some(0.25),
        1.0 / (2.0 * s.t_amix_quarter as f64),
        s.gamma_aps,
    ));
    Ok(RelationReport {
        passed: rel.iter().all(|r| r.holds),
        relations: rel,
    })
}
