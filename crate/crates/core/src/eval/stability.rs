//! Partition agreement (NMI, ARI) and the edge-drop stress test.

use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{derive_seed, seeded};

use super::community::louvain;

struct Contingency {
    n: f64,
    /// `(n_ij, n_i, n_j)` per nonempty cell, in label order.
    cells: Vec<(f64, f64, f64)>,
    rows: Vec<f64>,
    cols: Vec<f64>,
}

fn contingency(a: &[usize], b: &[usize]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "labelings of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Undefined("comparison of empty labelings".into()));
    }
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, f64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *cells.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }
    Ok(Contingency {
        n: a.len() as f64,
        cells: cells
            .iter()
            .map(|(&(x, y), &c)| (c, rows[&x], cols[&y]))
            .collect(),
        rows: rows.into_values().collect(),
        cols: cols.into_values().collect(),
    })
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    -counts.iter().map(|&c| (c / n) * (c / n).ln()).sum::<f64>()
}

/// Normalized mutual information with arithmetic-mean normalization.
///
/// Two single-cluster labelings score 1.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = contingency(a, b)?;
    let (ha, hb) = (entropy(&t.rows, t.n), entropy(&t.cols, t.n));
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mi: f64 = t
        .cells
        .iter()
        .map(|&(nij, ni, nj)| (nij / t.n) * (t.n * nij / (ni * nj)).ln())
        .sum();
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

fn comb2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index; identical trivial labelings score 1.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = contingency(a, b)?;
    let index: f64 = t.cells.iter().map(|&(c, _, _)| comb2(c)).sum();
    let sa: f64 = t.rows.iter().map(|&c| comb2(c)).sum();
    let sb: f64 = t.cols.iter().map(|&c| comb2(c)).sum();
    let expected = sa * sb / comb2(t.n);
    let max = (sa + sb) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionAgreement {
    pub nmi: f64,
    pub ari: f64,
}

impl PartitionAgreement {
    pub fn between(a: &[usize], b: &[usize]) -> Result<Self> {
        Ok(Self {
            nmi: nmi(a, b)?,
            ari: ari(a, b)?,
        })
    }
}

/// Louvain on both graphs with the same seed, compared on the original nodes.
pub fn partition_stability(before: &Graph, after: &Graph, seed: u64) -> Result<PartitionAgreement> {
    let n = before.node_count();
    if after.node_count() < n {
        return Err(Error::InvalidArgument(
            "augmented graph has fewer nodes than its backbone".into(),
        ));
    }
    let p_before = louvain(before, seed)?.partition;
    let p_after = louvain(after, seed)?.partition;
    PartitionAgreement::between(&p_before, &p_after[..n])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressReport {
    pub dropped: usize,
    pub components_before: usize,
    pub components_after: usize,
    pub agreement: PartitionAgreement,
}

/// Remove `⌊frac·|E|⌋` uniformly chosen edges and compare Louvain partitions
/// of all nodes before and after.
pub fn edge_drop_stress(g: &Graph, drop_frac: f64, seed: u64) -> Result<StressReport> {
    if g.edge_count() < 10 {
        return Err(Error::TooFewEdges {
            edges: g.edge_count(),
            required: 10,
        });
    }
    if !(0.0..=1.0).contains(&drop_frac) {
        return Err(Error::InvalidArgument(format!(
            "drop fraction {drop_frac} outside [0, 1]"
        )));
    }
    let edges = g.edge_vec();
    let dropped = (drop_frac * edges.len() as f64).floor() as usize;
    let mut rng = seeded(derive_seed(seed, "edge_drop"));
    let mut reduced = g.clone();
    for i in index::sample(&mut rng, edges.len(), dropped) {
        let (u, v) = edges[i];
        reduced.remove_edge(u, v);
    }
    let before = louvain(g, seed)?.partition;
    let after = if reduced.edge_count() == 0 {
        (0..g.node_count()).collect()
    } else {
        louvain(&reduced, seed)?.partition
    };
    Ok(StressReport {
        dropped,
        components_before: g.components().0,
        components_after: reduced.components().0,
        agreement: PartitionAgreement::between(&before, &after)?,
    })
}
