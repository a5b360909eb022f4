//! Newman modularity and seeded Louvain community detection.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::seeded;

/// Unweighted modularity `Σ_c [e_c/m − (d_c/2m)²]`.
pub fn modularity(g: &Graph, partition: &[usize]) -> Result<f64> {
    let n = g.node_count();
    if partition.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} of {n} nodes",
            partition.len()
        )));
    }
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::Undefined("modularity of an edgeless graph".into()));
    }
    let c = partition.iter().max().map_or(0, |&x| x + 1);
    let mut internal = vec![0usize; c];
    let mut degree = vec![0usize; c];
    for v in 0..n {
        degree[partition[v]] += g.degree(v);
    }
    for (u, v) in g.edges() {
        if partition[u] == partition[v] {
            internal[partition[u]] += 1;
        }
    }
    let m = m as f64;
    Ok((0..c)
        .map(|k| internal[k] as f64 / m - (degree[k] as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Relabel communities `0..c` in order of first appearance.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LouvainResult {
    pub partition: Vec<usize>,
    pub modularity: f64,
    /// Modularity after each aggregation level.
    pub level_modularity: Vec<f64>,
}

impl LouvainResult {
    pub fn community_count(&self) -> usize {
        self.partition.iter().max().map_or(0, |&c| c + 1)
    }
}

/// Weighted graph with explicit self-loop weights, used across levels.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    loops: Vec<f64>,
    /// Total edge weight `m`.
    total: f64,
}

impl Level {
    fn from_graph(g: &Graph) -> Self {
        let adj = (0..g.node_count())
            .map(|v| g.neighbors(v).iter().map(|&u| (u, 1.0)).collect())
            .collect();
        Self {
            adj,
            loops: vec![0.0; g.node_count()],
            total: g.edge_count() as f64,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn degree(&self, v: usize) -> f64 {
        self.adj[v].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.loops[v]
    }

    fn modularity(&self, comm: &[usize]) -> f64 {
        let n = self.len();
        let mut inner = vec![0.0; n];
        let mut tot = vec![0.0; n];
        for v in 0..n {
            tot[comm[v]] += self.degree(v);
            inner[comm[v]] += 2.0 * self.loops[v];
            for &(u, w) in &self.adj[v] {
                if comm[u] == comm[v] {
                    inner[comm[v]] += w;
                }
            }
        }
        let two_m = 2.0 * self.total;
        (0..n)
            .map(|c| inner[c] / two_m - (tot[c] / two_m).powi(2))
            .sum()
    }

    /// Local moving phase; returns whether any node changed community.
    fn move_nodes(&self, comm: &mut [usize], order: &[usize]) -> bool {
        let n = self.len();
        let two_m = 2.0 * self.total;
        let degrees: Vec<f64> = (0..n).map(|v| self.degree(v)).collect();
        let mut tot = vec![0.0; n];
        for v in 0..n {
            tot[comm[v]] += degrees[v];
        }
        let mut link = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any = false;
        loop {
            let mut moved = false;
            for &v in order {
                let own = comm[v];
                for &(u, w) in &self.adj[v] {
                    if u == v {
                        continue;
                    }
                    let c = comm[u];
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[own] -= degrees[v];
                let gain =
                    |c: usize, link: &[f64], tot: &[f64]| link[c] - tot[c] * degrees[v] / two_m;
                let mut best = own;
                let mut best_gain = gain(own, &link, &tot);
                for &c in &touched {
                    let g = gain(c, &link, &tot);
                    if g > best_gain + 1e-12 {
                        best_gain = g;
                        best = c;
                    }
                }
                tot[best] += degrees[v];
                if best != own {
                    comm[v] = best;
                    moved = true;
                }
                for &c in &touched {
                    link[c] = 0.0;
                    seen[c] = false;
                }
                link[own] = 0.0;
                touched.clear();
            }
            if !moved {
                break;
            }
            any = true;
        }
        any
    }

    fn aggregate(&self, comm: &[usize]) -> (Level, Vec<usize>) {
        let labels = canonical_labels(comm);
        let c = labels.iter().max().map_or(0, |&x| x + 1);
        let mut maps: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); c];
        let mut loops = vec![0.0; c];
        for v in 0..self.len() {
            let cv = labels[v];
            loops[cv] += self.loops[v];
            for &(u, w) in &self.adj[v] {
                let cu = labels[u];
                if cu == cv {
                    // each internal edge is seen from both ends
                    loops[cv] += w / 2.0;
                } else {
                    *maps[cv].entry(cu).or_insert(0.0) += w;
                }
            }
        }
        let adj = maps.into_iter().map(|m| m.into_iter().collect()).collect();
        (
            Level {
                adj,
                loops,
                total: self.total,
            },
            labels,
        )
    }
}

/// Two-phase Louvain with a seeded node visiting order at every level.
pub fn louvain(g: &Graph, seed: u64) -> Result<LouvainResult> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined("Louvain on an edgeless graph".into()));
    }
    let mut rng = seeded(seed);
    let mut level = Level::from_graph(g);
    let mut membership: Vec<usize> = (0..g.node_count()).collect();
    let mut level_modularity = Vec::new();
    let mut q = level.modularity(&membership);
    loop {
        let mut comm: Vec<usize> = (0..level.len()).collect();
        let mut order: Vec<usize> = (0..level.len()).collect();
        order.shuffle(&mut rng);
        if !level.move_nodes(&mut comm, &order) {
            break;
        }
        let (next, labels) = level.aggregate(&comm);
        for m in membership.iter_mut() {
            *m = labels[*m];
        }
        let next_q = next.modularity(&(0..next.len()).collect::<Vec<_>>());
        assert!(
            next_q >= q - 1e-10,
            "Louvain modularity decreased from {q} to {next_q}"
        );
        if next_q <= q + 1e-12 && next.len() == level.len() {
            break;
        }
        q = next_q;
        level_modularity.push(q);
        level = next;
    }
    let partition = canonical_labels(&membership);
    let modularity = modularity(g, &partition)?;
    Ok(LouvainResult {
        partition,
        modularity,
        level_modularity,
    })
}
