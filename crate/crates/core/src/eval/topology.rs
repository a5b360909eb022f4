//! Global topology summary and percent deltas between two summaries.

use std::collections::VecDeque;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::Graph;
use crate::rng::{derive_seed, seeded};

use super::community::louvain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyOptions {
    /// BFS source count used when the graph exceeds `sample_above` nodes.
    pub path_sample: usize,
    pub sample_above: usize,
    /// Seeds both the source sample and Louvain.
    pub seed: u64,
}

impl Default for TopologyOptions {
    fn default() -> Self {
        Self {
            path_sample: 500,
            sample_above: 1000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub nodes: usize,
    pub edges: usize,
    pub density: f64,
    pub mean_degree: f64,
    pub min_degree: usize,
    pub max_degree: usize,
    pub component_count: usize,
    pub largest_component: usize,
    pub avg_clustering: f64,
    pub transitivity: f64,
    /// Over the largest component; absent when it has no edges.
    pub avg_shortest_path: Option<f64>,
    pub diameter: Option<usize>,
    /// BFS sources used for the path metrics.
    pub path_sources: usize,
    /// Absent when every endpoint degree is equal.
    pub degree_assortativity: Option<f64>,
    /// Louvain modularity; absent on edgeless graphs.
    pub modularity: Option<f64>,
    #[serde(skip)]
    pub partition: Vec<usize>,
}

/// Per-node clustering `2T/(d(d−1))`, 0 below degree 2.
pub fn clustering_coefficients(g: &Graph) -> Vec<f64> {
    g.triangles_per_node()
        .into_iter()
        .enumerate()
        .map(|(v, t)| {
            let d = g.degree(v);
            if d < 2 {
                0.0
            } else {
                2.0 * t as f64 / (d * (d - 1)) as f64
            }
        })
        .collect()
}

pub fn average_clustering(g: &Graph) -> f64 {
    if g.node_count() == 0 {
        return 0.0;
    }
    clustering_coefficients(g).iter().sum::<f64>() / g.node_count() as f64
}

/// `3·triangles / connected triples`, 0 when there are no triples.
pub fn transitivity(g: &Graph) -> f64 {
    let closed: usize = g.triangles_per_node().iter().sum();
    let triples: usize = g
        .degrees()
        .iter()
        .map(|&d| d * d.saturating_sub(1) / 2)
        .sum();
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

/// Pearson correlation of degrees over both orientations of every edge.
pub fn degree_assortativity(g: &Graph) -> Option<f64> {
    let m = g.edge_count();
    if m == 0 {
        return None;
    }
    let deg = g.degrees();
    let (mut s, mut s2, mut sxy) = (0.0, 0.0, 0.0);
    for (u, v) in g.edges() {
        let (a, b) = (deg[u] as f64, deg[v] as f64);
        s += a + b;
        s2 += a * a + b * b;
        sxy += 2.0 * a * b;
    }
    let n = 2.0 * m as f64;
    let mean = s / n;
    let var = s2 / n - mean * mean;
    if var <= 1e-12 * mean * mean.max(1.0) {
        return None;
    }
    Some((sxy / n - mean * mean) / var)
}

fn bfs_stats(
    g: &Graph,
    src: usize,
    dist: &mut [usize],
    queue: &mut VecDeque<usize>,
) -> (u64, u64, usize) {
    dist.fill(usize::MAX);
    dist[src] = 0;
    queue.clear();
    queue.push_back(src);
    let (mut total, mut reached, mut ecc) = (0u64, 0u64, 0usize);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v];
        for &u in g.neighbors(v) {
            if dist[u] == usize::MAX {
                dist[u] = dv + 1;
                total += (dv + 1) as u64;
                reached += 1;
                ecc = ecc.max(dv + 1);
                queue.push_back(u);
            }
        }
    }
    (total, reached, ecc)
}

/// Average shortest path and diameter over the largest component, from all of
/// its nodes or from a seeded sample of sources on large graphs.
pub fn path_metrics(g: &Graph, opts: &TopologyOptions) -> (Option<f64>, Option<usize>, usize) {
    let (count, labels) = g.components();
    if count == 0 {
        return (None, None, 0);
    }
    let mut sizes = vec![0usize; count];
    for &l in &labels {
        sizes[l] += 1;
    }
    let best = (0..count)
        .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        .unwrap();
    let members: Vec<usize> = (0..g.node_count()).filter(|&v| labels[v] == best).collect();
    if members.len() < 2 {
        return (None, None, 0);
    }
    let sources: Vec<usize> =
        if g.node_count() > opts.sample_above && members.len() > opts.path_sample {
            let mut rng = seeded(derive_seed(opts.seed, "path_sources"));
            let mut idx = index::sample(&mut rng, members.len(), opts.path_sample).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| members[i]).collect()
        } else {
            members
        };
    let n = g.node_count();
    let per_source: Vec<(u64, u64, usize)> = sources
        .par_iter()
        .map_init(
            || (vec![usize::MAX; n], VecDeque::new()),
            |(dist, queue), &s| bfs_stats(g, s, dist, queue),
        )
        .collect();
    let (mut total, mut pairs, mut diameter) = (0u64, 0u64, 0usize);
    for (t, r, e) in per_source {
        total += t;
        pairs += r;
        diameter = diameter.max(e);
    }
    (
        Some(total as f64 / pairs as f64),
        Some(diameter),
        sources.len(),
    )
}

pub fn topology_report(g: &Graph, opts: &TopologyOptions) -> Result<TopologyReport> {
    let degrees = g.degrees();
    let n = g.node_count();
    let (component_count, labels) = g.components();
    let largest_component = {
        let mut sizes = vec![0usize; component_count];
        for &l in &labels {
            sizes[l] += 1;
        }
        sizes.into_iter().max().unwrap_or(0)
    };
    let (avg_shortest_path, diameter, path_sources) = path_metrics(g, opts);
    let (modularity, partition) = if g.edge_count() > 0 {
        let r = louvain(g, opts.seed)?;
        (Some(r.modularity), r.partition)
    } else {
        (None, (0..n).collect())
    };
    Ok(TopologyReport {
        nodes: n,
        edges: g.edge_count(),
        density: g.density(),
        mean_degree: if n == 0 {
            0.0
        } else {
            2.0 * g.edge_count() as f64 / n as f64
        },
        min_degree: degrees.iter().copied().min().unwrap_or(0),
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        component_count,
        largest_component,
        avg_clustering: average_clustering(g),
        transitivity: transitivity(g),
        avg_shortest_path,
        diameter,
        path_sources,
        degree_assortativity: degree_assortativity(g),
        modularity,
        partition,
    })
}

/// Percent change `100·(after − before)/|before|`; absent when `before` is 0
/// or either side is absent.
pub fn percent_change(before: Option<f64>, after: Option<f64>) -> Option<f64> {
    match (before, after) {
        (Some(b), Some(a)) if b != 0.0 && b.is_finite() && a.is_finite() => {
            Some(100.0 * (a - b) / b.abs())
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyDelta {
    pub density: Option<f64>,
    pub mean_degree: Option<f64>,
    pub component_count: Option<f64>,
    pub avg_clustering: Option<f64>,
    pub transitivity: Option<f64>,
    pub avg_shortest_path: Option<f64>,
    pub diameter: Option<f64>,
    pub degree_assortativity: Option<f64>,
    pub modularity: Option<f64>,
}

pub fn topology_delta(before: &TopologyReport, after: &TopologyReport) -> TopologyDelta {
    let pc = |b: f64, a: f64| percent_change(Some(b), Some(a));
    TopologyDelta {
        density: pc(before.density, after.density),
        mean_degree: pc(before.mean_degree, after.mean_degree),
        component_count: pc(before.component_count as f64, after.component_count as f64),
        avg_clustering: pc(before.avg_clustering, after.avg_clustering),
        transitivity: pc(before.transitivity, after.transitivity),
        avg_shortest_path: percent_change(before.avg_shortest_path, after.avg_shortest_path),
        diameter: percent_change(
            before.diameter.map(|d| d as f64),
            after.diameter.map(|d| d as f64),
        ),
        degree_assortativity: percent_change(
            before.degree_assortativity,
            after.degree_assortativity,
        ),
        modularity: percent_change(before.modularity, after.modularity),
    }
}
