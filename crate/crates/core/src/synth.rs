//! Seeded synthetic graph generators and embedded real-graph fixtures.

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{parse_edge_list, Graph};
use crate::rng;

/// Stochastic block model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    pub p_within: f64,
    pub p_between: f64,
    pub seed: u64,
}

impl SbmSpec {
    /// Three equal blocks of 400 with strong communities.
    pub fn community(seed: u64) -> Self {
        Self {
            block_sizes: vec![400; 3],
            p_within: 0.35,
            p_between: 0.03,
            seed,
        }
    }

    /// Five equal blocks of 300.
    pub fn multi_community(seed: u64) -> Self {
        Self {
            block_sizes: vec![300; 5],
            p_within: 0.25,
            p_between: 0.01,
            seed,
        }
    }

    pub fn node_count(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::InvalidArgument(
                "block sizes must be positive".into(),
            ));
        }
        for (name, p) in [("p_within", self.p_within), ("p_between", self.p_between)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "{name}={p} is not a probability"
                )));
            }
        }
        Ok(())
    }

    /// Within-block and between-block pair counts.
    pub fn pair_counts(&self) -> (f64, f64) {
        let c2 = |n: usize| (n as f64) * (n as f64 - 1.0) / 2.0;
        let within: f64 = self.block_sizes.iter().map(|&b| c2(b)).sum();
        (within, c2(self.node_count()) - within)
    }

    pub fn expected_edges(&self) -> f64 {
        let (w, b) = self.pair_counts();
        w * self.p_within + b * self.p_between
    }

    pub fn edge_count_std(&self) -> f64 {
        let (w, b) = self.pair_counts();
        (w * self.p_within * (1.0 - self.p_within) + b * self.p_between * (1.0 - self.p_between))
            .sqrt()
    }

    pub fn expected_density(&self) -> f64 {
        let (w, b) = self.pair_counts();
        self.expected_edges() / (w + b)
    }
}

#[derive(Debug, Clone)]
pub struct SbmGraph {
    pub graph: Graph,
    pub blocks: Vec<usize>,
}

pub fn gen_sbm(spec: &SbmSpec) -> Result<SbmGraph> {
    spec.validate()?;
    let blocks: Vec<usize> = spec
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = blocks.len();
    let mut rng = rng::seeded(spec.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if blocks[i] == blocks[j] {
                spec.p_within
            } else {
                spec.p_between
            };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(SbmGraph {
        graph: Graph::from_edges(n, edges)?,
        blocks,
    })
}

/// Barabási–Albert growth parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaSpec {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

impl BaSpec {
    pub fn scale_free(seed: u64) -> Self {
        Self {
            n: 2000,
            m: 2,
            seed,
        }
    }
}

/// Growth from `m` isolated seed nodes; every later node links to `m`
/// distinct existing nodes drawn with probability proportional to degree.
pub fn gen_ba(spec: &BaSpec) -> Result<Graph> {
    let BaSpec { n, m, seed } = *spec;
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= m < n, got m={m}, n={n}"
        )));
    }
    let mut rng = rng::seeded(seed);
    // each node appears once per incident edge endpoint
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * m * (n - m));
    let mut edges = Vec::with_capacity(m * (n - m));
    let mut chosen = Vec::with_capacity(m);
    for v in m..n {
        chosen.clear();
        while chosen.len() < m {
            let t = if endpoints.is_empty() {
                rng.random_range(0..v)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((t, v));
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    Graph::from_edges(n, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuiltinGraph {
    Karate,
    Lesmis,
}

impl FromStr for BuiltinGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "karate" => Ok(Self::Karate),
            "lesmis" => Ok(Self::Lesmis),
            other => Err(Error::UnknownGraph(other.to_string())),
        }
    }
}

const KARATE: &str = include_str!("../data/karate.edgelist");
const LESMIS: &str = include_str!("../data/lesmis.edgelist");

pub fn builtin_graph(which: BuiltinGraph) -> Graph {
    let text = match which {
        BuiltinGraph::Karate => KARATE,
        BuiltinGraph::Lesmis => LESMIS,
    };
    parse_edge_list(text, false)
        .expect("embedded fixtures are valid")
        .graph
}

pub fn builtin_graph_by_name(name: &str) -> Result<Graph> {
    Ok(builtin_graph(name.parse()?))
}
