//! Undirected simple graphs with node provenance.

mod io;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub use io::{load_edge_list, parse_edge_list, save_graph, write_edge_list, ParsedEdgeList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Original,
    Generated,
}

/// Undirected simple graph stored as sorted neighbor lists.
///
/// Edges are canonical pairs `(u, v)` with `u < v`. Optional weights live in a
/// side map keyed by the canonical pair; an edge without an entry is unweighted.
/// Generated nodes are appended after all original nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
    weights: BTreeMap<(usize, usize), f64>,
    provenance: Vec<Provenance>,
}

#[inline]
pub fn canonical(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Graph {
    /// `n` isolated original nodes.
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            edge_count: 0,
            weights: BTreeMap::new(),
            provenance: vec![Provenance::Original; n],
        }
    }

    /// Build from an edge list. Duplicates (in either orientation) collapse;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::new(n);
        for (u, v) in edges {
            g.check_pair(u, v)?;
            g.adj[u].push(v);
            g.adj[v].push(u);
        }
        let mut count = 0;
        for list in &mut g.adj {
            list.sort_unstable();
            list.dedup();
            count += list.len();
        }
        g.edge_count = count / 2;
        Ok(g)
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        let n = self.node_count();
        if u >= n || v >= n {
            return Err(Error::InvalidGraph(format!(
                "edge ({u}, {v}) out of range for {n} nodes"
            )));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
        }
        Ok(())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u >= self.node_count() || v >= self.node_count() {
            return false;
        }
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Canonical edges `(u, v)`, `u < v`, in ascending lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            let start = list.partition_point(|&v| v <= u);
            list[start..].iter().map(move |&v| (u, v))
        })
    }

    pub fn edge_vec(&self) -> Vec<(usize, usize)> {
        self.edges().collect()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.weights.get(&canonical(u, v)).copied()
    }

    pub fn weights(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.weights
    }

    #[inline]
    pub fn provenance(&self, v: usize) -> Provenance {
        self.provenance[v]
    }

    pub fn is_generated(&self, v: usize) -> bool {
        self.provenance[v] == Provenance::Generated
    }

    pub fn original_count(&self) -> usize {
        self.provenance
            .iter()
            .filter(|&&p| p == Provenance::Original)
            .count()
    }

    pub fn generated_count(&self) -> usize {
        self.node_count() - self.original_count()
    }

    /// Append a node and return its index. Original nodes may not follow generated ones.
    pub fn add_node(&mut self, provenance: Provenance) -> Result<usize> {
        if provenance == Provenance::Original && self.generated_count() > 0 {
            return Err(Error::InvalidGraph(
                "original nodes must precede generated nodes".into(),
            ));
        }
        self.adj.push(Vec::new());
        self.provenance.push(provenance);
        Ok(self.adj.len() - 1)
    }

    /// Insert an undirected edge; returns `false` if it already existed.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        self.check_pair(u, v)?;
        match self.adj[u].binary_search(&v) {
            Ok(_) => Ok(false),
            Err(pos) => {
                self.adj[u].insert(pos, v);
                let pos_v = self.adj[v].binary_search(&u).unwrap_err();
                self.adj[v].insert(pos_v, u);
                self.edge_count += 1;
                Ok(true)
            }
        }
    }

    pub fn add_weighted_edge(&mut self, u: usize, v: usize, w: f64) -> Result<bool> {
        if !(-1.0..=1.0).contains(&w) {
            return Err(Error::InvalidGraph(format!(
                "edge weight {w} outside [-1, 1]"
            )));
        }
        let added = self.add_edge(u, v)?;
        self.weights.insert(canonical(u, v), w);
        Ok(added)
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if !self.has_edge(u, v) {
            return false;
        }
        let pu = self.adj[u].binary_search(&v).unwrap();
        self.adj[u].remove(pu);
        let pv = self.adj[v].binary_search(&u).unwrap();
        self.adj[v].remove(pv);
        self.weights.remove(&canonical(u, v));
        self.edge_count -= 1;
        true
    }

    pub(crate) fn set_provenance(&mut self, provenance: Vec<Provenance>) -> Result<()> {
        if provenance.len() != self.node_count() {
            return Err(Error::InvalidGraph("provenance length mismatch".into()));
        }
        if let Some(first_gen) = provenance.iter().position(|&p| p == Provenance::Generated) {
            if provenance[first_gen..].contains(&Provenance::Original) {
                return Err(Error::InvalidGraph(
                    "generated nodes must occupy the trailing index range".into(),
                ));
            }
        }
        self.provenance = provenance;
        Ok(())
    }

    /// Subgraph induced on nodes `0..n`, with provenance and weights carried over.
    pub fn induced_prefix(&self, n: usize) -> Graph {
        let n = n.min(self.node_count());
        let adj: Vec<Vec<usize>> = self.adj[..n]
            .iter()
            .map(|list| list.iter().copied().filter(|&v| v < n).collect())
            .collect();
        let edge_count = adj.iter().map(Vec::len).sum::<usize>() / 2;
        let weights = self
            .weights
            .iter()
            .filter(|(&(_, v), _)| v < n)
            .map(|(&k, &w)| (k, w))
            .collect();
        Graph {
            adj,
            edge_count,
            weights,
            provenance: self.provenance[..n].to_vec(),
        }
    }

    /// Edge density `2|E| / (N (N - 1))`; zero below two nodes.
    pub fn density(&self) -> f64 {
        let n = self.node_count() as f64;
        if n < 2.0 {
            0.0
        } else {
            2.0 * self.edge_count as f64 / (n * (n - 1.0))
        }
    }

    /// Number of edges among the neighbors of each node (triangles through it).
    pub fn triangles_per_node(&self) -> Vec<usize> {
        (0..self.node_count())
            .into_par_iter()
            .map(|u| {
                let nu = &self.adj[u];
                let twice: usize = nu
                    .iter()
                    .map(|&v| sorted_intersection_len(nu, &self.adj[v]))
                    .sum();
                twice / 2
            })
            .collect()
    }

    /// Connected components as a label per node, labels in first-seen order.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in &self.adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }
}

pub(crate) fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Symmetric normalization `D^{-1/2} A D^{-1/2}` in compressed sparse rows.
///
/// Isolated nodes produce all-zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> NormalizedAdjacency<T> {
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.node_count();
        let deg = g.degrees();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(2 * g.edge_count());
        let mut values = Vec::with_capacity(2 * g.edge_count());
        row_ptr.push(0);
        for (i, &di) in deg.iter().enumerate() {
            for &j in g.neighbors(i) {
                // product before sqrt keeps (i, j) and (j, i) bit-identical
                let prod = (di as f64) * (deg[j] as f64);
                col_idx.push(j);
                values.push(T::of(1.0 / prod.sqrt()));
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(p) => self.values[self.row_ptr[i] + p],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[p])] = self.values[p];
            }
        }
        m
    }

    /// `Ã · x`, rows computed independently with a fixed reduction order.
    pub fn matmul(&self, x: &Matrix<T>) -> Matrix<T> {
        assert_eq!(x.rows(), self.n, "adjacency product shape");
        let c = x.cols();
        let mut out = Matrix::zeros(self.n, c);
        if c == 0 {
            return out;
        }
        let kernel = |(i, row): (usize, &mut [T])| {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let w = self.values[p];
                for (o, &v) in row.iter_mut().zip(x.row(self.col_idx[p])) {
                    *o += w * v;
                }
            }
        };
        if self.values.len() * c >= crate::matrix::PAR_THRESHOLD {
            out.as_mut_slice()
                .par_chunks_mut(c)
                .enumerate()
                .for_each(kernel);
        } else {
            out.as_mut_slice()
                .chunks_mut(c)
                .enumerate()
                .for_each(kernel);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn normalized_path() {
        let a = NormalizedAdjacency::<f64>::from_graph(&path3());
        let expected = 1.0 / 2.0_f64.sqrt();
        assert!((a.get(0, 1) - expected).abs() < 1e-15);
        assert!((a.get(1, 2) - expected).abs() < 1e-15);
        assert_eq!(a.get(0, 2), 0.0);
        assert!((a.get(0, 1) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn normalized_single_edge_and_empty() {
        let a = NormalizedAdjacency::<f64>::from_graph(&Graph::from_edges(2, [(0, 1)]).unwrap());
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(1, 0), 1.0);
        let z = NormalizedAdjacency::<f64>::from_graph(&Graph::new(3));
        assert_eq!(z.to_dense(), Matrix::zeros(3, 3));
    }

    #[test]
    fn duplicates_collapse_and_self_loops_rejected() {
        let g = Graph::from_edges(3, [(1, 2), (2, 1), (1, 2)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert!(Graph::from_edges(3, [(1, 1)]).is_err());
        assert!(Graph::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn add_and_remove_edges() {
        let mut g = path3();
        assert!(!g.add_edge(1, 0).unwrap());
        assert!(g.add_edge(2, 0).unwrap());
        assert_eq!(g.edge_vec(), vec![(0, 1), (0, 2), (1, 2)]);
        assert!(g.remove_edge(2, 1));
        assert!(!g.has_edge(1, 2));
        assert_eq!(g.edge_count(), 2);
        assert!(g.add_weighted_edge(1, 2, 1.5).is_err());
    }

    #[test]
    fn provenance_range() {
        let mut g = path3();
        let v = g.add_node(Provenance::Generated).unwrap();
        assert_eq!(v, 3);
        assert!(g.add_node(Provenance::Original).is_err());
        g.add_weighted_edge(v, 0, 0.9).unwrap();
        assert_eq!(g.generated_count(), 1);
        assert_eq!(g.induced_prefix(3), path3());
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (2usize..25).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..80).prop_map(move |pairs| {
                Graph::from_edges(n, pairs.into_iter().filter(|(u, v)| u != v)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn handshake_lemma(g in arb_graph()) {
            prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.edge_count());
            prop_assert_eq!(g.edges().count(), g.edge_count());
        }

        #[test]
        fn normalized_adjacency_is_bit_symmetric(g in arb_graph()) {
            let a = NormalizedAdjacency::<f64>::from_graph(&g).to_dense();
            for i in 0..g.node_count() {
                for j in 0..g.node_count() {
                    prop_assert_eq!(a[(i, j)].to_bits(), a[(j, i)].to_bits());
                    if !g.has_edge(i, j) {
                        prop_assert_eq!(a[(i, j)], 0.0);
                    } else {
                        let want = 1.0 / ((g.degree(i) * g.degree(j)) as f64).sqrt();
                        prop_assert!((a[(i, j)] - want).abs() < 1e-15);
                    }
                }
            }
        }

        #[test]
        fn sparse_product_matches_dense(g in arb_graph(), seed in 0u64..100) {
            let a = NormalizedAdjacency::<f64>::from_graph(&g);
            let x: Matrix<f64> = crate::rng::uniform_matrix(g.node_count(), 3, -1.0, 1.0, &mut crate::rng::seeded(seed));
            prop_assert!(a.matmul(&x).max_abs_diff(&a.to_dense().matmul(&x)) < 1e-12);
        }
    }
}
