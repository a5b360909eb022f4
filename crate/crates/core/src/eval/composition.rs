//! How new nodes attach (edge composition) and how far their features sit
//! from the originals (novelty).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::insert::{cosine_similarity, AugmentedGraph};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCompositionReport {
    pub go_count: usize,
    pub gg_count: usize,
    pub gg_ratio: f64,
    /// Mean degree over generated nodes, isolated ones counted as 0.
    pub avg_generated_degree: f64,
    /// Generated nodes with more than half of their neighbours generated.
    pub majority_gg_node_count: usize,
}

pub fn edge_composition<T: Scalar>(ag: &AugmentedGraph<T>) -> EdgeCompositionReport {
    graph_edge_composition(&ag.graph)
}

/// Composition read from node provenance alone.
pub fn graph_edge_composition(g: &Graph) -> EdgeCompositionReport {
    let n0 = g.original_count();
    let (mut go, mut gg) = (0, 0);
    for (u, v) in g.edges() {
        match (g.is_generated(u), g.is_generated(v)) {
            (true, true) => gg += 1,
            (false, false) => {}
            _ => go += 1,
        }
    }
    let m = g.generated_count();
    let total_degree: usize = (n0..n0 + m).map(|v| g.degree(v)).sum();
    let majority = (n0..n0 + m)
        .filter(|&v| {
            let generated = g
                .neighbors(v)
                .iter()
                .filter(|&&u| g.is_generated(u))
                .count();
            2 * generated > g.degree(v)
        })
        .count();
    EdgeCompositionReport {
        go_count: go,
        gg_count: gg,
        gg_ratio: if go + gg == 0 {
            0.0
        } else {
            gg as f64 / (go + gg) as f64
        },
        avg_generated_degree: if m == 0 {
            0.0
        } else {
            total_degree as f64 / m as f64
        },
        majority_gg_node_count: majority,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoveltyReport {
    pub nn_dist_mean: f64,
    pub nn_dist_std: f64,
    pub mean_dist_to_original: f64,
    pub wasserstein: f64,
    pub diversity: f64,
}

fn cosine_distance<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    1.0 - cosine_similarity(a, b).as_f64()
}

/// 1-D Wasserstein-1 distance between two empirical samples.
///
/// Integrates `|F(x) − G(x)|` over the merged support.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut all: Vec<f64> = a.iter().chain(&b).copied().collect();
    all.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ia, mut ib) = (0, 0);
    let mut total = 0.0;
    for w in all.windows(2) {
        let x = w[0];
        while ia < a.len() && a[ia] <= x {
            ia += 1;
        }
        while ib < b.len() && b[ib] <= x {
            ib += 1;
        }
        total += (ia as f64 / na - ib as f64 / nb).abs() * (w[1] - w[0]);
    }
    total
}

/// Feature-space novelty of generated rows against originals, distance `1 − cos`.
pub fn novelty_report<T: Scalar>(x_orig: &Matrix<T>, x_gen: &Matrix<T>) -> Result<NoveltyReport> {
    if x_orig.rows() == 0 || x_gen.rows() == 0 {
        return Err(Error::InvalidArgument(
            "novelty needs non-empty feature sets".into(),
        ));
    }
    if x_orig.cols() != x_gen.cols() {
        return Err(Error::DimensionMismatch(format!(
            "original dim {} vs generated dim {}",
            x_orig.cols(),
            x_gen.cols()
        )));
    }
    let per_gen: Vec<(f64, f64)> = (0..x_gen.rows())
        .into_par_iter()
        .map(|i| {
            let gi = x_gen.row(i);
            let mut nn = f64::INFINITY;
            let mut sum = 0.0;
            for j in 0..x_orig.rows() {
                let d = cosine_distance(gi, x_orig.row(j));
                nn = nn.min(d);
                sum += d;
            }
            (nn, sum)
        })
        .collect();
    let m = x_gen.rows() as f64;
    let nn_mean = per_gen.iter().map(|p| p.0).sum::<f64>() / m;
    let nn_var = per_gen.iter().map(|p| (p.0 - nn_mean).powi(2)).sum::<f64>() / m;
    let grand = per_gen.iter().map(|p| p.1).sum::<f64>() / (m * x_orig.rows() as f64);

    let d = x_orig.cols();
    let wasserstein = if d == 0 {
        0.0
    } else {
        (0..d)
            .map(|k| {
                let a: Vec<f64> = x_gen.column(k).into_iter().map(|v| v.as_f64()).collect();
                let b: Vec<f64> = x_orig.column(k).into_iter().map(|v| v.as_f64()).collect();
                wasserstein_1d(&a, &b)
            })
            .sum::<f64>()
            / d as f64
    };

    let mg = x_gen.rows();
    let diversity = if mg < 2 {
        0.0
    } else {
        let mut sum = 0.0;
        for a in 0..mg {
            for b in a + 1..mg {
                sum += cosine_distance(x_gen.row(a), x_gen.row(b));
            }
        }
        sum / (mg * (mg - 1) / 2) as f64
    };
    Ok(NoveltyReport {
        nn_dist_mean: nn_mean.max(0.0),
        nn_dist_std: nn_var.sqrt(),
        mean_dist_to_original: grand.max(0.0),
        wasserstein,
        diversity: diversity.max(0.0),
    })
}
