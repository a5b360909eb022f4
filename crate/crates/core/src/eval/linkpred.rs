//! Ranking metrics and held-out link prediction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NormalizedAdjacency};
use crate::matrix::Matrix;
use crate::model::{edge_prob, encode, ModelParams};
use crate::scalar::Scalar;
use crate::train::EdgeSplit;

fn check(pos: &[f64], neg: &[f64]) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Undefined(
            "ranking metric needs positives and negatives".into(),
        ));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    Ok(())
}

/// ROC AUC from mid-ranks; tied scores earn half credit.
pub fn roc_auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Average precision: recall-weighted precision over descending score thresholds.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let np = pos.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut i = 0;
    while i < all.len() {
        let before = tp;
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            if all[j].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        if tp > before {
            ap += (tp - before) as f64 / np * (tp as f64 / (tp + fp) as f64);
        }
        i = j;
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPredictionReport {
    pub model_auc: f64,
    pub model_ap: f64,
    pub cn_auc: f64,
    pub cn_ap: f64,
    pub test_pos: usize,
    pub test_neg: usize,
}

pub fn common_neighbors(g: &Graph, u: usize, v: usize) -> usize {
    let (a, b) = (g.neighbors(u), g.neighbors(v));
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

/// Score the test split with `σ(μ_i·μ_j)` from the training-graph encoder and
/// with common-neighbour counts on the training graph.
pub fn link_prediction_scores<T: Scalar>(
    params: &ModelParams<T>,
    split: &EdgeSplit,
    x_norm: &Matrix<T>,
    g: &Graph,
) -> Result<LinkPredictionReport> {
    if split.test_pos.is_empty() || split.test_neg.is_empty() {
        return Err(Error::Undefined("empty test split".into()));
    }
    let train_graph = split.train_graph(g.node_count())?;
    let (mu, _) = encode(
        &NormalizedAdjacency::from_graph(&train_graph),
        x_norm,
        params,
    )?;
    let model = |edges: &[(usize, usize)]| -> Vec<f64> {
        edges
            .iter()
            .map(|&(u, v)| edge_prob(mu.row(u), mu.row(v)).as_f64())
            .collect()
    };
    let cn = |edges: &[(usize, usize)]| -> Vec<f64> {
        edges
            .iter()
            .map(|&(u, v)| common_neighbors(&train_graph, u, v) as f64)
            .collect()
    };
    let (mp, mn) = (model(&split.test_pos), model(&split.test_neg));
    let (cp, cneg) = (cn(&split.test_pos), cn(&split.test_neg));
    Ok(LinkPredictionReport {
        model_auc: roc_auc(&mp, &mn)?,
        model_ap: average_precision(&mp, &mn)?,
        cn_auc: roc_auc(&cp, &cneg)?,
        cn_ap: average_precision(&cp, &cneg)?,
        test_pos: mp.len(),
        test_neg: mn.len(),
    })
}
