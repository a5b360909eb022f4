//! Brute-force reference implementations for graph and ranking metrics.

use std::collections::BTreeSet;

use agn_core::Graph;

fn adjacent(g: &Graph, u: usize, v: usize) -> bool {
    u != v && g.neighbors(u).contains(&v)
}

/// (closed pairs around `v`, degree of `v`) by scanning every node pair.
fn wedges(g: &Graph, v: usize) -> (usize, usize) {
    let n = g.node_count();
    let nbrs: Vec<usize> = (0..n).filter(|&u| adjacent(g, v, u)).collect();
    let mut closed = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if adjacent(g, a, b) {
                closed += 1;
            }
        }
    }
    (closed, nbrs.len())
}

pub fn average_clustering(g: &Graph) -> f64 {
    let n = g.node_count();
    let mut total = 0.0;
    for v in 0..n {
        let (closed, d) = wedges(g, v);
        if d >= 2 {
            total += closed as f64 / (d * (d - 1) / 2) as f64;
        }
    }
    total / n as f64
}

pub fn transitivity(g: &Graph) -> f64 {
    let (mut closed, mut triples) = (0usize, 0usize);
    for v in 0..g.node_count() {
        let (c, d) = wedges(g, v);
        closed += c;
        triples += d * d.saturating_sub(1) / 2;
    }
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

/// `Σ_ij [A_ij − k_i k_j / 2m] δ(c_i, c_j) / 2m` over all ordered pairs.
pub fn modularity(g: &Graph, labels: &[usize]) -> f64 {
    let n = g.node_count();
    let two_m = 2.0 * g.edge_count() as f64;
    let k: Vec<f64> = (0..n)
        .map(|v| (0..n).filter(|&u| adjacent(g, v, u)).count() as f64)
        .collect();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                let a = if adjacent(g, i, j) { 1.0 } else { 0.0 };
                q += a - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Fraction of (pos, neg) pairs ranked correctly, ties counting one half.
pub fn auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &p in pos {
        for &q in neg {
            if p > q {
                wins += 1.0;
            } else if p == q {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Step-wise precision-recall area over every distinct score used as a cut.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> f64 {
    let mut cuts: Vec<f64> = pos.iter().chain(neg).copied().collect();
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in cuts {
        let tp = pos.iter().filter(|&&s| s >= t).count() as f64;
        let fp = neg.iter().filter(|&&s| s >= t).count() as f64;
        let recall = tp / pos.len() as f64;
        if tp > 0.0 {
            ap += (recall - prev_recall) * tp / (tp + fp);
        }
        prev_recall = recall;
    }
    ap
}

fn entropy(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let set: BTreeSet<usize> = labels.iter().copied().collect();
    -set.iter()
        .map(|&c| {
            let p = labels.iter().filter(|&&l| l == c).count() as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Mutual information over the joint label distribution, divided by the mean entropy.
pub fn nmi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let (ha, hb) = (entropy(a), entropy(b));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    let la: BTreeSet<usize> = a.iter().copied().collect();
    let lb: BTreeSet<usize> = b.iter().copied().collect();
    let mut mi = 0.0;
    for &x in &la {
        let px = a.iter().filter(|&&l| l == x).count() as f64 / n;
        for &y in &lb {
            let py = b.iter().filter(|&&l| l == y).count() as f64 / n;
            let pxy = a.iter().zip(b).filter(|&(&u, &v)| u == x && v == y).count() as f64 / n;
            if pxy > 0.0 {
                mi += pxy * (pxy / (px * py)).ln();
            }
        }
    }
    mi / ((ha + hb) / 2.0)
}

/// Pair-counting adjusted Rand index.
pub fn ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut in_a, mut in_b) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let (sa, sb) = (a[i] == a[j], b[i] == b[j]);
            if sa {
                in_a += 1.0;
            }
            if sb {
                in_b += 1.0;
            }
            if sa && sb {
                both += 1.0;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let expected = in_a * in_b / pairs;
    let max = (in_a + in_b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}
