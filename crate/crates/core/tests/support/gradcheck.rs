//! Finite-difference gradient check on a 6-node toy graph.

use agn_core::graph::{Graph, NormalizedAdjacency};
use agn_core::matrix::Matrix;
use agn_core::model::{backward, forward, ForwardPass, LossWeights, ModelConfig, ModelParams};
use agn_core::rng::{seeded, standard_normal_matrix, uniform_matrix};

pub const STEP: f64 = 1e-4;

fn toy_graph() -> Graph {
    Graph::from_edges(6, [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (3, 5)]).unwrap()
}

pub struct Case {
    a: NormalizedAdjacency<f64>,
    x: Matrix<f64>,
    eps: Matrix<f64>,
    params: ModelParams<f64>,
    pos: Vec<(usize, usize)>,
    neg: Vec<(usize, usize)>,
    w: LossWeights,
}

pub fn case(seed: u64, w: LossWeights) -> Case {
    let g = toy_graph();
    let mut rng = seeded(seed);
    let x = uniform_matrix(6, 4, 0.0, 1.0, &mut rng);
    let params = ModelParams::init(ModelConfig::new(4), &mut rng);
    let eps = standard_normal_matrix(6, 32, &mut rng);
    Case {
        a: NormalizedAdjacency::from_graph(&g),
        x,
        eps,
        params,
        pos: g.edge_vec(),
        neg: vec![(0, 3), (1, 4), (2, 5), (0, 5), (1, 3)],
        w,
    }
}

fn eval(c: &Case, p: &ModelParams<f64>) -> ForwardPass<f64> {
    forward(&c.a, &c.x, p, &c.eps, &c.pos, &c.neg, c.w).unwrap()
}

/// Sign pattern of every ReLU input and of the log-variance clamp.
fn kink_pattern(f: &ForwardPass<f64>) -> Vec<bool> {
    let e = &f.encoder;
    let d = &f.decoder;
    [&e.h1_pre, &e.h2_pre, &d.a1, &d.a2]
        .iter()
        .flat_map(|m| m.as_slice().iter().map(|&v| v > 0.0))
        .chain(e.logvar_raw.as_slice().iter().map(|&v| v.abs() <= 10.0))
        .collect()
}

pub struct TensorCheck {
    pub name: &'static str,
    pub entries: usize,
    /// Entries whose ±step crosses a ReLU kink or the clamp boundary; the loss is
    /// not differentiable inside the stencil there, so they are not compared.
    pub straddling: usize,
    pub max_rel_err: f64,
}

/// Max relative error per tensor, `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn check(c: &Case) -> Vec<TensorCheck> {
    let fwd = eval(c, &c.params);
    let base_pattern = kink_pattern(&fwd);
    let grads = backward(&fwd, &c.a, &c.x, &c.params, &c.pos, &c.neg, c.w);
    let mut out = Vec::new();
    for (t, (name, g)) in grads.tensors().into_iter().enumerate() {
        let mut worst: f64 = 0.0;
        let mut straddling = 0;
        let mut probe = c.params.clone();
        for idx in 0..g.as_slice().len() {
            let orig = probe.tensors_mut()[t].1.as_slice()[idx];
            probe.tensors_mut()[t].1.as_mut_slice()[idx] = orig + STEP;
            let fp = eval(c, &probe);
            probe.tensors_mut()[t].1.as_mut_slice()[idx] = orig - STEP;
            let fm = eval(c, &probe);
            probe.tensors_mut()[t].1.as_mut_slice()[idx] = orig;
            if kink_pattern(&fp) != base_pattern || kink_pattern(&fm) != base_pattern {
                straddling += 1;
                continue;
            }
            let numeric = (fp.loss.total - fm.loss.total) / (2.0 * STEP);
            let analytic = g.as_slice()[idx];
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
        out.push(TensorCheck {
            name,
            entries: g.as_slice().len(),
            straddling,
            max_rel_err: worst,
        });
    }
    out
}

pub const TOLERANCE: f64 = 1e-4;

/// Every way a set of tensor checks misses the tolerance; empty when it passes.
pub fn violations(label: &str, checks: &[TensorCheck]) -> Vec<String> {
    let mut out = Vec::new();
    let total: usize = checks.iter().map(|c| c.entries).sum();
    let skipped: usize = checks.iter().map(|c| c.straddling).sum();
    for c in checks {
        if c.max_rel_err.is_nan() || c.max_rel_err >= TOLERANCE {
            out.push(format!(
                "{label}: {} relative error {:e}",
                c.name, c.max_rel_err
            ));
        }
        if c.straddling >= c.entries {
            out.push(format!("{label}: {} never compared", c.name));
        }
    }
    if skipped as f64 >= 0.01 * total as f64 {
        out.push(format!("{label}: {skipped}/{total} entries straddle kinks"));
    }
    out
}
