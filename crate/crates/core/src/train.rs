//! Edge splitting, Adam and the early-stopped training loop.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{canonical, Graph, NormalizedAdjacency};
use crate::matrix::Matrix;
use crate::model::{backward, forward, LossBreakdown, LossWeights, ModelConfig, ModelParams};
use crate::rng::{derive_seed, seeded, standard_normal_matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

/// Disjoint positive edge sets plus sampled non-edges of the full graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub train_pos: Vec<(usize, usize)>,
    pub val_pos: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    /// Initial draw; training resamples these every epoch.
    pub train_neg: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
}

impl EdgeSplit {
    /// The message-passing graph: every node, training positives only.
    pub fn train_graph(&self, node_count: usize) -> Result<Graph> {
        Graph::from_edges(node_count, self.train_pos.iter().copied())
    }
}

pub const MIN_SPLIT_EDGES: usize = 10;

/// Shuffle the canonical edge list and cut it by `ratios`.
///
/// Validation and test sizes are rounded to nearest; the remainder trains.
pub fn split_edges(g: &Graph, ratios: SplitRatios, seed: u64) -> Result<EdgeSplit> {
    let m = g.edge_count();
    if m < MIN_SPLIT_EDGES {
        return Err(Error::TooFewEdges {
            edges: m,
            required: MIN_SPLIT_EDGES,
        });
    }
    let n_val = (ratios.val * m as f64).round() as usize;
    let n_test = (ratios.test * m as f64).round() as usize;
    if n_val == 0 || n_test == 0 || n_val + n_test >= m {
        return Err(Error::TooFewEdges {
            edges: m,
            required: MIN_SPLIT_EDGES,
        });
    }
    let mut rng = seeded(seed);
    let mut edges = g.edge_vec();
    edges.shuffle(&mut rng);
    let test_pos = edges.split_off(m - n_test);
    let val_pos = edges.split_off(m - n_test - n_val);
    let train_pos = edges;

    let mut taken = HashSet::new();
    let val_neg = sample_non_edges(g, val_pos.len(), &mut taken, &mut rng)?;
    let test_neg = sample_non_edges(g, test_pos.len(), &mut taken, &mut rng)?;
    let train_neg = resample_negatives(g, train_pos.len(), &mut rng);
    Ok(EdgeSplit {
        train_pos,
        val_pos,
        test_pos,
        train_neg,
        val_neg,
        test_neg,
    })
}

fn non_edge_count(g: &Graph) -> usize {
    let n = g.node_count();
    (n * n.saturating_sub(1) / 2).saturating_sub(g.edge_count())
}

/// Distinct canonical non-edges of `g`, none already in `taken` (which is extended).
pub fn sample_non_edges<R: Rng + ?Sized>(
    g: &Graph,
    count: usize,
    taken: &mut HashSet<(usize, usize)>,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let available = non_edge_count(g).saturating_sub(taken.len());
    if count > available {
        return Err(Error::InvalidArgument(format!(
            "need {count} negative pairs but only {available} non-edges remain"
        )));
    }
    let n = g.node_count();
    let mut out = Vec::with_capacity(count);
    if available < 4 * count {
        let mut pool: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !g.has_edge(u, v) && !taken.contains(&(u, v)))
            .collect();
        pool.shuffle(rng);
        pool.truncate(count);
        taken.extend(pool.iter().copied());
        return Ok(pool);
    }
    while out.len() < count {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || g.has_edge(u, v) {
            continue;
        }
        let pair = canonical(u, v);
        if taken.insert(pair) {
            out.push(pair);
        }
    }
    Ok(out)
}

/// Uniform non-edges, possibly repeated; used for the per-epoch negatives.
fn resample_negatives<R: Rng + ?Sized>(
    g: &Graph,
    count: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let n = g.node_count();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v && !g.has_edge(u, v) {
            out.push(canonical(u, v));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: ModelParams<T>,
    pub v: ModelParams<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(cfg: ModelConfig) -> Self {
        Self {
            m: ModelParams::zeros(cfg),
            v: ModelParams::zeros(cfg),
            step: 0,
        }
    }
}

/// One Adam update with coupled L2 decay (`g += λ·θ` before the moments).
pub fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut AdamState<T>,
    lr: f64,
    weight_decay: f64,
    hyper: AdamHyper,
) {
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::of(hyper.beta1), T::of(hyper.beta2));
    let bc1 = T::one() - b1.powi(t);
    let bc2 = T::one() - b2.powi(t);
    let (lr, wd, eps) = (T::of(lr), T::of(weight_decay), T::of(hyper.eps));
    let grads = grads.tensors();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for ((((_, p), (_, g)), (_, m)), (_, v)) in
        params.tensors_mut().into_iter().zip(grads).zip(ms).zip(vs)
    {
        let p = p.as_mut_slice();
        let (m, v) = (m.as_mut_slice(), v.as_mut_slice());
        for (i, &gi) in g.as_slice().iter().enumerate() {
            let g = gi + wd * p[i];
            m[i] = b1 * m[i] + (T::one() - b1) * g;
            v[i] = b2 * v[i] + (T::one() - b2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub beta: f64,
    pub gamma: f64,
    pub seed: u64,
    pub neg_per_pos: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub adam: AdamHyper,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            weight_decay: 1e-5,
            max_epochs: 200,
            patience: 20,
            beta: 1.0,
            gamma: 1.0,
            seed: 42,
            neg_per_pos: 1,
            hidden_dim: 64,
            latent_dim: 32,
            adam: AdamHyper::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive =
            self.lr > 0.0 && self.weight_decay >= 0.0 && self.beta >= 0.0 && self.gamma >= 0.0;
        if !positive
            || self.max_epochs == 0
            || self.neg_per_pos == 0
            || self.hidden_dim == 0
            || self.latent_dim == 0
        {
            return Err(Error::InvalidArgument(format!(
                "invalid training config {self:?}"
            )));
        }
        if self.patience > self.max_epochs {
            return Err(Error::InvalidArgument("patience exceeds max_epochs".into()));
        }
        Ok(())
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            beta: self.beta,
            gamma: self.gamma,
        }
    }

    pub fn model_config(&self, input_dim: usize) -> ModelConfig {
        ModelConfig {
            input_dim,
            hidden_dim: self.hidden_dim,
            latent_dim: self.latent_dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: LossBreakdown,
    pub val_total: f64,
    pub best_val_so_far: f64,
    pub checkpointed: bool,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome<T> {
    /// Parameters at the epoch with the lowest validation loss.
    pub params: ModelParams<T>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    /// Noise shared by every validation evaluation of the run.
    pub val_eps: Matrix<T>,
    pub stopped_early: bool,
}

/// Full objective on the validation edges, message passing over `a_train`.
pub fn validation_loss<T: Scalar>(
    a_train: &NormalizedAdjacency<T>,
    x_norm: &Matrix<T>,
    params: &ModelParams<T>,
    split: &EdgeSplit,
    val_eps: &Matrix<T>,
    weights: LossWeights,
) -> Result<LossBreakdown> {
    Ok(forward(
        a_train,
        x_norm,
        params,
        val_eps,
        &split.val_pos,
        &split.val_neg,
        weights,
    )?
    .loss)
}

/// Full-batch training with per-epoch negative resampling and early stopping
/// on the validation objective.
pub fn train<T: Scalar>(
    g: &Graph,
    x_norm: &Matrix<T>,
    split: &EdgeSplit,
    cfg: &TrainConfig,
) -> Result<TrainingOutcome<T>> {
    cfg.validate()?;
    let n = g.node_count();
    if x_norm.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows for {n} nodes",
            x_norm.rows()
        )));
    }
    let a_train = NormalizedAdjacency::from_graph(&split.train_graph(n)?);
    let model_cfg = cfg.model_config(x_norm.cols());
    let weights = cfg.weights();
    let mut params = ModelParams::init(model_cfg, &mut seeded(derive_seed(cfg.seed, "init")));
    let mut adam = AdamState::new(model_cfg);
    let mut rng = seeded(derive_seed(cfg.seed, "epochs"));
    let val_eps = standard_normal_matrix(
        n,
        cfg.latent_dim,
        &mut seeded(derive_seed(cfg.seed, "val_eps")),
    );

    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut history = Vec::new();
    let mut stopped_early = false;
    let neg_count = split.train_pos.len() * cfg.neg_per_pos;

    for epoch in 1..=cfg.max_epochs {
        let neg = resample_negatives(g, neg_count, &mut rng);
        let eps = standard_normal_matrix(n, cfg.latent_dim, &mut rng);
        let fwd = forward(
            &a_train,
            x_norm,
            &params,
            &eps,
            &split.train_pos,
            &neg,
            weights,
        )?;
        if !fwd.loss.total.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("training loss {:?}", fwd.loss),
            });
        }
        let grads = backward(
            &fwd,
            &a_train,
            x_norm,
            &params,
            &split.train_pos,
            &neg,
            weights,
        );
        adam_step(
            &mut params,
            &grads,
            &mut adam,
            cfg.lr,
            cfg.weight_decay,
            cfg.adam,
        );
        if !params.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: "non-finite parameters after update".into(),
            });
        }

        let val = validation_loss(&a_train, x_norm, &params, split, &val_eps, weights)?.total;
        if !val.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("validation loss {val}"),
            });
        }
        let improved = val < best_val;
        if improved {
            best_val = val;
            best = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
        }
        history.push(EpochRecord {
            epoch,
            train: fwd.loss,
            val_total: val,
            best_val_so_far: best_val,
            checkpointed: improved,
        });
        log::debug!(
            "epoch {epoch}: train {:.5} (recon {:.5} feat {:.5} kl {:.5}) val {val:.5}",
            fwd.loss.total,
            fwd.loss.recon,
            fwd.loss.feat,
            fwd.loss.kl
        );
        if !improved && stale >= cfg.patience {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainingOutcome {
        params: best,
        history,
        best_epoch,
        best_val_loss: best_val,
        val_eps,
        stopped_early,
    })
}

pub fn history_csv(history: &[EpochRecord]) -> Result<String> {
    use crate::report::fmt_sig;
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|r| {
            vec![
                r.epoch.to_string(),
                fmt_sig(r.train.recon),
                fmt_sig(r.train.feat),
                fmt_sig(r.train.kl),
                fmt_sig(r.train.total),
                fmt_sig(r.val_total),
            ]
        })
        .collect();
    crate::report::csv_string(
        &["epoch", "recon", "feat", "kl", "total", "val_total"],
        &rows,
    )
}

pub fn write_history_csv(history: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, history_csv(history)?).map_err(|e| Error::io(path, e))
}
