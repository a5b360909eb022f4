//! Variational graph autoencoder: GCN encoder, Gaussian latents, MLP feature
//! decoder and inner-product edge scores, with hand-derived gradients.

mod backward;
mod params;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::matrix::{dot, Matrix};
use crate::rng::standard_normal_matrix;
use crate::scalar::{sigmoid, softplus, Scalar};

pub use backward::backward;
pub use params::{ModelConfig, ModelParams};

/// Encoder log-variances are clamped to this range before any exponentiation.
pub const LOGVAR_CLAMP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub recon: f64,
    pub feat: f64,
    pub kl: f64,
    pub total: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Intermediate activations of the encoder, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache<T> {
    /// `Ã X`
    pub ax: Matrix<T>,
    pub h1_pre: Matrix<T>,
    pub h1: Matrix<T>,
    /// `Ã H1`
    pub ah1: Matrix<T>,
    pub h2_pre: Matrix<T>,
    pub h2: Matrix<T>,
    /// `Ã H2`
    pub ah2: Matrix<T>,
    pub mu: Matrix<T>,
    pub logvar_raw: Matrix<T>,
    pub logvar: Matrix<T>,
}

fn relu<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    m.map(|v| v.max(T::zero()))
}

fn check_encoder_shapes<T: Scalar>(
    a: &NormalizedAdjacency<T>,
    x: &Matrix<T>,
    p: &ModelParams<T>,
) -> Result<()> {
    if a.size() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "adjacency is {n}×{n} but features have {} rows",
            x.rows(),
            n = a.size()
        )));
    }
    if x.cols() != p.gcn1.rows() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} columns, model expects {}",
            x.cols(),
            p.gcn1.rows()
        )));
    }
    Ok(())
}

pub fn encode_cached<T: Scalar>(
    a: &NormalizedAdjacency<T>,
    x: &Matrix<T>,
    p: &ModelParams<T>,
) -> Result<EncoderCache<T>> {
    check_encoder_shapes(a, x, p)?;
    let ax = a.matmul(x);
    let h1_pre = ax.matmul(&p.gcn1);
    let h1 = relu(&h1_pre);
    let ah1 = a.matmul(&h1);
    let h2_pre = ah1.matmul(&p.gcn2);
    let h2 = relu(&h2_pre);
    let ah2 = a.matmul(&h2);
    let mu = ah2.matmul(&p.head_mu);
    let logvar_raw = ah2.matmul(&p.head_logvar);
    let c = T::of(LOGVAR_CLAMP);
    let logvar = logvar_raw.map(|v| v.max(-c).min(c));
    Ok(EncoderCache {
        ax,
        h1_pre,
        h1,
        ah1,
        h2_pre,
        h2,
        ah2,
        mu,
        logvar_raw,
        logvar,
    })
}

/// Posterior means and (clamped) log-variances for every node.
pub fn encode<T: Scalar>(
    a: &NormalizedAdjacency<T>,
    x: &Matrix<T>,
    p: &ModelParams<T>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let c = encode_cached(a, x, p)?;
    Ok((c.mu, c.logvar))
}

/// A reparameterized draw `z = μ + ε ⊙ exp(logvar / 2)` with its noise recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState<T> {
    pub mu: Matrix<T>,
    pub logvar: Matrix<T>,
    pub eps: Matrix<T>,
    pub z: Matrix<T>,
}

impl<T: Scalar> LatentState<T> {
    pub fn from_eps(mu: Matrix<T>, logvar: Matrix<T>, eps: Matrix<T>) -> Result<Self> {
        if mu.shape() != logvar.shape() || mu.shape() != eps.shape() {
            return Err(Error::DimensionMismatch(
                "mu, logvar and eps must share a shape".into(),
            ));
        }
        let half = T::of(0.5);
        let mut z = mu.clone();
        for ((zv, &lv), &e) in z
            .as_mut_slice()
            .iter_mut()
            .zip(logvar.as_slice())
            .zip(eps.as_slice())
        {
            *zv += e * (half * lv).exp();
        }
        Ok(Self { mu, logvar, eps, z })
    }
}

pub fn reparameterize<T: Scalar, R: Rng + ?Sized>(
    mu: Matrix<T>,
    logvar: Matrix<T>,
    rng: &mut R,
) -> Result<LatentState<T>> {
    let eps = standard_normal_matrix(mu.rows(), mu.cols(), rng);
    LatentState::from_eps(mu, logvar, eps)
}

#[derive(Debug, Clone)]
pub struct DecoderCache<T> {
    pub a1: Matrix<T>,
    pub r1: Matrix<T>,
    pub a2: Matrix<T>,
    pub r2: Matrix<T>,
    pub x_hat: Matrix<T>,
}

pub fn decode_cached<T: Scalar>(z: &Matrix<T>, p: &ModelParams<T>) -> Result<DecoderCache<T>> {
    if z.cols() != p.dec_w1.rows() {
        return Err(Error::DimensionMismatch(format!(
            "latents have {} columns, decoder expects {}",
            z.cols(),
            p.dec_w1.rows()
        )));
    }
    let mut a1 = z.matmul(&p.dec_w1);
    a1.add_row_vector(p.dec_b1.as_slice());
    let r1 = relu(&a1);
    let mut a2 = r1.matmul(&p.dec_w2);
    a2.add_row_vector(p.dec_b2.as_slice());
    let r2 = relu(&a2);
    let mut a3 = r2.matmul(&p.dec_w3);
    a3.add_row_vector(p.dec_b3.as_slice());
    let x_hat = a3.map(sigmoid);
    Ok(DecoderCache {
        a1,
        r1,
        a2,
        r2,
        x_hat,
    })
}

/// MLP node decoder; outputs lie in `(0, 1)` away from sigmoid saturation.
pub fn decode_features<T: Scalar>(z: &Matrix<T>, p: &ModelParams<T>) -> Result<Matrix<T>> {
    Ok(decode_cached(z, p)?.x_hat)
}

#[inline]
pub fn edge_logit<T: Scalar>(zi: &[T], zj: &[T]) -> T {
    dot(zi, zj)
}

#[inline]
pub fn edge_prob<T: Scalar>(zi: &[T], zj: &[T]) -> T {
    sigmoid(edge_logit(zi, zj))
}

fn check_edges(pos: &[(usize, usize)], neg: &[(usize, usize)], n: usize) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidArgument(
            "edge reconstruction needs non-empty positive and negative sets".into(),
        ));
    }
    if pos.iter().chain(neg).any(|&(u, v)| u >= n || v >= n) {
        return Err(Error::InvalidArgument("edge endpoint out of range".into()));
    }
    Ok(())
}

/// Two separately averaged edge terms, mean squared feature error and the
/// Gaussian KL divergence averaged over nodes.
pub fn loss<T: Scalar>(
    x_norm: &Matrix<T>,
    latent: &LatentState<T>,
    x_hat: &Matrix<T>,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
    w: LossWeights,
) -> Result<LossBreakdown> {
    let z = &latent.z;
    check_edges(pos, neg, z.rows())?;
    if x_norm.shape() != x_hat.shape() {
        return Err(Error::DimensionMismatch(
            "x_hat and x_norm differ in shape".into(),
        ));
    }
    let pos_term: T = pos
        .iter()
        .map(|&(i, j)| softplus(-edge_logit(z.row(i), z.row(j))))
        .sum::<T>()
        / T::of(pos.len() as f64);
    let neg_term: T = neg
        .iter()
        .map(|&(i, j)| softplus(edge_logit(z.row(i), z.row(j))))
        .sum::<T>()
        / T::of(neg.len() as f64);
    let recon = pos_term + neg_term;

    let n = x_norm.rows();
    let cells = T::of((n * x_norm.cols()).max(1) as f64);
    let feat = x_hat
        .as_slice()
        .iter()
        .zip(x_norm.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        / cells;

    let kl = kl_divergence(&latent.mu, &latent.logvar);
    let (beta, gamma) = (T::of(w.beta), T::of(w.gamma));
    let total = recon + gamma * feat + beta * kl;
    Ok(LossBreakdown {
        recon: recon.as_f64(),
        feat: feat.as_f64(),
        kl: kl.as_f64(),
        total: total.as_f64(),
        beta: w.beta,
        gamma: w.gamma,
    })
}

pub fn kl_divergence<T: Scalar>(mu: &Matrix<T>, logvar: &Matrix<T>) -> T {
    let n = T::of(mu.rows().max(1) as f64);
    let s: T = mu
        .as_slice()
        .iter()
        .zip(logvar.as_slice())
        .map(|(&m, &lv)| T::one() + lv - m * m - lv.exp())
        .sum();
    -s / (T::of(2.0) * n)
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardPass<T> {
    pub encoder: EncoderCache<T>,
    pub latent: LatentState<T>,
    pub decoder: DecoderCache<T>,
    pub loss: LossBreakdown,
}

/// Full forward evaluation with a fixed noise tensor.
pub fn forward<T: Scalar>(
    a: &NormalizedAdjacency<T>,
    x_norm: &Matrix<T>,
    p: &ModelParams<T>,
    eps: &Matrix<T>,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
    w: LossWeights,
) -> Result<ForwardPass<T>> {
    let encoder = encode_cached(a, x_norm, p)?;
    let latent = LatentState::from_eps(encoder.mu.clone(), encoder.logvar.clone(), eps.clone())?;
    let decoder = decode_cached(&latent.z, p)?;
    let loss = loss(x_norm, &latent, &decoder.x_hat, pos, neg, w)?;
    Ok(ForwardPass {
        encoder,
        latent,
        decoder,
        loss,
    })
}
