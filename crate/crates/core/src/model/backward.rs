use super::{ForwardPass, LossWeights, ModelParams, LOGVAR_CLAMP};
use crate::graph::NormalizedAdjacency;
use crate::matrix::Matrix;
use crate::scalar::{sigmoid, Scalar};

fn relu_mask<T: Scalar>(grad: &Matrix<T>, pre: &Matrix<T>) -> Matrix<T> {
    grad.zip_map(pre, |g, p| if p > T::zero() { g } else { T::zero() })
}

fn bias_grad<T: Scalar>(grad: &Matrix<T>) -> Matrix<T> {
    let sums = grad.column_sums();
    Matrix::from_vec(1, sums.len(), sums)
}

/// Reverse-mode gradient of `fwd.loss.total` with respect to every parameter.
///
/// The noise `eps` is a constant. Log-variance entries clamped in the forward
/// pass receive zero gradient.
pub fn backward<T: Scalar>(
    fwd: &ForwardPass<T>,
    a: &NormalizedAdjacency<T>,
    x_norm: &Matrix<T>,
    p: &ModelParams<T>,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
    w: LossWeights,
) -> ModelParams<T> {
    let enc = &fwd.encoder;
    let dec = &fwd.decoder;
    let lat = &fwd.latent;
    let z = &lat.z;
    let (n, zdim) = z.shape();
    let (beta, gamma) = (T::of(w.beta), T::of(w.gamma));

    // edge terms: d/dl softplus(-l) = σ(l) - 1, d/dl softplus(l) = σ(l)
    let mut dz = Matrix::zeros(n, zdim);
    let pos_scale = T::one() / T::of(pos.len() as f64);
    let neg_scale = T::one() / T::of(neg.len() as f64);
    let mut scatter = |pairs: &[(usize, usize)], coeff: &dyn Fn(T) -> T| {
        for &(i, j) in pairs {
            let g = coeff(super::edge_logit(z.row(i), z.row(j)));
            for k in 0..zdim {
                let (zi, zj) = (z[(i, k)], z[(j, k)]);
                dz[(i, k)] += g * zj;
                dz[(j, k)] += g * zi;
            }
        }
    };
    scatter(pos, &|l| (sigmoid(l) - T::one()) * pos_scale);
    scatter(neg, &|l| sigmoid(l) * neg_scale);

    // feature decoder
    let cells = T::of((x_norm.rows() * x_norm.cols()).max(1) as f64);
    let two = T::of(2.0);
    let d_xhat = dec
        .x_hat
        .zip_map(x_norm, |xh, xn| gamma * two * (xh - xn) / cells);
    let d_a3 = d_xhat.zip_map(&dec.x_hat, |g, s| g * s * (T::one() - s));
    let g_dec_w3 = dec.r2.t_matmul(&d_a3);
    let g_dec_b3 = bias_grad(&d_a3);
    let d_a2 = relu_mask(&d_a3.matmul_t(&p.dec_w3), &dec.a2);
    let g_dec_w2 = dec.r1.t_matmul(&d_a2);
    let g_dec_b2 = bias_grad(&d_a2);
    let d_a1 = relu_mask(&d_a2.matmul_t(&p.dec_w2), &dec.a1);
    let g_dec_w1 = z.t_matmul(&d_a1);
    let g_dec_b1 = bias_grad(&d_a1);
    dz.add_assign(&d_a1.matmul_t(&p.dec_w1));

    // reparameterization and KL
    let half = T::of(0.5);
    let nf = T::of(n.max(1) as f64);
    let mut d_mu = dz.clone();
    let mut d_lv = Matrix::zeros(n, zdim);
    {
        let mu = lat.mu.as_slice();
        let lv = lat.logvar.as_slice();
        let eps = lat.eps.as_slice();
        let dz = dz.as_slice();
        let dmu = d_mu.as_mut_slice();
        let dlv = d_lv.as_mut_slice();
        for idx in 0..dz.len() {
            let s = (half * lv[idx]).exp();
            dmu[idx] += beta * mu[idx] / nf;
            dlv[idx] =
                dz[idx] * eps[idx] * half * s + beta * (lv[idx].exp() - T::one()) / (two * nf);
        }
    }
    let c = T::of(LOGVAR_CLAMP);
    let d_lv_raw = d_lv.zip_map(&enc.logvar_raw, |g, r| {
        if r >= -c && r <= c {
            g
        } else {
            T::zero()
        }
    });

    // encoder
    let g_head_mu = enc.ah2.t_matmul(&d_mu);
    let g_head_logvar = enc.ah2.t_matmul(&d_lv_raw);
    let mut d_ah2 = d_mu.matmul_t(&p.head_mu);
    d_ah2.add_assign(&d_lv_raw.matmul_t(&p.head_logvar));
    // Ã is symmetric, so Ãᵀ·G = Ã·G
    let d_h2_pre = relu_mask(&a.matmul(&d_ah2), &enc.h2_pre);
    let g_gcn2 = enc.ah1.t_matmul(&d_h2_pre);
    let d_ah1 = d_h2_pre.matmul_t(&p.gcn2);
    let d_h1_pre = relu_mask(&a.matmul(&d_ah1), &enc.h1_pre);
    let g_gcn1 = enc.ax.t_matmul(&d_h1_pre);

    ModelParams {
        gcn1: g_gcn1,
        gcn2: g_gcn2,
        head_mu: g_head_mu,
        head_logvar: g_head_logvar,
        dec_w1: g_dec_w1,
        dec_b1: g_dec_b1,
        dec_w2: g_dec_w2,
        dec_b2: g_dec_b2,
        dec_w3: g_dec_w3,
        dec_b3: g_dec_b3,
    }
}
