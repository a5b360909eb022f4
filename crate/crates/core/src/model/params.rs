use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Layer widths. `input_dim` is the feature dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
}

impl ModelConfig {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim: 64,
            latent_dim: 32,
        }
    }
}

/// Encoder and node-decoder weights.
///
/// Also used as the container for gradients and optimizer moments, since they
/// share every shape. Biases are `1 × width` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    /// `d × h`
    pub gcn1: Matrix<T>,
    /// `h × h`
    pub gcn2: Matrix<T>,
    /// `h × z`
    pub head_mu: Matrix<T>,
    /// `h × z`
    pub head_logvar: Matrix<T>,
    /// `z × h`
    pub dec_w1: Matrix<T>,
    pub dec_b1: Matrix<T>,
    /// `h × h`
    pub dec_w2: Matrix<T>,
    pub dec_b2: Matrix<T>,
    /// `h × d`
    pub dec_w3: Matrix<T>,
    pub dec_b3: Matrix<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(cfg: ModelConfig) -> Self {
        let ModelConfig {
            input_dim: d,
            hidden_dim: h,
            latent_dim: z,
        } = cfg;
        Self {
            gcn1: Matrix::zeros(d, h),
            gcn2: Matrix::zeros(h, h),
            head_mu: Matrix::zeros(h, z),
            head_logvar: Matrix::zeros(h, z),
            dec_w1: Matrix::zeros(z, h),
            dec_b1: Matrix::zeros(1, h),
            dec_w2: Matrix::zeros(h, h),
            dec_b2: Matrix::zeros(1, h),
            dec_w3: Matrix::zeros(h, d),
            dec_b3: Matrix::zeros(1, d),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(cfg: ModelConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(cfg);
        for (name, m) in p.tensors_mut() {
            if name.starts_with("dec_b") {
                continue;
            }
            let (fan_in, fan_out) = m.shape();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in m.as_mut_slice() {
                *v = T::of(rng.random_range(-limit..limit));
            }
        }
        p
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig {
            input_dim: self.gcn1.rows(),
            hidden_dim: self.gcn1.cols(),
            latent_dim: self.head_mu.cols(),
        }
    }

    pub fn tensors(&self) -> [(&'static str, &Matrix<T>); 10] {
        [
            ("gcn1", &self.gcn1),
            ("gcn2", &self.gcn2),
            ("head_mu", &self.head_mu),
            ("head_logvar", &self.head_logvar),
            ("dec_w1", &self.dec_w1),
            ("dec_b1", &self.dec_b1),
            ("dec_w2", &self.dec_w2),
            ("dec_b2", &self.dec_b2),
            ("dec_w3", &self.dec_w3),
            ("dec_b3", &self.dec_b3),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Matrix<T>); 10] {
        [
            ("gcn1", &mut self.gcn1),
            ("gcn2", &mut self.gcn2),
            ("head_mu", &mut self.head_mu),
            ("head_logvar", &mut self.head_logvar),
            ("dec_w1", &mut self.dec_w1),
            ("dec_b1", &mut self.dec_b1),
            ("dec_w2", &mut self.dec_w2),
            ("dec_b2", &mut self.dec_b2),
            ("dec_w3", &mut self.dec_w3),
            ("dec_b3", &mut self.dec_b3),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.as_slice().len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.is_finite())
    }

    /// Versioned text checkpoint. Values use shortest round-trip formatting,
    /// so reading the text back reproduces every bit.
    pub fn to_checkpoint_string(&self) -> String {
        let cfg = self.config();
        let mut out = String::new();
        let _ = writeln!(out, "agn-model v1");
        let _ = writeln!(out, "scalar {}", T::type_name());
        let _ = writeln!(
            out,
            "dims {} {} {}",
            cfg.input_dim, cfg.hidden_dim, cfg.latent_dim
        );
        for (name, m) in self.tensors() {
            let _ = writeln!(out, "tensor {name} {} {}", m.rows(), m.cols());
            for row in m.row_iter() {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        out
    }

    pub fn from_checkpoint_str(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Checkpoint(msg);
        let mut lines = text.lines();
        if lines.next() != Some("agn-model v1") {
            return Err(bad("missing `agn-model v1` header".into()));
        }
        match lines.next().and_then(|l| l.strip_prefix("scalar ")) {
            Some(t) if t == T::type_name() => {}
            other => {
                return Err(bad(format!(
                    "checkpoint scalar {:?} does not match {}",
                    other,
                    T::type_name()
                )))
            }
        }
        let dims: Vec<usize> = lines
            .next()
            .and_then(|l| l.strip_prefix("dims "))
            .ok_or_else(|| bad("missing dims line".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad dimension `{t}`"))))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(bad("dims line needs three values".into()));
        }
        let mut p = Self::zeros(ModelConfig {
            input_dim: dims[0],
            hidden_dim: dims[1],
            latent_dim: dims[2],
        });
        for (name, m) in p.tensors_mut() {
            let header = lines
                .next()
                .ok_or_else(|| bad(format!("missing tensor {name}")))?;
            let expected = format!("tensor {name} {} {}", m.rows(), m.cols());
            if header != expected {
                return Err(bad(format!("expected `{expected}`, found `{header}`")));
            }
            for i in 0..m.rows() {
                let line = lines
                    .next()
                    .ok_or_else(|| bad(format!("{name}: missing row {i}")))?;
                let row = m.row_mut(i);
                let mut n = 0;
                for (slot, tok) in row.iter_mut().zip(line.split_whitespace()) {
                    *slot = tok
                        .parse::<T>()
                        .map_err(|_| bad(format!("{name}: bad value `{tok}`")))?;
                    n += 1;
                }
                if n != row.len() || line.split_whitespace().count() != row.len() {
                    return Err(bad(format!("{name}: row {i} has the wrong length")));
                }
            }
        }
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_checkpoint_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shapes_and_glorot_bounds() {
        let p: ModelParams<f64> =
            ModelParams::init(ModelConfig::new(4), &mut crate::rng::seeded(1));
        assert_eq!(p.gcn1.shape(), (4, 64));
        assert_eq!(p.head_logvar.shape(), (64, 32));
        assert_eq!(p.dec_w3.shape(), (64, 4));
        assert!(p.dec_b2.as_slice().iter().all(|&b| b == 0.0));
        let limit = (6.0 / 68.0_f64).sqrt();
        assert!(p.gcn1.as_slice().iter().all(|v| v.abs() < limit));
        assert!(p.gcn1.as_slice().iter().any(|&v| v != 0.0));
        assert_eq!(p.config(), ModelConfig::new(4));
    }

    #[test]
    fn rejects_mismatched_checkpoints() {
        let p: ModelParams<f64> =
            ModelParams::init(ModelConfig::new(2), &mut crate::rng::seeded(1));
        let text = p.to_checkpoint_string();
        assert!(ModelParams::<f32>::from_checkpoint_str(&text).is_err());
        assert!(ModelParams::<f64>::from_checkpoint_str(
            &text.replace("tensor gcn2", "tensor gcnX")
        )
        .is_err());
        assert!(ModelParams::<f64>::from_checkpoint_str("agn-model v0\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn checkpoint_round_trip_is_exact(seed in 0u64..10_000, d in 1usize..7) {
            let cfg = ModelConfig { input_dim: d, hidden_dim: 5, latent_dim: 3 };
            let p64: ModelParams<f64> = ModelParams::init(cfg, &mut crate::rng::seeded(seed));
            prop_assert_eq!(ModelParams::from_checkpoint_str(&p64.to_checkpoint_string()).unwrap(), p64);
            let p32: ModelParams<f32> = ModelParams::init(cfg, &mut crate::rng::seeded(seed));
            prop_assert_eq!(ModelParams::from_checkpoint_str(&p32.to_checkpoint_string()).unwrap(), p32);
        }
    }
}
