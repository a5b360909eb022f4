//! Controlled node insertion into partially observed graphs.
//!
//! A variational graph autoencoder is trained on an observed graph's
//! structural features; new node feature vectors are sampled from the latent
//! prior and wired to the original backbone with a cosine top-k rule. The
//! [`eval`] module measures how much the insertion disturbs the backbone.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix the common `f64` instantiations.

pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod insert;
pub mod matrix;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use graph::{Graph, NormalizedAdjacency, Provenance};
pub use matrix::Matrix;
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type FeatureMatrix64 = features::FeatureMatrix<f64>;
pub type NormParams64 = features::NormParams<f64>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type ModelParams32 = model::ModelParams<f32>;
pub type NormalizedAdjacency64 = NormalizedAdjacency<f64>;
