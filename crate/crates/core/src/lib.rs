//! Temporal energy-based models for dyadic motion.
//!
//! The crate implements a ladder of restricted Boltzmann machines (RBM,
//! label-augmented DRBM, history-conditioned CRBM and the combined DCRBM),
//! contrastive-divergence training, exact label-posterior classification of
//! sequence windows, and autoregressive generation of missing motion data.
//! All model math is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used by the command-line tool.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod generation;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod training;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Rbm = models::RbmParams<f64>;
pub type Drbm = models::DrbmParams<f64>;
pub type Crbm = models::CrbmParams<f64>;
pub type Dcrbm = models::DcrbmParams<f64>;
pub type DcrbmF32 = models::DcrbmParams<f32>;
pub type Windows = data::WindowedDataset<f64>;
