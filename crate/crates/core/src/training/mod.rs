//! Contrastive-divergence training, the momentum update and exact
//! likelihood oracles for tiny binary RBMs.

mod cd;
mod config;
mod exact;

pub use cd::{cd_step, contrastive_gradient, positive_phase, Batch, GradientEstimate, PhaseStats};
pub use config::{Reconstruction, TrainConfig};
pub use exact::{exact_gradient, exact_loglik, grad_check, joint_log_weights, log_partition, MAX_ENUM_UNITS};

use std::time::{Duration, Instant};

use ndarray::Axis;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::models::DcrbmParams;
use crate::rng::{substream, Stream};
use crate::scalar::Scalar;

/// velocity ← momentum·velocity + lr·(g − decay·θ) with decay applied to
/// W, U, A and B only; then θ ← θ + velocity.
pub fn apply_update<T: Scalar>(
    p: &mut DcrbmParams<T>,
    g: &GradientEstimate<T>,
    cfg: &TrainConfig,
    velocity: &mut GradientEstimate<T>,
) {
    let lr = T::of(cfg.learning_rate);
    let mom = T::of(cfg.momentum);
    let decay = T::of(cfg.weight_decay);
    macro_rules! step {
        ($param:expr, $grad:expr, $vel:expr, decayed) => {
            ndarray::Zip::from(&mut $vel).and(&mut $param).and(&$grad).for_each(|v, th, &gr| {
                *v = mom * *v + lr * (gr - decay * *th);
                *th += *v;
            })
        };
        ($param:expr, $grad:expr, $vel:expr) => {
            ndarray::Zip::from(&mut $vel).and(&mut $param).and(&$grad).for_each(|v, th, &gr| {
                *v = mom * *v + lr * gr;
                *th += *v;
            })
        };
    }
    step!(p.rbm.weights, g.weights, velocity.weights, decayed);
    step!(p.label_weights, g.label_weights, velocity.label_weights, decayed);
    step!(p.autoregressive, g.autoregressive, velocity.autoregressive, decayed);
    step!(p.history_hidden, g.history_hidden, velocity.history_hidden, decayed);
    step!(p.rbm.visible_bias, g.visible_bias, velocity.visible_bias);
    step!(p.rbm.hidden_bias, g.hidden_bias, velocity.hidden_bias);
    step!(p.label_bias, g.label_bias, velocity.label_bias);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub reconstruction_error: f64,
    /// Window-level arg-max accuracy on the held-out windows, if any.
    pub heldout_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
    /// Path or id of the checkpoint holding the final parameters.
    pub checkpoint: Option<String>,
    /// Excluded from serialized reports so reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Fraction of windows whose arg-max posterior equals their label.
pub fn window_accuracy<T: Scalar>(p: &DcrbmParams<T>, data: &WindowedDataset<T>) -> Result<f64> {
    let post = p.posterior_batch(data.visible.view(), data.history.view())?;
    let mut correct = 0usize;
    let mut total = 0usize;
    for (row, label) in post.axis_iter(Axis(0)).zip(&data.labels) {
        if let Some(l) = label {
            let pred = crate::models::LabelDist { probs: row.to_owned() }.argmax();
            correct += usize::from(pred == *l);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::MissingLabels("no labelled windows".into()));
    }
    Ok(correct as f64 / total as f64)
}

fn check_dataset<T: Scalar>(p: &DcrbmParams<T>, data: &WindowedDataset<T>) -> Result<()> {
    if data.order != p.dims.history_order {
        return Err(Error::Config(format!(
            "dataset windowed with n = {} but model history order is {}",
            data.order, p.dims.history_order
        )));
    }
    if data.visible_dim != p.dims.visible_dim {
        return Err(Error::shape("dataset visible width", p.dims.visible_dim, data.visible_dim));
    }
    if p.dims.has_labels() && data.labels.iter().any(Option::is_none) {
        return Err(Error::MissingLabels("unlabelled window for a discriminative model".into()));
    }
    Ok(())
}

/// Epochs of shuffled mini-batch CD with the momentum schedule. Labels are
/// clamped to the data in the positive phase; the negative phase follows
/// `cfg.resample_labels`.
pub fn train<T: Scalar>(
    p: &mut DcrbmParams<T>,
    data: &WindowedDataset<T>,
    cfg: &TrainConfig,
    heldout: Option<&WindowedDataset<T>>,
) -> Result<TrainReport> {
    cfg.validate()?;
    p.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training dataset has no windows".into()));
    }
    check_dataset(p, data)?;
    if let Some(h) = heldout {
        check_dataset(p, h)?;
    }
    let start = Instant::now();
    let mut rng = substream(cfg.seed, Stream::Cd);
    let mut velocity = GradientEstimate::zeros_like(p);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let labels: Vec<usize> = data.labels.iter().map(|l| l.unwrap_or(0)).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let step_cfg = TrainConfig {
            momentum: cfg.momentum_at(epoch),
            ..cfg.clone()
        };
        let mut recon = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let visible = data.visible.select(Axis(0), chunk);
            let history = data.history.select(Axis(0), chunk);
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let batch = Batch {
                visible: visible.view(),
                history: history.view(),
                labels: p.dims.has_labels().then_some(batch_labels.as_slice()),
            };
            let g = cd_step(p, &batch, &step_cfg, &mut rng)?;
            recon += g.reconstruction_error.as_f64() * chunk.len() as f64;
            apply_update(p, &g, &step_cfg, &mut velocity);
        }
        if !p.is_finite() {
            return Err(Error::Config(format!("training diverged at epoch {epoch}; lower the learning rate")));
        }
        let heldout_accuracy = match heldout {
            Some(h) if p.dims.has_labels() && !h.is_empty() => Some(window_accuracy(p, h)?),
            _ => None,
        };
        log::debug!("epoch {epoch}: recon {:.5}", recon / data.len() as f64);
        epochs.push(EpochRecord {
            epoch,
            reconstruction_error: recon / data.len() as f64,
            heldout_accuracy,
        });
    }
    Ok(TrainReport {
        config: cfg.clone(),
        epochs,
        checkpoint: None,
        wall_time: start.elapsed(),
    })
}
