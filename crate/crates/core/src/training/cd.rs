//! Contrastive divergence for every rung of the model ladder.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::{Reconstruction, TrainConfig};
use crate::error::{Error, Result};
use crate::models::{DcrbmParams, VisibleUnit};
use crate::rng;
use crate::scalar::{sigmoid, Scalar};

/// A batch of windows: rows of v_t, their flattened histories and (for
/// labelled models) class indices.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a, T> {
    pub visible: ArrayView2<'a, T>,
    pub history: ArrayView2<'a, T>,
    pub labels: Option<&'a [usize]>,
}

impl<T: Scalar> Batch<'_, T> {
    pub fn len(&self) -> usize {
        self.visible.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sufficient statistics of one phase: visible values, hidden activation
/// probabilities and label indicators (one row per batch element).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStats<T> {
    pub visible: Array2<T>,
    pub hidden: Array2<T>,
    pub labels: Array2<T>,
}

/// One array per parameter group, shaped like the model. Also used as the
/// momentum velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate<T> {
    pub weights: Array2<T>,
    pub label_weights: Array2<T>,
    pub visible_bias: Array1<T>,
    pub hidden_bias: Array1<T>,
    pub label_bias: Array1<T>,
    pub autoregressive: Array2<T>,
    pub history_hidden: Array2<T>,
    /// Mean squared difference between data and reconstruction.
    pub reconstruction_error: T,
}

impl<T: Scalar> GradientEstimate<T> {
    pub fn zeros_like(p: &DcrbmParams<T>) -> Self {
        GradientEstimate {
            weights: Array2::zeros(p.rbm.weights.dim()),
            label_weights: Array2::zeros(p.label_weights.dim()),
            visible_bias: Array1::zeros(p.rbm.visible_bias.len()),
            hidden_bias: Array1::zeros(p.rbm.hidden_bias.len()),
            label_bias: Array1::zeros(p.label_bias.len()),
            autoregressive: Array2::zeros(p.autoregressive.dim()),
            history_hidden: Array2::zeros(p.history_hidden.dim()),
            reconstruction_error: T::zero(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.weights
            .iter()
            .chain(&self.label_weights)
            .chain(&self.visible_bias)
            .chain(&self.hidden_bias)
            .chain(&self.label_bias)
            .chain(&self.autoregressive)
            .chain(&self.history_hidden)
            .fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.max_abs().is_finite()
    }
}

fn one_hot_rows<T: Scalar>(labels: &[usize], k: usize) -> Array2<T> {
    let mut y = Array2::zeros((labels.len(), k));
    for (r, &l) in labels.iter().enumerate() {
        y[[r, l]] = T::one();
    }
    y
}

fn hidden_probs<T: Scalar>(p: &DcrbmParams<T>, v: ArrayView2<T>, d_base: &Array2<T>, y: &Array2<T>) -> Array2<T> {
    let mut act = v.dot(&p.rbm.weights) + d_base;
    if y.ncols() > 0 {
        act += &y.dot(&p.label_weights.t());
    }
    act.mapv_into(sigmoid)
}

fn sample_bernoulli<T: Scalar, R: Rng + ?Sized>(probs: &Array2<T>, rng: &mut R) -> Array2<T> {
    probs.mapv(|q| rng::bernoulli(rng, q))
}

/// Difference of data and reconstruction statistics, batch-averaged:
/// ΔW = ⟨v hᵀ⟩₀ − ⟨v hᵀ⟩₁, ΔU = ⟨h yᵀ⟩₀ − ⟨h yᵀ⟩₁, ΔA = v_<tᵀ(v₀ − v₁),
/// ΔB = v_<tᵀ(h₀ − h₁), and the bias terms as plain mean differences.
pub fn contrastive_gradient<T: Scalar>(
    history: ArrayView2<T>,
    positive: &PhaseStats<T>,
    negative: &PhaseStats<T>,
) -> GradientEstimate<T> {
    let inv = T::one() / T::of(positive.visible.nrows().max(1) as f64);
    let dv = &positive.visible - &negative.visible;
    let dh = &positive.hidden - &negative.hidden;
    let dy = &positive.labels - &negative.labels;
    let weights = (positive.visible.t().dot(&positive.hidden) - negative.visible.t().dot(&negative.hidden)) * inv;
    let label_weights = (positive.hidden.t().dot(&positive.labels) - negative.hidden.t().dot(&negative.labels)) * inv;
    let recon = dv.iter().map(|&x| x * x).sum::<T>() * inv / T::of(dv.ncols().max(1) as f64);
    GradientEstimate {
        weights,
        label_weights,
        visible_bias: dv.sum_axis(Axis(0)) * inv,
        hidden_bias: dh.sum_axis(Axis(0)) * inv,
        label_bias: dy.sum_axis(Axis(0)) * inv,
        autoregressive: history.t().dot(&dv) * inv,
        history_hidden: history.t().dot(&dh) * inv,
        reconstruction_error: recon,
    }
}

/// Data-clamped statistics: hidden probabilities given (v, y, v_<t).
pub fn positive_phase<T: Scalar>(p: &DcrbmParams<T>, batch: &Batch<'_, T>) -> Result<PhaseStats<T>> {
    check_batch(p, batch)?;
    let (_, d_base) = p.history_terms(batch.history);
    let y = match batch.labels {
        Some(l) => one_hot_rows(l, p.dims.label_count),
        None => Array2::zeros((batch.len(), 0)),
    };
    Ok(PhaseStats {
        visible: batch.visible.to_owned(),
        hidden: hidden_probs(p, batch.visible, &d_base, &y),
        labels: y,
    })
}

fn check_batch<T: Scalar>(p: &DcrbmParams<T>, batch: &Batch<'_, T>) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("cd_step batch".into()));
    }
    if batch.visible.ncols() != p.dims.visible_dim {
        return Err(Error::shape("batch visible width", p.dims.visible_dim, batch.visible.ncols()));
    }
    if batch.history.ncols() != p.dims.history_len() || batch.history.nrows() != batch.len() {
        return Err(Error::shape(
            "batch history",
            format!("{} x {}", batch.len(), p.dims.history_len()),
            format!("{} x {}", batch.history.nrows(), batch.history.ncols()),
        ));
    }
    match (p.dims.has_labels(), batch.labels) {
        (true, None) => return Err(Error::MissingLabels("discriminative model needs labelled windows".into())),
        (true, Some(l)) => {
            if l.len() != batch.len() {
                return Err(Error::shape("batch labels", batch.len(), l.len()));
            }
            if let Some(&bad) = l.iter().find(|&&k| k >= p.dims.label_count) {
                return Err(Error::shape("label index bound", p.dims.label_count, bad));
            }
        }
        (false, _) => {}
    }
    Ok(())
}

/// CD-k: h ~ p(h | v, y, v_<t) → v from p(v | h, v_<t) → y from p(y | h),
/// repeated `cfg.cd_steps` times, then the statistics difference.
pub fn cd_step<T: Scalar, R: Rng + ?Sized>(
    p: &DcrbmParams<T>,
    batch: &Batch<'_, T>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<GradientEstimate<T>> {
    let positive = positive_phase(p, batch)?;
    let (c, d_base) = p.history_terms(batch.history);
    let k = p.dims.label_count;
    let mut h = sample_bernoulli(&positive.hidden, rng);
    let mut negative = positive.clone();
    for step in 0..cfg.cd_steps {
        let mean = h.dot(&p.rbm.weights.t()) + &c;
        let visible = match (p.dims.visible_unit, cfg.reconstruction) {
            (VisibleUnit::Gaussian, Reconstruction::MeanField) => mean,
            (VisibleUnit::Gaussian, Reconstruction::Sample) => mean.mapv_into(|m| m + rng::normal::<T, _>(rng)),
            (VisibleUnit::Binary, Reconstruction::MeanField) => mean.mapv_into(sigmoid),
            (VisibleUnit::Binary, Reconstruction::Sample) => sample_bernoulli(&mean.mapv_into(sigmoid), rng),
        };
        let labels = if k > 0 && cfg.resample_labels {
            let logits = h.dot(&p.label_weights) + &p.label_bias;
            let mut y = Array2::zeros((batch.len(), k));
            for (r, row) in logits.axis_iter(Axis(0)).enumerate() {
                let dist = crate::models::LabelDist::from_log_weights(&row.to_vec());
                y[[r, rng::categorical(rng, dist.probs.as_slice().expect("contiguous"))]] = T::one();
            }
            y
        } else {
            positive.labels.clone()
        };
        let hidden = hidden_probs(p, visible.view(), &d_base, &labels);
        if step + 1 < cfg.cd_steps {
            h = sample_bernoulli(&hidden, rng);
        }
        negative = PhaseStats { visible, hidden, labels };
    }
    Ok(contrastive_gradient(batch.history, &positive, &negative))
}
