//! Autoregressive rollout from a trained conditional model: full synthesis
//! from a class label, and infill of free dimensions when part of every
//! frame (one actor) is observed.

use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{dynamic_biases, DcrbmParams, HistoryWindow, VisibleUnit};
use crate::rng::{self, substream, Stream};
use crate::scalar::{sigmoid, Scalar};

pub const DEFAULT_GIBBS_ITERS: usize = 30;

/// One flag per visible dimension; `true` marks an observed (clamped) value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClampMask(Vec<bool>);

impl ClampMask {
    pub fn free(dim: usize) -> Self {
        ClampMask(vec![false; dim])
    }

    pub fn all(dim: usize) -> Self {
        ClampMask(vec![true; dim])
    }

    /// Observed dimensions are exactly `observed`.
    pub fn range(dim: usize, observed: Range<usize>) -> Result<Self> {
        if observed.end > dim || observed.start > observed.end {
            return Err(Error::Mask(format!("range {observed:?} outside 0..{dim}")));
        }
        Ok(ClampMask((0..dim).map(|i| observed.contains(&i)).collect()))
    }

    pub fn from_flags(flags: Vec<bool>) -> Self {
        ClampMask(flags)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_clamped(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn any_clamped(&self) -> bool {
        self.0.iter().any(|&c| c)
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn clamped(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i]).collect()
    }

    pub fn free_dims(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.0[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest<T> {
    pub label: Option<usize>,
    /// n x Dv, oldest first.
    pub seed_frames: Array2<T>,
    pub length: usize,
    pub mask: ClampMask,
    /// length x Dv; only the clamped columns are read.
    pub observed: Option<Array2<T>>,
    pub gibbs_iters: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSequence<T> {
    pub frames: Array2<T>,
    /// Hidden activation probabilities after the last Gibbs pass of each frame.
    pub hidden: Option<Array2<T>>,
}

fn clamp<T: Scalar>(v: &mut Array1<T>, mask: &ClampMask, observed: Option<ArrayView1<T>>) {
    if let Some(obs) = observed {
        for i in mask.clamped() {
            v[i] = obs[i];
        }
    }
}

fn check_model<T: Scalar>(p: &DcrbmParams<T>, label: Option<usize>) -> Result<()> {
    if p.dims.visible_unit != VisibleUnit::Gaussian {
        return Err(Error::Unsupported("generation needs Gaussian visible units".into()));
    }
    match (p.dims.has_labels(), label) {
        (true, None) => Err(Error::MissingLabels("generation from a labelled model needs a class".into())),
        (true, Some(k)) if k >= p.dims.label_count => Err(Error::shape("label index bound", p.dims.label_count, k)),
        (false, Some(_)) => Err(Error::Unsupported("label given to a model without labels".into())),
        _ => Ok(()),
    }
}

fn gibbs_inner<T: Scalar, R: Rng + ?Sized>(
    p: &DcrbmParams<T>,
    hist: &HistoryWindow<T>,
    label: Option<usize>,
    mask: &ClampMask,
    observed: Option<ArrayView1<T>>,
    iters: usize,
    rng: &mut R,
) -> Result<(Array1<T>, Array1<T>)> {
    let (c, d) = dynamic_biases(p, hist, label)?;
    let mut v = match hist.newest() {
        Some(prev) => prev.to_owned(),
        None => c.clone(),
    };
    clamp(&mut v, mask, observed);
    let mut h_probs = Array1::zeros(p.dims.hidden_dim);
    for _ in 0..iters {
        h_probs = (&d + &v.dot(&p.rbm.weights)).mapv_into(sigmoid);
        let h = h_probs.mapv(|q| rng::bernoulli(rng, q));
        v = &c + &p.rbm.weights.dot(&h);
        clamp(&mut v, mask, observed);
    }
    Ok((v, h_probs))
}

/// Alternates hidden sampling and the visible mean update `iters` times,
/// starting from the newest history frame, and returns the final visible
/// mean. Clamped dimensions are reset to `observed` after every update.
pub fn gibbs_frame<T: Scalar, R: Rng + ?Sized>(
    p: &DcrbmParams<T>,
    hist: &HistoryWindow<T>,
    label: Option<usize>,
    mask: &ClampMask,
    observed: Option<ArrayView1<T>>,
    iters: usize,
    rng: &mut R,
) -> Result<Array1<T>> {
    check_model(p, label)?;
    check_frame_inputs(p, mask, observed, iters)?;
    Ok(gibbs_inner(p, hist, label, mask, observed, iters, rng)?.0)
}

fn check_frame_inputs<T: Scalar>(
    p: &DcrbmParams<T>,
    mask: &ClampMask,
    observed: Option<ArrayView1<T>>,
    iters: usize,
) -> Result<()> {
    if iters == 0 {
        return Err(Error::Config("gibbs_iters must be >= 1".into()));
    }
    if mask.len() != p.dims.visible_dim {
        return Err(Error::Mask(format!("mask has {} entries for Dv = {}", mask.len(), p.dims.visible_dim)));
    }
    match observed {
        None if mask.any_clamped() => Err(Error::Mask("clamped dimensions need an observed frame".into())),
        Some(o) if o.len() != p.dims.visible_dim => Err(Error::shape("observed frame", p.dims.visible_dim, o.len())),
        _ => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn rollout<T: Scalar, R: Rng + ?Sized>(
    p: &DcrbmParams<T>,
    label: Option<usize>,
    seed_frames: ArrayView2<T>,
    length: usize,
    mask: &ClampMask,
    observed: Option<ArrayView2<T>>,
    iters: usize,
    rng: &mut R,
) -> Result<GeneratedSequence<T>> {
    check_model(p, label)?;
    if length == 0 {
        return Err(Error::Config("generation length must be >= 1".into()));
    }
    if seed_frames.nrows() != p.dims.history_order {
        return Err(Error::HistoryLength { expected: p.dims.history_order, got: seed_frames.nrows() });
    }
    if seed_frames.ncols() != p.dims.visible_dim {
        return Err(Error::shape("seed frame width", p.dims.visible_dim, seed_frames.ncols()));
    }
    if let Some(obs) = observed {
        if obs.nrows() != length {
            return Err(Error::Mask(format!("observed stream has {} frames, expected {length}", obs.nrows())));
        }
    }
    let mut hist = HistoryWindow::from_frames(seed_frames);
    let mut frames = Array2::zeros((length, p.dims.visible_dim));
    let mut hidden = Array2::zeros((length, p.dims.hidden_dim));
    for t in 0..length {
        let obs = observed.as_ref().map(|o| o.row(t));
        check_frame_inputs(p, mask, obs, iters)?;
        let (v, h) = gibbs_inner(p, &hist, label, mask, obs, iters, rng)?;
        hist.push(v.view());
        frames.row_mut(t).assign(&v);
        hidden.row_mut(t).assign(&h);
    }
    Ok(GeneratedSequence { frames, hidden: Some(hidden) })
}

/// Synthesizes `length` frames given only the class label and the seed
/// history; each new frame is appended to the history.
pub fn generate_full<T: Scalar, R: Rng + ?Sized>(
    p: &DcrbmParams<T>,
    label: Option<usize>,
    seed_frames: ArrayView2<T>,
    length: usize,
    iters: usize,
    rng: &mut R,
) -> Result<GeneratedSequence<T>> {
    rollout(p, label, seed_frames, length, &ClampMask::free(p.dims.visible_dim), None, iters, rng)
}

/// Infills the free dimensions of `observed` (length x Dv). An all-free mask
/// accepts a stream with zero columns and reduces to `generate_full`.
pub fn generate_partial<T: Scalar, R: Rng + ?Sized>(
    p: &DcrbmParams<T>,
    label: Option<usize>,
    observed: ArrayView2<T>,
    seed_frames: ArrayView2<T>,
    mask: &ClampMask,
    iters: usize,
    rng: &mut R,
) -> Result<GeneratedSequence<T>> {
    if !mask.any_clamped() && observed.ncols() == 0 {
        return generate_full(p, label, seed_frames, observed.nrows(), iters, rng);
    }
    rollout(p, label, seed_frames, observed.nrows(), mask, Some(observed), iters, rng)
}

/// Runs a request on its own generation substream.
pub fn generate<T: Scalar>(p: &DcrbmParams<T>, req: &GenerationRequest<T>) -> Result<GeneratedSequence<T>> {
    let mut rng = substream(req.seed, Stream::Generation);
    match &req.observed {
        Some(obs) => {
            if obs.nrows() != req.length {
                return Err(Error::Mask(format!("observed stream has {} frames, expected {}", obs.nrows(), req.length)));
            }
            generate_partial(p, req.label, obs.view(), req.seed_frames.view(), &req.mask, req.gibbs_iters, &mut rng)
        }
        None if req.mask.any_clamped() => Err(Error::Mask("clamped dimensions need an observed stream".into())),
        None => generate_full(p, req.label, req.seed_frames.view(), req.length, req.gibbs_iters, &mut rng),
    }
}
