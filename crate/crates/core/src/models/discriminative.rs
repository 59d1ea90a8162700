use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::rbm::visible_term;
use super::{check_binary, check_len, one_hot_index, LabelDist, RbmParams, VisibleUnit};
use crate::error::Result;
use crate::scalar::Scalar;

/// RBM with a label layer: adds s (length K) and U (Dh x K).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrbmParams<T> {
    pub rbm: RbmParams<T>,
    pub label_bias: Array1<T>,
    pub label_weights: Array2<T>,
}

impl<T: Scalar> DrbmParams<T> {
    pub fn zeros(visible_dim: usize, hidden_dim: usize, label_count: usize) -> Self {
        DrbmParams {
            rbm: RbmParams::zeros(visible_dim, hidden_dim),
            label_bias: Array1::zeros(label_count),
            label_weights: Array2::zeros((hidden_dim, label_count)),
        }
    }
}

/// Models that carry a label layer.
pub trait LabelLayer<T: Scalar> {
    fn base(&self) -> &RbmParams<T>;
    fn label_bias(&self) -> ArrayView1<'_, T>;
    fn label_weights(&self) -> ArrayView2<'_, T>;

    fn label_count(&self) -> usize {
        self.label_bias().len()
    }
}

impl<T: Scalar> LabelLayer<T> for DrbmParams<T> {
    fn base(&self) -> &RbmParams<T> {
        &self.rbm
    }
    fn label_bias(&self) -> ArrayView1<'_, T> {
        self.label_bias.view()
    }
    fn label_weights(&self) -> ArrayView2<'_, T> {
        self.label_weights.view()
    }
}

/// E = Σ(a_i − v_i)²/2 − b·h − s·y − vᵀWh − hᵀUy.
pub fn drbm_energy<T: Scalar>(
    y: ArrayView1<T>,
    v: ArrayView1<T>,
    h: ArrayView1<T>,
    p: &DrbmParams<T>,
) -> Result<T> {
    let k = one_hot_index(y, p.label_count())?;
    p.rbm.check_visible(&v)?;
    p.rbm.check_hidden(&h)?;
    check_binary(h.iter().copied())?;
    let r = &p.rbm;
    Ok(visible_term(v, r.visible_bias.view(), VisibleUnit::Gaussian)
        - r.hidden_bias.dot(&h)
        - p.label_bias[k]
        - v.dot(&r.weights.dot(&h))
        - h.dot(&p.label_weights.column(k)))
}

/// p(y_k | h) = softmax_k(s_k + Σ_j u_jk h_j).
pub fn y_given_h<T: Scalar, M: LabelLayer<T>>(h: ArrayView1<T>, p: &M) -> Result<LabelDist<T>> {
    check_len("hidden configuration", p.base().hidden_dim(), h.len())?;
    let logits = h.dot(&p.label_weights()) + p.label_bias();
    Ok(LabelDist::from_log_weights(logits.as_slice().expect("contiguous")))
}
