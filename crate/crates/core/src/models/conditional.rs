use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::rbm::visible_term;
use super::{check_binary, HistoryWindow, RbmParams, VisibleUnit};
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};

/// RBM conditioned on the previous `order` visible frames through
/// A ((n*Dv) x Dv, history to visible) and B ((n*Dv) x Dh, history to hidden).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbmParams<T> {
    pub rbm: RbmParams<T>,
    pub order: usize,
    pub autoregressive: Array2<T>,
    pub history_hidden: Array2<T>,
}

impl<T: Scalar> CrbmParams<T> {
    pub fn zeros(visible_dim: usize, hidden_dim: usize, order: usize) -> Self {
        CrbmParams {
            rbm: RbmParams::zeros(visible_dim, hidden_dim),
            order,
            autoregressive: Array2::zeros((order * visible_dim, visible_dim)),
            history_hidden: Array2::zeros((order * visible_dim, hidden_dim)),
        }
    }
}

/// Models whose biases are shifted by a window of past visible frames.
pub trait HistoryLayer<T: Scalar> {
    fn rbm(&self) -> &RbmParams<T>;
    fn history_order(&self) -> usize;
    fn autoregressive(&self) -> ArrayView2<'_, T>;
    fn history_hidden(&self) -> ArrayView2<'_, T>;

    /// Column u_{., k} of the label weights, for models that have labels.
    fn label_hidden(&self, _k: usize) -> Option<ArrayView1<'_, T>> {
        None
    }
}

impl<T: Scalar> HistoryLayer<T> for CrbmParams<T> {
    fn rbm(&self) -> &RbmParams<T> {
        &self.rbm
    }
    fn history_order(&self) -> usize {
        self.order
    }
    fn autoregressive(&self) -> ArrayView2<'_, T> {
        self.autoregressive.view()
    }
    fn history_hidden(&self) -> ArrayView2<'_, T> {
        self.history_hidden.view()
    }
}

/// Dynamic biases c = a + v_<t·A and d = b + v_<t·B (+ u_{., k} when a
/// label is given).
pub fn dynamic_biases<T: Scalar, M: HistoryLayer<T>>(
    p: &M,
    hist: &HistoryWindow<T>,
    label: Option<usize>,
) -> Result<(Array1<T>, Array1<T>)> {
    let r = p.rbm();
    hist.expect_order(p.history_order(), r.visible_dim())?;
    let flat = hist.flat();
    let c = &r.visible_bias + &flat.dot(&p.autoregressive());
    let mut d = &r.hidden_bias + &flat.dot(&p.history_hidden());
    if let Some(k) = label {
        let u = p
            .label_hidden(k)
            .ok_or_else(|| Error::Unsupported(format!("label {k} given to a model without that label")))?;
        d += &u;
    }
    Ok((c, d))
}

/// Returns (p(h_j = 1 | v_t, v_<t), E[v_t | h_t, v_<t]).
pub fn crbm_conditionals<T: Scalar, M: HistoryLayer<T>>(
    v_t: ArrayView1<T>,
    h_t: ArrayView1<T>,
    hist: &HistoryWindow<T>,
    p: &M,
) -> Result<(Array1<T>, Array1<T>)> {
    let r = p.rbm();
    r.check_visible(&v_t)?;
    r.check_hidden(&h_t)?;
    check_binary(h_t.iter().copied())?;
    let (c, d) = dynamic_biases(p, hist, None)?;
    let h_probs = (d + v_t.dot(&r.weights)).mapv(sigmoid);
    let v_means = c + r.weights.dot(&h_t);
    Ok((h_probs, v_means))
}

/// E = Σ(c_i − v_i)²/2 − d·h − vᵀWh.
pub fn crbm_energy<T: Scalar, M: HistoryLayer<T>>(
    v_t: ArrayView1<T>,
    h_t: ArrayView1<T>,
    hist: &HistoryWindow<T>,
    p: &M,
) -> Result<T> {
    let r = p.rbm();
    r.check_visible(&v_t)?;
    r.check_hidden(&h_t)?;
    check_binary(h_t.iter().copied())?;
    let (c, d) = dynamic_biases(p, hist, None)?;
    Ok(visible_term(v_t, c.view(), VisibleUnit::Gaussian) - d.dot(&h_t) - v_t.dot(&r.weights.dot(&h_t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{rbm_h_given_v, rbm_v_given_h};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn zero_history_gives_static_biases() {
        let mut p = CrbmParams::<f64>::zeros(2, 3, 4);
        p.rbm.visible_bias = array![1.0, 2.0];
        p.rbm.hidden_bias = array![-1.0, 0.0, 1.0];
        p.autoregressive.fill(0.7);
        p.history_hidden.fill(-0.3);
        let (c, d) = dynamic_biases(&p, &HistoryWindow::zeros(4, 2), None).unwrap();
        assert_eq!(c, p.rbm.visible_bias);
        assert_eq!(d, p.rbm.hidden_bias);
    }

    #[test]
    fn scalar_autoregressive_bias() {
        let mut p = CrbmParams::<f64>::zeros(1, 1, 1);
        p.rbm.visible_bias = array![1.0];
        p.autoregressive = array![[2.0]];
        let (c, _) = dynamic_biases(&p, &HistoryWindow::from_frames(array![[3.0]].view()), None).unwrap();
        assert_eq!(c, array![7.0]);
    }

    #[test]
    fn bilinear_in_weights_and_history() {
        let mut p = CrbmParams::<f64>::zeros(2, 2, 2);
        p.autoregressive = array![[0.1, 0.2], [0.3, -0.4], [0.5, 0.6], [-0.7, 0.8]];
        let hist = HistoryWindow::from_frames(array![[1.0, -2.0], [0.5, 3.0]].view());
        let (c1, _) = dynamic_biases(&p, &hist, None).unwrap();
        p.autoregressive.mapv_inplace(|x| 2.0 * x);
        let half = HistoryWindow::from_frames((hist.to_frames() * 0.5).view());
        let (c2, _) = dynamic_biases(&p, &half, None).unwrap();
        for (a, b) in c1.iter().zip(&c2) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn wrong_history_length_is_rejected() {
        let p = CrbmParams::<f64>::zeros(2, 2, 3);
        assert!(dynamic_biases(&p, &HistoryWindow::zeros(2, 2), None).is_err());
        assert!(dynamic_biases(&p, &HistoryWindow::zeros(3, 2), Some(0)).is_err());
    }

    #[test]
    fn reduces_to_rbm_with_zero_history() {
        let mut p = CrbmParams::<f64>::zeros(3, 2, 2);
        p.rbm.visible_bias = array![0.1, 0.2, 0.3];
        p.rbm.hidden_bias = array![-0.5, 0.4];
        p.rbm.weights = array![[1.0, -1.0], [0.5, 0.25], [-0.75, 2.0]];
        p.history_hidden.fill(3.0);
        p.autoregressive.fill(-2.0);
        let v = array![0.3, -0.6, 1.2];
        let h = array![0.0, 1.0];
        let (hp, vm) = crbm_conditionals(v.view(), h.view(), &HistoryWindow::zeros(2, 3), &p).unwrap();
        assert_eq!(hp, rbm_h_given_v(v.view(), &p.rbm).unwrap());
        assert_eq!(&vm, rbm_v_given_h(h.view(), &p.rbm, VisibleUnit::Gaussian).unwrap().mean());
    }

    #[test]
    fn scalar_history_drives_hidden() {
        let mut p = CrbmParams::<f64>::zeros(1, 1, 1);
        p.rbm.hidden_bias = array![0.4];
        p.history_hidden = array![[1.0]];
        let hist = HistoryWindow::from_frames(array![[3.0_f64.ln() - 0.4]].view());
        let (hp, _) = crbm_conditionals(array![0.0].view(), array![0.0].view(), &hist, &p).unwrap();
        assert_abs_diff_eq!(hp[0], 0.75, epsilon = 1e-15);
    }
}
