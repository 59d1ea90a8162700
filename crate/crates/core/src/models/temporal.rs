use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rbm::visible_term;
use super::{
    check_binary, check_len, dynamic_biases, one_hot_index, CrbmParams, DrbmParams, HistoryLayer, HistoryWindow,
    LabelDist, LabelLayer, ModelDims, RbmParams, VisibleUnit,
};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{sigmoid, softplus, Scalar};

/// Full parameter set {a, b, s, A, B, W, U}. Sub-models are represented by
/// empty tensors: `label_count == 0` drops (s, U), `history_order == 0`
/// drops (A, B).
///
/// The label weight u_{j,k} enters the energy exactly once, through the
/// dynamic hidden bias d_{j,k} = b_j + u_{j,k} + Σ_m B_{m,j} v_{m,<t}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcrbmParams<T> {
    pub dims: ModelDims,
    pub rbm: RbmParams<T>,
    pub label_bias: Array1<T>,
    /// Dh x K.
    pub label_weights: Array2<T>,
    /// (n*Dv) x Dv.
    pub autoregressive: Array2<T>,
    /// (n*Dv) x Dh.
    pub history_hidden: Array2<T>,
}

impl<T: Scalar> DcrbmParams<T> {
    pub fn zeros(dims: ModelDims) -> Self {
        let (dv, dh, k, nh) = (dims.visible_dim, dims.hidden_dim, dims.label_count, dims.history_len());
        DcrbmParams {
            dims,
            rbm: RbmParams::zeros(dv, dh),
            label_bias: Array1::zeros(k),
            label_weights: Array2::zeros((dh, k)),
            autoregressive: Array2::zeros((nh, dv)),
            history_hidden: Array2::zeros((nh, dh)),
        }
    }

    /// Weight matrices ~ N(0, std²), biases zero.
    pub fn init<R: Rng + ?Sized>(dims: ModelDims, std: f64, rng: &mut R) -> Result<Self> {
        dims.validate()?;
        let mut p = Self::zeros(dims);
        let std = T::of(std);
        for m in [&mut p.rbm.weights, &mut p.label_weights, &mut p.autoregressive, &mut p.history_hidden] {
            m.mapv_inplace(|_| std * rng::normal::<T, _>(rng));
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dims;
        d.validate()?;
        let (dv, dh, k, nh) = (d.visible_dim, d.hidden_dim, d.label_count, d.history_len());
        check_len("visible bias", dv, self.rbm.visible_bias.len())?;
        check_len("hidden bias", dh, self.rbm.hidden_bias.len())?;
        check_len("label bias", k, self.label_bias.len())?;
        let shapes = [
            ("weights", self.rbm.weights.dim(), (dv, dh)),
            ("label weights", self.label_weights.dim(), (dh, k)),
            ("autoregressive weights", self.autoregressive.dim(), (nh, dv)),
            ("history-hidden weights", self.history_hidden.dim(), (nh, dh)),
        ];
        for (what, got, want) in shapes {
            if got != want {
                return Err(Error::shape(what, format!("{want:?}"), format!("{got:?}")));
            }
        }
        if !self.is_finite() {
            return Err(Error::Dims("parameters contain non-finite values".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.rbm.is_finite()
            && self
                .label_bias
                .iter()
                .chain(&self.label_weights)
                .chain(&self.autoregressive)
                .chain(&self.history_hidden)
                .all(|x| x.is_finite())
    }

    /// Dynamic biases for a batch of flattened histories (rows):
    /// C = 1aᵀ + H·A and D = 1bᵀ + H·B (label column not included).
    pub fn history_terms(&self, hist: ArrayView2<T>) -> (Array2<T>, Array2<T>) {
        let mut c = hist.dot(&self.autoregressive);
        c += &self.rbm.visible_bias;
        let mut d = hist.dot(&self.history_hidden);
        d += &self.rbm.hidden_bias;
        (c, d)
    }

    /// Unnormalized log posterior weights, one row per sample:
    /// log w_k = s_k + Σ_j softplus(d_j + u_jk + Σ_i v_i w_ij).
    pub fn log_posterior_weights(&self, v: ArrayView2<T>, d_base: ArrayView2<T>) -> Array2<T> {
        let k = self.dims.label_count;
        let pre = v.dot(&self.rbm.weights) + d_base;
        let mut out = Array2::zeros((v.nrows(), k));
        for (mut row, pre) in out.axis_iter_mut(Axis(0)).zip(pre.axis_iter(Axis(0))) {
            for (kk, o) in row.iter_mut().enumerate() {
                let u = self.label_weights.column(kk);
                *o = self.label_bias[kk] + pre.iter().zip(u.iter()).map(|(&x, &u)| softplus(x + u)).sum::<T>();
            }
        }
        out
    }

    /// Normalized label posteriors for a batch of windows (rows).
    pub fn posterior_batch(&self, v: ArrayView2<T>, hist: ArrayView2<T>) -> Result<Array2<T>> {
        self.require_labels()?;
        check_len("batch visible width", self.dims.visible_dim, v.ncols())?;
        check_len("batch history width", self.dims.history_len(), hist.ncols())?;
        let (_, d) = self.history_terms(hist);
        let mut logw = self.log_posterior_weights(v, d.view());
        for mut row in logw.axis_iter_mut(Axis(0)) {
            let dist = LabelDist::from_log_weights(&row.to_vec());
            row.assign(&dist.probs);
        }
        Ok(logw)
    }

    fn require_labels(&self) -> Result<()> {
        if !self.dims.has_labels() {
            return Err(Error::MissingLabels("model has no label layer".into()));
        }
        Ok(())
    }

    fn check_label(&self, k: usize) -> Result<()> {
        self.require_labels()?;
        if k >= self.dims.label_count {
            return Err(Error::shape("label index bound", self.dims.label_count, k));
        }
        Ok(())
    }

    pub fn drbm(&self) -> Result<DrbmParams<T>> {
        if self.dims.history_order != 0 {
            return Err(Error::Unsupported("model conditions on history".into()));
        }
        self.require_labels()?;
        Ok(DrbmParams {
            rbm: self.rbm.clone(),
            label_bias: self.label_bias.clone(),
            label_weights: self.label_weights.clone(),
        })
    }

    pub fn crbm(&self) -> Result<CrbmParams<T>> {
        if self.dims.has_labels() {
            return Err(Error::Unsupported("model has a label layer".into()));
        }
        Ok(CrbmParams {
            rbm: self.rbm.clone(),
            order: self.dims.history_order,
            autoregressive: self.autoregressive.clone(),
            history_hidden: self.history_hidden.clone(),
        })
    }
}

impl<T: Scalar> RbmParams<T> {
    pub fn into_general(self, unit: VisibleUnit) -> DcrbmParams<T> {
        let dims = ModelDims::rbm(self.visible_dim(), self.hidden_dim(), unit);
        DcrbmParams { rbm: self, ..DcrbmParams::zeros(dims) }
    }
}

impl<T: Scalar> From<DrbmParams<T>> for DcrbmParams<T> {
    fn from(p: DrbmParams<T>) -> Self {
        let dims = ModelDims::dcrbm(p.rbm.visible_dim(), p.rbm.hidden_dim(), p.label_bias.len(), 0);
        DcrbmParams {
            rbm: p.rbm,
            label_bias: p.label_bias,
            label_weights: p.label_weights,
            ..DcrbmParams::zeros(dims)
        }
    }
}

impl<T: Scalar> From<CrbmParams<T>> for DcrbmParams<T> {
    fn from(p: CrbmParams<T>) -> Self {
        let dims = ModelDims::dcrbm(p.rbm.visible_dim(), p.rbm.hidden_dim(), 0, p.order);
        DcrbmParams {
            rbm: p.rbm,
            autoregressive: p.autoregressive,
            history_hidden: p.history_hidden,
            ..DcrbmParams::zeros(dims)
        }
    }
}

impl<T: Scalar> LabelLayer<T> for DcrbmParams<T> {
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

impl<T: Scalar> HistoryLayer<T> for DcrbmParams<T> {
    fn rbm(&self) -> &RbmParams<T> {
        &self.rbm
    }
    fn history_order(&self) -> usize {
        self.dims.history_order
    }
    fn autoregressive(&self) -> ArrayView2<'_, T> {
        self.autoregressive.view()
    }
    fn history_hidden(&self) -> ArrayView2<'_, T> {
        self.history_hidden.view()
    }
    fn label_hidden(&self, k: usize) -> Option<ArrayView1<'_, T>> {
        (k < self.dims.label_count).then(|| self.label_weights.column(k))
    }
}

/// E = Σ(c_i − v_i)²/2 − Σ_j d_{j,k} h_j − s_k − vᵀWh for the label k
/// selected by the one-hot `y`.
pub fn dcrbm_energy<T: Scalar>(
    y: ArrayView1<T>,
    v_t: ArrayView1<T>,
    h_t: ArrayView1<T>,
    hist: &HistoryWindow<T>,
    p: &DcrbmParams<T>,
) -> Result<T> {
    p.require_labels()?;
    let k = one_hot_index(y, p.dims.label_count)?;
    p.rbm.check_visible(&v_t)?;
    p.rbm.check_hidden(&h_t)?;
    check_binary(h_t.iter().copied())?;
    let (c, d) = dynamic_biases(p, hist, Some(k))?;
    Ok(visible_term(v_t, c.view(), VisibleUnit::Gaussian)
        - d.dot(&h_t)
        - p.label_bias[k]
        - v_t.dot(&p.rbm.weights.dot(&h_t)))
}

/// p(h_j = 1 | y = k, v_t, v_<t) = σ(d_{j,k} + Σ_i v_i w_ij).
pub fn dcrbm_h_given_vy<T: Scalar>(
    v_t: ArrayView1<T>,
    label: usize,
    hist: &HistoryWindow<T>,
    p: &DcrbmParams<T>,
) -> Result<Array1<T>> {
    p.check_label(label)?;
    p.rbm.check_visible(&v_t)?;
    let (_, d) = dynamic_biases(p, hist, Some(label))?;
    Ok((d + v_t.dot(&p.rbm.weights)).mapv(sigmoid))
}

/// Exact label posterior p(y = k | v_t, v_<t) ∝ exp(s_k) Π_j (1 + exp(d_{j,k} + Σ_i v_i w_ij)),
/// evaluated in log space.
pub fn dcrbm_posterior<T: Scalar>(v_t: ArrayView1<T>, hist: &HistoryWindow<T>, p: &DcrbmParams<T>) -> Result<LabelDist<T>> {
    p.require_labels()?;
    p.rbm.check_visible(&v_t)?;
    let (_, d) = dynamic_biases(p, hist, None)?;
    let v2 = v_t.insert_axis(Axis(0));
    let d2 = d.view().insert_axis(Axis(0));
    let logw = p.log_posterior_weights(v2, d2);
    Ok(LabelDist::from_log_weights(logw.row(0).as_slice().expect("contiguous")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{drbm_energy, one_hot};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::SeedableRng;

    fn random_model(dims: ModelDims, seed: u64) -> DcrbmParams<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = DcrbmParams::init(dims, 0.8, &mut rng).unwrap();
        p.rbm.visible_bias.mapv_inplace(|_| rng::normal(&mut rng));
        p.rbm.hidden_bias.mapv_inplace(|_| rng::normal(&mut rng));
        p.label_bias.mapv_inplace(|_| rng::normal(&mut rng));
        p
    }

    #[test]
    fn zero_model_energy_and_conditionals() {
        let p = DcrbmParams::<f64>::zeros(ModelDims::dcrbm(2, 3, 2, 1));
        let hist = HistoryWindow::zeros(1, 2);
        let y = one_hot::<f64>(1, 2);
        let e = dcrbm_energy(y.view(), array![0.0, 0.0].view(), array![0.0, 0.0, 0.0].view(), &hist, &p).unwrap();
        assert_eq!(e, 0.0);
        let hp = dcrbm_h_given_vy(array![0.4, -1.0].view(), 0, &hist, &p).unwrap();
        assert!(hp.iter().all(|&x| x == 0.5));
    }

    #[test]
    fn label_weight_shifts_one_hidden_unit() {
        let mut p = DcrbmParams::<f64>::zeros(ModelDims::dcrbm(2, 2, 3, 0));
        p.label_weights[[0, 2]] = 3.0_f64.ln();
        let hp = dcrbm_h_given_vy(array![0.0, 0.0].view(), 2, &HistoryWindow::empty(2), &p).unwrap();
        assert_abs_diff_eq!(hp[0], 0.75, epsilon = 1e-15);
        assert_eq!(hp[1], 0.5);
    }

    #[test]
    fn reduces_to_drbm_without_history_weights() {
        let mut p = random_model(ModelDims::dcrbm(3, 2, 3, 2), 4);
        p.autoregressive.fill(0.0);
        p.history_hidden.fill(0.0);
        let hist = HistoryWindow::from_frames(array![[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]].view());
        let drbm = DrbmParams {
            rbm: p.rbm.clone(),
            label_bias: p.label_bias.clone(),
            label_weights: p.label_weights.clone(),
        };
        let v = array![0.2, -0.4, 1.0];
        let h = array![1.0, 0.0];
        for k in 0..3 {
            let y = one_hot::<f64>(k, 3);
            let a = dcrbm_energy(y.view(), v.view(), h.view(), &hist, &p).unwrap();
            let b = drbm_energy(y.view(), v.view(), h.view(), &drbm).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn decoupled_labels_give_prior_posterior() {
        let mut p = random_model(ModelDims::dcrbm(3, 4, 3, 1), 8);
        p.label_weights.fill(0.0);
        let hist = HistoryWindow::from_frames(array![[0.3, 0.1, -0.9]].view());
        let post = dcrbm_posterior(array![5.0, -2.0, 0.1].view(), &hist, &p).unwrap();
        let prior = LabelDist::from_log_weights(p.label_bias.as_slice().unwrap());
        for (a, b) in post.probs.iter().zip(&prior.probs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn posterior_requires_labels() {
        let p = DcrbmParams::<f64>::zeros(ModelDims::dcrbm(2, 2, 0, 1));
        assert!(dcrbm_posterior(array![0.0, 0.0].view(), &HistoryWindow::zeros(1, 2), &p).is_err());
    }

    #[test]
    fn sub_model_conversions_round_trip() {
        let p = random_model(ModelDims::dcrbm(3, 2, 0, 2), 1);
        let crbm = p.crbm().unwrap();
        assert_eq!(DcrbmParams::from(crbm), p);
        let q = random_model(ModelDims::dcrbm(3, 2, 2, 0), 2);
        assert_eq!(DcrbmParams::from(q.drbm().unwrap()), q);
        assert!(q.crbm().is_err());
    }

    #[test]
    fn validate_catches_shape_errors() {
        let mut p = DcrbmParams::<f64>::zeros(ModelDims::dcrbm(3, 2, 2, 2));
        assert!(p.validate().is_ok());
        p.autoregressive = Array2::zeros((5, 3));
        assert!(p.validate().is_err());
    }
}
