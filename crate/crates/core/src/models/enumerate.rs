//! Brute-force oracle: evaluates the DCRBM energy on every (label, hidden)
//! pair for a fixed visible frame and history.

use ndarray::{Array1, Array2};

use super::{dcrbm_energy, one_hot, DcrbmParams, HistoryWindow, LabelDist};
use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};

pub const MAX_ENUM_HIDDEN: usize = 12;

/// Unnormalized log-weights −E(k, h) for every label k (rows) and hidden
/// configuration h (columns; bit j of the column index is h_j).
#[derive(Debug, Clone)]
pub struct JointTable<T> {
    pub log_weights: Array2<T>,
    pub hidden_dim: usize,
}

impl<T: Scalar> JointTable<T> {
    pub fn hidden_config(&self, index: usize) -> Array1<T> {
        hidden_config(index, self.hidden_dim)
    }

    pub fn weights(&self) -> Array2<T> {
        self.log_weights.mapv(T::exp)
    }

    fn log_total(&self) -> T {
        log_sum_exp(self.log_weights.as_slice().expect("contiguous"))
    }

    /// p(k, h | v_t, v_<t) over the whole table.
    pub fn joint_probs(&self) -> Array2<T> {
        let z = self.log_total();
        self.log_weights.mapv(|l| (l - z).exp())
    }

    /// Σ_h p(k, h | v_t, v_<t).
    pub fn label_marginal(&self) -> LabelDist<T> {
        let per_label: Vec<T> = self
            .log_weights
            .rows()
            .into_iter()
            .map(|r| log_sum_exp(r.as_slice().expect("contiguous")))
            .collect();
        LabelDist::from_log_weights(&per_label)
    }

    /// p(h_j = 1 | k, v_t, v_<t) for each hidden unit j.
    pub fn hidden_marginal(&self, label: usize) -> Array1<T> {
        let row = self.log_weights.row(label);
        let z = log_sum_exp(row.as_slice().expect("contiguous"));
        let mut out = Array1::zeros(self.hidden_dim);
        for (m, &lw) in row.iter().enumerate() {
            let p = (lw - z).exp();
            for j in 0..self.hidden_dim {
                if (m >> j) & 1 == 1 {
                    out[j] += p;
                }
            }
        }
        out
    }
}

pub(crate) fn hidden_config<T: Scalar>(index: usize, dim: usize) -> Array1<T> {
    Array1::from_iter((0..dim).map(|j| if (index >> j) & 1 == 1 { T::one() } else { T::zero() }))
}

pub fn enumerate_joint<T: Scalar>(
    p: &DcrbmParams<T>,
    v_t: ndarray::ArrayView1<T>,
    hist: &HistoryWindow<T>,
) -> Result<JointTable<T>> {
    let dh = p.dims.hidden_dim;
    if dh > MAX_ENUM_HIDDEN {
        return Err(Error::TooLarge(format!("{dh} hidden units (limit {MAX_ENUM_HIDDEN})")));
    }
    if !p.dims.has_labels() {
        return Err(Error::MissingLabels("enumeration needs a label layer".into()));
    }
    let k = p.dims.label_count;
    let mut log_weights = Array2::zeros((k, 1 << dh));
    for kk in 0..k {
        let y = one_hot::<T>(kk, k);
        for m in 0..1usize << dh {
            let h = hidden_config::<T>(m, dh);
            log_weights[[kk, m]] = -dcrbm_energy(y.view(), v_t, h.view(), hist, p)?;
        }
    }
    Ok(JointTable {
        log_weights,
        hidden_dim: dh,
    })
}
