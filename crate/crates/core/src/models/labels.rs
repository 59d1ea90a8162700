use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Scalar};

/// Probability distribution over the K class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDist<T> {
    pub probs: Array1<T>,
}

impl<T: Scalar> LabelDist<T> {
    /// Softmax of unnormalized log-weights, normalized through log-sum-exp.
    pub fn from_log_weights(logits: &[T]) -> Self {
        let z = log_sum_exp(logits);
        LabelDist {
            probs: logits.iter().map(|&l| (l - z).exp()).collect(),
        }
    }

    pub fn uniform(k: usize) -> Self {
        LabelDist {
            probs: Array1::from_elem(k, T::one() / T::of(k as f64)),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the most probable label; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = k;
            }
        }
        best
    }
}

pub fn one_hot<T: Scalar>(k: usize, len: usize) -> Array1<T> {
    let mut y = Array1::zeros(len);
    y[k] = T::one();
    y
}

/// Validates a one-hot vector of length `len` and returns the hot index.
pub fn one_hot_index<T: Scalar>(y: ArrayView1<T>, len: usize) -> Result<usize> {
    if y.len() != len {
        return Err(Error::NotOneHot(format!("length {} (expected {len})", y.len())));
    }
    let mut hot = None;
    for (k, &x) in y.iter().enumerate() {
        if x == T::one() {
            if hot.is_some() {
                return Err(Error::NotOneHot("more than one active entry".into()));
            }
            hot = Some(k);
        } else if x != T::zero() {
            return Err(Error::NotOneHot(format!("entry {k} is {x}")));
        }
    }
    hot.ok_or_else(|| Error::NotOneHot("no active entry".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn one_hot_validation() {
        assert_eq!(one_hot_index(array![0.0, 1.0, 0.0].view(), 3).unwrap(), 1);
        assert!(one_hot_index(array![1.0, 1.0].view(), 2).is_err());
        assert!(one_hot_index(array![0.0, 0.0].view(), 2).is_err());
        assert!(one_hot_index(array![0.5, 0.5].view(), 2).is_err());
        assert!(one_hot_index(array![1.0].view(), 2).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_on_tie() {
        let d = LabelDist::<f64>::uniform(3);
        assert_eq!(d.argmax(), 0);
    }
}
