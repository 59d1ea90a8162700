use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_binary, check_len, VisibleUnit};
use crate::error::Result;
use crate::rng;
use crate::scalar::{sigmoid, Scalar};

/// Bipartite RBM parameters {a, b, W}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmParams<T> {
    pub visible_bias: Array1<T>,
    pub hidden_bias: Array1<T>,
    /// Dv x Dh.
    pub weights: Array2<T>,
}

impl<T: Scalar> RbmParams<T> {
    pub fn zeros(visible_dim: usize, hidden_dim: usize) -> Self {
        RbmParams {
            visible_bias: Array1::zeros(visible_dim),
            hidden_bias: Array1::zeros(hidden_dim),
            weights: Array2::zeros((visible_dim, hidden_dim)),
        }
    }

    pub fn visible_dim(&self) -> usize {
        self.visible_bias.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_bias.len()
    }

    pub(crate) fn check_visible(&self, v: &ArrayView1<T>) -> Result<()> {
        check_len("visible frame", self.visible_dim(), v.len())
    }

    pub(crate) fn check_hidden(&self, h: &ArrayView1<T>) -> Result<()> {
        check_len("hidden configuration", self.hidden_dim(), h.len())
    }

    pub fn is_finite(&self) -> bool {
        self.visible_bias.iter().chain(&self.hidden_bias).chain(&self.weights).all(|x| x.is_finite())
    }
}

/// Conditional distribution of the visible layer given the hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub enum VisibleDist<T> {
    Bernoulli(Array1<T>),
    /// Unit-variance Gaussian with the given means.
    Gaussian(Array1<T>),
}

impl<T: Scalar> VisibleDist<T> {
    pub fn mean(&self) -> &Array1<T> {
        match self {
            VisibleDist::Bernoulli(p) | VisibleDist::Gaussian(p) => p,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Array1<T> {
        match self {
            VisibleDist::Bernoulli(p) => p.mapv(|p| rng::bernoulli(rng, p)),
            VisibleDist::Gaussian(m) => m.mapv(|m| m + rng::normal::<T, _>(rng)),
        }
    }
}

pub(crate) fn visible_term<T: Scalar>(v: ArrayView1<T>, bias: ArrayView1<T>, unit: VisibleUnit) -> T {
    match unit {
        VisibleUnit::Binary => -bias.dot(&v),
        VisibleUnit::Gaussian => {
            let half = T::of(0.5);
            bias.iter().zip(v.iter()).map(|(&a, &x)| (a - x) * (a - x) * half).sum()
        }
    }
}

/// E(v, h) = visible term − b·h − vᵀWh, where the visible term is −a·v for
/// binary units and Σ(a_i − v_i)²/2 for unit-variance Gaussian units.
pub fn rbm_energy<T: Scalar>(
    v: ArrayView1<T>,
    h: ArrayView1<T>,
    p: &RbmParams<T>,
    unit: VisibleUnit,
) -> Result<T> {
    p.check_visible(&v)?;
    p.check_hidden(&h)?;
    check_binary(h.iter().copied())?;
    if unit == VisibleUnit::Binary {
        check_binary(v.iter().copied())?;
    }
    Ok(visible_term(v, p.visible_bias.view(), unit) - p.hidden_bias.dot(&h) - v.dot(&p.weights.dot(&h)))
}

/// p(h_j = 1 | v) = σ(b_j + Σ_i v_i w_ij).
pub fn rbm_h_given_v<T: Scalar>(v: ArrayView1<T>, p: &RbmParams<T>) -> Result<Array1<T>> {
    p.check_visible(&v)?;
    Ok((v.dot(&p.weights) + &p.hidden_bias).mapv(sigmoid))
}

pub fn rbm_v_given_h<T: Scalar>(h: ArrayView1<T>, p: &RbmParams<T>, unit: VisibleUnit) -> Result<VisibleDist<T>> {
    p.check_hidden(&h)?;
    check_binary(h.iter().copied())?;
    let act = p.weights.dot(&h) + &p.visible_bias;
    Ok(match unit {
        VisibleUnit::Binary => VisibleDist::Bernoulli(act.mapv(sigmoid)),
        VisibleUnit::Gaussian => VisibleDist::Gaussian(act),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::SeedableRng;

    fn scalar_rbm(a: f64, b: f64, w: f64) -> RbmParams<f64> {
        RbmParams {
            visible_bias: array![a],
            hidden_bias: array![b],
            weights: array![[w]],
        }
    }

    #[test]
    fn energy_hand_values() {
        let z = RbmParams::<f64>::zeros(3, 2);
        for unit in [VisibleUnit::Binary, VisibleUnit::Gaussian] {
            assert_eq!(rbm_energy(Array1::zeros(3).view(), Array1::zeros(2).view(), &z, unit).unwrap(), 0.0);
        }
        let p = scalar_rbm(0.5, -1.0, 2.0);
        let e = rbm_energy(array![1.0].view(), array![1.0].view(), &p, VisibleUnit::Binary).unwrap();
        assert_abs_diff_eq!(e, -1.5, epsilon = 1e-15);
        let g = scalar_rbm(1.0, 0.0, 0.0);
        let e = rbm_energy(array![0.0].view(), array![0.0].view(), &g, VisibleUnit::Gaussian).unwrap();
        assert_abs_diff_eq!(e, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn energy_rejects_bad_inputs() {
        let p = RbmParams::<f64>::zeros(2, 2);
        assert!(rbm_energy(array![0.0].view(), array![0.0, 1.0].view(), &p, VisibleUnit::Gaussian).is_err());
        assert!(rbm_energy(array![0.0, 0.0].view(), array![0.5, 1.0].view(), &p, VisibleUnit::Gaussian).is_err());
        assert!(rbm_energy(array![0.3, 0.0].view(), array![0.0, 1.0].view(), &p, VisibleUnit::Binary).is_err());
    }

    #[test]
    fn conditionals_hand_values() {
        let z = RbmParams::<f64>::zeros(3, 4);
        assert!(rbm_h_given_v(array![1.0, -2.0, 0.3].view(), &z).unwrap().iter().all(|&p| p == 0.5));
        let p = scalar_rbm(0.0, 3.0_f64.ln(), 0.0);
        assert_abs_diff_eq!(rbm_h_given_v(array![5.0].view(), &p).unwrap()[0], 0.75, epsilon = 1e-15);

        let p = scalar_rbm(0.0, 0.0, 2.0);
        let d = rbm_v_given_h(array![1.0].view(), &p, VisibleUnit::Binary).unwrap();
        assert_abs_diff_eq!(d.mean()[0], 0.8807970779778823, epsilon = 1e-15);

        let mut g = RbmParams::<f64>::zeros(2, 3);
        g.visible_bias = array![0.7, -1.2];
        g.weights.fill(0.4);
        let d = rbm_v_given_h(Array1::zeros(3).view(), &g, VisibleUnit::Gaussian).unwrap();
        assert_eq!(d.mean(), &g.visible_bias);
    }

    #[test]
    fn gaussian_sampling_is_seeded() {
        let mut g = RbmParams::<f64>::zeros(4, 2);
        g.weights.fill(0.3);
        let d = rbm_v_given_h(array![1.0, 0.0].view(), &g, VisibleUnit::Gaussian).unwrap();
        let s1 = d.sample(&mut rand_chacha::ChaCha8Rng::seed_from_u64(9));
        let s2 = d.sample(&mut rand_chacha::ChaCha8Rng::seed_from_u64(9));
        assert_eq!(s1, s2);
    }
}
