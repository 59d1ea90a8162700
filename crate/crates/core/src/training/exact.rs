//! Exhaustive-enumeration oracles for tiny binary RBMs.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::models::{rbm_energy, RbmParams, VisibleUnit};
use crate::scalar::{log_sum_exp, sigmoid, softplus, Scalar};

/// Upper bound on Dv + Dh for the enumeration oracles.
pub const MAX_ENUM_UNITS: usize = 20;

fn check_size<T: Scalar>(p: &RbmParams<T>) -> Result<()> {
    let units = p.visible_dim() + p.hidden_dim();
    if units > MAX_ENUM_UNITS {
        return Err(Error::TooLarge(format!(
            "enumeration needs Dv + Dh <= {MAX_ENUM_UNITS}, got {units}"
        )));
    }
    Ok(())
}

fn check_data<T: Scalar>(p: &RbmParams<T>, data: ArrayView2<T>) -> Result<()> {
    if data.nrows() == 0 {
        return Err(Error::Empty("exact likelihood needs at least one pattern".into()));
    }
    if data.ncols() != p.visible_dim() {
        return Err(Error::shape("pattern width", p.visible_dim(), data.ncols()));
    }
    if let Some(&bad) = data.iter().find(|&&x| x != T::zero() && x != T::one()) {
        return Err(Error::NonBinary(bad.as_f64()));
    }
    Ok(())
}

pub(crate) fn bits<T: Scalar>(index: usize, len: usize) -> Array1<T> {
    Array1::from_shape_fn(len, |j| if index >> j & 1 == 1 { T::one() } else { T::zero() })
}

fn neg_free_energy<T: Scalar>(p: &RbmParams<T>, v: ArrayView1<T>) -> T {
    p.visible_bias.dot(&v) + (v.dot(&p.weights) + &p.hidden_bias).mapv(softplus).sum()
}

/// −E(v, h) for every visible (rows) and hidden (columns) configuration.
pub fn joint_log_weights<T: Scalar>(p: &RbmParams<T>) -> Result<Array2<T>> {
    check_size(p)?;
    let (dv, dh) = (p.visible_dim(), p.hidden_dim());
    let mut table = Array2::zeros((1 << dv, 1 << dh));
    for vi in 0..1usize << dv {
        let v = bits::<T>(vi, dv);
        for hi in 0..1usize << dh {
            let h = bits::<T>(hi, dh);
            table[[vi, hi]] = -rbm_energy(v.view(), h.view(), p, VisibleUnit::Binary)?;
        }
    }
    Ok(table)
}

/// log Z by summing exp(−E) over every (v, h) pair.
pub fn log_partition<T: Scalar>(p: &RbmParams<T>) -> Result<T> {
    let table = joint_log_weights(p)?;
    Ok(log_sum_exp(table.as_slice().expect("contiguous")))
}

/// Average log p(v) over the rows of `data`.
pub fn exact_loglik<T: Scalar>(p: &RbmParams<T>, data: ArrayView2<T>) -> Result<T> {
    check_size(p)?;
    check_data(p, data)?;
    let log_z = log_partition(p)?;
    let total: T = data.axis_iter(Axis(0)).map(|v| neg_free_energy(p, v)).sum();
    Ok(total / T::of(data.nrows() as f64) - log_z)
}

/// ∂(average log p(v))/∂θ as ⟨·⟩_data − ⟨·⟩_model with the model expectation
/// enumerated over all visible configurations. Shaped like the parameters.
pub fn exact_gradient<T: Scalar>(p: &RbmParams<T>, data: ArrayView2<T>) -> Result<RbmParams<T>> {
    check_size(p)?;
    check_data(p, data)?;
    let (dv, dh) = (p.visible_dim(), p.hidden_dim());
    let expectations = |rows: &Array2<T>, weights: &Array1<T>| {
        let h = (rows.dot(&p.weights) + &p.hidden_bias).mapv_into(sigmoid);
        let wv = rows * &weights.view().insert_axis(Axis(1));
        let wh = &h * &weights.view().insert_axis(Axis(1));
        RbmParams {
            visible_bias: wv.sum_axis(Axis(0)),
            hidden_bias: wh.sum_axis(Axis(0)),
            weights: wv.t().dot(&h),
        }
    };
    let n = data.nrows();
    let pos = expectations(&data.to_owned(), &Array1::from_elem(n, T::one() / T::of(n as f64)));
    let all = Array2::from_shape_fn((1 << dv, dv), |(i, j)| bits::<T>(i, dv)[j]);
    let logits: Vec<T> = all.axis_iter(Axis(0)).map(|v| neg_free_energy(p, v)).collect();
    let log_z = log_sum_exp(&logits);
    let probs = Array1::from_iter(logits.iter().map(|&l| (l - log_z).exp()));
    let neg = expectations(&all, &probs);
    debug_assert_eq!(neg.hidden_bias.len(), dh);
    Ok(RbmParams {
        visible_bias: pos.visible_bias - neg.visible_bias,
        hidden_bias: pos.hidden_bias - neg.hidden_bias,
        weights: pos.weights - neg.weights,
    })
}

/// Max over parameters of |analytic − numeric| / max(1, |numeric|), where the
/// numeric gradient is a central difference of `exact_loglik` with step `eps`.
pub fn grad_check<T: Scalar>(p: &RbmParams<T>, data: ArrayView2<T>, eps: T) -> Result<f64> {
    let analytic = exact_gradient(p, data)?;
    let mut probe = p.clone();
    let mut worst = 0.0f64;
    let mut compare = |probe: &mut RbmParams<T>, select: &dyn Fn(&mut RbmParams<T>) -> &mut T, a: T| -> Result<()> {
        let orig = *select(probe);
        *select(probe) = orig + eps;
        let up = exact_loglik(probe, data)?;
        *select(probe) = orig - eps;
        let down = exact_loglik(probe, data)?;
        *select(probe) = orig;
        let numeric = ((up - down) / (eps + eps)).as_f64();
        worst = worst.max((a.as_f64() - numeric).abs() / numeric.abs().max(1.0));
        Ok(())
    };
    for i in 0..p.visible_dim() {
        compare(&mut probe, &|q| &mut q.visible_bias[i], analytic.visible_bias[i])?;
    }
    for j in 0..p.hidden_dim() {
        compare(&mut probe, &|q| &mut q.hidden_bias[j], analytic.hidden_bias[j])?;
    }
    for i in 0..p.visible_dim() {
        for j in 0..p.hidden_dim() {
            compare(&mut probe, &|q| &mut q.weights[[i, j]], analytic.weights[[i, j]])?;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    fn random_rbm(dv: usize, dh: usize, seed: u64) -> RbmParams<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = RbmParams::zeros(dv, dh);
        p.visible_bias.mapv_inplace(|_| crate::rng::normal::<f64, _>(&mut rng) * 0.5);
        p.hidden_bias.mapv_inplace(|_| crate::rng::normal::<f64, _>(&mut rng) * 0.5);
        p.weights.mapv_inplace(|_| crate::rng::normal::<f64, _>(&mut rng) * 0.5);
        p
    }

    #[test]
    fn uniform_model_gives_quarter() {
        let p = RbmParams::<f64>::zeros(2, 2);
        assert!((log_partition(&p).unwrap() - 16f64.ln()).abs() < 1e-12);
        for v in [array![[0.0, 0.0]], array![[1.0, 0.0]], array![[1.0, 1.0]]] {
            assert!((exact_loglik(&p, v.view()).unwrap() - 0.25f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn visible_probabilities_sum_to_one() {
        let p = random_rbm(4, 3, 9);
        let total: f64 = (0..16)
            .map(|i| exact_loglik(&p, bits::<f64>(i, 4).insert_axis(Axis(0)).view()).unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_energy_matches_joint_enumeration() {
        let p = random_rbm(3, 4, 1);
        let table = joint_log_weights(&p).unwrap();
        for vi in 0..8 {
            let row: Vec<f64> = table.row(vi).to_vec();
            let v = bits::<f64>(vi, 3);
            assert!((log_sum_exp(&row) - neg_free_energy(&p, v.view())).abs() < 1e-12);
        }
    }

    #[test]
    fn raising_visible_bias_raises_active_pattern() {
        let mut p = random_rbm(3, 2, 4);
        let v = array![[1.0, 0.0, 1.0]];
        let before = exact_loglik(&p, v.view()).unwrap();
        p.visible_bias[0] += 1e-3;
        assert!(exact_loglik(&p, v.view()).unwrap() > before);
    }

    #[test]
    fn grad_check_on_random_model() {
        let p = random_rbm(3, 2, 0);
        let data = array![[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 0.0]];
        assert!(grad_check(&p, data.view(), 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn symmetric_data_has_zero_bias_gradient() {
        let p = RbmParams::<f64>::zeros(3, 2);
        let data = array![[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let g = exact_gradient(&p, data.view()).unwrap();
        assert!(g.visible_bias.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn rejects_large_or_real_valued_input() {
        let big = RbmParams::<f64>::zeros(12, 9);
        assert!(matches!(log_partition(&big), Err(Error::TooLarge(_))));
        let p = RbmParams::<f64>::zeros(2, 2);
        assert!(matches!(exact_loglik(&p, array![[0.5, 1.0]].view()), Err(Error::NonBinary(_))));
    }
}
