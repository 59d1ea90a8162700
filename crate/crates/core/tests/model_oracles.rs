//! Closed-form conditionals and posteriors checked against brute-force
//! enumeration of the Gibbs distribution defined by each energy function.

use dcrbm::models::*;
use dcrbm::rng;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bits(index: usize, len: usize) -> Array1<f64> {
    (0..len).map(|j| ((index >> j) & 1) as f64).collect()
}

fn random_dcrbm(dims: ModelDims, rng: &mut ChaCha8Rng) -> DcrbmParams<f64> {
    let mut p = DcrbmParams::init(dims, 0.7, rng).unwrap();
    p.rbm.visible_bias.mapv_inplace(|_| rng::normal(rng));
    p.rbm.hidden_bias.mapv_inplace(|_| rng::normal(rng));
    p.label_bias.mapv_inplace(|_| rng::normal(rng));
    p
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
    (0..n).map(|_| rng::normal::<f64, _>(rng)).collect()
}

fn random_history(order: usize, dim: usize, rng: &mut ChaCha8Rng) -> HistoryWindow<f64> {
    HistoryWindow::from_frames(Array2::from_shape_fn((order, dim), |_| rng::normal(rng)).view())
}

#[test]
fn rbm_hidden_conditional_matches_joint_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (dv, dh) = (3, 2);
    let p = RbmParams {
        visible_bias: random_vec(dv, &mut rng),
        hidden_bias: random_vec(dh, &mut rng),
        weights: Array2::from_shape_fn((dv, dh), |_| rng::normal(&mut rng)),
    };
    // p(h | v) from the full joint table p(v, h) ∝ exp(−E).
    let mut joint = Array2::<f64>::zeros((1 << dv, 1 << dh));
    for iv in 0..1 << dv {
        for ih in 0..1 << dh {
            joint[[iv, ih]] = (-rbm_energy(bits(iv, dv).view(), bits(ih, dh).view(), &p, VisibleUnit::Binary).unwrap()).exp();
        }
    }
    for iv in 0..1 << dv {
        let v = bits(iv, dv);
        let row = joint.row(iv);
        let closed = rbm_h_given_v(v.view(), &p).unwrap();
        for j in 0..dh {
            let on: f64 = (0..1 << dh).filter(|ih| (ih >> j) & 1 == 1).map(|ih| row[ih]).sum();
            assert!((on / row.sum() - closed[j]).abs() < 1e-12);
        }
        // p(v_i = 1 | h) by enumeration over v for fixed h.
        for ih in 0..1 << dh {
            let h = bits(ih, dh);
            let col = joint.column(ih);
            let closed = rbm_v_given_h(h.view(), &p, VisibleUnit::Binary).unwrap();
            for i in 0..dv {
                let on: f64 = (0..1 << dv).filter(|x| (x >> i) & 1 == 1).map(|x| col[x]).sum();
                assert!((on / col.sum() - closed.mean()[i]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn crbm_hidden_conditional_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (dv, dh, n) = (2, 3, 2);
    let general = random_dcrbm(ModelDims::dcrbm(dv, dh, 0, n), &mut rng);
    let p = general.crbm().unwrap();
    for _ in 0..10 {
        let v = random_vec(dv, &mut rng);
        let hist = random_history(n, dv, &mut rng);
        let weights: Vec<f64> = (0..1 << dh)
            .map(|ih| (-crbm_energy(v.view(), bits(ih, dh).view(), &hist, &p).unwrap()).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        let (closed, _) = crbm_conditionals(v.view(), bits(0, dh).view(), &hist, &p).unwrap();
        for j in 0..dh {
            let on: f64 = (0..1 << dh).filter(|ih| (ih >> j) & 1 == 1).map(|ih| weights[ih]).sum();
            assert!((on / z - closed[j]).abs() < 1e-12);
        }
    }
}

#[test]
fn posterior_matches_enumeration_on_100_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    for trial in 0..100 {
        let k = 2 + trial % 2;
        let n = if trial % 4 < 2 { 0 } else { 2 };
        let dh = rng.gen_range(1..=10);
        let dv = rng.gen_range(1..=4);
        let p = random_dcrbm(ModelDims::dcrbm(dv, dh, k, n), &mut rng);
        let v = random_vec(dv, &mut rng);
        let hist = random_history(n, dv, &mut rng);
        let closed = dcrbm_posterior(v.view(), &hist, &p).unwrap();
        let table = enumerate_joint(&p, v.view(), &hist).unwrap();
        let oracle = table.label_marginal();
        for (a, b) in closed.probs.iter().zip(&oracle.probs) {
            worst = worst.max((a - b).abs());
        }
        assert!((closed.probs.sum() - 1.0).abs() < 1e-12);
        for label in 0..k {
            let hp = dcrbm_h_given_vy(v.view(), label, &hist, &p).unwrap();
            let oracle = table.hidden_marginal(label);
            for (a, b) in hp.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "hidden marginal {a} vs {b}");
            }
        }
    }
    assert!(worst < 1e-9, "max posterior deviation {worst}");
}

/// Integrating the unit-variance Gaussian visible layer analytically for
/// each (k, h): ∫ exp(−(c_i − v_i)²/2 + v_i x_i) dv_i = √(2π) exp(c_i x_i + x_i²/2)
/// with x = W h. The same quantity is also computed by 2-D trapezoidal
/// quadrature of exp(−E) to confirm the energy is a proper density.
#[test]
fn dcrbm_partition_function_normalizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (dv, dh, k, n) = (2, 3, 2, 1);
    let mut p = random_dcrbm(ModelDims::dcrbm(dv, dh, k, n), &mut rng);
    p.rbm.weights.mapv_inplace(|w| 0.5 * w);
    let hist = random_history(n, dv, &mut rng);
    let (c, _) = dynamic_biases(&p, &hist, None).unwrap();

    let mut log_terms = Vec::new();
    let mut per_config = Vec::new();
    for label in 0..k {
        let (_, d) = dynamic_biases(&p, &hist, Some(label)).unwrap();
        for ih in 0..1 << dh {
            let h = bits(ih, dh);
            let x = p.rbm.weights.dot(&h);
            let gauss: f64 = c.iter().zip(&x).map(|(&ci, &xi)| ci * xi + 0.5 * xi * xi).sum();
            let lt = p.label_bias[label] + d.dot(&h) + gauss + dv as f64 * 0.5 * std::f64::consts::TAU.ln();
            log_terms.push(lt);
            per_config.push((label, h));
        }
    }
    let log_z = dcrbm::scalar::log_sum_exp(&log_terms);

    // Quadrature over a box wide enough for every component mean.
    let (lo, hi, m) = (-14.0, 14.0, 561);
    let step = (hi - lo) / (m - 1) as f64;
    let mut total = 0.0;
    for (label, h) in &per_config {
        let y = one_hot::<f64>(*label, k);
        let mut acc = 0.0;
        for a in 0..m {
            for b in 0..m {
                let v = Array1::from(vec![lo + a as f64 * step, lo + b as f64 * step]);
                let wa = if a == 0 || a == m - 1 { 0.5 } else { 1.0 };
                let wb = if b == 0 || b == m - 1 { 0.5 } else { 1.0 };
                let e = dcrbm_energy(y.view(), v.view(), h.view(), &hist, &p).unwrap();
                acc += wa * wb * (-e - log_z).exp();
            }
        }
        total += acc * step * step;
    }
    assert!((total - 1.0).abs() < 1e-8, "∫Σ exp(−E)/Z = {total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_is_a_distribution(seed in any::<u64>(), dh in 1usize..8, k in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_dcrbm(ModelDims::dcrbm(3, dh, k, 2), &mut rng);
        let v = random_vec(3, &mut rng) * 10.0;
        let hist = random_history(2, 3, &mut rng);
        let post = dcrbm_posterior(v.view(), &hist, &p).unwrap();
        prop_assert!((post.probs.sum() - 1.0).abs() < 1e-12);
        prop_assert!(post.probs.iter().all(|&q| (0.0..=1.0).contains(&q)));
        let hp = dcrbm_h_given_vy(v.view(), 0, &hist, &p).unwrap();
        prop_assert!(hp.iter().all(|&q| (0.0..=1.0).contains(&q)));
    }

    #[test]
    fn argmax_is_invariant_to_weight_scaling(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_dcrbm(ModelDims::dcrbm(2, 4, 3, 1), &mut rng);
        let v = random_vec(2, &mut rng);
        let hist = random_history(1, 2, &mut rng);
        let table = enumerate_joint(&p, v.view(), &hist).unwrap();
        let per_label: Vec<f64> = table.log_weights.rows().into_iter()
            .map(|r| dcrbm::scalar::log_sum_exp(r.as_slice().unwrap())).collect();
        let scaled: Vec<f64> = per_label.iter().map(|l| l + shift).collect();
        prop_assert_eq!(LabelDist::from_log_weights(&per_label).argmax(), LabelDist::from_log_weights(&scaled).argmax());
        prop_assert_eq!(dcrbm_posterior(v.view(), &hist, &p).unwrap().argmax(), LabelDist::from_log_weights(&scaled).argmax());
    }

    #[test]
    fn energy_is_local_in_each_visible_unit(seed in any::<u64>(), i in 0usize..4, delta in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_dcrbm(ModelDims::dcrbm(4, 3, 2, 1), &mut rng);
        let hist = random_history(1, 4, &mut rng);
        let y = one_hot::<f64>(1, 2);
        let h = bits(5, 3);
        let v = random_vec(4, &mut rng);
        let mut v2 = v.clone();
        v2[i] += delta;
        let de = dcrbm_energy(y.view(), v2.view(), h.view(), &hist, &p).unwrap()
            - dcrbm_energy(y.view(), v.view(), h.view(), &hist, &p).unwrap();
        // Only the terms that contain index i may change.
        let (c, _) = dynamic_biases(&p, &hist, None).unwrap();
        let wh = p.rbm.weights.row(i).dot(&h);
        let expected = 0.5 * ((c[i] - v2[i]).powi(2) - (c[i] - v[i]).powi(2)) - delta * wh;
        prop_assert!((de - expected).abs() < 1e-10);
    }

    #[test]
    fn zero_history_weights_reduce_crbm_to_rbm(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = random_dcrbm(ModelDims::dcrbm(3, 4, 0, 2), &mut rng).crbm().unwrap();
        p.autoregressive.fill(0.0);
        p.history_hidden.fill(0.0);
        let v = random_vec(3, &mut rng);
        let h = bits(9, 4);
        let hist = random_history(2, 3, &mut rng);
        let (hp, vm) = crbm_conditionals(v.view(), h.view(), &hist, &p).unwrap();
        prop_assert_eq!(hp, rbm_h_given_v(v.view(), &p.rbm).unwrap());
        let dist = rbm_v_given_h(h.view(), &p.rbm, VisibleUnit::Gaussian).unwrap();
        prop_assert_eq!(&vm, dist.mean());
    }
}

#[test]
fn f32_models_agree_with_f64() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_dcrbm(ModelDims::dcrbm(3, 5, 3, 2), &mut rng);
    let ck = Checkpoint::from_params(&p, None, serde_json::Value::Null);
    let p32: DcrbmParams<f32> = ck.params().unwrap();
    let v = random_vec(3, &mut rng);
    let hist = random_history(2, 3, &mut rng);
    let h32 = HistoryWindow::from_frames(hist.frames().mapv(|x| x as f32).view());
    let a = dcrbm_posterior(v.view(), &hist, &p).unwrap();
    let b = dcrbm_posterior(v.mapv(|x| x as f32).view(), &h32, &p32).unwrap();
    for (x, y) in a.probs.iter().zip(&b.probs) {
        assert!((x - *y as f64).abs() < 1e-5);
    }
}
