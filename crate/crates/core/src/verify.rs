//! Self-checks run by `dcrbm verify`: closed-form conditionals against
//! brute-force enumeration, partition-function normalization and the exact
//! likelihood gradient against finite differences.

use std::time::Instant;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::models::{dcrbm_h_given_vy, dcrbm_posterior, enumerate_joint, DcrbmParams, HistoryWindow, ModelDims, RbmParams};
use crate::rng::{self, substream, Stream};
use crate::training::{grad_check, joint_log_weights, log_partition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub trials: usize,
    /// Largest observed deviation.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn check(name: &str, trials: usize, value: f64, tolerance: f64, start: Instant) -> Check {
    Check {
        name: name.to_string(),
        trials,
        value,
        tolerance,
        passed: value < tolerance,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn gauss(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    rng::normal::<f64, _>(rng) * scale
}

/// A DCRBM with O(1) weights so that posteriors are far from uniform.
pub fn random_dcrbm(dims: ModelDims, rng: &mut ChaCha8Rng) -> Result<DcrbmParams<f64>> {
    let mut p = DcrbmParams::init(dims, 0.7, rng)?;
    p.rbm.visible_bias.mapv_inplace(|_| gauss(rng, 1.0));
    p.rbm.hidden_bias.mapv_inplace(|_| gauss(rng, 1.0));
    p.label_bias.mapv_inplace(|_| gauss(rng, 1.0));
    Ok(p)
}

pub fn random_rbm(dv: usize, dh: usize, rng: &mut ChaCha8Rng) -> RbmParams<f64> {
    let mut p = RbmParams::zeros(dv, dh);
    p.visible_bias.mapv_inplace(|_| gauss(rng, 0.5));
    p.hidden_bias.mapv_inplace(|_| gauss(rng, 0.5));
    p.weights.mapv_inplace(|_| gauss(rng, 0.5));
    p
}

/// Max deviations (posterior, hidden conditional) over `trials` random
/// DCRBMs with Dh ≤ 10, K ∈ {2, 3} and n ∈ {0, 2}.
pub fn posterior_oracle(seed: u64, trials: usize) -> Result<(f64, f64)> {
    let mut rng = substream(seed, Stream::Eval);
    let (mut post_dev, mut hid_dev) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let dv = rng.gen_range(1..=4);
        let dh = rng.gen_range(1..=10);
        let k = rng.gen_range(2..=3);
        let n = if rng.gen_bool(0.5) { 0 } else { 2 };
        let p = random_dcrbm(ModelDims::dcrbm(dv, dh, k, n), &mut rng)?;
        let v = Array1::from_shape_fn(dv, |_| gauss(&mut rng, 1.0));
        let hist = HistoryWindow::from_flat(Array1::from_shape_fn(n * dv, |_| gauss(&mut rng, 1.0)).view(), n, dv)?;
        let table = enumerate_joint(&p, v.view(), &hist)?;
        let exact = table.label_marginal();
        let closed = dcrbm_posterior(v.view(), &hist, &p)?;
        for (a, b) in closed.probs.iter().zip(exact.probs.iter()) {
            post_dev = post_dev.max((a - b).abs());
        }
        for label in 0..k {
            let h = dcrbm_h_given_vy(v.view(), label, &hist, &p)?;
            for (a, b) in h.iter().zip(table.hidden_marginal(label).iter()) {
                hid_dev = hid_dev.max((a - b).abs());
            }
        }
    }
    Ok((post_dev, hid_dev))
}

/// |Σ_{v,h} p(v, h) − 1| for a random binary RBM.
pub fn normalization_oracle(seed: u64, dv: usize, dh: usize) -> Result<f64> {
    let mut rng = substream(seed, Stream::Eval);
    let p = random_rbm(dv, dh, &mut rng);
    let log_z = log_partition(&p)?;
    let total: f64 = joint_log_weights(&p)?.iter().map(|&l| (l - log_z).exp()).sum();
    Ok((total - 1.0).abs())
}

/// Worst relative gradient error over `trials` random tiny binary RBMs with
/// random binary data.
pub fn gradient_oracle(seed: u64, trials: usize, eps: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let dv = rng.gen_range(2..=4);
        let dh = rng.gen_range(1..=3);
        let p = random_rbm(dv, dh, &mut rng);
        let data = ndarray::Array2::from_shape_fn((6, dv), |_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 });
        worst = worst.max(grad_check(&p, data.view(), eps)?);
    }
    Ok(worst)
}

pub fn run(seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let start = Instant::now();
    let (post, hid) = posterior_oracle(seed, 100)?;
    checks.push(check("label posterior vs enumeration", 100, post, 1e-9, start));
    checks.push(check("hidden conditional vs enumeration", 100, hid, 1e-12, start));
    let start = Instant::now();
    checks.push(check("partition function normalization", 1, normalization_oracle(seed, 4, 3)?, 1e-10, start));
    let start = Instant::now();
    checks.push(check("exact gradient vs finite differences", 20, gradient_oracle(seed, 20, 1e-5)?, 1e-4, start));
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { seed, checks, passed })
}
