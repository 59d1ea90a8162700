//! Synthetic stand-in for recorded dyadic motion. Actor A moves along a
//! smooth trajectory (sinusoid at a shared tempo plus a low-pass random
//! walk); actor B follows A with a lag, mixed with an independent
//! trajectory according to a coupling level ρ:
//!
//! B(t) = ρ·A(t − lag) + (1 − ρ)·I(t) + noise.
//!
//! The class label is the index of ρ in `classes`.

use ndarray::{s, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DyadDataset, DyadSequence, COORDS_PER_JOINT};
use crate::error::{Error, Result};
use crate::rng::{self, item_stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Coupling level per class, each in [0, 1].
    pub classes: Vec<f64>,
    pub per_class: usize,
    pub frames: usize,
    /// Joints per actor.
    pub joints: usize,
    pub lag: usize,
    pub noise: f64,
    /// Base tempo in radians per frame.
    pub tempo: f64,
    pub frame_rate: f64,
    /// Longest history window the data must support.
    pub history_order: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: vec![0.0, 0.5, 0.9],
            per_class: 100,
            frames: 300,
            joints: 2,
            lag: 5,
            noise: 0.05,
            tempo: 0.12,
            frame_rate: 30.0,
            history_order: 15,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Config("at least one coupling level is required".into()));
        }
        if let Some(r) = self.classes.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Config(format!("coupling level {r} outside [0, 1]")));
        }
        if self.frames <= self.lag + self.history_order {
            return Err(Error::Config(format!(
                "frames ({}) must exceed lag + history order ({})",
                self.frames,
                self.lag + self.history_order
            )));
        }
        if self.joints == 0 || self.per_class == 0 {
            return Err(Error::Config("joints and per_class must be >= 1".into()));
        }
        if self.noise < 0.0 || !self.noise.is_finite() || !self.tempo.is_finite() {
            return Err(Error::Config("noise must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn visible_dim(&self) -> usize {
        2 * self.joints * COORDS_PER_JOINT
    }

    pub fn label_names(&self) -> Vec<String> {
        match self.classes.len() {
            3 => vec!["low".into(), "medium".into(), "high".into()],
            n => (0..n).map(|k| format!("level{k}")).collect(),
        }
    }
}

/// One actor's trajectory, `len` frames x (joints*3) coordinates.
fn trajectory<R: Rng>(rng: &mut R, len: usize, joints: usize, tempo: f64) -> Array2<f64> {
    let dims = joints * COORDS_PER_JOINT;
    let mut out = Array2::zeros((len, dims));
    for d in 0..dims {
        let joint = d / COORDS_PER_JOINT;
        let offset = match d % COORDS_PER_JOINT {
            1 => 0.3 * joint as f64,
            _ => 0.0,
        };
        let amp = rng.gen_range(0.4..1.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut walk = rng::normal::<f64, _>(rng) * 0.5;
        let mut smooth = walk;
        for t in 0..len {
            walk = 0.98 * walk + 0.1 * rng::normal::<f64, _>(rng);
            smooth = 0.85 * smooth + 0.15 * walk;
            out[[t, d]] = offset + amp * (tempo * t as f64 + phase).sin() + smooth;
        }
    }
    out
}

fn sequence(cfg: &SynthConfig, class: usize, index: usize, global: u64) -> DyadSequence {
    let rho = cfg.classes[class];
    let mut rng = item_stream(cfg.seed, Stream::Data, global);
    let (t, lag, j) = (cfg.frames, cfg.lag, cfg.joints);
    let half = j * COORDS_PER_JOINT;
    let tempo_a = cfg.tempo * rng.gen_range(0.85..1.15);
    let tempo_i = cfg.tempo * rng.gen_range(0.6..1.4);
    let a_full = trajectory(&mut rng, t + lag, j, tempo_a);
    let indep = trajectory(&mut rng, t, j, tempo_i);
    let mut frames = Array2::zeros((t, 2 * half));
    frames.slice_mut(s![.., ..half]).assign(&a_full.slice(s![lag.., ..]));
    for tt in 0..t {
        for d in 0..half {
            let noise = if cfg.noise > 0.0 {
                cfg.noise * rng::normal::<f64, _>(&mut rng)
            } else {
                0.0
            };
            frames[[tt, half + d]] = rho * a_full[[tt, d]] + (1.0 - rho) * indep[[tt, d]] + noise;
        }
    }
    DyadSequence {
        id: format!("c{class}-s{index:04}"),
        frames,
        label: Some(class),
        frame_rate: cfg.frame_rate,
    }
}

pub fn synthesize(cfg: &SynthConfig) -> Result<DyadDataset> {
    cfg.validate()?;
    let mut sequences = Vec::with_capacity(cfg.classes.len() * cfg.per_class);
    for i in 0..cfg.per_class {
        for c in 0..cfg.classes.len() {
            let global = (i * cfg.classes.len() + c) as u64;
            sequences.push(sequence(cfg, c, i, global));
        }
    }
    let mut ds = DyadDataset::new(cfg.joints, cfg.label_names(), sequences)?;
    ds.metadata.insert("generator".into(), "synthetic-dyad".into());
    ds.metadata.insert(
        "synth_config".into(),
        serde_json::to_string(cfg).expect("config serializes"),
    );
    Ok(ds)
}

/// Mean Pearson correlation between actor A at t − lag and actor B at t,
/// averaged over matching coordinates.
pub fn lag_correlation(frames: ArrayView2<f64>, lag: usize) -> f64 {
    let half = frames.ncols() / 2;
    let t = frames.nrows();
    if t <= lag + 1 || half == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for d in 0..half {
        let a = frames.slice(s![..t - lag, d]);
        let b = frames.slice(s![lag.., half + d]);
        let n = a.len() as f64;
        let (ma, mb) = (a.sum() / n, b.sum() / n);
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (&x, &y) in a.iter().zip(b.iter()) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        total += if va > 0.0 && vb > 0.0 { cov / (va * vb).sqrt() } else { 0.0 };
    }
    total / half as f64
}
