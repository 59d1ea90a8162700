use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{DyadSequence, COORDS_PER_JOINT};
use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-6;

/// Per-dimension z-scoring statistics, computed after subtracting each
/// sequence's origin (midpoint of the two actors' root joints in the
/// first frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub joints: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Midpoint of both actors' root joints at frame 0; zero when the layout
/// has no joint structure.
pub fn origin_of(seq: &DyadSequence, joints: usize) -> [f64; 3] {
    let dv = seq.frames.ncols();
    if joints == 0 || dv != 2 * joints * COORDS_PER_JOINT || seq.is_empty() {
        return [0.0; 3];
    }
    let b0 = joints * COORDS_PER_JOINT;
    let f = seq.frames.row(0);
    [0.5 * (f[0] + f[b0]), 0.5 * (f[1] + f[b0 + 1]), 0.5 * (f[2] + f[b0 + 2])]
}

fn origin_row(origin: [f64; 3], dv: usize, joints: usize) -> Array1<f64> {
    if joints == 0 {
        return Array1::zeros(dv);
    }
    Array1::from_iter((0..dv).map(|i| origin[i % COORDS_PER_JOINT]))
}

fn centered(seq: &DyadSequence, joints: usize) -> Array2<f64> {
    let o = origin_row(origin_of(seq, joints), seq.frames.ncols(), joints);
    &seq.frames - &o
}

/// Mean and (population) standard deviation of origin-centred training
/// frames. Dimensions with std below the floor are clamped to it.
pub fn fit_normalization(train: &[DyadSequence], joints: usize) -> Result<NormalizationStats> {
    let first = train.first().ok_or_else(|| Error::Empty("no training sequences to normalize".into()))?;
    let dv = first.frames.ncols();
    let mut sum = Array1::<f64>::zeros(dv);
    let mut count = 0usize;
    for s in train {
        if s.frames.ncols() != dv {
            return Err(Error::shape("sequence frame width", dv, s.frames.ncols()));
        }
        sum += &centered(s, joints).sum_axis(Axis(0));
        count += s.len();
    }
    if count == 0 {
        return Err(Error::Empty("training sequences have no frames".into()));
    }
    let mean = sum / count as f64;
    let mut sq = Array1::<f64>::zeros(dv);
    for s in train {
        let c = centered(s, joints) - &mean;
        sq += &(&c * &c).sum_axis(Axis(0));
    }
    let std: Vec<f64> = sq
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let sd = (q / count as f64).sqrt();
            if sd < STD_FLOOR {
                log::warn!("dimension {i} has near-zero variance; std floored at {STD_FLOOR}");
                STD_FLOOR
            } else {
                sd
            }
        })
        .collect();
    Ok(NormalizationStats {
        joints,
        mean: mean.to_vec(),
        std,
    })
}

impl NormalizationStats {
    /// Normalizes one sequence; returns it with its origin.
    pub fn apply(&self, seq: &DyadSequence) -> Result<(DyadSequence, [f64; 3])> {
        let dv = self.mean.len();
        if seq.frames.ncols() != dv {
            return Err(Error::shape("sequence frame width", dv, seq.frames.ncols()));
        }
        let origin = origin_of(seq, self.joints);
        let mean = Array1::from(self.mean.clone());
        let std = Array1::from(self.std.clone());
        let frames = (centered(seq, self.joints) - &mean) / &std;
        Ok((DyadSequence { frames, ..seq.clone() }, origin))
    }
}

/// Maps normalized frames back to the original coordinates.
pub fn denormalize(frames: &Array2<f64>, stats: &NormalizationStats, origin: [f64; 3]) -> Array2<f64> {
    let dv = frames.ncols();
    let mean = Array1::from(stats.mean.clone());
    let std = Array1::from(stats.std.clone());
    frames * &std + &mean + &origin_row(origin, dv, stats.joints)
}

/// Fits statistics on `train` and applies them to it.
pub fn normalize(train: &[DyadSequence], joints: usize) -> Result<(Vec<DyadSequence>, NormalizationStats, Vec<[f64; 3]>)> {
    let stats = fit_normalization(train, joints)?;
    let mut out = Vec::with_capacity(train.len());
    let mut origins = Vec::with_capacity(train.len());
    for s in train {
        let (n, o) = stats.apply(s)?;
        out.push(n);
        origins.push(o);
    }
    Ok((out, stats, origins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize, SynthConfig};

    fn small() -> Vec<DyadSequence> {
        synthesize(&SynthConfig {
            per_class: 3,
            frames: 40,
            ..SynthConfig::default()
        })
        .unwrap()
        .sequences
    }

    #[test]
    fn round_trip_recovers_input() {
        let seqs = small();
        let (norm, stats, origins) = normalize(&seqs, 2).unwrap();
        for ((s, n), o) in seqs.iter().zip(&norm).zip(&origins) {
            let back = denormalize(&n.frames, &stats, *o);
            let err = (&back - &s.frames).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            assert!(err < 1e-10, "round trip error {err}");
        }
    }

    #[test]
    fn training_statistics_are_standardized() {
        let (norm, _, _) = normalize(&small(), 2).unwrap();
        let all = ndarray::concatenate(Axis(0), &norm.iter().map(|s| s.frames.view()).collect::<Vec<_>>()).unwrap();
        let n = all.nrows() as f64;
        for col in all.columns() {
            let m = col.sum() / n;
            let sd = (col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
            assert!(m.abs() < 1e-8 && (sd - 1.0).abs() < 1e-8, "mean {m} std {sd}");
        }
    }

    #[test]
    fn constant_dimension_maps_to_zero() {
        let mut seqs = small();
        for s in &mut seqs {
            s.frames.column_mut(7).fill(3.25);
        }
        let (norm, stats, _) = normalize(&seqs, 0).unwrap();
        assert_eq!(stats.std[7], STD_FLOOR);
        assert!(norm.iter().all(|s| s.frames.column(7).iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn origin_is_root_midpoint() {
        let mut s = small().remove(0);
        s.frames.row_mut(0).fill(0.0);
        s.frames[[0, 0]] = 2.0;
        s.frames[[0, 6]] = 4.0;
        s.frames[[0, 8]] = -1.0;
        assert_eq!(origin_of(&s, 2), [3.0, 0.0, -0.5]);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(fit_normalization(&[], 2).is_err());
    }
}
