//! Dyadic sequence data: representation, normalization, history windows,
//! sequence-level k-fold splits, the `dyadseq-v1` file format and a
//! synthetic two-actor motion generator.
//!
//! Frame layout: actor A's joints then actor B's joints, each joint as
//! (x, y, z), so Dv = 2 * joints * 3. Joint 0 of each actor is its root.

mod io;
mod kfold;
mod normalize;
mod synth;
mod window;

pub use io::{load_sequences, parse_sequences, save_sequences, write_sequences, DATASET_FORMAT};
pub use kfold::{kfold_split, Fold};
pub use normalize::{denormalize, fit_normalization, normalize, origin_of, NormalizationStats, STD_FLOOR};
pub use synth::{lag_correlation, synthesize, SynthConfig};
pub use window::{window, WindowItem, WindowedDataset};

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{Error, Result};

pub const COORDS_PER_JOINT: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct DyadSequence {
    pub id: String,
    /// T x Dv.
    pub frames: Array2<f64>,
    pub label: Option<usize>,
    pub frame_rate: f64,
}

impl DyadSequence {
    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }
}

/// A collection of sequences sharing one frame layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadDataset {
    pub visible_dim: usize,
    pub joints: usize,
    pub label_names: Vec<String>,
    pub metadata: BTreeMap<String, String>,
    pub sequences: Vec<DyadSequence>,
}

impl DyadDataset {
    pub fn new(joints: usize, label_names: Vec<String>, sequences: Vec<DyadSequence>) -> Result<Self> {
        let ds = DyadDataset {
            visible_dim: 2 * joints * COORDS_PER_JOINT,
            joints,
            label_names,
            metadata: BTreeMap::new(),
            sequences,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints > 0 && self.visible_dim != 2 * self.joints * COORDS_PER_JOINT {
            return Err(Error::Dims(format!(
                "visible_dim {} does not match {} joints per actor",
                self.visible_dim, self.joints
            )));
        }
        for s in &self.sequences {
            if s.frames.ncols() != self.visible_dim {
                return Err(Error::shape("sequence frame width", self.visible_dim, s.frames.ncols()));
            }
            if s.frames.iter().any(|x| !x.is_finite()) {
                return Err(Error::Dims(format!("sequence `{}` has non-finite values", s.id)));
            }
            if let Some(k) = s.label {
                if !self.label_names.is_empty() && k >= self.label_names.len() {
                    return Err(Error::Dims(format!("sequence `{}` label {k} out of range", s.id)));
                }
            }
        }
        Ok(())
    }

    pub fn label_count(&self) -> usize {
        let seen = self.sequences.iter().filter_map(|s| s.label).max().map_or(0, |m| m + 1);
        self.label_names.len().max(seen)
    }

    pub fn labels(&self) -> Vec<Option<usize>> {
        self.sequences.iter().map(|s| s.label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> DyadDataset {
        DyadDataset {
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
            ..self.clone_header()
        }
    }

    pub fn clone_header(&self) -> DyadDataset {
        DyadDataset {
            visible_dim: self.visible_dim,
            joints: self.joints,
            label_names: self.label_names.clone(),
            metadata: self.metadata.clone(),
            sequences: Vec::new(),
        }
    }

    /// Column indices of one actor's coordinates (0 = A, 1 = B).
    pub fn actor_dims(&self, actor: usize) -> std::ops::Range<usize> {
        let half = self.visible_dim / 2;
        actor * half..(actor + 1) * half
    }
}
