//! Self-describing model checkpoint (`dcrbm-v1`): dimensions, normalization
//! statistics and flat row-major tensors with explicit shapes, as JSON.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DcrbmParams, ModelDims, VisibleUnit};
use crate::data::NormalizationStats;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "dcrbm-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub dims: ModelDims,
    pub visible_unit: VisibleUnit,
    pub normalization: Option<NormalizationStats>,
    pub tensors: BTreeMap<String, TensorRecord>,
    /// Resolved training configuration and seed.
    #[serde(default)]
    pub metadata: serde_json::Value,
}

fn vec_record<T: Scalar>(a: &Array1<T>) -> TensorRecord {
    TensorRecord {
        shape: vec![a.len()],
        data: a.iter().map(|x| x.as_f64()).collect(),
    }
}

fn mat_record<T: Scalar>(a: &Array2<T>) -> TensorRecord {
    TensorRecord {
        shape: vec![a.nrows(), a.ncols()],
        data: a.iter().map(|x| x.as_f64()).collect(),
    }
}

impl Checkpoint {
    pub fn from_params<T: Scalar>(
        p: &DcrbmParams<T>,
        normalization: Option<NormalizationStats>,
        metadata: serde_json::Value,
    ) -> Self {
        let mut tensors = BTreeMap::new();
        tensors.insert("a".to_string(), vec_record(&p.rbm.visible_bias));
        tensors.insert("b".to_string(), vec_record(&p.rbm.hidden_bias));
        tensors.insert("s".to_string(), vec_record(&p.label_bias));
        tensors.insert("W".to_string(), mat_record(&p.rbm.weights));
        tensors.insert("U".to_string(), mat_record(&p.label_weights));
        tensors.insert("A".to_string(), mat_record(&p.autoregressive));
        tensors.insert("B".to_string(), mat_record(&p.history_hidden));
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            dims: p.dims,
            visible_unit: p.dims.visible_unit,
            normalization,
            tensors,
            metadata,
        }
    }

    fn tensor(&self, name: &str) -> Result<&TensorRecord> {
        let t = self
            .tensors
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{name}`")))?;
        let n: usize = t.shape.iter().product();
        if n != t.data.len() {
            return Err(Error::Checkpoint(format!(
                "tensor `{name}` has shape {:?} but {} values",
                t.shape,
                t.data.len()
            )));
        }
        Ok(t)
    }

    fn vector<T: Scalar>(&self, name: &str) -> Result<Array1<T>> {
        let t = self.tensor(name)?;
        if t.shape.len() != 1 {
            return Err(Error::Checkpoint(format!("tensor `{name}` must be 1-D")));
        }
        Ok(t.data.iter().map(|&x| T::of(x)).collect())
    }

    fn matrix<T: Scalar>(&self, name: &str) -> Result<Array2<T>> {
        let t = self.tensor(name)?;
        if t.shape.len() != 2 {
            return Err(Error::Checkpoint(format!("tensor `{name}` must be 2-D")));
        }
        Array2::from_shape_vec((t.shape[0], t.shape[1]), t.data.iter().map(|&x| T::of(x)).collect())
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn params<T: Scalar>(&self) -> Result<DcrbmParams<T>> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unsupported format `{}`", self.format)));
        }
        if self.visible_unit != self.dims.visible_unit {
            return Err(Error::Checkpoint("visible_unit disagrees with dims".into()));
        }
        let p = DcrbmParams {
            dims: self.dims,
            rbm: super::RbmParams {
                visible_bias: self.vector("a")?,
                hidden_bias: self.vector("b")?,
                weights: self.matrix("W")?,
            },
            label_bias: self.vector("s")?,
            label_weights: self.matrix("U")?,
            autoregressive: self.matrix("A")?,
            history_hidden: self.matrix("B")?,
        };
        p.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Short content hash, used to tag artifacts derived from this model.
    pub fn id(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_json()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = crate::error::read_text(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}
