//! The model ladder: RBM, DRBM (label layer), CRBM (history conditioning)
//! and DCRBM (both), with energies, exact conditionals, the closed-form
//! label posterior and a brute-force enumeration oracle.
//!
//! Parameter naming: `visible_bias` = a, `hidden_bias` = b, `weights` = W
//! (Dv x Dh), `label_bias` = s, `label_weights` = U (Dh x K),
//! `autoregressive` = A ((n*Dv) x Dv), `history_hidden` = B ((n*Dv) x Dh).

mod checkpoint;
mod conditional;
mod discriminative;
mod enumerate;
mod history;
mod labels;
mod rbm;
mod temporal;

pub use checkpoint::{Checkpoint, TensorRecord, CHECKPOINT_FORMAT};
pub use conditional::{crbm_conditionals, crbm_energy, dynamic_biases, CrbmParams, HistoryLayer};
pub use discriminative::{drbm_energy, y_given_h, DrbmParams, LabelLayer};
pub use enumerate::{enumerate_joint, JointTable, MAX_ENUM_HIDDEN};
pub use history::HistoryWindow;
pub use labels::{one_hot, one_hot_index, LabelDist};
pub use rbm::{rbm_energy, rbm_h_given_v, rbm_v_given_h, RbmParams, VisibleDist};
pub use temporal::{dcrbm_energy, dcrbm_h_given_vy, dcrbm_posterior, DcrbmParams};

pub use crate::scalar::sigmoid;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisibleUnit {
    Binary,
    Gaussian,
}

/// Which rung of the ladder a parameter set represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rbm,
    Drbm,
    Crbm,
    Dcrbm,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rbm" => Ok(ModelKind::Rbm),
            "drbm" => Ok(ModelKind::Drbm),
            "crbm" => Ok(ModelKind::Crbm),
            "dcrbm" => Ok(ModelKind::Dcrbm),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Layer sizes. `label_count == 0` means the model has no label layer and
/// `history_order == 0` means it has no history conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub visible_dim: usize,
    pub hidden_dim: usize,
    pub label_count: usize,
    pub history_order: usize,
    pub visible_unit: VisibleUnit,
}

impl ModelDims {
    pub fn rbm(visible_dim: usize, hidden_dim: usize, visible_unit: VisibleUnit) -> Self {
        ModelDims {
            visible_dim,
            hidden_dim,
            label_count: 0,
            history_order: 0,
            visible_unit,
        }
    }

    pub fn dcrbm(visible_dim: usize, hidden_dim: usize, label_count: usize, history_order: usize) -> Self {
        ModelDims {
            visible_dim,
            hidden_dim,
            label_count,
            history_order,
            visible_unit: VisibleUnit::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.visible_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Dims("visible and hidden dimensions must be >= 1".into()));
        }
        if self.label_count == 1 {
            return Err(Error::Dims("a label layer needs at least 2 classes".into()));
        }
        if self.visible_unit == VisibleUnit::Binary && (self.label_count > 0 || self.history_order > 0) {
            return Err(Error::Dims(
                "binary visible units are only supported for the plain RBM".into(),
            ));
        }
        Ok(())
    }

    pub fn has_labels(&self) -> bool {
        self.label_count > 0
    }

    /// Length of the flattened history vector, n * Dv.
    pub fn history_len(&self) -> usize {
        self.history_order * self.visible_dim
    }

    pub fn kind(&self) -> ModelKind {
        match (self.has_labels(), self.history_order > 0) {
            (false, false) => ModelKind::Rbm,
            (true, false) => ModelKind::Drbm,
            (false, true) => ModelKind::Crbm,
            (true, true) => ModelKind::Dcrbm,
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::shape(what, expected, got));
    }
    Ok(())
}

pub(crate) fn check_binary<T: Scalar>(xs: impl IntoIterator<Item = T>) -> Result<()> {
    for x in xs {
        if x != T::zero() && x != T::one() {
            return Err(Error::NonBinary(x.as_f64()));
        }
    }
    Ok(())
}
