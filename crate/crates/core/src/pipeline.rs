//! End-to-end protocol steps shared by the command-line tool and the
//! acceptance suite: per-fold normalization, model fitting and
//! sequence-level cross-validation.

use serde::{Deserialize, Serialize};

use crate::data::{fit_normalization, kfold_split, window, DyadDataset, DyadSequence, NormalizationStats};
use crate::error::{Error, Result};
use crate::eval::{classify_dataset, mean_std, Aggregation, Metrics};
use crate::models::{DcrbmParams, ModelDims};
use crate::rng::{substream, Stream};
use crate::scalar::Scalar;
use crate::training::{train, TrainConfig, TrainReport};

pub const DEFAULT_HIDDEN: usize = 50;

/// Everything needed to fit one model besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub hidden_dim: usize,
    /// Train with a label layer (DCRBM/DRBM) or without (CRBM/RBM).
    pub labels: bool,
    pub train: TrainConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { hidden_dim: DEFAULT_HIDDEN, labels: true, train: TrainConfig::default() }
    }
}

impl FitConfig {
    /// Settings used for the classification benchmark.
    pub fn classification_preset() -> Self {
        let mut cfg = FitConfig::default();
        cfg.train.learning_rate = 0.01;
        cfg.train.weight_decay = 2e-3;
        cfg
    }

    /// Stronger decay keeps closed-loop rollouts stable.
    pub fn generation_preset() -> Self {
        let mut cfg = FitConfig::default();
        cfg.train.learning_rate = 0.005;
        cfg.train.weight_decay = 1e-2;
        cfg
    }
}

/// A normalized train/test pair; statistics come from the training side only.
#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub train: Vec<DyadSequence>,
    pub test: Vec<DyadSequence>,
    pub stats: NormalizationStats,
}

pub fn prepare_split(train: &[DyadSequence], test: &[DyadSequence], joints: usize) -> Result<PreparedSplit> {
    let stats = fit_normalization(train, joints)?;
    let apply = |seqs: &[DyadSequence]| -> Result<Vec<DyadSequence>> {
        seqs.iter().map(|s| stats.apply(s).map(|(n, _)| n)).collect()
    };
    Ok(PreparedSplit { train: apply(train)?, test: apply(test)?, stats })
}

/// Initializes from the init substream and trains on the windows of `train`.
pub fn fit<T: Scalar>(
    train_seqs: &[DyadSequence],
    label_count: usize,
    cfg: &FitConfig,
    heldout: Option<&[DyadSequence]>,
) -> Result<(DcrbmParams<T>, TrainReport)> {
    let dv = train_seqs
        .first()
        .map(|s| s.frames.ncols())
        .ok_or_else(|| Error::Empty("no training sequences".into()))?;
    let k = if cfg.labels { label_count } else { 0 };
    let dims = ModelDims::dcrbm(dv, cfg.hidden_dim, k, cfg.train.history_order);
    let mut rng = substream(cfg.train.seed, Stream::Init);
    let mut params = DcrbmParams::<T>::init(dims, cfg.train.init_std, &mut rng)?;
    let windows = window::<T>(train_seqs, cfg.train.history_order)?;
    let held = match heldout {
        Some(h) if !h.is_empty() && cfg.labels => Some(window::<T>(h, cfg.train.history_order)?),
        _ => None,
    };
    let report = train(&mut params, &windows, &cfg.train, held.as_ref())?;
    Ok((params, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    pub aggregation: Aggregation,
    pub fit: FitConfig,
    pub per_fold: Vec<Metrics>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_window_accuracy: f64,
}

/// Stratified k-fold protocol: split → normalize on train → fit → classify.
pub fn cross_validate<T: Scalar>(
    ds: &DyadDataset,
    folds: usize,
    seed: u64,
    cfg: &FitConfig,
    aggregation: Aggregation,
) -> Result<CvReport> {
    if !cfg.labels {
        return Err(Error::Config("cross-validation needs a labelled model".into()));
    }
    let labels = ds.labels();
    if labels.iter().any(Option::is_none) {
        return Err(Error::MissingLabels("cross-validation needs every sequence labelled".into()));
    }
    let splits = kfold_split(&labels, folds, seed)?;
    let mut per_fold = Vec::with_capacity(folds);
    for (f, split) in splits.iter().enumerate() {
        let train_seqs: Vec<DyadSequence> = split.train.iter().map(|&i| ds.sequences[i].clone()).collect();
        let test_seqs: Vec<DyadSequence> = split.test.iter().map(|&i| ds.sequences[i].clone()).collect();
        let prepared = prepare_split(&train_seqs, &test_seqs, ds.joints)?;
        let (params, _) = fit::<T>(&prepared.train, ds.label_count(), cfg, None)?;
        let test = window::<T>(&prepared.test, cfg.train.history_order)?;
        let mut metrics = classify_dataset(&params, &test, aggregation)?;
        metrics.fold = Some(f);
        log::info!("fold {f}: accuracy {:.4}", metrics.accuracy);
        per_fold.push(metrics);
    }
    let accs: Vec<f64> = per_fold.iter().map(|m| m.accuracy).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&accs);
    let wins: Vec<f64> = per_fold.iter().filter_map(|m| m.window_accuracy).collect();
    Ok(CvReport {
        folds,
        seed,
        aggregation,
        fit: cfg.clone(),
        per_fold,
        mean_accuracy,
        std_accuracy,
        mean_window_accuracy: mean_std(&wins).0,
    })
}
