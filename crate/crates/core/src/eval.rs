//! Classification metrics, the normalized generation error and
//! error-versus-length curves with simple baselines.

use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{DyadSequence, WindowedDataset};
use crate::error::{Error, Result};
use crate::generation::{generate_full, generate_partial, ClampMask};
use crate::models::{DcrbmParams, LabelDist};
use crate::rng::{item_stream, Stream};
use crate::scalar::Scalar;

/// Neumaier-compensated sum.
fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / n;
    (mean, var.sqrt())
}

/// (‖gen − gt‖_F / ‖gt‖_F)² over the columns in `dims` (all columns if None).
pub fn generation_error<T: Scalar>(
    generated: ArrayView2<T>,
    groundtruth: ArrayView2<T>,
    dims: Option<&[usize]>,
) -> Result<f64> {
    if generated.dim() != groundtruth.dim() {
        return Err(Error::shape(
            "generated frames",
            format!("{:?}", groundtruth.dim()),
            format!("{:?}", generated.dim()),
        ));
    }
    let all: Vec<usize>;
    let cols = match dims {
        Some(d) => d,
        None => {
            all = (0..groundtruth.ncols()).collect();
            &all
        }
    };
    if let Some(&bad) = cols.iter().find(|&&c| c >= groundtruth.ncols()) {
        return Err(Error::shape("error column bound", groundtruth.ncols(), bad));
    }
    let mut num = Vec::with_capacity(groundtruth.nrows() * cols.len());
    let mut den = Vec::with_capacity(num.capacity());
    for (g, r) in generated.rows().into_iter().zip(groundtruth.rows()) {
        for &c in cols {
            let (a, b) = (g[c].as_f64(), r[c].as_f64());
            num.push((a - b) * (a - b));
            den.push(b * b);
        }
    }
    let den = compensated_sum(den);
    if den == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(compensated_sum(num) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Most frequent window arg-max; ties go to the lowest class index.
    #[default]
    Majority,
    /// Arg-max of the mean window posterior.
    MeanPosterior,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(Aggregation::Majority),
            "mean-posterior" | "mean" => Ok(Aggregation::MeanPosterior),
            other => Err(Error::Config(format!("unknown aggregation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub fold: Option<usize>,
    /// Sequence-level accuracy.
    pub accuracy: f64,
    /// Per-window arg-max accuracy, when window predictions exist.
    pub window_accuracy: Option<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    /// Rows are true classes, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    pub count: usize,
}

impl Metrics {
    /// Precision of a class with no predictions is reported as 0.
    pub fn from_predictions(truth: &[usize], predicted: &[usize], k: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::shape("prediction count", truth.len(), predicted.len()));
        }
        if truth.is_empty() {
            return Err(Error::Empty("no predictions to score".into()));
        }
        let mut confusion = vec![vec![0usize; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(Error::shape("class index bound", k, t.max(p)));
            }
            confusion[t][p] += 1;
        }
        let total = truth.len();
        let trace: usize = (0..k).map(|i| confusion[i][i]).sum();
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = (0..k).map(|j| ratio(confusion[j][j], (0..k).map(|i| confusion[i][j]).sum())).collect();
        let recall = (0..k).map(|i| ratio(confusion[i][i], confusion[i].iter().sum())).collect();
        Ok(Metrics {
            fold: None,
            accuracy: trace as f64 / total as f64,
            window_accuracy: None,
            precision,
            recall,
            confusion,
            count: total,
        })
    }
}

/// Predicted class of each sequence present in `posteriors` (rows align with
/// `sequence`), keyed by sequence index.
pub fn aggregate<T: Scalar>(
    posteriors: ArrayView2<T>,
    sequence: &[usize],
    how: Aggregation,
) -> BTreeMap<usize, usize> {
    let k = posteriors.ncols();
    let mut acc: BTreeMap<usize, Array1<f64>> = BTreeMap::new();
    for (row, &seq) in posteriors.axis_iter(Axis(0)).zip(sequence) {
        let slot = acc.entry(seq).or_insert_with(|| Array1::zeros(k));
        match how {
            Aggregation::Majority => {
                slot[LabelDist { probs: row.to_owned() }.argmax()] += 1.0;
            }
            Aggregation::MeanPosterior => {
                *slot += &row.mapv(|x| x.as_f64());
            }
        }
    }
    acc.into_iter().map(|(seq, votes)| (seq, LabelDist { probs: votes }.argmax())).collect()
}

/// Window posteriors → per-sequence labels → sequence-level metrics.
pub fn classify_dataset<T: Scalar>(
    p: &DcrbmParams<T>,
    data: &WindowedDataset<T>,
    how: Aggregation,
) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::Empty("no windows to classify".into()));
    }
    let k = p.dims.label_count;
    if let Some(bad) = data.labels.iter().flatten().find(|&&l| l >= k) {
        return Err(Error::shape("test label index bound", k, *bad));
    }
    let truth: Vec<usize> = data
        .labels
        .iter()
        .map(|l| l.ok_or_else(|| Error::MissingLabels("unlabelled test window".into())))
        .collect::<Result<_>>()?;
    let post = p.posterior_batch(data.visible.view(), data.history.view())?;
    let window_pred: Vec<usize> = post
        .axis_iter(Axis(0))
        .map(|r| LabelDist { probs: r.to_owned() }.argmax())
        .collect();
    let seq_pred = aggregate(post.view(), &data.sequence, how);
    let mut seq_truth = BTreeMap::new();
    for (&s, &t) in data.sequence.iter().zip(&truth) {
        seq_truth.insert(s, t);
    }
    let (st, sp): (Vec<usize>, Vec<usize>) = seq_truth.iter().map(|(s, &t)| (t, seq_pred[s])).unzip();
    let mut metrics = Metrics::from_predictions(&st, &sp, k)?;
    let hits = window_pred.iter().zip(&truth).filter(|(a, b)| a == b).count();
    metrics.window_accuracy = Some(hits as f64 / truth.len() as f64);
    Ok(metrics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Partial,
    Full,
    MeanPose,
    Persistence,
}

impl std::fmt::Display for CurveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CurveKind::Partial => "partial",
            CurveKind::Full => "full",
            CurveKind::MeanPose => "mean-pose",
            CurveKind::Persistence => "persistence",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenErrorCurve {
    pub kind: CurveKind,
    /// Shared label of the evaluated sequences, if they all agree.
    pub class: Option<usize>,
    pub lengths: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// per_item[i][l]: error of instance i at lengths[l].
    pub per_item: Vec<Vec<f64>>,
    pub sequence_ids: Vec<String>,
}

impl GenErrorCurve {
    fn from_items(kind: CurveKind, lengths: &[usize], seqs: &[&DyadSequence], per_item: Vec<Vec<f64>>) -> Self {
        let (mean, std) = (0..lengths.len())
            .map(|l| mean_std(&per_item.iter().map(|r| r[l]).collect::<Vec<_>>()))
            .unzip();
        let class = seqs.first().and_then(|s| s.label).filter(|&c| seqs.iter().all(|s| s.label == Some(c)));
        GenErrorCurve {
            kind,
            class,
            lengths: lengths.to_vec(),
            mean,
            std,
            per_item,
            sequence_ids: seqs.iter().map(|s| s.id.clone()).collect(),
        }
    }

    /// Flat rows: kind, class, length, mean, std, instances.
    pub fn to_csv_rows(&self) -> Vec<[String; 6]> {
        let class = self.class.map_or_else(|| "-".to_string(), |c| c.to_string());
        (0..self.lengths.len())
            .map(|l| {
                [
                    self.kind.to_string(),
                    class.clone(),
                    self.lengths[l].to_string(),
                    format!("{}", self.mean[l]),
                    format!("{}", self.std[l]),
                    self.per_item.len().to_string(),
                ]
            })
            .collect()
    }
}

/// Settings shared by the model-based and baseline curves.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec<'a> {
    pub lengths: &'a [usize],
    pub history_order: usize,
    /// Observed dimensions; errors are measured on the rest.
    pub mask: &'a ClampMask,
    /// At most this many sequences are used, taken in order.
    pub instances: usize,
}

impl CurveSpec<'_> {
    fn select<'s>(&self, seqs: &'s [DyadSequence]) -> Result<Vec<&'s DyadSequence>> {
        if self.lengths.is_empty() {
            return Err(Error::Config("no generation lengths requested".into()));
        }
        if self.lengths.contains(&0) {
            return Err(Error::Config("generation lengths must be >= 1".into()));
        }
        let chosen: Vec<&DyadSequence> = seqs.iter().take(self.instances).collect();
        if chosen.is_empty() {
            return Err(Error::Empty("no test sequences for the generation curve".into()));
        }
        let need = self.history_order + self.max_len();
        if let Some(s) = chosen.iter().find(|s| s.len() < need) {
            return Err(Error::Config(format!(
                "sequence {} has {} frames; n + max length needs {need}",
                s.id,
                s.len()
            )));
        }
        if let Some(s) = chosen.iter().find(|s| s.frames.ncols() != self.mask.len()) {
            return Err(Error::shape("sequence width vs mask", self.mask.len(), s.frames.ncols()));
        }
        Ok(chosen)
    }

    fn max_len(&self) -> usize {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    fn prefix_errors(&self, generated: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<Vec<f64>> {
        let free = self.mask.free_dims();
        if free.is_empty() {
            return Err(Error::Mask("every dimension is clamped; nothing to evaluate".into()));
        }
        self.lengths
            .iter()
            .map(|&l| generation_error(generated.slice(s![..l, ..]), truth.slice(s![..l, ..]), Some(&free)))
            .collect()
    }
}

/// Rolls out the longest requested length once per instance (seeded per
/// instance) and scores every prefix. `Full` ignores `spec.mask` during
/// generation but still scores only its free dimensions, so partial and full
/// curves are comparable.
pub fn gen_error_curve<T: Scalar>(
    p: &DcrbmParams<T>,
    seqs: &[DyadSequence],
    spec: &CurveSpec<'_>,
    kind: CurveKind,
    iters: usize,
    seed: u64,
) -> Result<GenErrorCurve> {
    if !matches!(kind, CurveKind::Partial | CurveKind::Full) {
        return Err(Error::Config(format!("{kind} is a baseline, not a model rollout")));
    }
    if spec.history_order != p.dims.history_order {
        return Err(Error::HistoryLength { expected: p.dims.history_order, got: spec.history_order });
    }
    let chosen = spec.select(seqs)?;
    let (n, max_len) = (spec.history_order, spec.max_len());
    let mut per_item = Vec::with_capacity(chosen.len());
    for (i, seq) in chosen.iter().enumerate() {
        let frames: Array2<T> = seq.frames.mapv(T::of);
        let seed_frames = frames.slice(s![..n, ..]);
        let truth = frames.slice(s![n..n + max_len, ..]);
        let label = if p.dims.has_labels() {
            Some(seq.label.ok_or_else(|| Error::MissingLabels(format!("sequence {} has no label", seq.id)))?)
        } else {
            None
        };
        let mut rng = item_stream(seed, Stream::Generation, i as u64);
        let out = match kind {
            CurveKind::Partial => generate_partial(p, label, truth, seed_frames, spec.mask, iters, &mut rng)?,
            _ => generate_full(p, label, seed_frames, max_len, iters, &mut rng)?,
        };
        let generated = out.frames.mapv(|x| x.as_f64());
        let gt = truth.mapv(|x| x.as_f64());
        per_item.push(spec.prefix_errors(generated.view(), gt.view())?);
    }
    Ok(GenErrorCurve::from_items(kind, spec.lengths, &chosen, per_item))
}

/// Deterministic reference curves: `MeanPose` predicts `mean_frame` at every
/// step, `Persistence` repeats the last seed frame.
pub fn baseline_error(
    seqs: &[DyadSequence],
    spec: &CurveSpec<'_>,
    kind: CurveKind,
    mean_frame: ArrayView1<f64>,
) -> Result<GenErrorCurve> {
    if !matches!(kind, CurveKind::MeanPose | CurveKind::Persistence) {
        return Err(Error::Config(format!("{kind} is not a baseline")));
    }
    if kind == CurveKind::Persistence && spec.history_order == 0 {
        return Err(Error::Config("persistence needs at least one seed frame".into()));
    }
    let chosen = spec.select(seqs)?;
    if mean_frame.len() != spec.mask.len() {
        return Err(Error::shape("mean frame", spec.mask.len(), mean_frame.len()));
    }
    let (n, max_len) = (spec.history_order, spec.max_len());
    let mut per_item = Vec::with_capacity(chosen.len());
    for seq in &chosen {
        let truth = seq.frames.slice(s![n..n + max_len, ..]);
        let frame = match kind {
            CurveKind::MeanPose => mean_frame.to_owned(),
            _ => seq.frames.row(n - 1).to_owned(),
        };
        let mut pred = Array2::zeros(truth.dim());
        pred.rows_mut().into_iter().for_each(|mut r| r.assign(&frame));
        for i in spec.mask.clamped() {
            pred.column_mut(i).assign(&truth.column(i));
        }
        per_item.push(spec.prefix_errors(pred.view(), truth)?);
    }
    Ok(GenErrorCurve::from_items(kind, spec.lengths, &chosen, per_item))
}
