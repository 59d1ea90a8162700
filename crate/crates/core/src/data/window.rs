use ndarray::{s, Array2, ArrayView1, Axis};

use super::DyadSequence;
use crate::error::{Error, Result};
use crate::models::HistoryWindow;
use crate::scalar::Scalar;

/// Every (v_t, v_<t) pair of a set of sequences, stored as two dense row
/// matrices so that training can slice contiguous batches.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset<T> {
    pub order: usize,
    pub visible_dim: usize,
    /// N x Dv.
    pub visible: Array2<T>,
    /// N x (n*Dv), each row frame-major with the oldest frame first.
    pub history: Array2<T>,
    pub labels: Vec<Option<usize>>,
    /// Index of the source sequence in the windowed slice.
    pub sequence: Vec<usize>,
    /// 0-based frame index of v_t.
    pub t: Vec<usize>,
}

pub struct WindowItem<'a, T> {
    pub v_t: ArrayView1<'a, T>,
    pub history: HistoryWindow<T>,
    pub label: Option<usize>,
    pub sequence: usize,
    pub t: usize,
}

impl<T: Scalar> WindowedDataset<T> {
    pub fn len(&self) -> usize {
        self.visible.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn item(&self, i: usize) -> WindowItem<'_, T> {
        WindowItem {
            v_t: self.visible.row(i),
            history: HistoryWindow::from_flat(self.history.row(i), self.order, self.visible_dim)
                .expect("rows have n*Dv entries"),
            label: self.labels[i],
            sequence: self.sequence[i],
            t: self.t[i],
        }
    }

    pub fn select(&self, rows: &[usize]) -> WindowedDataset<T> {
        WindowedDataset {
            order: self.order,
            visible_dim: self.visible_dim,
            visible: self.visible.select(Axis(0), rows),
            history: self.history.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            sequence: rows.iter().map(|&i| self.sequence[i]).collect(),
            t: rows.iter().map(|&i| self.t[i]).collect(),
        }
    }

    pub fn sequence_count(&self) -> usize {
        self.sequence.iter().max().map_or(0, |m| m + 1)
    }
}

/// One item per frame t with a full history, i.e. T − n items per sequence.
pub fn window<T: Scalar>(sequences: &[DyadSequence], order: usize) -> Result<WindowedDataset<T>> {
    let dv = sequences
        .first()
        .map(|s| s.frames.ncols())
        .ok_or_else(|| Error::Empty("no sequences to window".into()))?;
    let mut total = 0;
    for s in sequences {
        if s.frames.ncols() != dv {
            return Err(Error::shape("sequence frame width", dv, s.frames.ncols()));
        }
        if s.len() < order + 1 {
            return Err(Error::Dims(format!(
                "sequence `{}` has {} frames; history order {order} needs at least {}",
                s.id,
                s.len(),
                order + 1
            )));
        }
        total += s.len() - order;
    }
    let mut visible = Array2::zeros((total, dv));
    let mut history = Array2::zeros((total, order * dv));
    let mut labels = Vec::with_capacity(total);
    let mut sequence = Vec::with_capacity(total);
    let mut ts = Vec::with_capacity(total);
    let mut row = 0;
    for (si, s) in sequences.iter().enumerate() {
        for t in order..s.len() {
            visible.row_mut(row).assign(&s.frames.row(t).mapv(T::of));
            let past = s.frames.slice(s![t - order..t, ..]);
            for (dst, &x) in history.row_mut(row).iter_mut().zip(past.iter()) {
                *dst = T::of(x);
            }
            labels.push(s.label);
            sequence.push(si);
            ts.push(t);
            row += 1;
        }
    }
    Ok(WindowedDataset {
        order,
        visible_dim: dv,
        visible,
        history,
        labels,
        sequence,
        t: ts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn ramp(t: usize, dv: usize) -> DyadSequence {
        DyadSequence {
            id: "ramp".into(),
            frames: Array2::from_shape_fn((t, dv), |(i, j)| (i * 10 + j) as f64),
            label: Some(1),
            frame_rate: 30.0,
        }
    }

    #[test]
    fn counts_match_valid_frames() {
        let w = window::<f64>(&[ramp(300, 2)], 15).unwrap();
        assert_eq!(w.len(), 285);
        let w = window::<f64>(&[ramp(300, 2), ramp(20, 2)], 15).unwrap();
        assert_eq!(w.len(), 285 + 5);
        let w = window::<f64>(&[ramp(7, 2)], 0).unwrap();
        assert_eq!(w.len(), 7);
        assert_eq!(w.history.ncols(), 0);
    }

    #[test]
    fn history_is_the_preceding_frames() {
        let s = ramp(12, 3);
        let w = window::<f64>(std::slice::from_ref(&s), 4).unwrap();
        for i in 0..w.len() {
            let item = w.item(i);
            assert_eq!(item.v_t, s.frames.row(item.t));
            assert_eq!(item.history.frames(), s.frames.slice(s![item.t - 4..item.t, ..]));
        }
    }

    #[test]
    fn short_sequence_is_rejected() {
        assert!(window::<f64>(&[ramp(15, 2)], 15).is_err());
        assert!(window::<f64>(&[], 1).is_err());
    }
}
