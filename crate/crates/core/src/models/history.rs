use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The `n` frames preceding time `t`, stored flattened frame-major with the
/// oldest frame first: `[v_{t-n}, ..., v_{t-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryWindow<T> {
    flat: Array1<T>,
    order: usize,
    dim: usize,
}

impl<T: Scalar> HistoryWindow<T> {
    pub fn zeros(order: usize, dim: usize) -> Self {
        HistoryWindow {
            flat: Array1::zeros(order * dim),
            order,
            dim,
        }
    }

    pub fn empty(dim: usize) -> Self {
        Self::zeros(0, dim)
    }

    /// `frames` is n x Dv, oldest row first.
    pub fn from_frames(frames: ArrayView2<T>) -> Self {
        let (order, dim) = frames.dim();
        HistoryWindow {
            flat: Array1::from_iter(frames.iter().copied()),
            order,
            dim,
        }
    }

    pub fn from_flat(flat: ArrayView1<T>, order: usize, dim: usize) -> Result<Self> {
        if flat.len() != order * dim {
            return Err(Error::shape("history flat vector", order * dim, flat.len()));
        }
        Ok(HistoryWindow {
            flat: flat.to_owned(),
            order,
            dim,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flat(&self) -> ArrayView1<'_, T> {
        self.flat.view()
    }

    pub fn frames(&self) -> ArrayView2<'_, T> {
        self.flat
            .view()
            .into_shape_with_order((self.order, self.dim))
            .expect("history buffer is contiguous")
    }

    pub fn newest(&self) -> Option<ArrayView1<'_, T>> {
        (self.order > 0).then(|| self.flat.slice(s![(self.order - 1) * self.dim..]))
    }

    /// Drops the oldest frame and appends `frame` as the newest.
    pub fn push(&mut self, frame: ArrayView1<T>) {
        if self.order == 0 {
            return;
        }
        let d = self.dim;
        let len = self.flat.len();
        let slice = self.flat.as_slice_mut().expect("contiguous");
        slice.copy_within(d.., 0);
        for (dst, &src) in slice[len - d..].iter_mut().zip(frame.iter()) {
            *dst = src;
        }
    }

    pub fn to_frames(&self) -> Array2<T> {
        self.frames().to_owned()
    }

    pub(crate) fn expect_order(&self, order: usize, dim: usize) -> Result<()> {
        if self.order != order {
            return Err(Error::HistoryLength {
                expected: order,
                got: self.order,
            });
        }
        if self.dim != dim {
            return Err(Error::shape("history frame", dim, self.dim));
        }
        Ok(())
    }
}
