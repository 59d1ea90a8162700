//! Seeded random streams. A single user seed is expanded into named,
//! independent ChaCha streams so that changing one stage never perturbs
//! another stage's draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Scalar;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Data = 1,
    Init = 2,
    Cd = 3,
    Generation = 4,
    Split = 5,
    Eval = 6,
}

pub fn substream(seed: u64, stream: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Child stream for item `index` of a parent stream, e.g. one rollout per
/// test sequence.
pub fn item_stream(seed: u64, stream: Stream, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(((stream as u64) << 32) | (index & 0xFFFF_FFFF));
    rng
}

pub fn normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::of(rng.sample::<f64, _>(StandardNormal))
}

pub fn bernoulli<T: Scalar, R: Rng + ?Sized>(rng: &mut R, p: T) -> T {
    if T::of(rng.gen::<f64>()) < p {
        T::one()
    } else {
        T::zero()
    }
}

/// Draws an index from a discrete distribution given by `probs`.
pub fn categorical<T: Scalar, R: Rng + ?Sized>(rng: &mut R, probs: &[T]) -> usize {
    let u = T::of(rng.gen::<f64>());
    let mut acc = T::zero();
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}
