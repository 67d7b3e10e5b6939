//! Counter-based random streams and the two frozen variate transforms.
//!
//! A stream is ChaCha8 keyed by the master seed (expanded through
//! `SeedableRng::seed_from_u64`) with the 64-bit ChaCha stream id set to
//! `experiment << 48 | channel << 32 | replicate`. Distinct
//! `(experiment, channel, replicate)` triples therefore address disjoint
//! keystreams of the same cipher key, independent of scheduling.
//!
//! Variates:
//! * exponential: inversion, `-ln(1 - U)` for one `U` in `[0, 1)` (53 bits);
//! * standard normal: the ziggurat of `rand_distr::StandardNormal`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

/// Packs the stream coordinates into the ChaCha stream id.
pub fn stream_id(experiment: u16, channel: u16, replicate: u32) -> u64 {
    (u64::from(experiment) << 48) | (u64::from(channel) << 32) | u64::from(replicate)
}

pub fn stream(master_seed: u64, experiment: u16, channel: u16, replicate: u32) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(experiment, channel, replicate));
    rng
}

/// Exp(1) by inversion; consumes exactly one `u64`.
#[inline]
pub fn exp1<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -crate::math::ln_1p(-u)
}

/// Uniform on `[0, 1)`; consumes exactly one `u64`.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    rng.random()
}

#[inline]
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
