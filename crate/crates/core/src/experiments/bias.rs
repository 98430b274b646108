//! One-round transition statistics of a single large anyon pair under the
//! adversarial pair-creation noise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automaton::{DecoderConfig, Velocity};
use crate::error::{Error, Result};
use crate::noise::{NoiseModel, PairStride, SinglePair};
use crate::rng::mix_all;
use crate::schedule::ScheduleKind;
use crate::world::World;

/// Empirical fate of a tracked pair of separation `r` after one round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasPoint {
    pub r: usize,
    pub samples: u64,
    /// Separation went to `r - 2`.
    pub shrink: u64,
    /// Separation went to `r + 2`.
    pub grow: u64,
}

impl BiasPoint {
    pub fn p_shrink(&self) -> f64 {
        self.shrink as f64 / self.samples as f64
    }

    pub fn p_grow(&self) -> f64 {
        self.grow as f64 / self.samples as f64
    }

    /// Binomial standard error of `p_shrink`, using `expected` as the
    /// success probability.
    pub fn sigma(&self, expected: f64) -> f64 {
        (expected * (1.0 - expected) / self.samples as f64).sqrt()
    }
}

/// Number of pair-creation sites strictly closer to a tracked anyon than its
/// partner at distance `r`.
pub fn competing_pairs(r: usize, stride: PairStride) -> usize {
    match stride {
        PairStride::Four => (r + 2) / 4,
        PairStride::Three => r / 3,
    }
}

/// Predicted `P(r -> r-2)`.
///
/// With spacing four no created anyon is ever equidistant with the
/// partner, so the pair shrinks iff none of the `floor((r+2)/4)` closer
/// sites fires. With spacing three a site at exactly distance `r` exists
/// when `r = 2 mod 3`; firing it makes the two anyons break the tie in
/// opposite directions, so it also prevents shrinking.
pub fn predicted_shrink(p: f64, r: usize, stride: PairStride) -> f64 {
    let tie = usize::from(stride == PairStride::Three && r % 3 == 2);
    (1.0 - p).powi((competing_pairs(r, stride) + tie) as i32)
}

/// Predicted bias `1 - 2 P(shrink)`.
pub fn predicted_bias(p: f64, r: usize, stride: PairStride) -> f64 {
    1.0 - 2.0 * predicted_shrink(p, r, stride)
}

/// Ring long enough that every creation site up to distance `r + 3` fits.
pub fn ring_for(r: usize) -> usize {
    3 * r + 12
}

/// Separation of the tracked pair after one noise and decoding round,
/// or `None` if more than two anyons remain.
pub fn one_round(sp: SinglePair, r: usize, seed: u64) -> Result<Option<usize>> {
    let l = ring_for(r);
    let cfg = DecoderConfig::new(1, l, 0)?.with_v(Velocity::Relaxed)?;
    let mut w = World::new(cfg, NoiseModel::SinglePair(sp), ScheduleKind::Synchronous, seed)?;
    let a = (l - r) / 2;
    for i in a..a + r {
        w.code.flip_error(i);
    }
    w.step();
    let anyons = w.code.anyons();
    Ok(match anyons.as_slice() {
        [x, y] => Some(y - x),
        _ => None,
    })
}

/// Tally one-round outcomes for each odd `r`.
pub fn bias_scan(p: f64, r_values: &[usize], samples: u64, stride: PairStride, seed: u64) -> Result<Vec<BiasPoint>> {
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    r_values
        .iter()
        .map(|&r| {
            let sp = SinglePair::new(p, r)?.with_stride(stride);
            let outcomes: Vec<Option<usize>> = (0..samples)
                .into_par_iter()
                .map(|i| one_round(sp, r, mix_all(seed, &[r as u64, i])))
                .collect::<Result<_>>()?;
            Ok(BiasPoint {
                r,
                samples,
                shrink: outcomes.iter().filter(|&&o| o == Some(r - 2)).count() as u64,
                grow: outcomes.iter().filter(|&&o| o == Some(r + 2)).count() as u64,
            })
        })
        .collect()
}
