//! Noise models applied to the error frame at the start of each round.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::code::CodeState;
use crate::error::{Error, Result};

/// Flips and measurement faults drawn for a single round.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundNoise {
    pub flips: Vec<usize>,
    pub faults: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Flip,
    Fault,
}

/// One line of a replayable noise log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseEvent {
    pub round: u64,
    pub location: usize,
    pub kind: NoiseKind,
}

/// Spacing of the pair-creation sites used by the single-pair adversary.
///
/// `Three` places the `n`-th created pair at distances `3n-1, 3n` from the
/// tracked anyon. `Four` places it at `4n-2, 4n-1`, which keeps every anyon's
/// nearest neighbour unique and yields `floor((r+2)/4)` competing pairs for
/// a tracked pair of separation `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairStride {
    Three,
    Four,
}

impl PairStride {
    /// Distance from a tracked anyon to the near end of the `n`-th pair.
    fn offset(self, n: usize) -> usize {
        match self {
            PairStride::Three => 3 * n - 1,
            PairStride::Four => 4 * n - 2,
        }
    }
}

/// Adversarial noise that keeps a single large anyon pair alive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinglePair {
    pub p: f64,
    /// Separation of freshly nucleated pairs; odd and larger than 2.
    pub r0: usize,
    pub stride: PairStride,
}

impl SinglePair {
    pub fn new(p: f64, r0: usize) -> Result<Self> {
        check_prob(p, "p")?;
        if r0 <= 2 || r0 % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "r0 must be odd and larger than 2, got {r0}"
            )));
        }
        Ok(SinglePair {
            p,
            r0,
            stride: PairStride::Three,
        })
    }

    pub fn with_stride(mut self, stride: PairStride) -> Self {
        self.stride = stride;
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Replay {
    rounds: BTreeMap<u64, RoundNoise>,
}

impl Replay {
    pub fn from_events(events: &[NoiseEvent]) -> Self {
        let mut rounds: BTreeMap<u64, RoundNoise> = BTreeMap::new();
        for ev in events {
            let entry = rounds.entry(ev.round).or_default();
            match ev.kind {
                NoiseKind::Flip => entry.flips.push(ev.location),
                NoiseKind::Fault => entry.faults.push(ev.location),
            }
        }
        Replay { rounds }
    }
}

#[derive(Clone, Debug)]
pub enum NoiseModel {
    Silent,
    Iid { p_flip: f64, p_meas: f64 },
    SinglePair(SinglePair),
    Blocked { pair: SinglePair, block_width: usize },
    Replay(Replay),
}

fn check_prob(p: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

impl NoiseModel {
    /// I.i.d. flips and measurement faults. With `depolarizing` the strength
    /// `p` is a depolarizing rate and the tracked sector sees flips at `2p/3`.
    pub fn iid(p: f64, p_meas: f64, depolarizing: bool) -> Result<Self> {
        check_prob(p, "p")?;
        check_prob(p_meas, "p_meas")?;
        let p_flip = if depolarizing { 2.0 * p / 3.0 } else { p };
        Ok(NoiseModel::Iid { p_flip, p_meas })
    }

    pub fn blocked(pair: SinglePair, block_width: usize, l: usize) -> Result<Self> {
        if block_width > l {
            return Err(Error::InvalidParameter(format!(
                "block width {block_width} exceeds L = {l}"
            )));
        }
        if block_width < pair.r0 + 2 {
            return Err(Error::InvalidParameter(format!(
                "block width {block_width} cannot hold a pair of separation {}",
                pair.r0
            )));
        }
        Ok(NoiseModel::Blocked { pair, block_width })
    }

    /// Probability of a faulty syndrome readout at a single site.
    pub fn meas_rate(&self) -> f64 {
        match self {
            NoiseModel::Iid { p_meas, .. } => *p_meas,
            _ => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, code: &CodeState, rng: &mut R, round: u64) -> RoundNoise {
        let mut out = RoundNoise::default();
        match self {
            NoiseModel::Silent => {}
            NoiseModel::Iid { p_flip, p_meas } => {
                bernoulli_indices(code.geom.n_links(), *p_flip, rng, &mut out.flips);
                bernoulli_indices(code.geom.n_sites(), *p_meas, rng, &mut out.faults);
            }
            NoiseModel::SinglePair(sp) => {
                let strip = Strip::of(code);
                sample_pair_in(sp, &strip, code, None, rng, &mut out.flips);
            }
            NoiseModel::Blocked { pair, block_width } => {
                let strip = Strip::of(code);
                for b in 0..strip.len / block_width {
                    let mut sub = ChaCha8Rng::seed_from_u64(rng.random());
                    let range = (b * block_width, (b + 1) * block_width);
                    sample_pair_in(pair, &strip, code, Some(range), &mut sub, &mut out.flips);
                }
            }
            NoiseModel::Replay(r) => {
                if let Some(rn) = r.rounds.get(&round) {
                    out = rn.clone();
                }
            }
        }
        out
    }
}

/// Indices in `0..n` selected independently with probability `p`.
pub fn bernoulli_indices<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R, out: &mut Vec<usize>) {
    if p <= 0.0 || n == 0 {
        return;
    }
    if p >= 1.0 {
        out.extend(0..n);
        return;
    }
    // Geometric gaps between successes.
    let ln_q = (1.0 - p).ln();
    let mut i = 0usize;
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / ln_q).floor();
        if skip >= (n - i) as f64 {
            break;
        }
        i += skip as usize;
        out.push(i);
        i += 1;
        if i >= n {
            break;
        }
    }
}

/// The line of links acted on by the pair adversary: the whole ring in one
/// dimension, the x-links of row `y = 0` in two.
struct Strip {
    len: usize,
}

impl Strip {
    fn of(code: &CodeState) -> Self {
        Strip { len: code.geom.l }
    }

    /// Code link of strip link `i`, which joins strip sites `i` and `i + 1`.
    fn link(&self, code: &CodeState, i: usize) -> usize {
        code.geom.link(i % self.len, 0)
    }
}

/// Maximal runs `(start, len)` of flipped strip links. Wrapping runs are
/// reported only when `range` is `None`.
fn flipped_runs(strip: &Strip, code: &CodeState, range: Option<(usize, usize)>) -> Vec<(usize, usize)> {
    let n = strip.len;
    let bit = |i: usize| code.flipped(strip.link(code, i));
    let mut runs = Vec::new();
    match range {
        Some((b0, b1)) => {
            // Links b0..b1-2 join sites inside the block. Runs continuing
            // across the block edge are ignored.
            let outside = |i: usize| bit((i + n) % n);
            let mut i = b0;
            while i + 1 < b1 {
                if bit(i) {
                    let start = i;
                    while i + 1 < b1 && bit(i) {
                        i += 1;
                    }
                    let crosses = (start == b0 && outside(b0 + n - 1))
                        || (i + 1 == b1 && outside(b1 - 1));
                    if !crosses {
                        runs.push((start, i - start));
                    }
                } else {
                    i += 1;
                }
            }
        }
        None => {
            let Some(first_clear) = (0..n).find(|&i| !bit(i)) else {
                return runs;
            };
            let mut k = 0;
            while k < n {
                let i = first_clear + k;
                if bit(i % n) {
                    let start = i;
                    let mut j = i;
                    while j < first_clear + n && bit(j % n) {
                        j += 1;
                    }
                    runs.push((start % n, j - start));
                    k = j - first_clear;
                } else {
                    k += 1;
                }
            }
        }
    }
    runs
}

fn sample_pair_in<R: Rng + ?Sized>(
    sp: &SinglePair,
    strip: &Strip,
    code: &CodeState,
    range: Option<(usize, usize)>,
    rng: &mut R,
    flips: &mut Vec<usize>,
) {
    let n = strip.len;
    let runs = flipped_runs(strip, code, range);
    let tracked = runs
        .iter()
        .copied()
        .filter(|&(_, len)| len > 2)
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
    let (lo, hi) = range.unwrap_or((0, n));
    match tracked {
        None => {
            if rng.random::<f64>() < sp.p.powi(sp.r0 as i32) {
                let centre = (lo + hi) / 2;
                let start = centre - (sp.r0 - 1) / 2;
                for i in start..start + sp.r0 {
                    flips.push(strip.link(code, i));
                }
            }
        }
        Some((start, len)) => {
            // Tracked anyons at strip sites `start` and `start + len`, in
            // unwrapped coordinates.
            let r_l = start as i64;
            let r_r = (start + len) as i64;
            let mut k = 1usize;
            loop {
                let g = sp.stride.offset(k) as i64;
                let right = r_r + g;
                let left = r_l - g - 1;
                let in_range = match range {
                    Some((b0, b1)) => left >= b0 as i64 && right + 1 <= b1 as i64 - 1,
                    None => 2 * g + 4 <= n as i64 - len as i64,
                };
                if !in_range {
                    break;
                }
                if rng.random::<f64>() < sp.p {
                    let wrap = |x: i64| x.rem_euclid(n as i64) as usize;
                    flips.push(strip.link(code, wrap(left)));
                    flips.push(strip.link(code, wrap(right)));
                }
                k += 1;
            }
        }
    }
}

pub fn write_log<W: Write>(events: &[NoiseEvent], mut w: W) -> Result<()> {
    for ev in events {
        serde_json::to_writer(&mut w, ev)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_log<R: BufRead>(r: R) -> Result<Vec<NoiseEvent>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

/// Critical size above which pairs tend to grow under the single-pair
/// adversary.
pub fn critical_pair_size(p: f64) -> f64 {
    4.0 * std::f64::consts::LN_2 / (1.0 / (1.0 - p)).ln() - 2.0
}
