//! Field-based baseline decoders: anyons attract each other through an
//! instantaneous power-law force and hop one site per round along the
//! lattice direction best aligned with it.
//!
//! Measurements are perfect. Anyon positions are read straight off the
//! syndrome of `E xor C`; in the charged variant every anyon also carries a
//! charge `±1` that the noise and the decoder conserve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{CodeState, Geometry};
use crate::error::{Error, Result};
use crate::experiments::{tmem_from_times, Estimate};
use crate::noise::bernoulli_indices;
use crate::rng::mix_all;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub d: usize,
    pub l: usize,
    pub alpha: f64,
    pub charged: bool,
}

impl FieldConfig {
    pub fn new(d: usize, l: usize, alpha: f64, charged: bool) -> Result<Self> {
        Geometry::new(d, l)?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(FieldConfig { d, l, alpha, charged })
    }
}

/// Lattice direction `2a` is `+a`, `2a + 1` is `-a`.
pub type Dir = usize;

fn sign(k: Dir) -> i32 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Priority order used to break ties in [`phi`]: `+x, +y, .., -y, -x`.
pub fn priority(d: usize) -> Vec<Dir> {
    let pos = (0..d).map(|a| 2 * a);
    let neg = (0..d).rev().map(|a| 2 * a + 1);
    pos.chain(neg).collect()
}

/// Unit lattice direction with the largest dot product with `v`, ties
/// going to the earlier direction in [`priority`]. The zero vector gives
/// `None`.
pub fn phi(v: &[f64]) -> Option<Dir> {
    if v.iter().all(|&x| x == 0.0) {
        return None;
    }
    let mut best = f64::NEG_INFINITY;
    let mut dir = None;
    for k in priority(v.len()) {
        let dot = if k % 2 == 0 { v[k / 2] } else { -v[k / 2] };
        if dot > best {
            best = dot;
            dir = Some(k);
        }
    }
    dir
}

#[derive(Clone, Debug)]
pub struct FieldWorld {
    pub cfg: FieldConfig,
    pub code: CodeState,
    /// Charge at each site, zero where there is no anyon. Neutral worlds
    /// store `+1` for every anyon.
    pub charge: Vec<i8>,
    pub t: u64,
}

impl FieldWorld {
    pub fn new(cfg: FieldConfig) -> Result<Self> {
        let geom = Geometry::new(cfg.d, cfg.l)?;
        Ok(FieldWorld {
            cfg,
            code: CodeState::new(geom),
            charge: vec![0; geom.n_sites()],
            t: 0,
        })
    }

    pub fn anyons(&self) -> Vec<usize> {
        (0..self.charge.len()).filter(|&s| self.charge[s] != 0).collect()
    }

    pub fn total_charge(&self) -> i64 {
        self.charge.iter().map(|&q| i64::from(q)).sum()
    }

    /// Place an anyon by hand, e.g. to set up a force test. The code frame
    /// is not touched.
    pub fn place(&mut self, site: usize, q: i8) {
        self.charge[site] = q;
    }

    /// Flip the error on `link`, updating charges. Returns `false` if the
    /// charged variant forbids the flip because it would merge two equal
    /// charges.
    pub fn apply_noise_flip<R: Rng + ?Sized>(&mut self, link: usize, rng: &mut R) -> bool {
        let (a, b) = self.code.geom.link_endpoints(link);
        let (qa, qb) = (self.charge[a], self.charge[b]);
        let charged = self.cfg.charged;
        let (na, nb) = match (qa, qb) {
            (0, 0) => {
                let q = if charged && rng.random_bool(0.5) { -1 } else { 1 };
                (q, if charged { -q } else { 1 })
            }
            (q, 0) => (0, q),
            (0, q) => (q, 0),
            (x, y) if !charged || x == -y => (0, 0),
            _ => return false,
        };
        self.code.flip_error(link);
        self.charge[a] = na;
        self.charge[b] = nb;
        true
    }

    /// Minimum-image displacement from site `a` to site `b`.
    fn disp(&self, a: usize, b: usize) -> Vec<i64> {
        let g = &self.code.geom;
        (0..g.d).map(|ax| g.min_image(a, b, ax)).collect()
    }

    /// Force on every anyon, in the order of [`FieldWorld::anyons`].
    ///
    /// Neutral: `F_i = sum_j (r_j - r_i) / |r_j - r_i|^(alpha+1)`, pure
    /// attraction. Charged: `F_i = -q_i sum_j q_j (r_j - r_i) / |..|^(alpha+1)`,
    /// so opposite charges attract and equal charges repel.
    ///
    /// Terms are summed in order of displacement so that rounding, and with
    /// it every tie in [`phi`], is the same for translated configurations.
    pub fn compute_forces(&self) -> Vec<Vec<f64>> {
        let sites = self.anyons();
        let alpha = self.cfg.alpha;
        let sign = if self.cfg.charged { -1.0 } else { 1.0 };
        sites
            .iter()
            .map(|&i| {
                let qi = f64::from(self.charge[i]);
                let mut terms: Vec<(Vec<i64>, f64)> = sites
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (self.disp(i, j), f64::from(self.charge[j])))
                    .collect();
                terms.sort_by(|a, b| a.0.cmp(&b.0));
                let mut f = vec![0.0; self.cfg.d];
                for (r, qj) in terms {
                    let norm = r.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
                    let w = sign * qi * qj / norm.powf(alpha + 1.0);
                    for (fa, &ra) in f.iter_mut().zip(&r) {
                        *fa += w * ra as f64;
                    }
                }
                f
            })
            .collect()
    }

    /// Move every anyon one site along `phi` of its force, simultaneously.
    ///
    /// Anyons landing on the same site fuse; two anyons swapping across a
    /// link annihilate with a single correction. In the charged variant a
    /// move that would stack equal charges is cancelled and the anyon stays.
    pub fn decode_step(&mut self) {
        let sites = self.anyons();
        if sites.is_empty() {
            return;
        }
        let geom = self.code.geom;
        let mut dirs: Vec<Option<Dir>> = self.compute_forces().iter().map(|f| phi(f)).collect();
        let target = |s: usize, d: Option<Dir>| match d {
            Some(k) => geom.shift(s, k / 2, if k % 2 == 0 { 1 } else { -1 }),
            None => s,
        };
        let index: HashMap<usize, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        // Partner of each anyon in a head-on swap.
        let swaps = |dirs: &[Option<Dir>]| -> Vec<Option<usize>> {
            sites
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    let t = target(s, dirs[i]);
                    let j = *index.get(&t)?;
                    (t != s && target(t, dirs[j]) == s).then_some(j)
                })
                .collect()
        };
        if self.cfg.charged {
            loop {
                let sw = swaps(&dirs);
                let mut blocked = Vec::new();
                let mut net: HashMap<usize, (i32, Vec<usize>)> = HashMap::new();
                for (i, &s) in sites.iter().enumerate() {
                    match sw[i] {
                        Some(j) if self.charge[s] == self.charge[sites[j]] => blocked.push(i),
                        Some(_) => {}
                        None => {
                            let e = net.entry(target(s, dirs[i])).or_default();
                            e.0 += i32::from(self.charge[s]);
                            e.1.push(i);
                        }
                    }
                }
                for (q, members) in net.into_values() {
                    if q.abs() > 1 {
                        blocked.extend(members.into_iter().filter(|&i| dirs[i].is_some()));
                    }
                }
                if blocked.is_empty() {
                    break;
                }
                for i in blocked {
                    dirs[i] = None;
                }
            }
        }
        let sw = swaps(&dirs);
        let mut new_charge = vec![0i32; self.charge.len()];
        for (i, &s) in sites.iter().enumerate() {
            let Some(k) = dirs[i] else {
                new_charge[s] += i32::from(self.charge[s]);
                continue;
            };
            // The lower-indexed partner of a swap applies the single correction.
            if let Some(j) = sw[i] {
                if i < j {
                    self.code.apply_correction(geom.step_link(s, k / 2, sign(k)));
                }
                continue;
            }
            self.code.apply_correction(geom.step_link(s, k / 2, sign(k)));
            new_charge[target(s, Some(k))] += i32::from(self.charge[s]);
        }
        for (s, q) in new_charge.into_iter().enumerate() {
            self.charge[s] = if self.cfg.charged {
                q as i8
            } else {
                i8::from(q % 2 != 0)
            };
        }
    }

    /// One round: i.i.d. flips at rate `p`, then one decoding move.
    pub fn field_step<R: Rng + ?Sized>(&mut self, p: f64, rng: &mut R) {
        let mut flips = Vec::new();
        bernoulli_indices(self.code.geom.n_links(), p, rng, &mut flips);
        for l in flips {
            self.apply_noise_flip(l, rng);
        }
        self.decode_step();
        self.t += 1;
    }

    /// Logical class after noiseless decoding. The repetition code uses a
    /// majority vote; the toric code runs the field decoder until it is
    /// empty or `cap` rounds have passed (a cap counts as failure).
    pub fn failed(&self, cap: u64) -> Result<bool> {
        if self.cfg.d == 1 {
            return Ok(self.code.majority_vote_decode()? != self.code.initial_logical);
        }
        let mut w = self.clone();
        for _ in 0..cap {
            if w.anyons().is_empty() {
                return Ok(w.code.logical_class() != w.code.initial_logical);
            }
            w.decode_step();
        }
        Ok(true)
    }
}

/// Memory time of the field decoder under i.i.d. flips with perfect
/// measurements, probing every `probe` rounds.
pub fn field_tmem(cfg: FieldConfig, p: f64, trials: u64, max_rounds: u64, probe: u64, seed: u64) -> Result<Estimate> {
    if trials == 0 || probe == 0 {
        return Err(Error::InvalidParameter("trials and probe must be positive".into()));
    }
    let cap = 4 * cfg.l as u64 * cfg.d as u64;
    let times: Vec<Option<u64>> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Option<u64>> {
            let mut w = FieldWorld::new(cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(mix_all(seed, &[cfg.l as u64, p.to_bits(), i]));
            let mut t = 0;
            while t < max_rounds {
                let step = probe.min(max_rounds - t);
                for _ in 0..step {
                    w.field_step(p, &mut rng);
                }
                if w.failed(cap)? {
                    return Ok(Some(t));
                }
                t += step;
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    Ok(tmem_from_times(&times, max_rounds))
}
