//! Control lattice of the decoder: defects, messages and their local rules.
//!
//! Sites are `(r, z)` with `r` on the code lattice and `0 <= z <= Z`. Layer 0
//! receives freshly detected syndrome changes, layers `1..Z` form the bulk
//! where defects drift upward, and layer `Z` is the back wall where the
//! decoder acts as a purely spatial message-passing automaton. With `Z = 0`
//! the ingestion layer is itself the wall.
//!
//! Directions are numbered `k = 2 * axis + (negative as usize)` with axis `d`
//! standing for `z`, so increasing `k` is also the tie-break priority
//! `+x, -x, +y, -y, +z, -z`. The message `m^k` travels along direction `k`,
//! and a defect moves toward the source of its smallest message, i.e. along
//! the reverse of `k`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::code::{CodeState, Geometry};
use crate::error::{Error, Result};

/// Saturated message value.
pub const INF: u16 = u16::MAX;

/// Number of message sub-steps per round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Velocity {
    Finite(u32),
    /// Messages are fully relaxed every round.
    Relaxed,
}

impl Velocity {
    pub fn substeps(self, m_max: u16) -> u32 {
        match self {
            Velocity::Finite(v) => v,
            Velocity::Relaxed => u32::from(m_max) + 2,
        }
    }

    pub fn label(self) -> String {
        match self {
            Velocity::Finite(v) => v.to_string(),
            Velocity::Relaxed => "inf".into(),
        }
    }
}

/// Smallest `Z` with `(3/2)^Z >= L`.
pub fn z_log32(l: usize) -> usize {
    let (mut num, mut den) = (1u128, 1u128);
    let mut z = 0;
    while num < den * l as u128 {
        num *= 3;
        den *= 2;
        z += 1;
    }
    z
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub l: usize,
    pub d: usize,
    pub z: usize,
    pub v: Velocity,
    pub m_max: u16,
    /// Bias every non-x move with an extra `+x` step and double the drift.
    pub modified_rules: bool,
    /// Annihilate spatially adjacent defect pairs before the regular move.
    pub greedy_adjacent_fuse: bool,
    /// Move directions in tie-break order, best first.
    pub tie_break: Vec<usize>,
}

impl DecoderConfig {
    pub fn new(d: usize, l: usize, z: usize) -> Result<Self> {
        Geometry::new(d, l)?;
        Ok(DecoderConfig {
            l,
            d,
            z,
            v: Velocity::Finite(3),
            m_max: l.min(INF as usize - 1) as u16,
            modified_rules: false,
            greedy_adjacent_fuse: false,
            tie_break: default_tie_break(d),
        })
    }

    pub fn with_v(mut self, v: Velocity) -> Result<Self> {
        if v == Velocity::Finite(0) {
            return Err(Error::InvalidParameter("v must be positive".into()));
        }
        self.v = v;
        Ok(self)
    }

    pub fn geometry(&self) -> Geometry {
        Geometry { d: self.d, l: self.l }
    }
}

/// Static structure of the control lattice shared between copies.
#[derive(Debug)]
pub struct Lattice {
    pub geom: Geometry,
    pub z: usize,
    /// Sites per layer.
    pub layer: usize,
    pub n: usize,
    pub ndirs: usize,
    /// `cand[off[k*n+x]..off[k*n+x+1]]` are the `(site, cost)` pairs feeding
    /// message `k` at `x`.
    off: Vec<u32>,
    cand: Vec<(u32, u16)>,
}

impl Lattice {
    pub fn new(geom: Geometry, z: usize) -> Self {
        let layer = geom.n_sites();
        let n = layer * (z + 1);
        let ndirs = 2 * (geom.d + 1);
        let mut lat = Lattice {
            geom,
            z,
            layer,
            n,
            ndirs,
            off: Vec::with_capacity(ndirs * n + 1),
            cand: Vec::new(),
        };
        lat.off.push(0);
        for k in 0..ndirs {
            for x in 0..n {
                if lat.carries(k, x) {
                    lat.push_candidates(k, x);
                }
                lat.off.push(lat.cand.len() as u32);
            }
        }
        lat
    }

    pub fn site(&self, z: usize, r: usize) -> usize {
        z * self.layer + r
    }

    pub fn height(&self, x: usize) -> usize {
        x / self.layer
    }

    pub fn column(&self, x: usize) -> usize {
        x % self.layer
    }

    pub fn is_wall(&self, z: usize) -> bool {
        z == self.z
    }

    /// Layers that hold defects during message passing and feedback.
    pub fn is_active(&self, z: usize) -> bool {
        z >= 1 || self.z == 0
    }

    pub fn is_bulk(&self, z: usize) -> bool {
        z >= 1 && z < self.z
    }

    /// Layers whose defects take part in feedback. Layer 1 only sends and
    /// receives messages, so a defect there waits one round before moving.
    pub fn moves_at(&self, z: usize) -> bool {
        self.is_wall(z) || (z >= 2 && z < self.z)
    }

    pub fn axis(k: usize) -> usize {
        k / 2
    }

    pub fn sign(k: usize) -> i32 {
        if k % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn reverse(k: usize) -> usize {
        k ^ 1
    }

    pub fn is_vertical(&self, k: usize) -> bool {
        Self::axis(k) == self.geom.d
    }

    /// Whether site `x` holds a message for direction `k`.
    pub fn carries(&self, k: usize, x: usize) -> bool {
        let z = self.height(x);
        if !self.is_active(z) {
            return false;
        }
        !self.is_vertical(k) || self.is_bulk(z)
    }

    /// Neighbour of `x` along direction `k`, if it lies on the lattice.
    pub fn step(&self, x: usize, k: usize) -> Option<usize> {
        let axis = Self::axis(k);
        let sign = Self::sign(k);
        let z = self.height(x);
        if axis == self.geom.d {
            let nz = z as i64 + sign as i64;
            if nz < 0 || nz > self.z as i64 {
                return None;
            }
            Some(x - z * self.layer + nz as usize * self.layer)
        } else {
            let r = self.column(x);
            Some(z * self.layer + self.geom.shift(r, axis, sign))
        }
    }

    fn push_candidates(&mut self, k: usize, x: usize) {
        let Some(base) = self.step(x, Self::reverse(k)) else {
            return;
        };
        let axis = Self::axis(k);
        let z = self.height(x);
        // Transverse axes: the other spatial axes, plus z off the wall.
        let mut others: Vec<usize> = (0..self.geom.d).filter(|&a| a != axis).collect();
        if axis != self.geom.d && !self.is_wall(z) {
            others.push(self.geom.d);
        }
        let combos = 3usize.pow(others.len() as u32);
        for c in 0..combos {
            let mut y = Some(base);
            let mut cost = 1u16;
            let mut rem = c;
            for &a in &others {
                let off = rem % 3;
                rem /= 3;
                if off == 0 {
                    continue;
                }
                cost += 1;
                let dir = 2 * a + usize::from(off == 2);
                y = y.and_then(|y| self.step(y, dir));
            }
            if let Some(y) = y {
                if self.carries(k, y) {
                    self.cand.push((y as u32, cost));
                }
            }
        }
    }

    pub fn candidates(&self, k: usize, x: usize) -> &[(u32, u16)] {
        let i = k * self.n + x;
        &self.cand[self.off[i] as usize..self.off[i + 1] as usize]
    }

    /// Whether a defect at `u` sources message `k` into its `k`-neighbour.
    pub fn sources(&self, k: usize, u: usize) -> Option<usize> {
        let z = self.height(u);
        if !self.is_active(z) {
            return None;
        }
        if self.is_vertical(k) && !self.is_bulk(z) {
            return None;
        }
        let y = self.step(u, k)?;
        self.carries(k, y).then_some(y)
    }
}

/// A move of one defect one site along direction `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub from: usize,
    pub k: usize,
}

#[derive(Clone, Debug)]
pub struct ControlState {
    pub lat: Arc<Lattice>,
    /// `true` marks a defect (`s = -1`).
    pub s: Vec<bool>,
    /// Messages, indexed `k * n + x`. Never zero; `INF` when absent.
    pub m: Vec<u16>,
    /// Cooldown bits used by asynchronous schedules.
    pub c: Vec<bool>,
    pub m_max: u16,
    /// Move directions in tie-break order.
    pub order: Vec<usize>,
    scratch: Vec<u16>,
    mark: Vec<u32>,
}

impl ControlState {
    pub fn new(cfg: &DecoderConfig) -> Result<Self> {
        let geom = Geometry::new(cfg.d, cfg.l)?;
        if cfg.m_max == 0 || cfg.m_max == INF {
            return Err(Error::InvalidParameter("m_max out of range".into()));
        }
        let mut seen = cfg.tie_break.clone();
        seen.sort_unstable();
        if seen != (0..2 * cfg.d + 2).collect::<Vec<_>>() {
            return Err(Error::InvalidParameter(format!(
                "tie_break must order all {} directions exactly once",
                2 * cfg.d + 2
            )));
        }
        Ok(Self::with_lattice(
            Arc::new(Lattice::new(geom, cfg.z)),
            cfg.m_max,
            cfg.tie_break.clone(),
        ))
    }

    pub fn with_lattice(lat: Arc<Lattice>, m_max: u16, order: Vec<usize>) -> Self {
        let n = lat.n;
        let nm = lat.ndirs * n;
        ControlState {
            lat,
            s: vec![false; n],
            m: vec![INF; nm],
            c: vec![false; n],
            m_max,
            order,
            scratch: vec![INF; nm],
            mark: vec![0; n],
        }
    }

    pub fn msg(&self, k: usize, x: usize) -> u16 {
        self.m[k * self.lat.n + x]
    }

    pub fn defects(&self) -> Vec<usize> {
        (0..self.lat.n).filter(|&x| self.s[x]).collect()
    }

    pub fn defect_count(&self) -> usize {
        self.s.iter().filter(|&&b| b).count()
    }

    pub fn wall_defects(&self) -> usize {
        let lo = self.lat.z * self.lat.layer;
        self.s[lo..].iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.s.iter().any(|&b| b)
    }

    /// Toggle defects at `(r, 0)` for each reported syndrome change.
    pub fn ingest_defects(&mut self, sites: &[usize]) {
        for &r in sites {
            self.s[r] = !self.s[r];
        }
    }

    /// Shift column `r` one drift step toward the wall.
    pub fn drift_column(&mut self, r: usize, modified: bool) {
        let zmax = self.lat.z;
        if zmax == 0 {
            return;
        }
        if modified {
            self.drift_column_modified(r);
            return;
        }
        let n = self.lat.n;
        let layer = self.lat.layer;
        let at = |z: usize| z * layer + r;
        self.s[at(zmax)] ^= self.s[at(zmax - 1)];
        for z in (1..zmax).rev() {
            self.s[at(z)] = self.s[at(z - 1)];
            for k in 0..self.lat.ndirs {
                self.m[k * n + at(z)] = self.m[k * n + at(z - 1)];
            }
        }
        self.s[at(0)] = false;
        for k in 0..self.lat.ndirs {
            self.m[k * n + at(0)] = INF;
        }
    }

    /// Drift by two layers above layer 1, by one below.
    fn drift_column_modified(&mut self, r: usize) {
        let zmax = self.lat.z;
        let n = self.lat.n;
        let layer = self.lat.layer;
        let ndirs = self.lat.ndirs;
        let at = |z: usize| z * layer + r;
        let target = |z: usize| if z >= 2 { z + 2 } else { z + 1 }.min(zmax);
        let mut wall = self.s[at(zmax)];
        let mut new_s = vec![false; zmax];
        let mut new_m = vec![INF; zmax * ndirs];
        for z in 0..zmax {
            let t = target(z);
            let bit = self.s[at(z)];
            if t == zmax {
                wall ^= bit;
            } else {
                new_s[t] ^= bit;
                for k in 0..ndirs {
                    new_m[t * ndirs + k] = self.m[k * n + at(z)];
                }
            }
        }
        self.s[at(zmax)] = wall;
        for z in 0..zmax {
            self.s[at(z)] = new_s[z];
            for k in 0..ndirs {
                let v = new_m[z * ndirs + k];
                self.m[k * n + at(z)] = if self.lat.carries(k, at(z)) { v } else { INF };
            }
        }
    }

    pub fn vertical_drift(&mut self, modified: bool) {
        let zmax = self.lat.z;
        if zmax == 0 {
            return;
        }
        if modified {
            for r in 0..self.lat.layer {
                self.drift_column_modified(r);
            }
            return;
        }
        let n = self.lat.n;
        let layer = self.lat.layer;
        for r in 0..layer {
            let below = self.s[(zmax - 1) * layer + r];
            self.s[zmax * layer + r] ^= below;
        }
        self.s.copy_within(0..(zmax - 1) * layer, layer);
        self.s[..layer].fill(false);
        for k in 0..self.lat.ndirs {
            let base = k * n;
            self.m.copy_within(base..base + (zmax - 1) * layer, base + layer);
            self.m[base..base + layer].fill(INF);
        }
    }

    /// Every defect writes 1 into the adjacent message it emits.
    pub fn source_messages(&mut self) {
        let n = self.lat.n;
        for u in 0..n {
            if !self.s[u] {
                continue;
            }
            for k in 0..self.lat.ndirs {
                if let Some(y) = self.lat.sources(k, u) {
                    self.m[k * n + y] = 1;
                }
            }
        }
    }

    /// One synchronous propagation sub-step of every message. A defect
    /// acts as a source of value 0 for the messages it emits.
    pub fn propagate_messages(&mut self) {
        let n = self.lat.n;
        let lat = Arc::clone(&self.lat);
        for k in 0..lat.ndirs {
            let src = &self.m[k * n..(k + 1) * n];
            let dst = &mut self.scratch[k * n..(k + 1) * n];
            for (x, out) in dst.iter_mut().enumerate() {
                *out = relax(lat.candidates(k, x), src, &self.s, self.m_max);
            }
        }
        std::mem::swap(&mut self.m, &mut self.scratch);
    }

    /// Asynchronous counterpart of sourcing plus propagation at one site,
    /// reading the current values of its neighbours.
    pub fn relax_site(&mut self, x: usize) {
        let n = self.lat.n;
        let lat = Arc::clone(&self.lat);
        for k in 0..lat.ndirs {
            if !lat.carries(k, x) {
                continue;
            }
            let v = relax(lat.candidates(k, x), &self.m[k * n..(k + 1) * n], &self.s, self.m_max);
            self.m[k * n + x] = v;
        }
    }

    /// `v` rounds of sourcing and propagation.
    pub fn message_cycle(&mut self, v: Velocity) {
        for _ in 0..v.substeps(self.m_max) {
            self.source_messages();
            self.propagate_messages();
        }
    }

    /// Direction a defect at `x` would move in, if any.
    pub fn preferred_move(&self, x: usize) -> Option<usize> {
        let z = self.lat.height(x);
        if !self.lat.moves_at(z) {
            return None;
        }
        let mut best = INF;
        let mut dir = None;
        for &k in &self.order {
            if self.lat.is_vertical(k) && !self.lat.is_bulk(z) {
                continue;
            }
            let v = self.msg(Lattice::reverse(k), x);
            if v < best {
                best = v;
                dir = Some(k);
            }
        }
        dir
    }

    /// Apply a set of moves simultaneously.
    ///
    /// Defects landing together fuse pairwise. Two defects swapping places
    /// across one link annihilate and the link is corrected once. Spatial
    /// moves flip the crossed link in the correction frame; vertical moves
    /// touch only the control lattice. Returns the landing sites.
    pub fn apply_moves(&mut self, code: &mut CodeState, moves: &[Move]) -> Vec<usize> {
        let lat = Arc::clone(&self.lat);
        let targets: Vec<usize> = moves
            .iter()
            .map(|mv| lat.step(mv.from, mv.k).expect("move leaves the lattice"))
            .collect();
        for (i, mv) in moves.iter().enumerate() {
            self.mark[mv.from] = i as u32 + 1;
        }
        let mut head_on = vec![false; moves.len()];
        for (i, mv) in moves.iter().enumerate() {
            let j = self.mark[targets[i]];
            if j > 0 {
                let j = j as usize - 1;
                if j != i && targets[j] == mv.from && Lattice::reverse(moves[j].k) == mv.k {
                    head_on[i] = true;
                }
            }
        }
        let mut landed = Vec::with_capacity(moves.len());
        for (i, mv) in moves.iter().enumerate() {
            let t = targets[i];
            let spatial = !lat.is_vertical(mv.k);
            if head_on[i] {
                self.s[mv.from] = !self.s[mv.from];
                // Correct the shared link once, from the lower-indexed side.
                if spatial && mv.from < t {
                    let r = lat.column(mv.from);
                    code.apply_correction(lat.geom.step_link(r, Lattice::axis(mv.k), Lattice::sign(mv.k)));
                }
                continue;
            }
            self.s[mv.from] = !self.s[mv.from];
            self.s[t] = !self.s[t];
            if spatial {
                let r = lat.column(mv.from);
                code.apply_correction(lat.geom.step_link(r, Lattice::axis(mv.k), Lattice::sign(mv.k)));
            }
            landed.push(t);
        }
        for mv in moves {
            self.mark[mv.from] = 0;
        }
        landed
    }

    /// Annihilate spatially adjacent defect pairs within a layer, scanning
    /// defects in site order and partners in priority order.
    pub fn fuse_adjacent(&mut self, code: &mut CodeState, among: &[usize]) {
        let lat = Arc::clone(&self.lat);
        for &x in among {
            if !self.s[x] {
                continue;
            }
            for k in 0..2 * lat.geom.d {
                let y = lat.step(x, k).expect("spatial step");
                if y != x && self.s[y] {
                    self.s[x] = false;
                    self.s[y] = false;
                    let r = lat.column(x);
                    code.apply_correction(lat.geom.step_link(r, Lattice::axis(k), Lattice::sign(k)));
                    break;
                }
            }
        }
    }

    /// Feedback for the defects in `among`: each moves one site toward its
    /// smallest message. Returns the sites where moved defects landed.
    pub fn feedback_on(&mut self, code: &mut CodeState, among: &[usize], cfg: &DecoderConfig) -> Vec<usize> {
        if cfg.greedy_adjacent_fuse {
            self.fuse_adjacent(code, among);
        }
        let moves: Vec<Move> = among
            .iter()
            .filter(|&&x| self.s[x])
            .filter_map(|&x| self.preferred_move(x).map(|k| Move { from: x, k }))
            .collect();
        let mut landed = self.apply_moves(code, &moves);
        if cfg.modified_rules {
            let bias: Vec<Move> = moves
                .iter()
                .filter(|mv| Lattice::axis(mv.k) != 0)
                .filter_map(|mv| {
                    let t = self.lat.step(mv.from, mv.k)?;
                    self.s[t].then_some(Move { from: t, k: 0 })
                })
                .collect();
            landed.retain(|t| !bias.iter().any(|b| b.from == *t));
            landed.extend(self.apply_moves(code, &bias));
        }
        landed
    }

    pub fn apply_feedback(&mut self, code: &mut CodeState, cfg: &DecoderConfig) {
        let defects = self.defects();
        self.feedback_on(code, &defects, cfg);
    }

    /// Human-readable dump of defects and finite messages.
    pub fn snapshot(&self) -> String {
        let lat = &self.lat;
        let mut out = String::new();
        for z in (0..=lat.z).rev() {
            out.push_str(&format!("z={z:>2} "));
            for r in 0..lat.layer {
                out.push(if self.s[lat.site(z, r)] { '#' } else { '.' });
            }
            out.push('\n');
        }
        for k in 0..lat.ndirs {
            let axis = ["x", "y", "z"][if Lattice::axis(k) == lat.geom.d { 2 } else { Lattice::axis(k) }];
            let sign = if Lattice::sign(k) > 0 { '+' } else { '-' };
            for x in 0..lat.n {
                let v = self.msg(k, x);
                if v != INF {
                    out.push_str(&format!(
                        "m{sign}{axis} z={} r={} {v}\n",
                        lat.height(x),
                        lat.column(x)
                    ));
                }
            }
        }
        out
    }
}

/// Default priority `+x, +y, +z, -z, -y, -x`.
///
/// Nesting the negative directions in reverse keeps two defects on a
/// diagonal from swapping places forever: whichever axis one of them
/// prefers, the other prefers the other axis, so they meet.
pub fn default_tie_break(d: usize) -> Vec<usize> {
    let pos = (0..=d).map(|a| 2 * a);
    let neg = (0..=d).rev().map(|a| 2 * a + 1);
    pos.chain(neg).collect()
}

#[inline]
fn relax(cands: &[(u32, u16)], src: &[u16], defects: &[bool], m_max: u16) -> u16 {
    let mut best = INF;
    for &(y, cost) in cands {
        let y = y as usize;
        let w = if defects[y] {
            cost
        } else {
            let v = src[y];
            if v == INF {
                continue;
            }
            v.saturating_add(cost)
        };
        if w < best {
            best = w;
        }
    }
    if best > m_max {
        INF
    } else {
        best
    }
}
