//! Qubit-level state of the simulated code sector.
//!
//! Qubits live on the links of the periodic lattice `Z_L^d` and parity checks
//! on its sites. Link `(r, a)` joins site `r` to `r + e_a (mod L)`. Only one
//! error sector is tracked, so the whole state is classical.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which code is being simulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeKind {
    Rep1d,
    Toric2d,
}

impl CodeKind {
    pub fn dim(self) -> usize {
        match self {
            CodeKind::Rep1d => 1,
            CodeKind::Toric2d => 2,
        }
    }

    pub fn from_dim(d: usize) -> Result<Self> {
        match d {
            1 => Ok(CodeKind::Rep1d),
            2 => Ok(CodeKind::Toric2d),
            _ => Err(Error::InvalidParameter(format!("unsupported dimension {d}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CodeKind::Rep1d => "rep1d",
            CodeKind::Toric2d => "toric2d",
        }
    }
}

/// Periodic hypercubic lattice of side `l` in `d` dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Geometry {
    pub d: usize,
    pub l: usize,
}

impl Geometry {
    pub fn new(d: usize, l: usize) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::InvalidParameter(format!("d must be 1 or 2, got {d}")));
        }
        if l < 2 {
            return Err(Error::InvalidParameter(format!("L must be at least 2, got {l}")));
        }
        Ok(Geometry { d, l })
    }

    pub fn n_sites(&self) -> usize {
        self.l.pow(self.d as u32)
    }

    pub fn n_links(&self) -> usize {
        self.d * self.n_sites()
    }

    /// Coordinate of `site` along `axis`.
    pub fn coord(&self, site: usize, axis: usize) -> usize {
        (site / self.l.pow(axis as u32)) % self.l
    }

    pub fn site(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .rev()
            .fold(0, |acc, &c| acc * self.l + c % self.l)
    }

    /// Neighbour of `site` one step along `axis` in direction `sign` (+1/-1).
    pub fn shift(&self, site: usize, axis: usize, sign: i32) -> usize {
        let stride = self.l.pow(axis as u32);
        let c = self.coord(site, axis);
        let nc = if sign > 0 {
            (c + 1) % self.l
        } else {
            (c + self.l - 1) % self.l
        };
        site + nc * stride - c * stride
    }

    pub fn link(&self, site: usize, axis: usize) -> usize {
        axis * self.n_sites() + site
    }

    /// `(site, axis)` of a link index.
    pub fn link_parts(&self, link: usize) -> (usize, usize) {
        (link % self.n_sites(), link / self.n_sites())
    }

    pub fn link_endpoints(&self, link: usize) -> (usize, usize) {
        let (site, axis) = self.link_parts(link);
        (site, self.shift(site, axis, 1))
    }

    /// Link crossed when stepping from `site` along `axis`/`sign`.
    pub fn step_link(&self, site: usize, axis: usize, sign: i32) -> usize {
        if sign > 0 {
            self.link(site, axis)
        } else {
            self.link(self.shift(site, axis, -1), axis)
        }
    }

    /// Signed minimum-image displacement from `a` to `b` along `axis`.
    pub fn min_image(&self, a: usize, b: usize, axis: usize) -> i64 {
        let l = self.l as i64;
        let mut dx = self.coord(b, axis) as i64 - self.coord(a, axis) as i64;
        if dx > l / 2 {
            dx -= l;
        } else if dx < -(l / 2) {
            dx += l;
        }
        dx
    }
}

/// Error frame `E`, correction frame `C` and syndrome registers.
///
/// `E` and `C` are never merged; the physical configuration is `E xor C`.
#[derive(Clone, Debug)]
pub struct CodeState {
    pub geom: Geometry,
    pub errors: Vec<bool>,
    pub corrections: Vec<bool>,
    /// Reference syndrome (+1/-1) against which new measurements are compared.
    pub sigma_prev: Vec<i8>,
    pub sigma_meas: Vec<i8>,
    pub initial_logical: u8,
}

impl CodeState {
    pub fn new(geom: Geometry) -> Self {
        CodeState {
            geom,
            errors: vec![false; geom.n_links()],
            corrections: vec![false; geom.n_links()],
            sigma_prev: vec![1; geom.n_sites()],
            sigma_meas: vec![1; geom.n_sites()],
            initial_logical: 0,
        }
    }

    /// Fill `E` with i.i.d. flips at rate 1/2 (quench from a random state).
    pub fn randomize_errors<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for e in self.errors.iter_mut() {
            *e = rng.random_bool(0.5);
        }
    }

    pub fn flipped(&self, link: usize) -> bool {
        self.errors[link] ^ self.corrections[link]
    }

    pub fn flip_error(&mut self, link: usize) {
        self.errors[link] = !self.errors[link];
    }

    /// True syndrome bit of `E xor C` at `site` (`true` means eigenvalue -1).
    pub fn anyon_at(&self, site: usize) -> bool {
        let g = &self.geom;
        let mut parity = false;
        for axis in 0..g.d {
            parity ^= self.flipped(g.link(site, axis));
            parity ^= self.flipped(g.link(g.shift(site, axis, -1), axis));
        }
        parity
    }

    pub fn anyons(&self) -> Vec<usize> {
        (0..self.geom.n_sites()).filter(|&s| self.anyon_at(s)).collect()
    }

    pub fn syndrome_free(&self) -> bool {
        (0..self.geom.n_sites()).all(|s| !self.anyon_at(s))
    }

    /// Measure one site, flipping the outcome if `fault` is set.
    pub fn measure_site(&mut self, site: usize, fault: bool) {
        let v = if self.anyon_at(site) ^ fault { -1 } else { 1 };
        self.sigma_meas[site] = v;
    }

    /// Measure every site, flipping each outcome with probability `p_meas`.
    pub fn measure_syndromes<R: Rng + ?Sized>(&mut self, p_meas: f64, rng: &mut R) {
        for site in 0..self.geom.n_sites() {
            let fault = p_meas > 0.0 && rng.random_bool(p_meas);
            self.measure_site(site, fault);
        }
    }

    /// Measure every site with faults at exactly the listed sites.
    pub fn measure_with_faults(&mut self, faults: &[usize]) {
        for site in 0..self.geom.n_sites() {
            self.measure_site(site, false);
        }
        for &s in faults {
            self.sigma_meas[s] = -self.sigma_meas[s];
        }
    }

    /// Whether the latest measurement at `site` differs from the reference;
    /// the reference is updated to the latest measurement.
    pub fn take_delta(&mut self, site: usize) -> bool {
        let changed = self.sigma_meas[site] != self.sigma_prev[site];
        self.sigma_prev[site] = self.sigma_meas[site];
        changed
    }

    /// Sites whose measured syndrome changed since the previous round.
    pub fn syndrome_deltas(&mut self) -> Vec<usize> {
        (0..self.geom.n_sites())
            .filter(|&s| self.take_delta(s))
            .collect()
    }

    /// Flip `C` on `link`, compensating the reference syndrome at both
    /// endpoints so that the correction itself is never reported as a change.
    pub fn apply_correction(&mut self, link: usize) {
        self.corrections[link] = !self.corrections[link];
        let (a, b) = self.geom.link_endpoints(link);
        self.sigma_prev[a] = -self.sigma_prev[a];
        self.sigma_prev[b] = -self.sigma_prev[b];
    }

    /// Homology class of `E xor C`, one bit per axis.
    ///
    /// Bit `a` is the parity of axis-`a` links whose own `a` coordinate is 0,
    /// i.e. the flips crossing a fixed cut transverse to that axis.
    pub fn logical_class(&self) -> u8 {
        let g = &self.geom;
        let mut class = 0u8;
        for axis in 0..g.d {
            let mut parity = false;
            for site in 0..g.n_sites() {
                if g.coord(site, axis) == 0 {
                    parity ^= self.flipped(g.link(site, axis));
                }
            }
            if parity {
                class |= 1 << axis;
            }
        }
        class
    }

    pub fn n_flipped(&self) -> usize {
        (0..self.geom.n_links()).filter(|&l| self.flipped(l)).count()
    }

    /// Global majority vote on the repetition code.
    ///
    /// Returns class 1 when at least half (rounded up) of the spins are flipped.
    pub fn majority_vote_decode(&self) -> Result<u8> {
        if self.geom.d != 1 {
            return Err(Error::Unsupported(
                "majority vote is only defined for the repetition code".into(),
            ));
        }
        let l = self.geom.l;
        Ok(u8::from(self.n_flipped() >= l.div_ceil(2)))
    }
}
