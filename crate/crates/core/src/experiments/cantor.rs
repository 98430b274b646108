//! Cantor-string error patterns that defeat local message passing.

use serde::{Deserialize, Serialize};

use crate::automaton::{DecoderConfig, Velocity};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::schedule::ScheduleKind;
use crate::world::{default_cap, Offline, World};

/// Positions along a non-contractible line that carry a flip.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorPattern {
    pub l: usize,
    pub q: usize,
    pub kept: Vec<usize>,
}

impl CantorPattern {
    pub fn weight(&self) -> usize {
        self.kept.len()
    }
}

/// Start from the full line `0..L`, split every segment longer than
/// `min_segment` into `q` near-equal parts and drop the last one, then
/// recurse on the survivors.
pub fn cantor_string(l: usize, q: usize, min_segment: usize) -> Result<CantorPattern> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("q must be at least 2, got {q}")));
    }
    if min_segment == 0 {
        return Err(Error::InvalidParameter("min_segment must be positive".into()));
    }
    let mut kept = Vec::new();
    let mut stack = vec![(0usize, l)];
    while let Some((start, len)) = stack.pop() {
        if len <= min_segment || len < q {
            kept.extend(start..start + len);
            continue;
        }
        for i in 0..q - 1 {
            let a = i * len / q;
            let b = (i + 1) * len / q;
            stack.push((start + a, b - a));
        }
    }
    kept.sort_unstable();
    Ok(CantorPattern { l, q, kept })
}

/// `L ((q-1)/q)^{log_q L}`, i.e. `L^{log_q(q-1)}`.
pub fn closed_form_weight(l: usize, q: usize) -> f64 {
    let k = (l as f64).ln() / (q as f64).ln();
    l as f64 * ((q - 1) as f64 / q as f64).powf(k)
}

/// Where and how the pattern is laid onto the code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    /// Shift along the line.
    pub offset: usize,
    /// Axis of the line (two dimensions only).
    pub axis: usize,
    /// Coordinate of the line along the other axis (two dimensions only).
    pub row: usize,
    /// Lay the pattern in reverse order.
    pub reversed: bool,
}

impl Default for Placement {
    fn default() -> Self {
        Placement {
            offset: 0,
            axis: 0,
            row: 0,
            reversed: false,
        }
    }
}

/// A noiseless world holding the pattern as its error frame.
pub fn cantor_world(cfg: DecoderConfig, pattern: &CantorPattern, at: Placement) -> Result<World> {
    if pattern.l != cfg.l {
        return Err(Error::InvalidParameter(format!(
            "pattern length {} does not match L = {}",
            pattern.l, cfg.l
        )));
    }
    if at.axis >= cfg.d {
        return Err(Error::InvalidParameter(format!("axis {} out of range", at.axis)));
    }
    let mut w = World::new(cfg, NoiseModel::Silent, ScheduleKind::Synchronous, 0)?;
    let l = w.cfg.l;
    let geom = w.code.geom;
    for &i in &pattern.kept {
        let i = if at.reversed { l - 1 - i } else { i };
        let along = (i + at.offset) % l;
        let site = if geom.d == 1 {
            along
        } else {
            let mut c = [0usize; 2];
            c[at.axis] = along;
            c[1 - at.axis] = at.row % l;
            geom.site(&c)
        };
        w.code.flip_error(geom.link(site, at.axis));
    }
    Ok(w)
}

/// Offline decoding of a Cantor pattern. A failure of the decoder is
/// reported as `success = false` or a nontrivial class.
pub fn cantor_offline(
    d: usize,
    l: usize,
    z: usize,
    v: Velocity,
    pattern: &CantorPattern,
    at: Placement,
) -> Result<Offline> {
    let cfg = DecoderConfig::new(d, l, z)?.with_v(v)?;
    let w = cantor_world(cfg, pattern, at)?;
    Ok(w.offline_decode(default_cap(&w.cfg)))
}
