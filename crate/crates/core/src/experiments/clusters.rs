//! Hierarchical decomposition of a noise history into buffered clusters.
//!
//! A point `u` of a set `N` is `(W, B)`-clustered if some ∞-ball of
//! radius `W/2` contains `u` while the shell of thickness `B` around that
//! ball holds no point of `N`. Level `k` removes the `(w n^k, b n^k)`-clustered
//! points of `N_k` to form `N_{k+1}`.
//!
//! Centres may sit on half-integer coordinates, so all geometry is done on
//! doubled coordinates. Distances are not wrapped.

use std::collections::HashMap;

use crate::code::Geometry;
use crate::error::{Error, Result};
use crate::noise::NoiseEvent;

pub type Point = Vec<i64>;

/// Surviving points at each level; `levels[0]` is the input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub levels: Vec<Vec<Point>>,
}

impl Decomposition {
    pub fn survivors(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }
}

fn cheb(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0)
}

/// Whether the doubled centre `c` has an empty shell among `others`
/// (doubled coordinates).
fn shell_empty(c: &[i64], others: &[&Point], w: i64, b: i64) -> bool {
    others.iter().all(|v| {
        let d = cheb(c, v);
        d <= w || d > w + 2 * b
    })
}

/// Every doubled centre within doubled distance `w` of `u`, in
/// lexicographic order starting from `u` itself.
fn centres(u: &[i64], w: i64, mut visit: impl FnMut(&[i64]) -> bool) -> bool {
    if visit(u) {
        return true;
    }
    let dim = u.len();
    let mut off = vec![-w; dim];
    loop {
        let c: Vec<i64> = u.iter().zip(&off).map(|(a, o)| a + o).collect();
        if off.iter().any(|&o| o != 0) && visit(&c) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == dim {
                return false;
            }
            off[i] += 1;
            if off[i] <= w {
                break;
            }
            off[i] = -w;
            i += 1;
        }
    }
}

/// Indices of the `(w, b)`-clustered points of `pts`.
fn clustered(pts: &[Point], w: i64, b: i64) -> Vec<bool> {
    let dim = pts.first().map_or(0, Vec::len);
    let dbl: Vec<Point> = pts
        .iter()
        .map(|p| p.iter().map(|x| 2 * x).collect())
        .collect();
    // Anything that can reach the shell lies within w + b of u.
    let reach = w + b;
    let cell = reach.max(1);
    let key = |p: &Point| -> Point { p.iter().map(|x| x.div_euclid(cell)).collect() };
    let mut grid: HashMap<Point, Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let mut out = vec![false; pts.len()];
    let n_cells = 3usize.pow(dim as u32);
    for (i, p) in pts.iter().enumerate() {
        let k = key(p);
        let mut near: Vec<&Point> = Vec::new();
        for idx in 0..n_cells {
            let mut rem = idx;
            let nk: Point = k
                .iter()
                .map(|&x| {
                    let o = (rem % 3) as i64 - 1;
                    rem /= 3;
                    x + o
                })
                .collect();
            if let Some(list) = grid.get(&nk) {
                for &j in list {
                    if j != i && cheb(&pts[j], p) <= reach {
                        near.push(&dbl[j]);
                    }
                }
            }
        }
        out[i] = near.is_empty() || centres(&dbl[i], w, |c| shell_empty(c, &near, w, b));
    }
    out
}

/// Peel off clustered points level by level.
///
/// Level `k` uses ball width `w n^k` and buffer `b n^k`. Returns
/// `k_levels + 1` sets.
pub fn cluster_decompose(points: &[Point], w: i64, b: i64, n: i64, k_levels: usize) -> Result<Decomposition> {
    if !(w >= 1 && w < b && n > 1) {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= w < b and n > 1, got w={w}, b={b}, n={n}"
        )));
    }
    if let Some(first) = points.first() {
        if points.iter().any(|p| p.len() != first.len()) {
            return Err(Error::InvalidParameter("points of mixed dimension".into()));
        }
    }
    let mut levels = vec![points.to_vec()];
    let mut scale = 1i64;
    for _ in 0..k_levels {
        let cur = levels.last().expect("non-empty");
        let gone = clustered(cur, w * scale, b * scale);
        let next = cur
            .iter()
            .zip(gone)
            .filter(|(_, g)| !g)
            .map(|(p, _)| p.clone())
            .collect();
        levels.push(next);
        scale = scale.saturating_mul(n);
    }
    Ok(Decomposition { levels })
}

/// Spacetime coordinates of noise events: site coordinates of the flipped
/// link's base site (or faulty site) followed by the round.
pub fn event_points(events: &[NoiseEvent], geom: Geometry) -> Vec<Point> {
    use crate::noise::NoiseKind;
    events
        .iter()
        .map(|e| {
            let site = match e.kind {
                NoiseKind::Flip => geom.link_parts(e.location).0,
                NoiseKind::Fault => e.location,
            };
            let mut p: Point = (0..geom.d).map(|a| geom.coord(site, a) as i64).collect();
            p.push(e.round as i64);
            p
        })
        .collect()
}
