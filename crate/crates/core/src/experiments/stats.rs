//! Small numerical helpers: least-squares fits, curve crossings, jackknife.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `y = intercept + slope * f(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub intercept: f64,
    pub slope: f64,
    pub rss: f64,
    pub r2: f64,
    pub n: usize,
}

impl Fit {
    /// Akaike information criterion for Gaussian residuals with two
    /// parameters. A floor on the residual keeps exact fits finite.
    pub fn aic(&self) -> f64 {
        let n = self.n as f64;
        let rss = self.rss.max(1e-300);
        n * (rss / n).ln() + 4.0
    }
}

pub fn fit_with<F: Fn(f64) -> f64>(x: &[f64], y: &[f64], f: F) -> Result<Fit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(
            "a fit needs at least two points of matching length".into(),
        ));
    }
    let n = x.len() as f64;
    let u: Vec<f64> = x.iter().map(|&v| f(v)).collect();
    let mu = u.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|v| (v - mu).powi(2)).sum();
    if suu == 0.0 {
        return Err(Error::InvalidParameter("degenerate abscissae".into()));
    }
    let suy: f64 = u.iter().zip(y).map(|(a, b)| (a - mu) * (b - my)).sum();
    let slope = suy / suu;
    let intercept = my - slope * mu;
    let rss: f64 = u
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let tss: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Ok(Fit {
        intercept,
        slope,
        rss,
        r2,
        n: x.len(),
    })
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<Fit> {
    fit_with(x, y, |v| v)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean.
pub fn sem(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Delete-one jackknife of a statistic computed from per-sample rows.
/// Returns `(full-sample value, stderr)`.
pub fn jackknife<T, F: Fn(&[&T]) -> f64>(rows: &[T], stat: F) -> (f64, f64) {
    let all: Vec<&T> = rows.iter().collect();
    let full = stat(&all);
    let n = rows.len();
    if n < 2 {
        return (full, 0.0);
    }
    let leave: Vec<f64> = (0..n)
        .map(|i| {
            let sub: Vec<&T> = all
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, r)| *r)
                .collect();
            stat(&sub)
        })
        .collect();
    let m = mean(&leave);
    let var = leave.iter().map(|x| (x - m).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    (full, var.sqrt())
}

/// Samples of an observable at increasing control parameter for one size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub l: usize,
    /// `(x, y)` pairs sorted by `x`.
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(l: usize, mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Curve { l, points }
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    /// Piecewise-linear interpolation; `None` outside the sampled range.
    pub fn interp(&self, x: f64) -> Option<f64> {
        let pts = &self.points;
        if pts.is_empty() || x < pts[0].0 || x > pts[pts.len() - 1].0 {
            return None;
        }
        let i = pts.partition_point(|p| p.0 < x);
        if i < pts.len() && pts[i].0 == x {
            return Some(pts[i].1);
        }
        let (x0, y0) = pts[i - 1];
        let (x1, y1) = pts[i];
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

/// Where the curves `a` and `b` cross, judged at the abscissae of `a`.
///
/// The first sign change of `b - a` is located; a straight line is then
/// fitted to the difference over the two points on either side, which
/// damps single-point noise.
pub fn crossing(a: &Curve, b: &Curve) -> Option<f64> {
    let diff: Vec<(f64, f64)> = a
        .points
        .iter()
        .filter_map(|&(x, ya)| b.interp(x).map(|yb| (x, yb - ya)))
        .collect();
    let i = diff
        .windows(2)
        .position(|w| (w[0].1 < 0.0 && w[1].1 >= 0.0) || (w[0].1 > 0.0 && w[1].1 <= 0.0))?;
    let lo = i.saturating_sub(1);
    let hi = (i + 3).min(diff.len());
    let xs: Vec<f64> = diff[lo..hi].iter().map(|d| d.0).collect();
    let ys: Vec<f64> = diff[lo..hi].iter().map(|d| d.1).collect();
    let fit = linear_fit(&xs, &ys).ok()?;
    let rising = diff[i + 1].1 > diff[i].1;
    let root = if fit.slope != 0.0 && (fit.slope > 0.0) == rising {
        -fit.intercept / fit.slope
    } else {
        f64::NAN
    };
    let (x0, d0) = diff[i];
    let (x1, d1) = diff[i + 1];
    if root.is_finite() && root >= diff[lo].0 && root <= diff[hi - 1].0 {
        Some(root)
    } else {
        Some(x0 + (x1 - x0) * (-d0) / (d1 - d0))
    }
}

/// Pairwise crossings of curves of different sizes. Returns
/// `(l_small, l_large, x)` for every pair that crosses.
pub fn pairwise_crossings(curves: &[Curve]) -> Vec<(usize, usize, f64)> {
    let mut sorted: Vec<&Curve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.l);
    let mut out = Vec::new();
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            if let Some(x) = crossing(sorted[i], sorted[j]) {
                out.push((sorted[i].l, sorted[j].l, x));
            }
        }
    }
    out
}

/// Mean of all pairwise crossings, or `None` if some pair fails to cross.
pub fn common_crossing(curves: &[Curve]) -> Option<f64> {
    let n = curves.len();
    let xs = pairwise_crossings(curves);
    if n < 2 || xs.len() != n * (n - 1) / 2 {
        return None;
    }
    Some(mean(&xs.iter().map(|c| c.2).collect::<Vec<_>>()))
}
