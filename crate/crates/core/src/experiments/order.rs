//! Magnetization-like order parameters of the decoded state and finite-size
//! scaling collapse.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{jackknife, Curve};
use super::RunSpec;
use crate::code::CodeState;
use crate::error::{Error, Result};

/// Overlap of the corrected spins with the encoded reference,
/// `(1/N) sum_i (-1)^{(E xor C)_i}`, taken over every qubit. The sign is
/// flipped when the encoded logical is 1.
pub fn magnetization(code: &CodeState) -> f64 {
    let n = code.geom.n_links();
    let agree = (0..n).filter(|&i| !code.flipped(i)).count();
    let m = (2.0 * agree as f64 - n as f64) / n as f64;
    if code.initial_logical == 0 {
        m
    } else {
        -m
    }
}

/// Moments of one sample of `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub m: f64,
    pub abs: f64,
    pub m2: f64,
    pub m4: f64,
}

impl Moments {
    pub fn of(m: f64) -> Self {
        Moments {
            m,
            abs: m.abs(),
            m2: m * m,
            m4: m.powi(4),
        }
    }

    fn add(self, o: Moments) -> Moments {
        Moments {
            m: self.m + o.m,
            abs: self.abs + o.abs,
            m2: self.m2 + o.m2,
            m4: self.m4 + o.m4,
        }
    }

    fn scale(self, s: f64) -> Moments {
        Moments {
            m: self.m * s,
            abs: self.abs * s,
            m2: self.m2 * s,
            m4: self.m4 * s,
        }
    }
}

fn average<'a>(rows: impl Iterator<Item = &'a Moments>) -> Moments {
    let mut n = 0usize;
    let mut acc = Moments::of(0.0);
    for r in rows {
        acc = acc.add(*r);
        n += 1;
    }
    acc.scale(1.0 / n.max(1) as f64)
}

/// `3/2 - <m^4> / (2 <m^2>^2)`.
pub fn binder(avg: &Moments) -> f64 {
    if avg.m2 == 0.0 {
        return 1.0;
    }
    1.5 - avg.m4 / (2.0 * avg.m2 * avg.m2)
}

/// `L (<m^2> - <|m|>^2)`.
pub fn susceptibility(avg: &Moments, l: usize) -> f64 {
    l as f64 * (avg.m2 - avg.abs * avg.abs)
}

/// Estimates with jackknife errors over independent chains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderParams {
    pub m: f64,
    pub m_err: f64,
    /// `<|m|>`, which survives logical flips during long chains.
    pub m_abs: f64,
    pub m_abs_err: f64,
    pub chi: f64,
    pub chi_err: f64,
    pub binder: f64,
    pub binder_err: f64,
    pub samples: u64,
}

/// Sampling plan for one chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub burn_in: u64,
    pub samples: u64,
    pub stride: u64,
    pub chains: u64,
}

impl Sampling {
    /// Burn-in of `10 L` rounds and one sample every `L` rounds.
    pub fn for_size(l: usize, samples: u64, chains: u64) -> Self {
        Sampling {
            burn_in: 10 * l as u64,
            samples,
            stride: l as u64,
            chains,
        }
    }
}

/// Per-chain mean moments; chain `c` uses trial seed `c`.
pub fn chain_moments(spec: &RunSpec, plan: Sampling) -> Result<Vec<Moments>> {
    if plan.samples == 0 || plan.chains == 0 || plan.stride == 0 {
        return Err(Error::InvalidParameter(
            "samples, chains and stride must be positive".into(),
        ));
    }
    (0..plan.chains)
        .into_par_iter()
        .map(|c| {
            let mut w = spec.world(c)?;
            w.run(plan.burn_in);
            let mut rows = Vec::with_capacity(plan.samples as usize);
            for _ in 0..plan.samples {
                w.run(plan.stride);
                rows.push(Moments::of(magnetization(&w.code)));
            }
            Ok(average(rows.iter()))
        })
        .collect()
}

pub fn order_params(spec: &RunSpec, plan: Sampling) -> Result<OrderParams> {
    let chains = chain_moments(spec, plan)?;
    let l = spec.decoder.l;
    let (m, m_err) = jackknife(&chains, |r| average(r.iter().copied()).m);
    let (m_abs, m_abs_err) = jackknife(&chains, |r| average(r.iter().copied()).abs);
    let (chi, chi_err) = jackknife(&chains, |r| susceptibility(&average(r.iter().copied()), l));
    let (b, b_err) = jackknife(&chains, |r| binder(&average(r.iter().copied())));
    Ok(OrderParams {
        m,
        m_err,
        m_abs,
        m_abs_err,
        chi,
        chi_err,
        binder: b,
        binder_err: b_err,
        samples: plan.samples * plan.chains,
    })
}

/// Rescale `(p, y)` to `((p - p_c) L^{1/nu}, y L^{exponent})`.
pub fn rescale(curve: &Curve, p_c: f64, nu: f64, exponent: f64) -> Curve {
    let l = curve.l as f64;
    Curve::new(
        curve.l,
        curve
            .points
            .iter()
            .map(|&(p, y)| ((p - p_c) * l.powf(1.0 / nu), y * l.powf(exponent)))
            .collect(),
    )
}

/// Collapse quality: squared deviation between every point of one rescaled
/// curve and every other rescaled curve interpolated at the same abscissa,
/// averaged over all such comparisons.
///
/// `exponent` multiplies the observable by `L^exponent`, so `beta/nu` for
/// the magnetization, `-gamma/nu` for the susceptibility and 0 for the
/// Binder cumulant.
pub fn scaling_collapse(curves: &[Curve], p_c: f64, nu: f64, exponent: f64) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::InvalidParameter("collapse needs at least two curves".into()));
    }
    let scaled: Vec<Curve> = curves.iter().map(|c| rescale(c, p_c, nu, exponent)).collect();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, a) in scaled.iter().enumerate() {
        for (j, b) in scaled.iter().enumerate() {
            if i == j {
                continue;
            }
            for &(x, y) in &a.points {
                if let Some(yb) = b.interp(x) {
                    sum += (y - yb).powi(2);
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::InvalidParameter(
            "rescaled curves do not overlap".into(),
        ));
    }
    Ok(sum / count as f64)
}

/// Grid search for the `(nu, exponent)` pair with the smallest residual.
pub fn best_collapse(curves: &[Curve], p_c: f64, nus: &[f64], exponents: &[f64]) -> Result<(f64, f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for &nu in nus {
        for &e in exponents {
            if let Ok(r) = scaling_collapse(curves, p_c, nu, e) {
                if best.is_none_or(|b| r < b.2) {
                    best = Some((nu, e, r));
                }
            }
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no grid point gave an overlap".into()))
}
