//! Decoding time after a quench from a random state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, sem};
use super::RunSpec;
use crate::error::{Error, Result};
use crate::rng::mix;
use crate::world::default_cap;

/// Mean offline decoding time at each probe time.
///
/// Offline runs that hit the round cap never finish. Two wall defects about
/// half a ring apart can chase each other forever when messages are slow,
/// so such runs are counted in `capped` and left out of the means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeCurve {
    pub l: usize,
    /// `(t, mean T_dec, stderr)`.
    pub points: Vec<(u64, f64, f64)>,
    /// Offline runs that hit the round cap.
    pub capped: u64,
    pub trials: u64,
}

/// Offline decoding times of one trial at each probe time; `None` marks a
/// run that hit the cap.
pub fn decode_times(spec: &RunSpec, trial: u64, probes: &[u64], randomize: bool) -> Result<Vec<Option<u64>>> {
    let mut w = spec.world(trial)?;
    if randomize {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(spec.trial_seed(trial), 0x1a17));
        w.code.randomize_errors(&mut rng);
    }
    let cap = default_cap(&w.cfg);
    let mut out = Vec::with_capacity(probes.len());
    for &t in probes {
        w.run(t - w.t);
        let off = w.offline_decode(cap);
        out.push(off.success.then_some(off.rounds));
    }
    Ok(out)
}

/// Average decoding-time curve over `trials` quenches from a state with
/// every qubit flipped independently with probability 1/2.
pub fn decode_time_curve(spec: &RunSpec, probes: &[u64], trials: u64, randomize: bool) -> Result<DecodeCurve> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    if probes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("probe times must increase".into()));
    }
    let runs: Vec<Vec<Option<u64>>> = (0..trials)
        .into_par_iter()
        .map(|i| decode_times(spec, i, probes, randomize))
        .collect::<Result<_>>()?;
    let points = probes
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let xs: Vec<f64> = runs.iter().filter_map(|r| r[k]).map(|v| v as f64).collect();
            (t, mean(&xs), sem(&xs))
        })
        .collect();
    Ok(DecodeCurve {
        l: spec.decoder.l,
        points,
        capped: runs.iter().flatten().filter(|v| v.is_none()).count() as u64,
        trials,
    })
}

impl DecodeCurve {
    /// Mean and stderr over the last third of the probes (at least two).
    pub fn tail(&self) -> (f64, f64) {
        let n = self.points.len();
        let k = (n / 3).max(2).min(n);
        let tail = &self.points[n - k..];
        let m = tail.iter().map(|p| p.1).sum::<f64>() / k as f64;
        let e = (tail.iter().map(|p| p.2 * p.2).sum::<f64>()).sqrt() / k as f64;
        (m, e)
    }

    /// First probe time after which every point stays within tolerance of
    /// the tail mean. The tolerance is the larger of `z` combined standard
    /// errors and the fraction `frac` of the initial excess over the tail.
    pub fn t_indep(&self, z: f64, frac: f64) -> Option<u64> {
        let (tm, te) = self.tail();
        let excess = self.points.first().map_or(0.0, |p| (p.1 - tm).abs());
        let within = |p: &(u64, f64, f64)| {
            let tol = (z * (p.2 * p.2 + te * te).sqrt()).max(frac * excess);
            (p.1 - tm).abs() <= tol
        };
        let n = self.points.len();
        let mut first = n;
        for i in (0..n).rev() {
            if within(&self.points[i]) {
                first = i;
            } else {
                break;
            }
        }
        self.points.get(first).map(|p| p.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::DecoderConfig;

    #[test]
    fn clean_noiseless_start_decodes_instantly() {
        let cfg = DecoderConfig::new(1, 9, 6).unwrap();
        let spec = RunSpec::new(cfg, 0.0, 1);
        let c = decode_time_curve(&spec, &[0, 5, 10], 4, false).unwrap();
        assert!(c.points.iter().all(|p| p.1 == 0.0));
        assert_eq!(c.t_indep(2.0, 0.1), Some(0));
    }

    #[test]
    fn quench_relaxes() {
        let cfg = DecoderConfig::new(1, 15, 7).unwrap();
        let spec = RunSpec::new(cfg, 0.0, 2);
        let c = decode_time_curve(&spec, &[0, 10, 20, 40, 80, 120], 20, true).unwrap();
        assert_eq!(c.capped, 0);
        assert!(c.points[0].1 > 0.0);
        // Without noise the decoder finishes and stays clean.
        assert_eq!(c.points[5].1, 0.0);
        let t = c.t_indep(2.0, 0.0).unwrap();
        assert!(t > 0 && t <= 80, "{t}");
        // Decoding times never increase in the absence of noise.
        assert!(c.points.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn probes_must_increase() {
        let cfg = DecoderConfig::new(1, 9, 6).unwrap();
        let spec = RunSpec::new(cfg, 0.0, 1);
        assert!(decode_time_curve(&spec, &[3, 3], 1, true).is_err());
    }

    #[test]
    fn t_indep_skips_transient() {
        let c = DecodeCurve {
            l: 5,
            points: vec![
                (0, 50.0, 1.0),
                (5, 30.0, 1.0),
                (10, 12.0, 1.0),
                (15, 10.5, 1.0),
                (20, 10.0, 1.0),
                (25, 9.5, 1.0),
            ],
            capped: 0,
            trials: 10,
        };
        assert_eq!(c.t_indep(2.0, 0.0), Some(10));
        // A tenth of the initial excess of 40 admits the point at t = 10 too.
        assert_eq!(c.t_indep(0.0, 0.1), Some(10));
        assert_eq!(c.t_indep(0.0, 0.05), Some(15));
    }
}
