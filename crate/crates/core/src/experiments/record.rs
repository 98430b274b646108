//! Raw per-trial output from which the estimators are built.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::order::{magnetization, Moments};
use super::{Readout, RunSpec};
use crate::error::{Error, Result};
use crate::world::default_cap;

/// State of a trial at one probe time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub t: u64,
    /// Logical class as judged by the run's readout.
    pub class: u8,
    /// Rounds the noiseless offline decoder needed, `None` at the cap.
    pub decode_rounds: Option<u64>,
    pub moments: Moments,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub spec: RunSpec,
    pub trial: u64,
    pub seed: u64,
    /// Start of the probe bin in which the logical class first changed.
    pub failure_time: Option<u64>,
    /// Rounds survived when no failure was seen.
    pub censored_at: Option<u64>,
    pub probes: Vec<Probe>,
    pub wall_clock_secs: f64,
}

impl TrialRecord {
    /// The record with its timing zeroed, for reproducibility checks.
    pub fn without_timing(mut self) -> Self {
        self.wall_clock_secs = 0.0;
        self
    }
}

/// Run one trial for up to `max_rounds`, probing every `probe` rounds and
/// stopping at the first logical failure.
pub fn record_trial(spec: &RunSpec, trial: u64, max_rounds: u64, probe: u64) -> Result<TrialRecord> {
    if probe == 0 {
        return Err(Error::InvalidParameter("probe interval must be positive".into()));
    }
    let start = Instant::now();
    let mut w = spec.world(trial)?;
    let cap = default_cap(&w.cfg);
    let mut probes = Vec::new();
    let mut failure_time = None;
    let mut t = 0;
    while t < max_rounds {
        let step = probe.min(max_rounds - t);
        w.run(step);
        let off = w.offline_decode(cap);
        let class = match spec.readout {
            Readout::Majority => w.code.majority_vote_decode()?,
            Readout::Automaton if off.success => off.class,
            // A capped decode counts as a failure.
            Readout::Automaton => w.code.initial_logical ^ 1,
        };
        probes.push(Probe {
            t: t + step,
            class,
            decode_rounds: off.success.then_some(off.rounds),
            moments: Moments::of(magnetization(&w.code)),
        });
        if class != w.code.initial_logical {
            failure_time = Some(t);
            break;
        }
        t += step;
    }
    Ok(TrialRecord {
        spec: spec.clone(),
        trial,
        seed: spec.trial_seed(trial),
        failure_time,
        censored_at: failure_time.is_none().then_some(max_rounds),
        probes,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::DecoderConfig;
    use crate::experiments::failure_time;

    #[test]
    fn records_reproduce_and_agree_with_failure_time() {
        let cfg = DecoderConfig::new(1, 9, 6).unwrap();
        let spec = RunSpec::new(cfg, 0.09, 4);
        for trial in 0..6 {
            let a = record_trial(&spec, trial, 120, 9).unwrap();
            let b = record_trial(&spec, trial, 120, 9).unwrap();
            assert_eq!(a.clone().without_timing(), b.without_timing());
            assert_eq!(a.failure_time, failure_time(&spec, trial, 120, 9).unwrap());
            assert_eq!(a.failure_time.is_none(), a.censored_at == Some(120));
        }
    }

    #[test]
    fn clean_run_is_censored() {
        let cfg = DecoderConfig::new(2, 5, 4).unwrap();
        let spec = RunSpec::new(cfg, 0.0, 1);
        let r = record_trial(&spec, 0, 20, 5).unwrap();
        assert_eq!(r.censored_at, Some(20));
        assert_eq!(r.probes.len(), 4);
        assert!(r.probes.iter().all(|p| p.decode_rounds == Some(0) && p.moments.m == 1.0));
    }
}
