//! Monte Carlo estimators built on [`World`].

pub mod bias;
pub mod cantor;
pub mod clusters;
pub mod init;
pub mod order;
pub mod record;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automaton::{DecoderConfig, Velocity};
use crate::error::{Error, Result};
use crate::noise::{NoiseModel, PairStride, SinglePair};
use crate::rng::mix_all;
use crate::schedule::ScheduleKind;
use crate::world::{default_cap, World};

/// How the final logical class is read out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Readout {
    /// Global majority vote on the repetition code.
    Majority,
    /// Run the decoder itself without noise until it is quiescent.
    Automaton,
}

/// Which noise process drives a run. The adversaries act at strength `p`
/// and never fault measurements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseChoice {
    Iid,
    SinglePair { r0: usize, stride: PairStride },
    Blocked { r0: usize, stride: PairStride, block_width: usize },
}

/// Everything that identifies one point of a parameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub decoder: DecoderConfig,
    pub schedule: ScheduleKind,
    pub p: f64,
    pub p_meas: f64,
    pub depolarizing: bool,
    pub readout: Readout,
    pub noise: NoiseChoice,
    pub seed: u64,
}

impl RunSpec {
    /// Defaults used for threshold runs: majority vote in one dimension,
    /// depolarizing noise and automaton readout in two.
    pub fn new(decoder: DecoderConfig, p: f64, seed: u64) -> Self {
        let two_d = decoder.d == 2;
        RunSpec {
            decoder,
            schedule: ScheduleKind::Synchronous,
            p,
            p_meas: p,
            depolarizing: two_d,
            readout: if two_d { Readout::Automaton } else { Readout::Majority },
            noise: NoiseChoice::Iid,
            seed,
        }
    }

    pub fn point_seed(&self) -> u64 {
        let sched = match self.schedule {
            ScheduleKind::Synchronous => 0,
            ScheduleKind::Poisson => 1,
            ScheduleKind::UniformWindow { eps } => 2 ^ eps.to_bits(),
            ScheduleKind::MarchingSoldiers => 3,
        };
        let v = match self.decoder.v {
            Velocity::Finite(v) => u64::from(v),
            Velocity::Relaxed => u64::MAX,
        };
        mix_all(
            self.seed,
            &[
                self.decoder.d as u64,
                self.decoder.l as u64,
                self.decoder.z as u64,
                v,
                sched,
                self.p.to_bits(),
                self.p_meas.to_bits(),
                u64::from(self.decoder.modified_rules),
                noise_tag(self.noise),
            ],
        )
    }

    pub fn trial_seed(&self, trial: u64) -> u64 {
        mix_all(self.point_seed(), &[trial])
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        match self.noise {
            NoiseChoice::Iid => NoiseModel::iid(self.p, self.p_meas, self.depolarizing),
            NoiseChoice::SinglePair { r0, stride } => {
                Ok(NoiseModel::SinglePair(SinglePair::new(self.p, r0)?.with_stride(stride)))
            }
            NoiseChoice::Blocked { r0, stride, block_width } => {
                let pair = SinglePair::new(self.p, r0)?.with_stride(stride);
                NoiseModel::blocked(pair, block_width, self.decoder.l)
            }
        }
    }

    pub fn world(&self, trial: u64) -> Result<World> {
        let noise = self.noise_model()?;
        World::new(self.decoder.clone(), noise, self.schedule, self.trial_seed(trial))
    }

    /// Whether the encoded information has been lost, judged by `readout`.
    pub fn failed(&self, w: &World) -> Result<bool> {
        let class = match self.readout {
            Readout::Majority => w.code.majority_vote_decode()?,
            Readout::Automaton => {
                let off = w.offline_decode(default_cap(&w.cfg));
                if !off.success {
                    return Ok(true);
                }
                off.class
            }
        };
        Ok(class != w.code.initial_logical)
    }
}

fn noise_tag(n: NoiseChoice) -> u64 {
    let stride = |s: PairStride| match s {
        PairStride::Three => 3,
        PairStride::Four => 4,
    };
    match n {
        NoiseChoice::Iid => 0,
        NoiseChoice::SinglePair { r0, stride: s } => mix_all(1, &[r0 as u64, stride(s)]),
        NoiseChoice::Blocked { r0, stride: s, block_width } => {
            mix_all(2, &[r0 as u64, stride(s), block_width as u64])
        }
    }
}

/// A Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_trials: u64,
    pub censored: u64,
}

impl Estimate {
    pub fn binomial(failures: u64, n: u64) -> Self {
        let p = failures as f64 / n as f64;
        Estimate {
            value: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n_trials: n,
            censored: 0,
        }
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    Ok(())
}

/// Logical failure probability after `L` noisy rounds.
pub fn estimate_plog(spec: &RunSpec, trials: u64) -> Result<Estimate> {
    check_trials(trials)?;
    let rounds = spec.decoder.l as u64;
    let fails: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let mut w = spec.world(i)?;
            w.run(rounds);
            spec.failed(&w)
        })
        .collect::<Result<_>>()?;
    let n_fail = fails.iter().filter(|&&f| f).count() as u64;
    Ok(Estimate::binomial(n_fail, trials))
}

/// Time of first detected failure of one trial, or `None` if it survived
/// `max_rounds`. Failures are dated to the start of the probe bin in which
/// they are detected.
pub fn failure_time(spec: &RunSpec, trial: u64, max_rounds: u64, probe: u64) -> Result<Option<u64>> {
    if probe == 0 {
        return Err(Error::InvalidParameter("probe interval must be positive".into()));
    }
    let mut w = spec.world(trial)?;
    let mut t = 0;
    while t < max_rounds {
        let step = probe.min(max_rounds - t);
        w.run(step);
        if spec.failed(&w)? {
            return Ok(Some(t));
        }
        t += step;
    }
    Ok(None)
}

/// Memory time, estimated as total observed time per failure so that
/// censored trials contribute their survival time.
pub fn estimate_tmem(spec: &RunSpec, trials: u64, max_rounds: u64, probe: u64) -> Result<Estimate> {
    check_trials(trials)?;
    let times: Vec<Option<u64>> = (0..trials)
        .into_par_iter()
        .map(|i| failure_time(spec, i, max_rounds, probe))
        .collect::<Result<_>>()?;
    Ok(tmem_from_times(&times, max_rounds))
}

pub fn tmem_from_times(times: &[Option<u64>], max_rounds: u64) -> Estimate {
    let failures = times.iter().filter(|t| t.is_some()).count() as u64;
    let censored = times.len() as u64 - failures;
    let exposure: f64 = times
        .iter()
        .map(|t| t.unwrap_or(max_rounds) as f64)
        .sum();
    let value = exposure / failures.max(1) as f64;
    Estimate {
        value,
        stderr: value / (failures.max(1) as f64).sqrt(),
        n_trials: times.len() as u64,
        censored,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::ScheduleKind;

    #[test]
    fn zero_noise_never_fails() {
        let cfg = DecoderConfig::new(1, 9, 6).unwrap();
        let spec = RunSpec::new(cfg, 0.0, 1);
        let est = estimate_plog(&spec, 20).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.stderr, 0.0);
        let cfg = DecoderConfig::new(2, 5, 4).unwrap();
        let spec = RunSpec::new(cfg, 0.0, 1);
        assert_eq!(estimate_plog(&spec, 5).unwrap().value, 0.0);
    }

    #[test]
    fn certain_noise_censoring() {
        let t = tmem_from_times(&[Some(10), None, Some(30)], 100);
        assert_eq!(t.censored, 1);
        assert_eq!(t.value, 70.0);
    }

    #[test]
    fn trial_results_are_seeded_per_trial() {
        let cfg = DecoderConfig::new(1, 9, 6).unwrap();
        let spec = RunSpec::new(cfg, 0.08, 3);
        let a = failure_time(&spec, 5, 200, 9).unwrap();
        let b = failure_time(&spec, 5, 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(estimate_plog(&spec, 0).is_err());
    }

    #[test]
    fn half_noise_destroys_memory() {
        use rand::SeedableRng;
        let cfg = DecoderConfig::new(1, 9, 0).unwrap();
        let mut spec = RunSpec::new(cfg, 0.5, 6);
        spec.p_meas = 0.0;
        let n = 4000;
        let est = estimate_plog(&spec, n).unwrap();
        // Oracle: majority vote on independently randomized states.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut flips = 0;
        for _ in 0..n {
            let mut c = crate::code::CodeState::new(spec.decoder.geometry());
            c.randomize_errors(&mut rng);
            flips += u64::from(c.majority_vote_decode().unwrap());
        }
        let oracle = Estimate::binomial(flips, n);
        let sigma = (est.stderr.powi(2) + oracle.stderr.powi(2)).sqrt();
        assert!((est.value - oracle.value).abs() < 3.0 * sigma, "{est:?} {oracle:?}");
        assert!((est.value - 0.5).abs() < 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn zero_noise_is_fully_censored_everywhere() {
        for d in [1, 2] {
            for sched in [
                ScheduleKind::Synchronous,
                ScheduleKind::Poisson,
                ScheduleKind::uniform_window(0.3).unwrap(),
                ScheduleKind::MarchingSoldiers,
            ] {
                let cfg = DecoderConfig::new(d, 5, 3).unwrap();
                let mut spec = RunSpec::new(cfg, 0.0, 2);
                spec.schedule = sched;
                assert_eq!(estimate_plog(&spec, 3).unwrap().value, 0.0);
                let t = estimate_tmem(&spec, 3, 30, 10).unwrap();
                assert_eq!(t.censored, 3);
                assert!(t.value > 30.0);
            }
        }
    }

    #[test]
    fn blocked_adversary_caps_the_memory_time() {
        let times: Vec<Estimate> = [128usize, 256]
            .iter()
            .map(|&l| {
                let cfg = DecoderConfig::new(1, l, 0).unwrap();
                let mut spec = RunSpec::new(cfg, 0.3, 8);
                spec.noise = NoiseChoice::Blocked {
                    r0: 7,
                    stride: PairStride::Three,
                    block_width: 128,
                };
                estimate_tmem(&spec, 40, 100_000, 8).unwrap()
            })
            .collect();
        for t in &times {
            assert!(t.censored <= 2, "{times:?}");
        }
        let ratio = times[1].value / times[0].value;
        assert!(ratio > 0.5 && ratio < 2.0, "{times:?}");
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let cfg = DecoderConfig::new(1, 9, 6).unwrap();
        let spec = RunSpec::new(cfg, 0.08, 12);
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| (estimate_plog(&spec, 40).unwrap(), estimate_tmem(&spec, 20, 300, 9).unwrap()))
        };
        assert_eq!(run(1), run(3));
    }
}
